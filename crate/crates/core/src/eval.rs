//! Train/test protocol and classification metrics.
//!
//! Splits and folds shuffle row indices with dedicated RNG streams so the
//! protocol is reproducible and independent of any model seed. Accuracy
//! intervals are exact (Clopper–Pearson via the regularized incomplete beta
//! function), AUC uses the rank-sum formulation with midranks for ties, and
//! F1 treats the high class as positive.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::forest::{self, ForestModel};
use crate::labeling::Label;
use crate::math;
use crate::matrix::FeatureMatrix;
use crate::rng::stream_rng;

/// RNG streams reserved for the evaluation protocol, far away from the
/// stream ranges forests consume (tree indices and tree·p + feature).
const SPLIT_STREAM: u64 = u64::MAX;
const KFOLD_STREAM: u64 = u64::MAX - 1;

/// Row indices of one train/test split. Both sides are sorted ascending.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitPlan {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// Shuffle `0..n` and split off `⌈fraction·n⌉` training rows (capped so the
/// test side keeps at least one row). Needs `n >= 5`.
pub fn split(n: usize, fraction: f64, seed: u64) -> Result<SplitPlan> {
    if n < 5 {
        return Err(Error::InsufficientData(alloc::format!(
            "cannot split {n} rows into train and test; need at least 5"
        )));
    }
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::InvalidInput(alloc::format!(
            "train fraction {fraction} outside (0, 1)"
        )));
    }
    let n_train = (math::ceil(fraction * n as f64) as usize).clamp(1, n - 1);
    let mut order: Vec<usize> = rand::seq::index::sample(&mut stream_rng(seed, SPLIT_STREAM), n, n)
        .into_iter()
        .collect();
    let mut test: Vec<usize> = order.split_off(n_train);
    let mut train = order;
    train.sort_unstable();
    test.sort_unstable();
    Ok(SplitPlan { train, test })
}

/// Shuffled k-fold plans: fold `i` is the test side of plan `i`. The first
/// `n mod k` folds take the extra row, so 11 rows in 5 folds come out as
/// sizes 3, 2, 2, 2, 2.
pub fn kfold(n: usize, k: usize, seed: u64) -> Result<Vec<SplitPlan>> {
    if k < 2 {
        return Err(Error::Config(alloc::format!(
            "cross-validation needs at least 2 folds, got {k}"
        )));
    }
    if k > n {
        return Err(Error::Config(alloc::format!(
            "cannot make {k} folds from {n} rows"
        )));
    }
    let order: Vec<usize> = rand::seq::index::sample(&mut stream_rng(seed, KFOLD_STREAM), n, n)
        .into_iter()
        .collect();
    let base = n / k;
    let extra = n % k;
    let mut plans = Vec::with_capacity(k);
    let mut at = 0usize;
    for fold in 0..k {
        let size = base + usize::from(fold < extra);
        let mut test: Vec<usize> = order[at..at + size].to_vec();
        let mut train: Vec<usize> = order[..at]
            .iter()
            .chain(&order[at + size..])
            .copied()
            .collect();
        train.sort_unstable();
        test.sort_unstable();
        plans.push(SplitPlan { train, test });
        at += size;
    }
    Ok(plans)
}

/// Continued-fraction kernel of the regularized incomplete beta function.
fn betacf(a: f64, b: f64, x: f64) -> f64 {
    const EPS: f64 = 3e-16;
    const FPMIN: f64 = 1e-300;
    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if math::abs(d) < FPMIN {
        d = FPMIN;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=300 {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if math::abs(d) < FPMIN {
            d = FPMIN;
        }
        c = 1.0 + aa / c;
        if math::abs(c) < FPMIN {
            c = FPMIN;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if math::abs(d) < FPMIN {
            d = FPMIN;
        }
        c = 1.0 + aa / c;
        if math::abs(c) < FPMIN {
            c = FPMIN;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if math::abs(del - 1.0) < EPS {
            break;
        }
    }
    h
}

/// Regularized incomplete beta function `I_x(a, b)` for `a, b > 0`.
fn reg_inc_beta(a: f64, b: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let ln_front = a * math::ln(x) + b * math::ln(1.0 - x)
        - (math::ln_gamma(a) + math::ln_gamma(b) - math::ln_gamma(a + b));
    let front = math::exp(ln_front);
    if x < (a + 1.0) / (a + b + 2.0) {
        front * betacf(a, b, x) / a
    } else {
        1.0 - front * betacf(b, a, 1.0 - x) / b
    }
}

/// Quantile of the Beta(a, b) distribution by bisection; `I_x` is monotone
/// in `x`, so this converges to full double precision.
fn beta_quantile(a: f64, b: f64, p: f64) -> f64 {
    let mut lo = 0.0f64;
    let mut hi = 1.0f64;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if reg_inc_beta(a, b, mid) < p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Exact (Clopper–Pearson) two-sided confidence interval for a binomial
/// proportion, as fractions in `[0, 1]`.
pub fn accuracy_ci(correct: usize, n: usize, level: f64) -> Result<(f64, f64)> {
    if n == 0 {
        return Err(Error::InsufficientData(
            "confidence interval over zero trials".into(),
        ));
    }
    if correct > n {
        return Err(Error::InvalidInput(alloc::format!(
            "{correct} successes out of {n} trials"
        )));
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::InvalidInput(alloc::format!(
            "confidence level {level} outside (0, 1)"
        )));
    }
    let alpha = 1.0 - level;
    let k = correct as f64;
    let nf = n as f64;
    let lo = if correct == 0 {
        0.0
    } else {
        beta_quantile(k, nf - k + 1.0, alpha / 2.0)
    };
    let hi = if correct == n {
        1.0
    } else {
        beta_quantile(k + 1.0, nf - k, 1.0 - alpha / 2.0)
    };
    Ok((lo, hi))
}

/// Two-class confusion counts with high as the positive class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Confusion {
    /// High predicted high.
    pub true_high: usize,
    /// Low predicted high.
    pub false_high: usize,
    /// High predicted low.
    pub false_low: usize,
    /// Low predicted low.
    pub true_low: usize,
}

impl Confusion {
    pub fn from_predictions(predicted: &[Label], truth: &[Label]) -> Result<Confusion> {
        if predicted.len() != truth.len() {
            return Err(Error::InvalidInput(alloc::format!(
                "{} predictions for {} truths",
                predicted.len(),
                truth.len()
            )));
        }
        let mut c = Confusion::default();
        for (&p, &t) in predicted.iter().zip(truth) {
            match (t, p) {
                (Label::High, Label::High) => c.true_high += 1,
                (Label::Low, Label::High) => c.false_high += 1,
                (Label::High, Label::Low) => c.false_low += 1,
                (Label::Low, Label::Low) => c.true_low += 1,
            }
        }
        Ok(c)
    }

    pub fn n(&self) -> usize {
        self.true_high + self.false_high + self.false_low + self.true_low
    }

    pub fn n_correct(&self) -> usize {
        self.true_high + self.true_low
    }

    /// Fraction of correct predictions.
    pub fn accuracy(&self) -> f64 {
        self.n_correct() as f64 / self.n() as f64
    }
}

/// F1 score of the high class in percent; the empty-harmonic-mean case
/// (no true highs predicted or present) scores 0.
pub fn f1_percent(c: &Confusion) -> f64 {
    let denominator = 2 * c.true_high + c.false_high + c.false_low;
    if denominator == 0 {
        return 0.0;
    }
    100.0 * (2 * c.true_high) as f64 / denominator as f64
}

/// Area under the ROC curve via the rank-sum statistic, with midranks for
/// tied scores. Undefined (an error) when only one class is present.
pub fn auc(scores: &[f64], truth: &[Label]) -> Result<f64> {
    if scores.len() != truth.len() {
        return Err(Error::InvalidInput(alloc::format!(
            "{} scores for {} labels",
            scores.len(),
            truth.len()
        )));
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::InvalidInput("a ranking score is NaN".into()));
    }
    let n = scores.len();
    let n_high = truth.iter().filter(|l| l.is_high()).count();
    let n_low = n - n_high;
    if n_high == 0 || n_low == 0 {
        return Err(Error::UndefinedAuc(
            "AUC needs both classes in the evaluation set".into(),
        ));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_unstable_by(|&i, &j| scores[i].total_cmp(&scores[j]));
    let mut ranks = vec![0.0f64; n];
    let mut i = 0usize;
    while i < n {
        let mut j = i;
        while j + 1 < n && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        let midrank = (i + j + 2) as f64 / 2.0; // 1-based positions i+1..=j+1
        for k in i..=j {
            ranks[order[k]] = midrank;
        }
        i = j + 1;
    }
    let rank_sum_high: f64 = ranks
        .iter()
        .zip(truth)
        .filter(|(_, l)| l.is_high())
        .map(|(r, _)| r)
        .sum();
    let u = rank_sum_high - (n_high * (n_high + 1)) as f64 / 2.0;
    Ok(u / (n_high as f64 * n_low as f64))
}

/// Test-set metrics of one model under one split.
#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationReport {
    /// Fraction of test rows classified correctly, in `[0, 1]`.
    pub accuracy: f64,
    /// Exact binomial confidence interval for the accuracy, same scale.
    pub ci: (f64, f64),
    /// F1 of the high class, in percent.
    pub f1_percent: f64,
    /// Area under the ROC curve of the vote-fraction scores.
    pub auc: f64,
    pub confusion: Confusion,
    pub n_test: usize,
}

fn report_from(
    predicted: &[Label],
    scores: &[f64],
    truth: &[Label],
    level: f64,
) -> Result<EvaluationReport> {
    let confusion = Confusion::from_predictions(predicted, truth)?;
    let ci = accuracy_ci(confusion.n_correct(), confusion.n(), level)?;
    Ok(EvaluationReport {
        accuracy: confusion.accuracy(),
        ci,
        f1_percent: f1_percent(&confusion),
        auc: auc(scores, truth)?,
        confusion,
        n_test: confusion.n(),
    })
}

/// Evaluate a trained model on the test rows of a split plan.
///
/// `x` and `y` cover all rows (train and test); only `plan.test` is scored.
/// The matrix schema must match the model. A single-class test fold makes
/// the AUC undefined and the whole evaluation fails with that error.
pub fn evaluate(
    model: &ForestModel,
    x: &FeatureMatrix,
    y: &[Label],
    plan: &SplitPlan,
    level: f64,
) -> Result<EvaluationReport> {
    if y.len() != x.n_rows() {
        return Err(Error::InvalidInput(alloc::format!(
            "{} labels for {} rows",
            y.len(),
            x.n_rows()
        )));
    }
    if x.names() != model.feature_names.as_slice() {
        return Err(Error::Schema(
            "matrix feature names do not match the model".into(),
        ));
    }
    if plan.test.is_empty() {
        return Err(Error::InsufficientData("empty test set".into()));
    }
    if let Some(&out) = plan.test.iter().find(|&&i| i >= x.n_rows()) {
        return Err(Error::InvalidInput(alloc::format!(
            "test row index {out} out of range for {} rows",
            x.n_rows()
        )));
    }
    let mut predicted = Vec::with_capacity(plan.test.len());
    let mut scores = Vec::with_capacity(plan.test.len());
    let mut truth = Vec::with_capacity(plan.test.len());
    for &i in &plan.test {
        let (label, score) = forest::predict_row(model, &x.row(i))?;
        predicted.push(label);
        scores.push(score);
        truth.push(y[i]);
    }
    report_from(&predicted, &scores, &truth, level)
}

/// Metrics of the constant majority-class predictor.
///
/// The majority is taken over the training labels; an exact tie predicts
/// high. Its score function is constant, so every score pair is tied and
/// the AUC is exactly 0.5 regardless of the test labels.
pub fn majority_baseline(
    train_y: &[Label],
    test_y: &[Label],
    level: f64,
) -> Result<EvaluationReport> {
    if train_y.is_empty() || test_y.is_empty() {
        return Err(Error::InsufficientData(
            "baseline needs non-empty train and test labels".into(),
        ));
    }
    let n_high = train_y.iter().filter(|l| l.is_high()).count();
    let majority = if 2 * n_high >= train_y.len() {
        Label::High
    } else {
        Label::Low
    };
    let predicted = vec![majority; test_y.len()];
    let confusion = Confusion::from_predictions(&predicted, test_y)?;
    let ci = accuracy_ci(confusion.n_correct(), confusion.n(), level)?;
    Ok(EvaluationReport {
        accuracy: confusion.accuracy(),
        ci,
        f1_percent: f1_percent(&confusion),
        auc: 0.5,
        confusion,
        n_test: confusion.n(),
    })
}
