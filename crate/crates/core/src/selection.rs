//! Feature screening: normalization, redundancy reporting, and
//! importance-based ranking.
//!
//! The ranking trains a forest on every feature and orders features by mean
//! decrease in Gini impurity; downstream models are then fit on the top
//! slice. Normalization is fit on training rows only and applied unchanged
//! elsewhere, so no test information leaks into the transform.

use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::forest::{self, ForestModel, ForestParams};
use crate::labeling::Label;
use crate::matrix::FeatureMatrix;
use crate::stats;

/// Per-column location/scale fitted on a training matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizationStats {
    names: Vec<String>,
    means: Vec<f64>,
    /// Sample standard deviations; exactly `0.0` marks a constant column.
    sds: Vec<f64>,
}

impl NormalizationStats {
    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn mean(&self, j: usize) -> f64 {
        self.means[j]
    }

    pub fn sd(&self, j: usize) -> f64 {
        self.sds[j]
    }

    /// Indices of columns with zero spread in the training rows.
    pub fn constant_columns(&self) -> Vec<usize> {
        (0..self.sds.len()).filter(|&j| self.sds[j] == 0.0).collect()
    }
}

/// Fit per-column mean and standard deviation, skipping missing entries.
///
/// Needs at least two rows. Columns that are entirely missing are rejected;
/// columns with a single present value or zero spread are recorded as
/// constant (sd 0).
pub fn fit_normalizer(train: &FeatureMatrix) -> Result<NormalizationStats> {
    if train.n_rows() < 2 {
        return Err(Error::InsufficientData(
            "normalization needs at least two training rows".into(),
        ));
    }
    let mut means = Vec::with_capacity(train.n_cols());
    let mut sds = Vec::with_capacity(train.n_cols());
    for j in 0..train.n_cols() {
        let col = train.column(j);
        let mean = stats::mean(col).map_err(|_| {
            Error::InsufficientData(alloc::format!(
                "column {} is entirely missing; cannot normalize",
                train.names()[j]
            ))
        })?;
        means.push(mean);
        sds.push(stats::sample_sd(col).unwrap_or(0.0));
    }
    Ok(NormalizationStats {
        names: train.names().to_vec(),
        means,
        sds,
    })
}

/// Z-score a matrix with previously fitted statistics.
///
/// Constant columns map to zero; missing entries stay missing. The matrix
/// schema must match the one the statistics were fit on.
pub fn apply_normalizer(m: &FeatureMatrix, norm: &NormalizationStats) -> Result<FeatureMatrix> {
    if m.names() != norm.names.as_slice() {
        return Err(Error::Schema(
            "matrix feature names do not match the fitted normalizer".into(),
        ));
    }
    let columns = (0..m.n_cols())
        .map(|j| {
            let (mean, sd) = (norm.means[j], norm.sds[j]);
            m.column(j)
                .iter()
                .map(|&v| {
                    if v.is_nan() {
                        f64::NAN
                    } else if sd == 0.0 {
                        0.0
                    } else {
                        (v - mean) / sd
                    }
                })
                .collect()
        })
        .collect();
    FeatureMatrix::new(m.row_ids().to_vec(), m.names().to_vec(), columns)
}

/// A highly correlated feature pair.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelatedPair {
    pub feature_a: String,
    pub feature_b: String,
    pub r: f64,
}

/// Pairwise-redundancy report at a given absolute-correlation threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationReport {
    /// Pairs with `|r| >= threshold`, strongest first.
    pub pairs: Vec<CorrelatedPair>,
    /// Columns excluded from the scan (constant or too sparse).
    pub skipped: Vec<String>,
}

/// Report all feature pairs whose Pearson correlation reaches `threshold`
/// in absolute value. Constant and all-missing columns cannot carry a
/// correlation and are listed as skipped instead.
pub fn correlation_report(m: &FeatureMatrix, threshold: f64) -> Result<CorrelationReport> {
    if m.n_rows() < 2 {
        return Err(Error::InsufficientData(
            "correlation needs at least two rows".into(),
        ));
    }
    if !(0.0..=1.0).contains(&threshold) {
        return Err(Error::InvalidInput(alloc::format!(
            "correlation threshold {threshold} outside [0, 1]"
        )));
    }
    let mut usable = Vec::new();
    let mut skipped = Vec::new();
    for j in 0..m.n_cols() {
        let col = m.column(j);
        match stats::sample_sd(col) {
            Some(sd) if sd > 0.0 => usable.push(j),
            _ => skipped.push(m.names()[j].clone()),
        }
    }
    let mut pairs = Vec::new();
    for (a_pos, &a) in usable.iter().enumerate() {
        for &b in &usable[a_pos + 1..] {
            // A pair can still fail (fewer than two complete rows in common);
            // such pairs are silently unreportable.
            if let Ok(r) = stats::pearson(m.column(a), m.column(b)) {
                if r.abs() >= threshold {
                    pairs.push(CorrelatedPair {
                        feature_a: m.names()[a].clone(),
                        feature_b: m.names()[b].clone(),
                        r,
                    });
                }
            }
        }
    }
    pairs.sort_by(|x, y| {
        y.r.abs()
            .total_cmp(&x.r.abs())
            .then_with(|| x.feature_a.cmp(&y.feature_a))
            .then_with(|| x.feature_b.cmp(&y.feature_b))
    });
    Ok(CorrelationReport { pairs, skipped })
}

/// Features ordered by importance, best first.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureRanking {
    entries: Vec<(String, f64)>,
    total: f64,
}

impl FeatureRanking {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// `(feature name, mean decrease gini)` at a rank, 0 = best.
    pub fn entry(&self, rank: usize) -> (&str, f64) {
        let (name, score) = &self.entries[rank];
        (name, *score)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.entries.iter().map(|(n, s)| (n.as_str(), *s))
    }

    /// Share of the total importance mass at a rank, in percent.
    pub fn percent(&self, rank: usize) -> f64 {
        if self.total == 0.0 {
            0.0
        } else {
            100.0 * self.entries[rank].1 / self.total
        }
    }

    /// Position of a feature in the ranking, if present.
    pub fn rank_of(&self, name: &str) -> Option<usize> {
        self.entries.iter().position(|(n, _)| n == name)
    }
}

/// Rank an already-trained forest's features by mean decrease in Gini
/// impurity. Ties order lexicographically by feature name so the ranking is
/// total and reproducible.
pub fn rank_from_model(model: &ForestModel) -> FeatureRanking {
    let table = forest::importance_gini(model);
    let mut entries: Vec<(String, f64)> = table
        .feature_names
        .into_iter()
        .zip(table.mean_decrease_gini)
        .collect();
    entries.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    let total = entries.iter().map(|(_, s)| s).sum();
    FeatureRanking { entries, total }
}

/// Rank every feature of the training matrix by mean decrease in Gini
/// impurity of a forest fit on all of them.
pub fn rank_by_gini(
    train: &FeatureMatrix,
    y: &[Label],
    params: &ForestParams,
) -> Result<FeatureRanking> {
    Ok(rank_from_model(&forest::fit(train, y, params)?))
}

/// The `k` best-ranked feature names, in rank order.
pub fn select_top_k(ranking: &FeatureRanking, k: usize) -> Result<Vec<String>> {
    if k > ranking.len() {
        return Err(Error::Config(alloc::format!(
            "cannot select {k} features from a ranking of {}",
            ranking.len()
        )));
    }
    Ok(ranking
        .entries
        .iter()
        .take(k)
        .map(|(n, _)| n.clone())
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geo::CellId;
    use crate::rng::stream_rng;
    use alloc::vec;
    use approx::assert_relative_eq;
    use rand::Rng;

    fn matrix(names: &[&str], columns: Vec<Vec<f64>>) -> FeatureMatrix {
        let n = columns[0].len();
        let ids = (0..n as u64).map(CellId).collect();
        FeatureMatrix::new(
            ids,
            names.iter().map(|s| String::from(*s)).collect(),
            columns,
        )
        .unwrap()
    }

    #[test]
    fn normalizer_oracle_and_constant_flag() {
        let m = matrix(&["a", "b"], vec![vec![0.0, 2.0], vec![5.0, 5.0]]);
        let norm = fit_normalizer(&m).unwrap();
        assert_relative_eq!(norm.mean(0), 1.0);
        assert_relative_eq!(norm.sd(0), core::f64::consts::SQRT_2);
        assert_eq!(norm.constant_columns(), vec![1]);
    }

    #[test]
    fn normalizer_needs_two_rows() {
        let m = matrix(&["a"], vec![vec![1.0]]);
        assert!(matches!(
            fit_normalizer(&m),
            Err(Error::InsufficientData(_))
        ));
    }

    #[test]
    fn applying_own_stats_centers_and_scales() {
        let m = matrix(
            &["a", "b"],
            vec![vec![1.0, 2.0, 3.0, 4.0], vec![9.0, 9.0, 9.0, 9.0]],
        );
        let norm = fit_normalizer(&m).unwrap();
        let z = apply_normalizer(&m, &norm).unwrap();
        let col = z.column(0);
        let mean: f64 = col.iter().sum::<f64>() / 4.0;
        assert!(mean.abs() < 1e-12);
        assert!((crate::stats::sample_sd(col).unwrap() - 1.0).abs() < 1e-12);
        assert!(z.column(1).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn normalizer_preserves_missingness_and_checks_schema() {
        let m = matrix(&["a"], vec![vec![1.0, f64::NAN, 3.0]]);
        let norm = fit_normalizer(&m).unwrap();
        let z = apply_normalizer(&m, &norm).unwrap();
        assert!(z.value(1, 0).is_nan());
        let other = matrix(&["b"], vec![vec![1.0, 2.0, 3.0]]);
        assert!(matches!(
            apply_normalizer(&other, &norm),
            Err(Error::Schema(_))
        ));
    }

    #[test]
    fn identical_columns_report_perfect_correlation() {
        let col = vec![1.0, 2.0, 3.0, 5.0];
        let m = matrix(
            &["a", "b", "noise"],
            vec![col.clone(), col, vec![4.0, 1.0, 3.0, 2.0]],
        );
        let report = correlation_report(&m, 0.9).unwrap();
        assert_eq!(report.pairs.len(), 1);
        assert_eq!(report.pairs[0].feature_a, "a");
        assert_eq!(report.pairs[0].feature_b, "b");
        assert_relative_eq!(report.pairs[0].r, 1.0);
    }

    #[test]
    fn constant_columns_are_skipped_not_correlated() {
        let m = matrix(
            &["flat", "x"],
            vec![vec![2.0, 2.0, 2.0], vec![1.0, 2.0, 3.0]],
        );
        let report = correlation_report(&m, 0.0).unwrap();
        assert_eq!(report.skipped, vec![String::from("flat")]);
        assert!(report.pairs.is_empty());
    }

    #[test]
    fn correlation_pairs_are_sorted_strongest_first() {
        let x: Vec<f64> = (0..20).map(|i| i as f64).collect();
        let negated: Vec<f64> = x.iter().map(|v| -v).collect();
        let mut wobbly = x.clone();
        wobbly[0] = 30.0; // weakens but keeps the correlation
        let m = matrix(&["x", "neg", "wob"], vec![x, negated, wobbly]);
        let report = correlation_report(&m, 0.1).unwrap();
        assert_eq!(report.pairs.len(), 3);
        assert_eq!(report.pairs[0].feature_a, "x");
        assert_eq!(report.pairs[0].feature_b, "neg");
        assert_relative_eq!(report.pairs[0].r, -1.0);
        assert!(report.pairs[1].r.abs() >= report.pairs[2].r.abs());
    }

    #[test]
    fn correlation_threshold_is_validated() {
        let m = matrix(&["a"], vec![vec![1.0, 2.0]]);
        assert!(correlation_report(&m, 1.5).is_err());
        assert!(correlation_report(&m, -0.1).is_err());
    }

    /// One separating feature among noise columns.
    fn ranking_problem(n: usize, seed: u64) -> (FeatureMatrix, Vec<Label>) {
        let mut rng = stream_rng(seed, 0);
        let mut signal = Vec::new();
        let mut noise1 = Vec::new();
        let mut noise2 = Vec::new();
        let mut y = Vec::new();
        for i in 0..n {
            let high = i % 2 == 0;
            signal.push(if high { 4.0 } else { 0.0 } + rng.random::<f64>());
            noise1.push(rng.random::<f64>());
            noise2.push(rng.random::<f64>());
            y.push(if high { Label::High } else { Label::Low });
        }
        (
            matrix(&["signal", "noise1", "noise2"], vec![signal, noise1, noise2]),
            y,
        )
    }

    #[test]
    fn separating_feature_ranks_first() {
        let (x, y) = ranking_problem(40, 5);
        let params = ForestParams {
            n_trees: 30,
            seed: 9,
            ..ForestParams::default()
        };
        let ranking = rank_by_gini(&x, &y, &params).unwrap();
        assert_eq!(ranking.entry(0).0, "signal");
        assert_eq!(ranking.rank_of("signal"), Some(0));
        // Percentages cover the whole mass.
        let total: f64 = (0..ranking.len()).map(|r| ranking.percent(r)).sum();
        assert_relative_eq!(total, 100.0, epsilon = 1e-9);
    }

    #[test]
    fn ranking_is_deterministic() {
        let (x, y) = ranking_problem(40, 6);
        let params = ForestParams {
            n_trees: 20,
            seed: 3,
            ..ForestParams::default()
        };
        assert_eq!(
            rank_by_gini(&x, &y, &params).unwrap(),
            rank_by_gini(&x, &y, &params).unwrap()
        );
    }

    #[test]
    fn duplicated_signal_still_outranks_noise() {
        // Split credit divides between identical copies, but both should
        // stay ahead of pure noise.
        let (x, y) = ranking_problem(60, 7);
        let dup = matrix(
            &["signal", "twin", "noise1", "noise2"],
            vec![
                x.column(0).to_vec(),
                x.column(0).to_vec(),
                x.column(1).to_vec(),
                x.column(2).to_vec(),
            ],
        );
        let params = ForestParams {
            n_trees: 60,
            seed: 4,
            ..ForestParams::default()
        };
        let ranking = rank_by_gini(&dup, &y, &params).unwrap();
        let signal_rank = ranking.rank_of("signal").unwrap();
        let twin_rank = ranking.rank_of("twin").unwrap();
        assert!(signal_rank <= 1 && twin_rank <= 1);
    }

    #[test]
    fn top_k_selection_and_bounds() {
        let (x, y) = ranking_problem(40, 8);
        let params = ForestParams {
            n_trees: 20,
            seed: 1,
            ..ForestParams::default()
        };
        let ranking = rank_by_gini(&x, &y, &params).unwrap();
        let top1 = select_top_k(&ranking, 1).unwrap();
        assert_eq!(top1, vec![String::from("signal")]);
        let all = select_top_k(&ranking, 3).unwrap();
        assert_eq!(all.len(), 3);
        assert!(matches!(select_top_k(&ranking, 4), Err(Error::Config(_))));
    }

    #[test]
    fn tied_scores_order_lexicographically() {
        // Two constant-importance (zero) features keep name order.
        let (x, y) = ranking_problem(30, 9);
        let with_dead = matrix(
            &["signal", "zzz_dead", "aaa_dead"],
            vec![x.column(0).to_vec(), vec![1.0; 30], vec![2.0; 30]],
        );
        let params = ForestParams {
            n_trees: 10,
            mtry: Some(3),
            seed: 2,
            ..ForestParams::default()
        };
        let ranking = rank_by_gini(&with_dead, &y, &params).unwrap();
        assert_eq!(ranking.entry(1).0, "aaa_dead");
        assert_eq!(ranking.entry(2).0, "zzz_dead");
        assert_eq!(ranking.entry(1).1, 0.0);
    }
}
