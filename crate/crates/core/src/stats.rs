//! Descriptive statistics used throughout feature extraction and selection.
//!
//! Missing values are represented as `NaN` and skipped by every routine here;
//! a routine only fails when *no* usable value remains (or when the statistic
//! is undefined for the data, e.g. correlation of a constant series).

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math;

/// The summary statistics computed for every aggregation window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Stat {
    Mean,
    Median,
    Sd,
    Min,
    Max,
    Entropy,
}

impl Stat {
    /// All statistics, in canonical naming order.
    pub const ALL: [Stat; 6] = [
        Stat::Mean,
        Stat::Median,
        Stat::Sd,
        Stat::Min,
        Stat::Max,
        Stat::Entropy,
    ];

    /// Token used inside dotted feature names.
    pub fn token(self) -> &'static str {
        match self {
            Stat::Mean => "mean",
            Stat::Median => "median",
            Stat::Sd => "sd",
            Stat::Min => "min",
            Stat::Max => "max",
            Stat::Entropy => "entropy.empirical",
        }
    }

    /// Parse a naming token back into a statistic.
    pub fn from_token(token: &str) -> Option<Stat> {
        Stat::ALL.into_iter().find(|s| s.token() == token)
    }
}

/// Summary of one value series. `sd` is absent for fewer than two values and
/// `entropy` is absent when the empirical distribution is degenerate (see
/// [`empirical_entropy`]).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StatBundle {
    pub mean: f64,
    pub median: f64,
    pub sd: Option<f64>,
    pub min: f64,
    pub max: f64,
    pub entropy: Option<f64>,
}

impl StatBundle {
    /// Look up one statistic; `None` when it is undefined for this series.
    pub fn get(&self, stat: Stat) -> Option<f64> {
        match stat {
            Stat::Mean => Some(self.mean),
            Stat::Median => Some(self.median),
            Stat::Sd => self.sd,
            Stat::Min => Some(self.min),
            Stat::Max => Some(self.max),
            Stat::Entropy => self.entropy,
        }
    }
}

/// Collect the non-missing (non-NaN) values of a series.
fn present(values: &[f64]) -> Vec<f64> {
    values.iter().copied().filter(|v| !v.is_nan()).collect()
}

/// Compute all six summary statistics over the non-missing values.
///
/// Fails with [`Error::InsufficientData`] when every value is missing.
pub fn summarize(values: &[f64]) -> Result<StatBundle> {
    let mut xs = present(values);
    if xs.is_empty() {
        return Err(Error::InsufficientData(
            "summary requested over zero non-missing values".into(),
        ));
    }
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    let mean = xs.iter().sum::<f64>() / n as f64;
    let median = median_sorted(&xs);
    let sd = sample_sd(&xs);
    let entropy = empirical_entropy(&xs).ok();
    Ok(StatBundle {
        mean,
        median,
        sd,
        min: xs[0],
        max: xs[n - 1],
        entropy,
    })
}

/// Sample standard deviation (n − 1 denominator); `None` for n < 2.
pub fn sample_sd(values: &[f64]) -> Option<f64> {
    let xs = present(values);
    let n = xs.len();
    if n < 2 {
        return None;
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    let ss: f64 = xs.iter().map(|x| (x - mean) * (x - mean)).sum();
    Some(math::sqrt(ss / (n - 1) as f64))
}

/// Arithmetic mean of the non-missing values.
pub fn mean(values: &[f64]) -> Result<f64> {
    let xs = present(values);
    if xs.is_empty() {
        return Err(Error::InsufficientData("mean of empty series".into()));
    }
    Ok(xs.iter().sum::<f64>() / xs.len() as f64)
}

/// Median of the non-missing values (midpoint of the central pair when the
/// count is even).
pub fn median(values: &[f64]) -> Result<f64> {
    let mut xs = present(values);
    if xs.is_empty() {
        return Err(Error::InsufficientData("median of empty series".into()));
    }
    xs.sort_by(f64::total_cmp);
    Ok(median_sorted(&xs))
}

fn median_sorted(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
    }
}

/// Linear-interpolation quantile (R type 7) of the non-missing values,
/// `q` in `[0, 1]`.
pub fn quantile(values: &[f64], q: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&q) || q.is_nan() {
        return Err(Error::InvalidInput(alloc::format!(
            "quantile level {q} outside [0, 1]"
        )));
    }
    let mut xs = present(values);
    if xs.is_empty() {
        return Err(Error::InsufficientData("quantile of empty series".into()));
    }
    xs.sort_by(f64::total_cmp);
    let h = (xs.len() - 1) as f64 * q;
    let lo = h as usize; // floor: h >= 0
    let hi = (lo + 1).min(xs.len() - 1);
    let frac = h - lo as f64;
    Ok(xs[lo] + frac * (xs[hi] - xs[lo]))
}

/// Shannon entropy, in bits, of the empirical distribution formed by
/// normalising the values to sum to one.
///
/// Values may be any finite magnitudes: series containing negatives are first
/// shifted by their minimum so the smallest value maps to zero. Zero-weight
/// entries contribute nothing (`0·log 0 = 0`). The entropy is undefined — an
/// [`Error::UndefinedEntropy`] — when the series is empty or the shifted mass
/// is all zero (a constant series collapses to a point mass only when it is
/// constant *positive*; an all-zero or all-equal-after-shift series has no
/// distribution to normalise).
pub fn empirical_entropy(values: &[f64]) -> Result<f64> {
    let xs = present(values);
    if xs.is_empty() {
        return Err(Error::UndefinedEntropy("empty series".into()));
    }
    let min = xs.iter().copied().fold(f64::INFINITY, f64::min);
    let shift = if min < 0.0 { -min } else { 0.0 };
    let total: f64 = xs.iter().map(|x| x + shift).sum();
    if total <= 0.0 {
        return Err(Error::UndefinedEntropy(
            "series has zero total mass after shifting".into(),
        ));
    }
    let mut h = 0.0;
    for x in &xs {
        let p = (x + shift) / total;
        if p > 0.0 {
            h -= p * math::log2(p);
        }
    }
    Ok(h)
}

/// Third standardised moment (population form `m3 / m2^{3/2}`); `None` when
/// fewer than two distinct values make it undefined.
pub fn skewness(values: &[f64]) -> Option<f64> {
    let (m2, m3, _) = central_moments(values)?;
    if m2 <= 0.0 {
        return None;
    }
    Some(m3 / math::powf(m2, 1.5))
}

/// Fourth standardised moment `m4 / m2^2` (not excess); `None` when
/// undefined.
pub fn kurtosis(values: &[f64]) -> Option<f64> {
    let (m2, _, m4) = central_moments(values)?;
    if m2 <= 0.0 {
        return None;
    }
    Some(m4 / (m2 * m2))
}

fn central_moments(values: &[f64]) -> Option<(f64, f64, f64)> {
    let xs = present(values);
    let n = xs.len();
    if n < 2 {
        return None;
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for x in &xs {
        let d = x - mean;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    let n = n as f64;
    Some((m2 / n, m3 / n, m4 / n))
}

/// Pearson correlation of two equal-length series. Pairs with a missing value
/// on either side are dropped; fails when fewer than two pairs remain or when
/// either side is constant.
pub fn pearson(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::InvalidInput(alloc::format!(
            "correlation inputs have different lengths ({} vs {})",
            a.len(),
            b.len()
        )));
    }
    let pairs: Vec<(f64, f64)> = a
        .iter()
        .zip(b)
        .filter(|(x, y)| !x.is_nan() && !y.is_nan())
        .map(|(x, y)| (*x, *y))
        .collect();
    if pairs.len() < 2 {
        return Err(Error::UndefinedCorrelation(
            "fewer than two complete pairs".into(),
        ));
    }
    let n = pairs.len() as f64;
    let mean_a = pairs.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_b = pairs.iter().map(|p| p.1).sum::<f64>() / n;
    let (mut cov, mut var_a, mut var_b) = (0.0, 0.0, 0.0);
    for (x, y) in &pairs {
        let dx = x - mean_a;
        let dy = y - mean_b;
        cov += dx * dy;
        var_a += dx * dx;
        var_b += dy * dy;
    }
    if var_a == 0.0 || var_b == 0.0 {
        return Err(Error::UndefinedCorrelation(
            "one series is constant".into(),
        ));
    }
    Ok(cov / math::sqrt(var_a * var_b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn summarize_four_values() {
        let b = summarize(&[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(b.mean, 2.5);
        assert_eq!(b.median, 2.5);
        assert_eq!(b.min, 1.0);
        assert_eq!(b.max, 4.0);
        // Sample sd with n-1: sqrt(5/3).
        assert_relative_eq!(b.sd.unwrap(), 1.290_994_448_7, epsilon = 1e-9);
        // Entropy of p = (.1,.2,.3,.4).
        assert_relative_eq!(b.entropy.unwrap(), 1.846_439_344_7, epsilon = 1e-9);
    }

    #[test]
    fn summarize_singleton_has_no_sd() {
        let b = summarize(&[5.0]).unwrap();
        assert_eq!(b.mean, 5.0);
        assert_eq!(b.median, 5.0);
        assert_eq!(b.sd, None);
        // A positive point mass has zero entropy.
        assert_eq!(b.entropy, Some(0.0));
    }

    #[test]
    fn summarize_skips_missing_values() {
        let b = summarize(&[2.0, f64::NAN, 4.0]).unwrap();
        assert_eq!(b.mean, 3.0);
        assert_eq!(b.median, 3.0);
        assert_relative_eq!(b.sd.unwrap(), core::f64::consts::SQRT_2, epsilon = 1e-12);
    }

    #[test]
    fn summarize_all_missing_is_an_error() {
        assert!(matches!(
            summarize(&[f64::NAN, f64::NAN]),
            Err(Error::InsufficientData(_))
        ));
        assert!(summarize(&[]).is_err());
    }

    #[test]
    fn median_even_is_midpoint() {
        assert_eq!(median(&[4.0, 1.0, 3.0, 2.0]).unwrap(), 2.5);
        assert_eq!(median(&[3.0, 1.0, 2.0]).unwrap(), 2.0);
    }

    #[test]
    fn quantile_type7_oracle() {
        let xs = [1.0, 2.0, 3.0, 4.0, 5.0];
        assert_eq!(quantile(&xs, 0.25).unwrap(), 2.0);
        assert_eq!(quantile(&xs, 0.75).unwrap(), 4.0);
        assert_eq!(quantile(&xs, 0.0).unwrap(), 1.0);
        assert_eq!(quantile(&xs, 1.0).unwrap(), 5.0);
        // Interpolated case: h = 3 * 0.25 = 0.75.
        assert_eq!(quantile(&[1.0, 2.0, 3.0, 4.0], 0.25).unwrap(), 1.75);
        assert!(quantile(&xs, 1.5).is_err());
    }

    #[test]
    fn quantile_half_equals_median() {
        let xs = [9.0, 2.0, 7.0, 7.0, 1.0, 4.0];
        assert_eq!(quantile(&xs, 0.5).unwrap(), median(&xs).unwrap());
    }

    #[test]
    fn entropy_known_distributions() {
        // p = (1/4, 1/4, 1/2).
        assert_relative_eq!(
            empirical_entropy(&[1.0, 1.0, 2.0]).unwrap(),
            1.5,
            epsilon = 1e-12
        );
        // Uniform over four outcomes.
        assert_relative_eq!(
            empirical_entropy(&[1.0, 1.0, 1.0, 1.0]).unwrap(),
            2.0,
            epsilon = 1e-12
        );
        // Point mass.
        assert_eq!(empirical_entropy(&[0.0, 5.0, 0.0]).unwrap(), 0.0);
    }

    #[test]
    fn entropy_shifts_negative_series() {
        // [-1, 0, 1] shifts to [0, 1, 2] -> p = (0, 1/3, 2/3).
        assert_relative_eq!(
            empirical_entropy(&[-1.0, 0.0, 1.0]).unwrap(),
            0.918_295_834_1,
            epsilon = 1e-9
        );
    }

    #[test]
    fn entropy_undefined_cases() {
        assert!(matches!(
            empirical_entropy(&[0.0, 0.0]),
            Err(Error::UndefinedEntropy(_))
        ));
        // Constant negative collapses to zero mass after the shift.
        assert!(empirical_entropy(&[-2.0, -2.0]).is_err());
        assert!(empirical_entropy(&[]).is_err());
    }

    #[test]
    fn skewness_and_kurtosis_oracle() {
        // Symmetric series: zero skewness; kurtosis m4/m2^2 = 2.5625/1.5625.
        let xs = [1.0, 2.0, 3.0, 4.0];
        assert_relative_eq!(skewness(&xs).unwrap(), 0.0, epsilon = 1e-12);
        assert_relative_eq!(kurtosis(&xs).unwrap(), 1.64, epsilon = 1e-12);
        assert_eq!(skewness(&[3.0, 3.0, 3.0]), None);
    }

    #[test]
    fn pearson_oracle_values() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let y = [2.0, 4.0, 6.0, 8.0];
        assert_relative_eq!(pearson(&x, &y).unwrap(), 1.0, epsilon = 1e-12);
        let y_neg = [8.0, 6.0, 4.0, 2.0];
        assert_relative_eq!(pearson(&x, &y_neg).unwrap(), -1.0, epsilon = 1e-12);
        assert_relative_eq!(
            pearson(&[1.0, 2.0, 3.0], &[1.0, 3.0, 2.0]).unwrap(),
            0.5,
            epsilon = 1e-12
        );
    }

    #[test]
    fn pearson_failure_modes() {
        assert!(pearson(&[1.0, 2.0], &[1.0]).is_err());
        assert!(matches!(
            pearson(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]),
            Err(Error::UndefinedCorrelation(_))
        ));
        // Missing pairs are dropped before the length check.
        assert!(pearson(&[1.0, f64::NAN], &[2.0, 3.0]).is_err());
    }

    #[test]
    fn stat_tokens_round_trip() {
        for stat in Stat::ALL {
            assert_eq!(Stat::from_token(stat.token()), Some(stat));
        }
        assert_eq!(Stat::from_token("entropy.empirical"), Some(Stat::Entropy));
        assert_eq!(Stat::from_token("bogus"), None);
    }
}
