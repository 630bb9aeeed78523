//! Descriptive statistics shared across modules.

use alloc::vec::Vec;

use crate::math;

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Sample variance with the `n - 1` denominator (two-pass). `NaN` for `n < 2`.
pub fn sample_variance(values: &[f64]) -> f64 {
    let n = values.len();
    if n < 2 {
        return f64::NAN;
    }
    let m = mean(values);
    values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (n - 1) as f64
}

pub fn sample_sd(values: &[f64]) -> f64 {
    math::sqrt(sample_variance(values))
}

/// Quantile by linear interpolation between order statistics at position
/// `1 + (n - 1) p` (Hyndman–Fan type 7). `sorted` must be ascending.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    debug_assert!(n > 0);
    if n == 1 {
        return sorted[0];
    }
    let h = (n - 1) as f64 * p;
    let lo = math::floor(h) as usize;
    let hi = (lo + 1).min(n - 1);
    let frac = h - lo as f64;
    sorted[lo] + frac * (sorted[hi] - sorted[lo])
}

pub fn quantile(values: &[f64], p: f64) -> f64 {
    let mut sorted: Vec<f64> = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    quantile_sorted(&sorted, p)
}

/// Column summary in the layout of a descriptive-statistics table.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Descriptive {
    pub mean: f64,
    pub sd: f64,
    pub min: f64,
    pub max: f64,
}

pub fn describe(values: &[f64]) -> Descriptive {
    Descriptive {
        mean: mean(values),
        sd: sample_sd(values),
        min: values.iter().copied().fold(f64::INFINITY, f64::min),
        max: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn type7_quantiles_on_four_points() {
        let v = [0.8, 0.2, 0.6, 0.4];
        assert!((quantile(&v, 0.25) - 0.35).abs() < 1e-12);
        assert!((quantile(&v, 0.75) - 0.65).abs() < 1e-12);
        assert_eq!(quantile(&v, 0.0), 0.2);
        assert_eq!(quantile(&v, 1.0), 0.8);
    }

    #[test]
    fn five_point_quantiles_hit_order_statistics() {
        let v = [5.0, 1.0, 4.0, 2.0, 3.0];
        assert_eq!(quantile(&v, 0.25), 2.0);
        assert_eq!(quantile(&v, 0.5), 3.0);
        assert_eq!(quantile(&v, 0.75), 4.0);
    }

    #[test]
    fn variance_uses_n_minus_one() {
        assert_eq!(sample_variance(&[0.0, 1.0]), 0.5);
        assert!(sample_variance(&[1.0]).is_nan());
    }
}
