//! Synthetic data with known ground truth: one-factor survey responses,
//! CAR-distributed fields and linear-regression responses.
//!
//! Every generator is a pure function of its inputs and seed (see [`crate::rng`]).

use alloc::string::String;
use alloc::vec::Vec;
use alloc::{format, vec};

use rand::Rng as _;
use rand_distr::StandardNormal;

use crate::car::phi_bounds;
use crate::error::{input_err, Result};
use crate::factor::{category_label, RawResponse};
use crate::graph::WeightMatrix;
use crate::linalg::{cholesky, Matrix, Vector};
use crate::{math, rng};

/// Latent item values are cut at `±CATEGORY_THRESHOLD`, roughly the standard
/// normal tertiles.
pub const CATEGORY_THRESHOLD: f64 = 0.43;

const SURVEY_STREAM: u64 = rng::SYNTH_BASE;
const FACTOR_STREAM: u64 = rng::SYNTH_BASE + 1;
const CAR_STREAM: u64 = rng::SYNTH_BASE + 2;
const REGRESSION_STREAM: u64 = rng::SYNTH_BASE + 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum RespondentCount {
    Fixed(usize),
    /// Uniform on the inclusive range.
    Range(usize, usize),
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SynthSpec {
    pub seed: u64,
    pub n_units: usize,
    pub respondents_per_unit: RespondentCount,
    pub true_loadings: Vec<f64>,
    pub true_phi: f64,
    pub true_beta: Vec<f64>,
    pub noise_sd: f64,
}

fn normal(r: &mut rng::Rng) -> f64 {
    r.sample(StandardNormal)
}

fn check_loadings(loadings: &[f64]) -> Result<()> {
    if let Some(l) = loadings.iter().find(|l| !(l.abs() < 1.0)) {
        return Err(input_err!("loading {l} outside (-1, 1)"));
    }
    Ok(())
}

/// Survey rows for the given units. Each respondent's factor is
/// `N(effect, 1)` where `effect` is the unit's entry of `unit_effects`
/// (zero when absent); item `j` is `λⱼ f + √(1 − λⱼ²) ε` cut into
/// decreased / unchanged / increased at `±0.43`.
pub fn gen_survey(spec: &SynthSpec, unit_labels: &[String], unit_effects: Option<&[f64]>) -> Result<Vec<RawResponse>> {
    if spec.true_loadings.len() != 3 {
        return Err(input_err!("survey generator needs 3 loadings, got {}", spec.true_loadings.len()));
    }
    check_loadings(&spec.true_loadings)?;
    if let Some(e) = unit_effects {
        if e.len() != unit_labels.len() {
            return Err(input_err!("{} unit effects for {} units", e.len(), unit_labels.len()));
        }
    }
    let counts_ok = match spec.respondents_per_unit {
        RespondentCount::Fixed(n) => n >= 1,
        RespondentCount::Range(lo, hi) => lo >= 1 && lo <= hi,
    };
    if !counts_ok {
        return Err(input_err!("respondents per unit must be at least 1"));
    }
    let mut r = rng::stream(spec.seed, SURVEY_STREAM);
    let mut rows = Vec::new();
    for (u, label) in unit_labels.iter().enumerate() {
        let count = match spec.respondents_per_unit {
            RespondentCount::Fixed(n) => n,
            RespondentCount::Range(lo, hi) => r.random_range(lo..=hi),
        };
        let effect = unit_effects.map_or(0.0, |e| e[u]);
        for _ in 0..count {
            let f = effect + normal(&mut r);
            let answers = spec
                .true_loadings
                .iter()
                .map(|&l| {
                    let latent = l * f + math::sqrt(1.0 - l * l) * normal(&mut r);
                    let code = if latent < -CATEGORY_THRESHOLD {
                        -1
                    } else if latent > CATEGORY_THRESHOLD {
                        1
                    } else {
                        0
                    };
                    category_label(Some(code)).into()
                })
                .collect();
            rows.push(RawResponse {
                respondent_id: format!("R{:06}", rows.len() + 1),
                unit_label: label.clone(),
                answers,
            });
        }
    }
    Ok(rows)
}

/// Continuous `n × p` data from a one-factor model with the given loadings:
/// correlation `ΛΛᵀ + diag(1 − λ²)`, unit variances.
pub fn gen_factor_data(loadings: &[f64], n: usize, seed: u64) -> Result<Matrix> {
    check_loadings(loadings)?;
    let mut r = rng::stream(seed, FACTOR_STREAM);
    let mut x = Matrix::zeros(n, loadings.len());
    for i in 0..n {
        let f = normal(&mut r);
        for (j, &l) in loadings.iter().enumerate() {
            x[(i, j)] = l * f + math::sqrt(1.0 - l * l) * normal(&mut r);
        }
    }
    Ok(x)
}

/// One draw of `Y ~ N(mean·1, σ²(I − φW)⁻¹)` via the Cholesky factor of the
/// precision: `Y = mean + σ L⁻ᵀ z` with `I − φW = LLᵀ`.
pub fn gen_car_field(w: &WeightMatrix, phi: f64, sigma2: f64, mean: f64, seed: u64) -> Result<Vec<f64>> {
    let bounds = phi_bounds(w)?;
    if !bounds.contains(phi) {
        return Err(input_err!("phi {phi} outside the admissible interval ({}, {})", bounds.lower, bounds.upper));
    }
    if !(sigma2 >= 0.0) {
        return Err(input_err!("sigma2 must be non-negative"));
    }
    let n = w.len();
    if sigma2 == 0.0 {
        return Ok(vec![mean; n]);
    }
    let precision = Matrix::identity(n, n) - w.dense() * phi;
    let chol = cholesky(&precision, "I - phi W")?;
    let mut r = rng::stream(seed, CAR_STREAM);
    let z = Vector::from_fn(n, |_, _| normal(&mut r));
    let u = chol
        .l()
        .transpose()
        .solve_upper_triangular(&z)
        .ok_or_else(|| input_err!("triangular solve failed"))?;
    let sd = math::sqrt(sigma2);
    Ok(u.iter().map(|v| mean + sd * v).collect())
}

/// `y = Xβ + N(0, σ²I)`.
pub fn gen_regression(x: &Matrix, beta: &[f64], sigma: f64, seed: u64) -> Result<Vec<f64>> {
    if x.ncols() != beta.len() {
        return Err(input_err!("{} columns for {} coefficients", x.ncols(), beta.len()));
    }
    let mut r = rng::stream(seed, REGRESSION_STREAM);
    let mean = x * Vector::from_column_slice(beta);
    Ok(mean.iter().map(|m| m + sigma * normal(&mut r)).collect())
}

/// Standard-normal matrix, handy for synthetic predictors.
pub fn gen_normal_matrix(rows: usize, cols: usize, seed: u64, stream: u64) -> Matrix {
    let mut r = rng::stream(seed, rng::SYNTH_BASE + 16 + stream);
    Matrix::from_fn(rows, cols, |_, _| normal(&mut r))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{lattice_labels, queen_lattice, weights, WeightScheme};
    use crate::stats;

    fn spec(loadings: Vec<f64>) -> SynthSpec {
        SynthSpec {
            seed: 11,
            n_units: 2,
            respondents_per_unit: RespondentCount::Range(1, 5),
            true_loadings: loadings,
            true_phi: 0.0,
            true_beta: vec![],
            noise_sd: 1.0,
        }
    }

    #[test]
    fn survey_is_deterministic() {
        let units = lattice_labels(2);
        let a = gen_survey(&spec(vec![0.63, 0.54, 0.45]), &units, None).unwrap();
        let b = gen_survey(&spec(vec![0.63, 0.54, 0.45]), &units, None).unwrap();
        assert_eq!(a, b);
        assert!(a.len() >= 2 && a.len() <= 10);
    }

    #[test]
    fn loading_outside_unit_interval_rejected() {
        assert!(gen_survey(&spec(vec![1.0, 0.5, 0.5]), &lattice_labels(2), None).is_err());
        assert!(gen_factor_data(&[0.5, -1.2], 10, 0).is_err());
    }

    #[test]
    fn car_field_degenerate_cases() {
        let g = queen_lattice(3, 3, lattice_labels(9)).unwrap();
        let w = weights(&g, WeightScheme::Binary);
        assert_eq!(gen_car_field(&w, 0.1, 0.0, 2.5, 1).unwrap(), vec![2.5; 9]);
        assert!(gen_car_field(&w, 0.5, 1.0, 0.0, 1).is_err());
    }

    #[test]
    fn independent_field_variance() {
        let g = queen_lattice(20, 20, lattice_labels(400)).unwrap();
        let w = weights(&g, WeightScheme::Binary);
        // Identity precision: the field is the raw normal stream, scaled and shifted.
        let y = gen_car_field(&w, 0.0, 2.0, 1.0, 5).unwrap();
        let mut r = rng::stream(5, CAR_STREAM);
        for v in &y {
            assert!((v - (1.0 + 2f64.sqrt() * normal(&mut r))).abs() < 1e-12);
        }
        let pooled = (0..10)
            .map(|seed| stats::sample_variance(&gen_car_field(&w, 0.0, 2.0, 1.0, seed).unwrap()))
            .sum::<f64>()
            / 10.0;
        assert!((pooled / 2.0 - 1.0).abs() < 0.1, "{pooled}");
    }

    #[test]
    fn regression_generator() {
        let x = Matrix::from_fn(50, 2, |i, j| if j == 0 { 1.0 } else { i as f64 });
        assert_eq!(gen_regression(&x, &[1.0, 2.0], 0.0, 3).unwrap()[10], 21.0);
        let a = gen_regression(&x, &[0.0, 0.0], 1.0, 3).unwrap();
        assert_eq!(a, gen_regression(&x, &[0.0, 0.0], 1.0, 3).unwrap());
        assert!(stats::mean(&a).abs() < 4.0 / (50f64).sqrt());
    }
}
