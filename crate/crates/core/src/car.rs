//! Proper conditional autoregressive (CAR) model fitted by maximum likelihood.
//!
//! The model is `Y ~ N(Xβ, σ²(I − φW)⁻¹)` with symmetric binary weights `W`,
//! i.e. conditional means `xᵢβ + φ Σⱼ wᵢⱼ (yⱼ − xⱼβ)`. For a fixed `φ`, `β` and
//! `σ²` have closed forms (generalized least squares with precision
//! `I − φW`), so the likelihood is profiled down to `φ` and maximized by a
//! grid bracket followed by golden-section refinement.
//!
//! `W` is diagonalized once (`W = QΛQᵀ`); every profile evaluation then costs
//! `O(n p²)` and `log det(I − φW) = Σ log(1 − φλᵢ)`.
//!
//! With per-unit variances `vᵢ` the conditional variances become `σ² vᵢ` and
//! the neighbor coefficients `φ wᵢⱼ √(vᵢ/vⱼ)`, which keeps the covariance
//! symmetric: `Var Y = σ² M^{1/2} (I − φW)⁻¹ M^{1/2}` with `M = diag(v)`.

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use alloc::{format, vec};

use crate::error::{input_err, Error, Result};
use crate::graph::{WeightMatrix, WeightScheme};
use crate::linalg::{cholesky, full_column_rank, Matrix, Vector};
use crate::math;

pub const GRID_POINTS: usize = 200;
pub const GOLDEN_TOLERANCE: f64 = 1e-8;
pub const BOUNDARY_TOLERANCE: f64 = 1e-6;
pub const AIC_TIE: f64 = 1e-6;

/// Open interval of `φ` for which `I − φW` is positive definite.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PhiBounds {
    pub lower: f64,
    pub upper: f64,
}

impl PhiBounds {
    pub fn contains(&self, phi: f64) -> bool {
        self.lower < phi && phi < self.upper
    }
}

/// `(1/λ_min, 1/λ_max)` from the extreme eigenvalues of a symmetric binary `W`.
pub fn phi_bounds(w: &WeightMatrix) -> Result<PhiBounds> {
    let spectrum = Spectrum::new(w)?;
    spectrum.bounds()
}

struct Spectrum {
    values: Vec<f64>,
    vectors: Matrix,
}

impl Spectrum {
    fn new(w: &WeightMatrix) -> Result<Self> {
        if w.scheme != WeightScheme::Binary || !w.is_symmetric() {
            return Err(input_err!("the CAR model requires symmetric binary weights"));
        }
        let eig = nalgebra::SymmetricEigen::try_new(w.dense(), f64::EPSILON, 0)
            .ok_or_else(|| Error::Numeric("eigendecomposition of W did not converge".into()))?;
        Ok(Self { values: eig.eigenvalues.iter().copied().collect(), vectors: eig.eigenvectors })
    }

    fn bounds(&self) -> Result<PhiBounds> {
        let min = self.values.iter().copied().fold(f64::INFINITY, f64::min);
        let max = self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if !(min < 0.0 && max > 0.0) {
            return Err(Error::Numeric(format!("W has extreme eigenvalues {min} and {max}; expected opposite signs")));
        }
        Ok(PhiBounds { lower: 1.0 / min, upper: 1.0 / max })
    }
}

/// How `φ` is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PhiSearch {
    /// Maximize the profile likelihood over the whole admissible interval.
    Profile,
    /// Maximize over a closed sub-interval; `lower == upper` fixes `φ`.
    Bracket { lower: f64, upper: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct CarOptions {
    pub search: PhiSearch,
    /// Relative conditional variances per unit (e.g. sampling variances of
    /// unit means); `None` means homoskedastic.
    pub unit_variances: Option<Vec<f64>>,
}

impl Default for CarOptions {
    fn default() -> Self {
        Self { search: PhiSearch::Profile, unit_variances: None }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CarFit {
    pub phi: f64,
    pub beta: Vec<f64>,
    pub sigma2: f64,
    pub loglik: f64,
    pub aic: f64,
    /// Sample variance of `y − smoothed`.
    pub residual_variance: f64,
    pub fitted_nonspatial: Vec<f64>,
    pub smoothed: Vec<f64>,
    pub phi_bounds: PhiBounds,
    pub unit_variances: Option<Vec<f64>>,
    /// Every `(φ, profile log-likelihood)` pair probed on the grid.
    #[cfg_attr(feature = "serde", serde(skip))]
    pub grid: Vec<(f64, f64)>,
    pub warnings: Vec<String>,
}

/// An `n × 1` column of ones.
pub fn intercept_only(n: usize) -> Matrix {
    Matrix::from_element(n, 1, 1.0)
}

struct Profile {
    y: Vector,
    x: Matrix,
    eigenvalues: Vec<f64>,
    log_v_sum: f64,
}

struct ProfilePoint {
    beta: Vector,
    sigma2: f64,
    loglik: f64,
}

impl Profile {
    fn eval(&self, phi: f64) -> Option<ProfilePoint> {
        let n = self.y.len();
        let p = self.x.ncols();
        let mut a = Matrix::zeros(p, p);
        let mut b = Vector::zeros(p);
        let mut log_det = 0.0;
        for i in 0..n {
            let d = 1.0 - phi * self.eigenvalues[i];
            if !(d > 0.0) {
                return None;
            }
            log_det += math::ln(d);
            let xi = self.x.row(i);
            for r in 0..p {
                b[r] += d * xi[r] * self.y[i];
                for c in 0..p {
                    a[(r, c)] += d * xi[r] * xi[c];
                }
            }
        }
        let beta = a.cholesky()?.solve(&b);
        let resid = &self.y - &self.x * &beta;
        let quad: f64 = (0..n).map(|i| (1.0 - phi * self.eigenvalues[i]) * resid[i] * resid[i]).sum();
        let sigma2 = quad / n as f64;
        let loglik = if sigma2 > 0.0 {
            -0.5 * n as f64 * (math::LN_2PI + math::ln(sigma2) + 1.0) + 0.5 * log_det - 0.5 * self.log_v_sum
        } else {
            f64::INFINITY
        };
        Some(ProfilePoint { beta, sigma2, loglik })
    }

    fn loglik(&self, phi: f64) -> f64 {
        self.eval(phi).map_or(f64::NEG_INFINITY, |p| p.loglik)
    }
}

fn golden_section(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let inv_phi = (math::sqrt(5.0) - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > GOLDEN_TOLERANCE {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    (a + b) / 2.0
}

/// Fits the CAR model to `y` with design `x` (include an intercept column).
pub fn fit_car(y: &[f64], x: &Matrix, w: &WeightMatrix, options: &CarOptions) -> Result<CarFit> {
    let n = y.len();
    if x.nrows() != n || w.len() != n {
        return Err(input_err!("y has {n} units, X has {} rows, W has {} units", x.nrows(), w.len()));
    }
    if let Some(i) = y.iter().position(|v| !v.is_finite()) {
        return Err(input_err!(
            "response is missing at unit {} (position {i}); drop or impute missing units before fitting",
            i + 1
        ));
    }
    if n < 5 {
        return Err(input_err!("the CAR model needs at least 5 units, got {n}"));
    }
    if !full_column_rank(x) {
        return Err(input_err!("design matrix is not of full column rank"));
    }
    let scale: Vec<f64> = match &options.unit_variances {
        None => vec![1.0; n],
        Some(v) if v.len() != n => return Err(input_err!("{} unit variances for {n} units", v.len())),
        Some(v) if v.iter().any(|s| !(*s > 0.0 && s.is_finite())) => {
            return Err(input_err!("unit variances must be positive and finite"))
        }
        Some(v) => v.iter().map(|s| math::sqrt(*s)).collect(),
    };

    let spectrum = Spectrum::new(w)?;
    let bounds = spectrum.bounds()?;
    let q_t = spectrum.vectors.transpose();
    let y_star = Vector::from_iterator(n, y.iter().zip(&scale).map(|(v, s)| v / s));
    let x_star = Matrix::from_fn(n, x.ncols(), |i, j| x[(i, j)] / scale[i]);
    let profile = Profile {
        y: &q_t * y_star,
        x: &q_t * x_star,
        eigenvalues: spectrum.values.clone(),
        log_v_sum: scale.iter().map(|s| 2.0 * math::ln(*s)).sum(),
    };

    let mut warnings = Vec::new();
    let (lo, hi, open) = match options.search {
        PhiSearch::Profile => (bounds.lower, bounds.upper, true),
        PhiSearch::Bracket { lower, upper } => {
            if !(lower <= upper) || !bounds.contains(lower) || !bounds.contains(upper) {
                return Err(input_err!(
                    "bracket [{lower}, {upper}] must lie inside the admissible interval ({}, {})",
                    bounds.lower,
                    bounds.upper
                ));
            }
            (lower, upper, false)
        }
    };

    let mut grid = Vec::with_capacity(GRID_POINTS);
    let phi = if lo == hi {
        grid.push((lo, profile.loglik(lo)));
        lo
    } else {
        let step = if open { (hi - lo) / (GRID_POINTS + 1) as f64 } else { (hi - lo) / (GRID_POINTS - 1) as f64 };
        let offset = if open { 1 } else { 0 };
        for k in 0..GRID_POINTS {
            let phi = lo + (k + offset) as f64 * step;
            grid.push((phi, profile.loglik(phi)));
        }
        let best = (0..grid.len()).fold(0, |b, k| if grid[k].1 > grid[b].1 { k } else { b });
        let left = if best == 0 { if open { lo + step * 1e-6 } else { lo } } else { grid[best - 1].0 };
        let right = if best + 1 == grid.len() { if open { hi - step * 1e-6 } else { hi } } else { grid[best + 1].0 };
        let refined = golden_section(|p| profile.loglik(p), left, right);
        if profile.loglik(refined) >= grid[best].1 {
            refined
        } else {
            grid[best].0
        }
    };
    if lo != hi && (phi - lo < BOUNDARY_TOLERANCE || hi - phi < BOUNDARY_TOLERANCE) {
        warnings.push(format!("phi estimate {phi} lies within {BOUNDARY_TOLERANCE} of the search boundary"));
    }

    let point = profile
        .eval(phi)
        .ok_or_else(|| Error::Numeric(format!("profile likelihood undefined at phi = {phi}")))?;
    if !point.loglik.is_finite() {
        return Err(Error::Degenerate("response is fitted exactly; the likelihood is unbounded".into()));
    }
    precision_log_det(w, phi)?;

    let beta: Vec<f64> = point.beta.iter().copied().collect();
    let fitted: Vec<f64> = (0..n).map(|i| (0..x.ncols()).map(|j| x[(i, j)] * beta[j]).sum()).collect();
    let mut fit = CarFit {
        phi,
        aic: -2.0 * point.loglik + 2.0 * (beta.len() + 2) as f64,
        beta,
        sigma2: point.sigma2,
        loglik: point.loglik,
        residual_variance: 0.0,
        fitted_nonspatial: fitted,
        smoothed: Vec::new(),
        phi_bounds: bounds,
        unit_variances: options.unit_variances.clone(),
        grid,
        warnings,
    };
    fit.smoothed = smooth(&fit, y, w)?;
    let resid: Vec<f64> = y.iter().zip(&fit.smoothed).map(|(a, b)| a - b).collect();
    fit.residual_variance = crate::stats::sample_variance(&resid);
    Ok(fit)
}

/// `log det(I − φW)` by Cholesky factorization; fails if the matrix is not
/// positive definite.
pub fn precision_log_det(w: &WeightMatrix, phi: f64) -> Result<f64> {
    let n = w.len();
    let a = Matrix::identity(n, n) - w.dense() * phi;
    let chol = cholesky(&a, "I - phi W")?;
    Ok(2.0 * chol.l().diagonal().iter().map(|d| math::ln(*d)).sum::<f64>())
}

/// Conditional means `xᵢβ + φ Σⱼ cᵢⱼ (yⱼ − xⱼβ)`: the non-spatial fit plus the
/// contribution of each unit's neighbors.
pub fn smooth(fit: &CarFit, y: &[f64], w: &WeightMatrix) -> Result<Vec<f64>> {
    let n = y.len();
    if fit.fitted_nonspatial.len() != n || w.len() != n {
        return Err(input_err!("fit, response and weights disagree on the number of units"));
    }
    let resid: Vec<f64> = y.iter().zip(&fit.fitted_nonspatial).map(|(a, b)| a - b).collect();
    let out = (0..n)
        .map(|i| {
            let spatial: f64 = match &fit.unit_variances {
                None => w.row(i).iter().map(|&(j, wij)| wij * resid[j]).sum(),
                Some(v) => w.row(i).iter().map(|&(j, wij)| wij * math::sqrt(v[i] / v[j]) * resid[j]).sum(),
            };
            fit.fitted_nonspatial[i] + fit.phi * spatial
        })
        .collect();
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SelectionRow {
    pub name: String,
    pub aic: f64,
    pub residual_variance: f64,
    pub phi: f64,
    pub loglik: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Selection {
    pub best: String,
    pub table: Vec<SelectionRow>,
    pub warnings: Vec<String>,
}

/// Picks the candidate with the lowest AIC; AICs within `1e-6` of the minimum
/// are separated by the lower residual variance.
pub fn select_response(candidates: &[(String, CarFit)]) -> Result<Selection> {
    let Some(min_aic) = candidates.iter().map(|(_, f)| f.aic).min_by(f64::total_cmp) else {
        return Err(input_err!("no candidate fits to select from"));
    };
    let best = candidates
        .iter()
        .filter(|(_, f)| f.aic - min_aic <= AIC_TIE)
        .min_by(|a, b| a.1.residual_variance.total_cmp(&b.1.residual_variance))
        .map(|(name, _)| name.clone())
        .expect("minimum exists");
    let mut warnings = Vec::new();
    if candidates.len() == 1 {
        warnings.push("only one candidate response; selection is vacuous".to_string());
    }
    Ok(Selection {
        best,
        table: candidates
            .iter()
            .map(|(name, f)| SelectionRow {
                name: name.clone(),
                aic: f.aic,
                residual_variance: f.residual_variance,
                phi: f.phi,
                loglik: f.loglik,
            })
            .collect(),
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{graph_from_edge_list, lattice_labels, queen_lattice, weights};

    fn binary(n_units: usize, edges: &[(usize, usize)]) -> WeightMatrix {
        let units = lattice_labels(n_units);
        let e: Vec<(String, String)> = edges.iter().map(|&(a, b)| (units[a].clone(), units[b].clone())).collect();
        weights(&graph_from_edge_list(&units, &e).unwrap(), WeightScheme::Binary)
    }

    #[test]
    fn bounds_of_small_graphs() {
        let k2 = phi_bounds(&binary(2, &[(0, 1)])).unwrap();
        assert!((k2.lower + 1.0).abs() < 1e-12 && (k2.upper - 1.0).abs() < 1e-12);
        let k3 = phi_bounds(&binary(3, &[(0, 1), (1, 2), (0, 2)])).unwrap();
        assert!((k3.lower + 1.0).abs() < 1e-12 && (k3.upper - 0.5).abs() < 1e-12);
        let c4 = phi_bounds(&binary(4, &[(0, 1), (1, 2), (2, 3), (3, 0)])).unwrap();
        assert!((c4.lower + 0.5).abs() < 1e-12 && (c4.upper - 0.5).abs() < 1e-12);
    }

    #[test]
    fn row_standardized_weights_rejected() {
        let g = queen_lattice(3, 3, lattice_labels(9)).unwrap();
        assert!(phi_bounds(&weights(&g, WeightScheme::RowStandardized)).is_err());
    }

    #[test]
    fn fixed_zero_phi_reduces_to_sample_moments() {
        let g = queen_lattice(3, 3, lattice_labels(9)).unwrap();
        let w = weights(&g, WeightScheme::Binary);
        let y = [0.1, 0.5, 0.3, 0.9, 0.2, 0.4, 0.7, 0.6, 0.8];
        let opts = CarOptions { search: PhiSearch::Bracket { lower: 0.0, upper: 0.0 }, unit_variances: None };
        let fit = fit_car(&y, &intercept_only(9), &w, &opts).unwrap();
        let mean = y.iter().sum::<f64>() / 9.0;
        let ml_var = y.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / 9.0;
        assert!((fit.beta[0] - mean).abs() < 1e-14);
        assert!((fit.sigma2 - ml_var).abs() < 1e-14);
        assert_eq!(fit.phi, 0.0);
        assert!(fit.smoothed.iter().all(|s| (s - mean).abs() < 1e-14));
    }

    #[test]
    fn single_neighbor_smoothing_by_hand() {
        let w = binary(5, &[(0, 1), (1, 2), (2, 3), (3, 4)]);
        let fit = CarFit {
            phi: 0.1,
            beta: vec![0.5],
            sigma2: 1.0,
            loglik: 0.0,
            aic: 0.0,
            residual_variance: 0.0,
            fitted_nonspatial: vec![0.5; 5],
            smoothed: vec![],
            phi_bounds: PhiBounds { lower: -1.0, upper: 1.0 },
            unit_variances: None,
            grid: vec![],
            warnings: vec![],
        };
        let y = [0.5, 0.8, 0.5, 0.5, 0.5];
        let s = smooth(&fit, &y, &w).unwrap();
        assert!((s[0] - (0.5 + 0.1 * 0.3)).abs() < 1e-15);
        assert_eq!(s[1], 0.5);
    }

    #[test]
    fn missing_response_rejected() {
        let g = queen_lattice(3, 3, lattice_labels(9)).unwrap();
        let w = weights(&g, WeightScheme::Binary);
        let mut y = [0.5; 9];
        y[3] = f64::NAN;
        let err = fit_car(&y, &intercept_only(9), &w, &CarOptions::default()).unwrap_err();
        assert!(matches!(err, Error::Input(m) if m.contains("impute")));
    }

    #[test]
    fn select_by_aic_then_residual_variance() {
        let mk = |aic: f64, rv: f64| CarFit {
            phi: 0.0,
            beta: vec![],
            sigma2: 1.0,
            loglik: 0.0,
            aic,
            residual_variance: rv,
            fitted_nonspatial: vec![],
            smoothed: vec![],
            phi_bounds: PhiBounds { lower: -1.0, upper: 1.0 },
            unit_variances: None,
            grid: vec![],
            warnings: vec![],
        };
        let s = select_response(&[
            ("mean".into(), mk(-50.0, 0.3)),
            ("q1".into(), mk(-40.0, 0.1)),
            ("q3".into(), mk(-42.0, 0.2)),
        ])
        .unwrap();
        assert_eq!(s.best, "mean");
        assert_eq!(s.table.len(), 3);
        let s = select_response(&[("b".into(), mk(-10.0, 0.02)), ("a".into(), mk(-10.0 + 5e-7, 0.01))]).unwrap();
        assert_eq!(s.best, "a");
        let s = select_response(&[("only".into(), mk(1.0, 1.0))]).unwrap();
        assert_eq!(s.best, "only");
        assert_eq!(s.warnings.len(), 1);
        assert!(select_response(&[]).is_err());
    }
}
