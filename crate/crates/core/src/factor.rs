//! Ordinal item coding, principal-axis factor analysis and factor scores.
//!
//! Items are coded `-1 / 0 / +1` for *decreased / unchanged / increased*;
//! "don't know" answers are missing. Fitting and scoring both use complete
//! cases only. Factor scores use regression (Thurstone) weights `Ω = R⁻¹Λ`
//! and are min–max normalized over the scored sample.

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use alloc::{format, vec};

use crate::error::{input_err, Error, Result};
use crate::linalg::{sorted_eigen, Matrix};
use crate::math;

pub const MAX_ITERATIONS: usize = 200;
pub const TOLERANCE: f64 = 1e-6;
pub const HEYWOOD_CLAMP: f64 = 0.9995;

/// Maps a category label to its ordinal code; `Some(None)` is a missing answer.
pub fn parse_category(label: &str) -> Option<Option<i8>> {
    let label = label.trim();
    if label.eq_ignore_ascii_case("decreased") {
        Some(Some(-1))
    } else if label.eq_ignore_ascii_case("unchanged") {
        Some(Some(0))
    } else if label.eq_ignore_ascii_case("increased") {
        Some(Some(1))
    } else if label.eq_ignore_ascii_case("na") {
        Some(None)
    } else {
        None
    }
}

pub fn category_label(code: Option<i8>) -> &'static str {
    match code {
        Some(-1) => "decreased",
        Some(0) => "unchanged",
        Some(1) => "increased",
        _ => "na",
    }
}

/// One survey row before coding.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawResponse {
    pub respondent_id: String,
    pub unit_label: String,
    pub answers: Vec<String>,
}

/// Respondents × items matrix of ordinal codes with a missing mask.
#[derive(Debug, Clone, PartialEq)]
pub struct CodedResponseMatrix {
    respondent_ids: Vec<String>,
    unit_labels: Vec<String>,
    n_items: usize,
    codes: Vec<i8>,
    missing: Vec<bool>,
}

impl CodedResponseMatrix {
    /// Builds a matrix from per-respondent rows of optional codes.
    pub fn from_rows(
        respondent_ids: Vec<String>,
        unit_labels: Vec<String>,
        rows: Vec<Vec<Option<i8>>>,
    ) -> Result<Self> {
        if respondent_ids.len() != rows.len() || unit_labels.len() != rows.len() {
            return Err(input_err!(
                "{} respondent ids, {} unit labels and {} rows",
                respondent_ids.len(),
                unit_labels.len(),
                rows.len()
            ));
        }
        let n_items = rows.first().map_or(0, Vec::len);
        let mut codes = Vec::with_capacity(rows.len() * n_items);
        let mut missing = Vec::with_capacity(rows.len() * n_items);
        for (row, id) in rows.iter().zip(&respondent_ids) {
            if row.len() != n_items {
                return Err(input_err!("row {id}: expected {n_items} items, found {}", row.len()));
            }
            for (j, cell) in row.iter().enumerate() {
                match *cell {
                    Some(c @ -1..=1) => {
                        codes.push(c);
                        missing.push(false);
                    }
                    Some(c) => return Err(input_err!("row {id}, item {}: code {c} outside -1..=1", j + 1)),
                    None => {
                        codes.push(0);
                        missing.push(true);
                    }
                }
            }
        }
        Ok(Self { respondent_ids, unit_labels, n_items, codes, missing })
    }

    pub fn n_respondents(&self) -> usize {
        self.respondent_ids.len()
    }

    pub fn n_items(&self) -> usize {
        self.n_items
    }

    pub fn respondent_ids(&self) -> &[String] {
        &self.respondent_ids
    }

    pub fn unit_labels(&self) -> &[String] {
        &self.unit_labels
    }

    pub fn get(&self, row: usize, item: usize) -> Option<i8> {
        let k = row * self.n_items + item;
        (!self.missing[k]).then_some(self.codes[k])
    }

    pub fn is_missing(&self, row: usize, item: usize) -> bool {
        self.missing[row * self.n_items + item]
    }

    pub fn is_complete(&self, row: usize) -> bool {
        let start = row * self.n_items;
        !self.missing[start..start + self.n_items].iter().any(|&m| m)
    }

    pub fn complete_rows(&self) -> Vec<usize> {
        (0..self.n_respondents()).filter(|&r| self.is_complete(r)).collect()
    }

    /// Complete-case rows as a numeric matrix.
    pub fn complete_case_matrix(&self) -> (Vec<usize>, Matrix) {
        let rows = self.complete_rows();
        let m = Matrix::from_fn(rows.len(), self.n_items, |i, j| {
            f64::from(self.codes[rows[i] * self.n_items + j])
        });
        (rows, m)
    }
}

/// Codes raw category labels (case-insensitive) into a response matrix.
pub fn code_responses(rows: &[RawResponse]) -> Result<CodedResponseMatrix> {
    let mut ids = Vec::with_capacity(rows.len());
    let mut units = Vec::with_capacity(rows.len());
    let mut coded = Vec::with_capacity(rows.len());
    for row in rows {
        let codes = row
            .answers
            .iter()
            .enumerate()
            .map(|(j, label)| {
                parse_category(label).ok_or_else(|| Error::Category {
                    row: row.respondent_id.clone(),
                    item: j + 1,
                    label: label.clone(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        ids.push(row.respondent_id.clone());
        units.push(row.unit_label.clone());
        coded.push(codes);
    }
    CodedResponseMatrix::from_rows(ids, units, coded)
}

/// A fitted principal-axis factor model.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FactorModel {
    /// items × factors
    pub loadings: Vec<Vec<f64>>,
    pub communalities: Vec<f64>,
    pub uniquenesses: Vec<f64>,
    pub eigenvalues: Vec<f64>,
    pub proportion_variance: Vec<f64>,
    /// items × factors, `R⁻¹Λ`
    pub score_weights: Vec<Vec<f64>>,
    pub item_means: Vec<f64>,
    pub item_sds: Vec<f64>,
    pub n_used: usize,
    pub iterations: usize,
    pub warnings: Vec<String>,
}

impl FactorModel {
    pub fn n_items(&self) -> usize {
        self.loadings.len()
    }

    pub fn n_factors(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn loadings_matrix(&self) -> Matrix {
        rows_to_matrix(&self.loadings, self.n_factors())
    }

    /// Correlation matrix implied by the model, `ΛΛᵀ + diag(uniquenesses)`.
    pub fn implied_correlation(&self) -> Matrix {
        let l = self.loadings_matrix();
        let mut r = &l * l.transpose();
        for j in 0..self.n_items() {
            r[(j, j)] += self.uniquenesses[j];
        }
        r
    }
}

fn rows_to_matrix(rows: &[Vec<f64>], ncols: usize) -> Matrix {
    Matrix::from_fn(rows.len(), ncols, |i, j| rows[i][j])
}

fn matrix_to_rows(m: &Matrix) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

/// Fits a `k`-factor principal-axis model to the complete cases of `data`.
pub fn fit_paf(data: &CodedResponseMatrix, k: usize) -> Result<FactorModel> {
    let (_, x) = data.complete_case_matrix();
    fit_paf_matrix(&x, k)
}

/// Principal-axis factoring on an observations × items matrix of numeric
/// scores (no missing values).
pub fn fit_paf_matrix(x: &Matrix, k: usize) -> Result<FactorModel> {
    let (n, p) = x.shape();
    if k == 0 {
        return Err(input_err!("factor count must be at least 1"));
    }
    if n < k + 2 {
        return Err(input_err!("{n} complete cases; at least {} required for {k} factor(s)", k + 2));
    }
    if p < k {
        return Err(input_err!("{p} items cannot support {k} factors"));
    }

    let means: Vec<f64> = (0..p).map(|j| x.column(j).sum() / n as f64).collect();
    let sds: Vec<f64> = (0..p)
        .map(|j| {
            let ss: f64 = x.column(j).iter().map(|v| (v - means[j]) * (v - means[j])).sum();
            math::sqrt(ss / (n - 1) as f64)
        })
        .collect();
    if let Some(j) = sds.iter().position(|&s| !(s > 0.0)) {
        return Err(input_err!("item {} has zero variance among complete cases", j + 1));
    }

    let z = Matrix::from_fn(n, p, |i, j| (x[(i, j)] - means[j]) / sds[j]);
    let mut r = z.transpose() * &z / (n - 1) as f64;
    for j in 0..p {
        r[(j, j)] = 1.0;
    }

    let mut warnings = Vec::new();
    let (r_eigen, _) = sorted_eigen(&r);
    let singular = r_eigen[p - 1] <= 1e-10;
    let r_inv = if singular {
        warnings.push("correlation matrix is singular; score weights use its pseudo-inverse".to_string());
        r.clone()
            .pseudo_inverse(1e-10)
            .map_err(|e| Error::Estimation(format!("pseudo-inverse of R: {e}")))?
    } else {
        r.clone()
            .try_inverse()
            .ok_or_else(|| Error::Estimation("correlation matrix is singular".to_string()))?
    };

    // Squared multiple correlations; the largest absolute correlation stands
    // in when R has no inverse.
    let mut h: Vec<f64> = if singular {
        (0..p)
            .map(|j| (0..p).filter(|&l| l != j).map(|l| math::abs(r[(j, l)])).fold(0.0, f64::max))
            .collect()
    } else {
        (0..p).map(|j| (1.0 - 1.0 / r_inv[(j, j)]).clamp(0.0, 1.0)).collect()
    };

    let mut heywood = vec![false; p];
    let mut loadings = Matrix::zeros(p, k);
    let mut delta = f64::INFINITY;
    let mut iterations = 0;
    while iterations < MAX_ITERATIONS {
        iterations += 1;
        let mut reduced = r.clone();
        for j in 0..p {
            reduced[(j, j)] = h[j];
        }
        let (values, vectors) = sorted_eigen(&reduced);
        for f in 0..k {
            let scale = math::sqrt(values[f].max(0.0));
            for j in 0..p {
                loadings[(j, f)] = vectors[(j, f)] * scale;
            }
        }
        let mut next: Vec<f64> = (0..p).map(|j| loadings.row(j).norm_squared()).collect();
        for j in 0..p {
            if next[j] > 1.0 {
                next[j] = HEYWOOD_CLAMP;
                heywood[j] = true;
            }
        }
        delta = next.iter().zip(&h).map(|(a, b)| math::abs(a - b)).fold(0.0, f64::max);
        h = next;
        if delta < TOLERANCE {
            break;
        }
    }
    if delta >= TOLERANCE {
        return Err(Error::NonConvergence { iterations, delta });
    }

    for j in 0..p {
        let ss = loadings.row(j).norm_squared();
        if ss > 1.0 {
            let s = math::sqrt(HEYWOOD_CLAMP / ss);
            for f in 0..k {
                loadings[(j, f)] *= s;
            }
            heywood[j] = true;
        }
    }
    for (j, _) in heywood.iter().enumerate().filter(|(_, &hw)| hw) {
        warnings.push(format!("Heywood case at item {}: communality clamped to {HEYWOOD_CLAMP}", j + 1));
    }

    fix_signs(&mut loadings);
    let mut loadings = varimax(&loadings);
    fix_signs(&mut loadings);
    sort_factors(&mut loadings);

    let communalities: Vec<f64> = (0..p).map(|j| loadings.row(j).norm_squared()).collect();
    let uniquenesses = communalities.iter().map(|h| 1.0 - h).collect();
    let eigenvalues: Vec<f64> = (0..k).map(|f| loadings.column(f).norm_squared()).collect();
    let proportion_variance = eigenvalues.iter().map(|e| e / p as f64).collect();
    let weights = &r_inv * &loadings;

    Ok(FactorModel {
        loadings: matrix_to_rows(&loadings),
        communalities,
        uniquenesses,
        eigenvalues,
        proportion_variance,
        score_weights: matrix_to_rows(&weights),
        item_means: means,
        item_sds: sds,
        n_used: n,
        iterations,
        warnings,
    })
}

/// Flips each factor so its loadings sum to a positive value.
fn fix_signs(loadings: &mut Matrix) {
    for f in 0..loadings.ncols() {
        if loadings.column(f).sum() < 0.0 {
            loadings.column_mut(f).neg_mut();
        }
    }
}

fn sort_factors(loadings: &mut Matrix) {
    let k = loadings.ncols();
    let mut order: Vec<usize> = (0..k).collect();
    let ss: Vec<f64> = (0..k).map(|f| loadings.column(f).norm_squared()).collect();
    order.sort_by(|&a, &b| ss[b].total_cmp(&ss[a]));
    let sorted = Matrix::from_fn(loadings.nrows(), k, |j, f| loadings[(j, order[f])]);
    *loadings = sorted;
}

/// Varimax rotation with Kaiser row normalization. A single factor is
/// returned unchanged.
pub fn varimax(loadings: &Matrix) -> Matrix {
    let (p, k) = loadings.shape();
    if k < 2 {
        return loadings.clone();
    }
    let norms: Vec<f64> = (0..p).map(|j| math::sqrt(loadings.row(j).norm_squared())).collect();
    let x = Matrix::from_fn(p, k, |j, f| {
        if norms[j] > 0.0 {
            loadings[(j, f)] / norms[j]
        } else {
            0.0
        }
    });
    let mut rotation = Matrix::identity(k, k);
    let mut criterion = 0.0;
    for _ in 0..1000 {
        let z = &x * &rotation;
        let col_ss: Vec<f64> = (0..k).map(|f| z.column(f).norm_squared()).collect();
        let target = Matrix::from_fn(p, k, |j, f| {
            let v = z[(j, f)];
            v * v * v - v * col_ss[f] / p as f64
        });
        let b = x.transpose() * target;
        let svd = b.svd(true, true);
        let (Some(u), Some(v_t)) = (svd.u, svd.v_t) else { break };
        rotation = u * v_t;
        let next = svd.singular_values.sum();
        if next < criterion * (1.0 + 1e-5) {
            break;
        }
        criterion = next;
    }
    let rotated = &x * rotation;
    Matrix::from_fn(p, k, |j, f| rotated[(j, f)] * norms[j])
}

/// Per-respondent factor scores with their min–max normalization.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreVector {
    pub respondent_ids: Vec<String>,
    pub unit_labels: Vec<String>,
    pub raw_scores: Vec<f64>,
    pub normalized_scores: Vec<f64>,
    pub min_raw: f64,
    pub max_raw: f64,
}

/// Scores the complete cases of `data` on the first factor.
pub fn score(model: &FactorModel, data: &CodedResponseMatrix) -> Result<ScoreVector> {
    score_factor(model, data, 0)
}

pub fn score_factor(model: &FactorModel, data: &CodedResponseMatrix, factor: usize) -> Result<ScoreVector> {
    if data.n_items() != model.n_items() {
        return Err(input_err!("data has {} items, model has {}", data.n_items(), model.n_items()));
    }
    if factor >= model.n_factors() {
        return Err(input_err!("factor {factor} out of range"));
    }
    let rows = data.complete_rows();
    let raw: Vec<f64> = rows
        .iter()
        .map(|&r| {
            (0..model.n_items())
                .map(|j| {
                    let code = f64::from(data.get(r, j).unwrap_or_default());
                    (code - model.item_means[j]) / model.item_sds[j] * model.score_weights[j][factor]
                })
                .sum()
        })
        .collect();
    let (normalized, min_raw, max_raw) = normalize_min_max(&raw)?;
    Ok(ScoreVector {
        respondent_ids: rows.iter().map(|&r| data.respondent_ids()[r].clone()).collect(),
        unit_labels: rows.iter().map(|&r| data.unit_labels()[r].clone()).collect(),
        raw_scores: raw,
        normalized_scores: normalized,
        min_raw,
        max_raw,
    })
}

/// Raw factor score of one standardized row, `zᵀΩ` for the given factor.
pub fn raw_score(model: &FactorModel, z_row: &[f64], factor: usize) -> f64 {
    z_row.iter().zip(&model.score_weights).map(|(z, w)| z * w[factor]).sum()
}

/// Maps values onto `[0, 1]` by `(v - min) / (max - min)`.
pub fn normalize_min_max(values: &[f64]) -> Result<(Vec<f64>, f64, f64)> {
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if values.is_empty() || !(max > min) {
        return Err(Error::Degenerate(format!(
            "cannot normalize {} score(s) with min = max",
            values.len()
        )));
    }
    let range = max - min;
    let out = values.iter().map(|v| ((v - min) / range).clamp(0.0, 1.0)).collect();
    Ok((out, min, max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;

    fn raw(id: &str, answers: &[&str]) -> RawResponse {
        RawResponse {
            respondent_id: id.to_string(),
            unit_label: "01003".to_string(),
            answers: answers.iter().map(|s| s.to_string()).collect(),
        }
    }

    #[test]
    fn codes_categories() {
        let m = code_responses(&[
            raw("r1", &["increased", "Increased", "unchanged"]),
            raw("r2", &["NA", "decreased", "increased"]),
        ])
        .unwrap();
        assert_eq!((0..3).map(|j| m.get(0, j)).collect::<Vec<_>>(), [Some(1), Some(1), Some(0)]);
        assert!(m.is_complete(0));
        assert_eq!(m.get(1, 0), None);
        assert_eq!(m.get(1, 1), Some(-1));
        assert_eq!(m.get(1, 2), Some(1));
        assert_eq!(m.complete_rows(), [0]);
    }

    #[test]
    fn rejects_unknown_label_with_location() {
        let err = code_responses(&[raw("r3", &["increaed", "unchanged", "na"])]).unwrap_err();
        assert_eq!(err, Error::Category { row: "r3".to_string(), item: 1, label: "increaed".to_string() });
    }

    #[test]
    fn normalization_by_hand() {
        let (n, lo, hi) = normalize_min_max(&[-1.0, 0.0, 1.0]).unwrap();
        assert_eq!(n, [0.0, 0.5, 1.0]);
        assert_eq!((lo, hi), (-1.0, 1.0));
        assert!(matches!(normalize_min_max(&[0.3]), Err(Error::Degenerate(_))));
    }

    #[test]
    fn perfectly_correlated_items_load_near_one() {
        let x = Matrix::from_row_slice(6, 2, &[1., 1., 0., 0., -1., -1., 1., 1., 0., 0., -1., -1.]);
        let m = fit_paf_matrix(&x, 1).unwrap();
        for row in &m.loadings {
            assert!((row[0] - 1.0).abs() < 1e-3, "{row:?}");
        }
    }

    #[test]
    fn zero_variance_item_is_rejected() {
        let x = Matrix::from_row_slice(4, 2, &[1., 0., 0., 0., -1., 0., 1., 0.]);
        assert!(matches!(fit_paf_matrix(&x, 1), Err(Error::Input(_))));
    }

    #[test]
    fn too_few_cases() {
        let x = Matrix::from_row_slice(2, 2, &[1., 0., 0., 1.]);
        assert!(fit_paf_matrix(&x, 1).is_err());
    }

    #[test]
    fn varimax_is_identity_for_one_factor() {
        let l = Matrix::from_column_slice(3, 1, &[0.631_234_5, 0.54, 0.450_000_001]);
        let r = varimax(&l);
        for j in 0..3 {
            assert_eq!(r[(j, 0)].to_bits(), l[(j, 0)].to_bits());
        }
    }

    #[test]
    fn varimax_preserves_communalities() {
        let l = Matrix::from_row_slice(4, 2, &[0.7, 0.3, 0.6, 0.4, 0.3, 0.7, 0.2, 0.6]);
        let r = varimax(&l);
        for j in 0..4 {
            assert!((r.row(j).norm_squared() - l.row(j).norm_squared()).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_row_scores_zero() {
        let model = FactorModel {
            loadings: vec![vec![0.6], vec![0.5]],
            communalities: vec![0.36, 0.25],
            uniquenesses: vec![0.64, 0.75],
            eigenvalues: vec![0.61],
            proportion_variance: vec![0.305],
            score_weights: vec![vec![0.4], vec![0.3]],
            item_means: vec![0.1, -0.2],
            item_sds: vec![0.8, 0.7],
            n_used: 10,
            iterations: 1,
            warnings: vec![],
        };
        assert_eq!(raw_score(&model, &[0.0, 0.0], 0), 0.0);
        assert_eq!(raw_score(&model, &[2.0, -4.0], 0), 2.0 * raw_score(&model, &[1.0, -2.0], 0));
    }
}
