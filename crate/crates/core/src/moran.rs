//! Global Moran's I with a one-sided Monte Carlo permutation test.

use alloc::vec::Vec;

use rand::seq::SliceRandom;

use crate::error::{input_err, Error, Result};
use crate::exec::Executor;
use crate::graph::WeightMatrix;
use crate::{math, rng};

pub const DEFAULT_PERMUTATIONS: usize = 999;
pub const MIN_PERMUTATIONS: usize = 99;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MoranResult {
    pub i_statistic: f64,
    /// `-1 / (n - 1)`
    pub expected_i: f64,
    /// `None` until a permutation test has been run.
    pub p_value: Option<f64>,
    pub n_permutations: usize,
    /// `Σⱼ wᵢⱼ yⱼ` per unit, the Moran-plot ordinate.
    pub lagged_values: Vec<f64>,
    pub permutation_mean: Option<f64>,
    pub permutation_sd: Option<f64>,
}

struct Prepared {
    deviations: Vec<f64>,
    scale: f64,
}

fn prepare(values: &[f64], w: &WeightMatrix) -> Result<Prepared> {
    let n = values.len();
    if n < 3 {
        return Err(input_err!("Moran's I needs at least 3 units, got {n}"));
    }
    if w.len() != n {
        return Err(input_err!("{n} values for a {}-unit weight matrix", w.len()));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(input_err!("values must be finite"));
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let deviations: Vec<f64> = values.iter().map(|v| v - mean).collect();
    let ss: f64 = deviations.iter().map(|d| d * d).sum();
    if !(ss > 0.0) {
        return Err(Error::Degenerate("spatial pattern is undefined for a constant field".into()));
    }
    Ok(Prepared { deviations, scale: n as f64 / (w.s0 * ss) })
}

fn cross_product(w: &WeightMatrix, z: &[f64]) -> f64 {
    (0..z.len()).map(|i| z[i] * w.row(i).iter().map(|&(j, wij)| wij * z[j]).sum::<f64>()).sum()
}

/// `I = (n / S0) · Σᵢⱼ wᵢⱼ zᵢ zⱼ / Σᵢ zᵢ²` with `z` the deviations from the mean.
pub fn morans_i(values: &[f64], w: &WeightMatrix) -> Result<MoranResult> {
    let prepared = prepare(values, w)?;
    let n = values.len();
    Ok(MoranResult {
        i_statistic: prepared.scale * cross_product(w, &prepared.deviations),
        expected_i: -1.0 / (n - 1) as f64,
        p_value: None,
        n_permutations: 0,
        lagged_values: w.lag(values),
        permutation_mean: None,
        permutation_sd: None,
    })
}

/// Moran's I plus the permutation p-value `(1 + #{I_perm ≥ I_obs}) / (m + 1)`.
/// Permutation `k` is drawn from its own seeded stream, so the result does not
/// depend on the executor.
pub fn moran_mc(
    values: &[f64],
    w: &WeightMatrix,
    n_permutations: usize,
    seed: u64,
    exec: &impl Executor,
) -> Result<MoranResult> {
    if n_permutations < MIN_PERMUTATIONS {
        return Err(input_err!("at least {MIN_PERMUTATIONS} permutations required, got {n_permutations}"));
    }
    let mut result = morans_i(values, w)?;
    let prepared = prepare(values, w)?;
    let observed = result.i_statistic;
    let permuted: Vec<f64> = exec.map(n_permutations, |k| {
        let mut z = prepared.deviations.clone();
        let mut r = rng::stream(seed, rng::PERMUTATION_BASE + k as u64);
        z.shuffle(&mut r);
        prepared.scale * cross_product(w, &z)
    });
    let exceed = permuted.iter().filter(|&&i| i >= observed).count();
    let m = permuted.len() as f64;
    let mean = permuted.iter().sum::<f64>() / m;
    let var = permuted.iter().map(|i| (i - mean) * (i - mean)).sum::<f64>() / (m - 1.0);
    result.p_value = Some((1 + exceed) as f64 / (n_permutations + 1) as f64);
    result.n_permutations = n_permutations;
    result.permutation_mean = Some(mean);
    result.permutation_sd = Some(math::sqrt(var));
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exec::Sequential;
    use crate::graph::{graph_from_edge_list, lattice_labels, queen_lattice, weights, WeightScheme};
    use alloc::string::String;

    fn complete(n: usize) -> WeightMatrix {
        let units = lattice_labels(n);
        let mut edges: Vec<(String, String)> = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                edges.push((units[i].clone(), units[j].clone()));
            }
        }
        weights(&graph_from_edge_list(&units, &edges).unwrap(), WeightScheme::RowStandardized)
    }

    #[test]
    fn constant_field_is_degenerate() {
        assert!(matches!(morans_i(&[1.0; 5], &complete(5)), Err(Error::Degenerate(_))));
    }

    #[test]
    fn complete_graph_closed_form() {
        let r = morans_i(&[0.3, -1.2, 4.0, 2.2, 0.0], &complete(5)).unwrap();
        assert!((r.i_statistic + 0.25).abs() < 1e-12);
        assert_eq!(r.expected_i, -0.25);
    }

    #[test]
    fn gradient_on_grid_is_clustered() {
        let g = queen_lattice(4, 4, lattice_labels(16)).unwrap();
        let w = weights(&g, WeightScheme::RowStandardized);
        let y: Vec<f64> = (0..16).map(|k| (k / 4) as f64).collect();
        assert!(morans_i(&y, &w).unwrap().i_statistic > 0.5);
    }

    #[test]
    fn too_few_permutations() {
        let w = complete(5);
        assert!(moran_mc(&[1., 2., 3., 4., 6.], &w, 10, 1, &Sequential).is_err());
    }

    #[test]
    fn p_value_floor_and_determinism() {
        let g = queen_lattice(6, 6, lattice_labels(36)).unwrap();
        let w = weights(&g, WeightScheme::RowStandardized);
        let y: Vec<f64> = (0..36).map(|k| (k / 6) as f64).collect();
        let a = moran_mc(&y, &w, 999, 7, &Sequential).unwrap();
        let b = moran_mc(&y, &w, 999, 7, &Sequential).unwrap();
        assert_eq!(a, b);
        let p = a.p_value.unwrap();
        assert!((1.0 / 1000.0..=0.01).contains(&p));
        assert_eq!(a.lagged_values.len(), 36);
    }
}
