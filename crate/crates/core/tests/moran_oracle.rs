//! Moran's I against a dense double-loop oracle and its null distribution.

use arealrisk_core::exec::Sequential;
use arealrisk_core::graph::{graph_from_edge_list, lattice_labels, queen_lattice, weights, WeightMatrix, WeightScheme};
use arealrisk_core::moran::{moran_mc, morans_i};
use arealrisk_core::rng;
use arealrisk_core::synth::gen_normal_matrix;
use proptest::prelude::*;
use rand::Rng;

fn brute_force(values: &[f64], w: &WeightMatrix) -> f64 {
    let dense = w.dense();
    let n = values.len();
    let mean = values.iter().sum::<f64>() / n as f64;
    let mut num = 0.0;
    let mut s0 = 0.0;
    for i in 0..n {
        for j in 0..n {
            num += dense[(i, j)] * (values[i] - mean) * (values[j] - mean);
            s0 += dense[(i, j)];
        }
    }
    let den: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
    n as f64 / s0 * num / den
}

fn random_graph(seed: u64) -> (Vec<String>, Vec<(String, String)>) {
    let mut r = rng::stream(seed, 0);
    let n = r.random_range(3..=50);
    let units = lattice_labels(n);
    let p = r.random_range(0.02..0.4);
    let mut edges = Vec::new();
    for i in 0..n {
        // a ring guarantees every unit has a neighbor
        edges.push((units[i].clone(), units[(i + 1) % n].clone()));
        for j in i + 2..n {
            if r.random_bool(p) {
                edges.push((units[i].clone(), units[j].clone()));
            }
        }
    }
    (units, edges)
}

#[test]
fn sparse_matches_dense_oracle_on_random_graphs() {
    for seed in 0..50 {
        let (units, edges) = random_graph(seed);
        let g = graph_from_edge_list(&units, &edges).unwrap();
        let values: Vec<f64> = gen_normal_matrix(units.len(), 1, seed, 3).iter().copied().collect();
        for scheme in [WeightScheme::Binary, WeightScheme::RowStandardized] {
            let w = weights(&g, scheme);
            let fast = morans_i(&values, &w).unwrap().i_statistic;
            let slow = brute_force(&values, &w);
            assert!((fast - slow).abs() < 1e-12, "seed {seed} {scheme:?}: {fast} vs {slow}");
        }
    }
}

#[test]
fn complete_graph_closed_form() {
    for n in [3usize, 5, 12, 40] {
        let units = lattice_labels(n);
        let edges: Vec<_> = (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .map(|(i, j)| (units[i].clone(), units[j].clone()))
            .collect();
        let w = weights(&graph_from_edge_list(&units, &edges).unwrap(), WeightScheme::RowStandardized);
        let values: Vec<f64> = gen_normal_matrix(n, 1, n as u64, 0).iter().copied().collect();
        let i = morans_i(&values, &w).unwrap().i_statistic;
        assert!((i + 1.0 / (n - 1) as f64).abs() < 1e-12, "n {n}: {i}");
    }
}

#[test]
fn gradient_on_grid_is_strongly_positive() {
    let w = weights(&queen_lattice(6, 6, lattice_labels(36)).unwrap(), WeightScheme::RowStandardized);
    let y: Vec<f64> = (0..36).map(|i| (i / 6) as f64).collect();
    let r = moran_mc(&y, &w, 999, 7, &Sequential).unwrap();
    assert!(r.i_statistic > 0.5);
    assert!(r.p_value.unwrap() <= 0.01);
}

#[test]
fn permutation_level_on_noise() {
    let w = weights(&queen_lattice(6, 6, lattice_labels(36)).unwrap(), WeightScheme::RowStandardized);
    let reps = 200;
    let mut rejections = 0;
    for rep in 0..reps {
        let y: Vec<f64> = gen_normal_matrix(36, 1, 500 + rep, 0).iter().copied().collect();
        if moran_mc(&y, &w, 199, rep, &Sequential).unwrap().p_value.unwrap() <= 0.05 {
            rejections += 1;
        }
    }
    let level = rejections as f64 / reps as f64;
    assert!((0.02..=0.09).contains(&level), "level {level}");
}

#[test]
fn permutation_mean_near_expectation() {
    let w = weights(&queen_lattice(5, 8, lattice_labels(40)).unwrap(), WeightScheme::RowStandardized);
    let y: Vec<f64> = gen_normal_matrix(40, 1, 77, 0).iter().copied().collect();
    let m = 2999;
    let r = moran_mc(&y, &w, m, 3, &Sequential).unwrap();
    let se = r.permutation_sd.unwrap() / (m as f64).sqrt();
    assert!((r.permutation_mean.unwrap() - r.expected_i).abs() < 3.0 * se);
}

proptest! {
    #[test]
    fn invariant_under_positive_affine_maps(seed in 0u64..1000, scale in 0.01f64..100.0, shift in -50.0f64..50.0) {
        let w = weights(&queen_lattice(4, 5, lattice_labels(20)).unwrap(), WeightScheme::RowStandardized);
        let y: Vec<f64> = gen_normal_matrix(20, 1, seed, 0).iter().copied().collect();
        let mapped: Vec<f64> = y.iter().map(|v| scale * v + shift).collect();
        let a = morans_i(&y, &w).unwrap().i_statistic;
        let b = morans_i(&mapped, &w).unwrap().i_statistic;
        prop_assert!((a - b).abs() < 1e-9);
    }

    #[test]
    fn p_value_is_a_valid_mc_probability(seed in 0u64..200) {
        let w = weights(&queen_lattice(4, 4, lattice_labels(16)).unwrap(), WeightScheme::Binary);
        let y: Vec<f64> = gen_normal_matrix(16, 1, seed, 1).iter().copied().collect();
        let r = moran_mc(&y, &w, 99, seed, &Sequential).unwrap();
        let p = r.p_value.unwrap();
        prop_assert!((0.01..=1.0).contains(&p));
        prop_assert!((p * 100.0 - (p * 100.0).round()).abs() < 1e-9);
    }
}
