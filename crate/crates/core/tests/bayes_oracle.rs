//! Gibbs regression against closed forms and frequentist calibration.

use arealrisk_core::bayes::{
    bayes_p, dic, gibbs_lm, posterior_predictive_p, standardize, summarize, with_intercept, Discrepancy, GibbsConfig,
};
use arealrisk_core::exec::{Executor, Sequential};
use arealrisk_core::linalg::Matrix;
use arealrisk_core::synth::{gen_normal_matrix, gen_regression};

/// Evaluates items back to front.
struct Reversed;

impl Executor for Reversed {
    fn map<T: Send, F: Fn(usize) -> T + Sync>(&self, n: usize, f: F) -> Vec<T> {
        let mut out: Vec<T> = (0..n).rev().map(f).collect();
        out.reverse();
        out
    }
}

/// Normal equations by Gauss–Jordan elimination with partial pivoting.
#[allow(clippy::needless_range_loop)]
fn ols_oracle(x: &Matrix, y: &[f64]) -> Vec<f64> {
    let (n, p) = x.shape();
    let mut a = vec![vec![0.0; p + 1]; p];
    for r in 0..p {
        for c in 0..p {
            a[r][c] = (0..n).map(|i| x[(i, r)] * x[(i, c)]).sum();
        }
        a[r][p] = (0..n).map(|i| x[(i, r)] * y[i]).sum();
    }
    for col in 0..p {
        let pivot = (col..p).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs())).unwrap();
        a.swap(col, pivot);
        for r in 0..p {
            if r != col {
                let f = a[r][col] / a[col][col];
                for c in col..=p {
                    a[r][c] -= f * a[col][c];
                }
            }
        }
    }
    (0..p).map(|r| a[r][p] / a[r][r]).collect()
}

fn light(seed: u64) -> GibbsConfig {
    GibbsConfig { n_burn: 200, n_keep: 2000, ..GibbsConfig::new(seed) }
}

fn design(n: usize, p: usize, seed: u64) -> Matrix {
    with_intercept(&gen_normal_matrix(n, p, seed, 0))
}

fn truth(p: usize) -> Vec<f64> {
    (0..=p).map(|k| if k == 0 { 0.3 } else { 0.4 - 0.1 * k as f64 }).collect()
}

#[test]
fn posterior_means_match_ols() {
    let x = design(46, 10, 1);
    let y = gen_regression(&x, &truth(10), 0.5, 2).unwrap();
    let (zy, zx, _) = standardize(&y, &x.columns(1, 10).into_owned(), "y", &(0..10).map(|k| format!("x{k}")).collect::<Vec<_>>()).unwrap();
    let zx = with_intercept(&zx);
    let post = gibbs_lm(&zy, &zx, &GibbsConfig::new(42), &Sequential).unwrap();
    for (m, o) in post.beta_means.iter().zip(ols_oracle(&zx, &zy)) {
        assert!((m - o).abs() < 0.01, "{m} vs {o}");
    }
    assert!(post.warnings.is_empty(), "{:?}", post.warnings);
}

#[test]
fn credible_sets_cover_truth() {
    let beta = truth(4);
    let (mut covered, mut total) = (0, 0);
    for rep in 0..200 {
        let x = design(46, 4, 100 + rep);
        let y = gen_regression(&x, &beta, 1.0, 300 + rep).unwrap();
        let post = gibbs_lm(&y, &x, &light(rep), &Sequential).unwrap();
        for (k, (lo, hi)) in post.credible_sets.iter().enumerate() {
            total += 1;
            if (*lo..=*hi).contains(&beta[k]) {
                covered += 1;
            }
        }
    }
    let rate = covered as f64 / total as f64;
    assert!((0.90..=0.99).contains(&rate), "coverage {rate}");
}

#[test]
fn predictive_p_is_calibrated_when_model_is_right() {
    let beta = truth(3);
    let mut inside = 0;
    for rep in 0..200 {
        let x = design(46, 3, 700 + rep);
        let y = gen_regression(&x, &beta, 1.0, 900 + rep).unwrap();
        let post = gibbs_lm(&y, &x, &light(rep), &Sequential).unwrap();
        let p = bayes_p(&post, &y, &x, &Sequential).unwrap();
        if (0.05..=0.95).contains(&p) {
            inside += 1;
        }
    }
    assert!(inside >= 180, "{inside} of 200 inside [0.05, 0.95]");
}

#[test]
fn max_residual_check_flags_an_outlier() {
    let x = design(46, 3, 5);
    let mut y = gen_regression(&x, &truth(3), 1.0, 6).unwrap();
    y[10] += 10.0;
    let post = gibbs_lm(&y, &x, &light(7), &Sequential).unwrap();
    let p = posterior_predictive_p(&post, &y, &x, Discrepancy::MaxAbsResidual, &Sequential).unwrap();
    assert!(p < 0.05, "{p}");
}

#[test]
fn dic_prefers_the_true_model() {
    let x = design(80, 2, 11);
    let y = gen_regression(&x, &[0.0, 1.0, 0.8], 1.0, 12).unwrap();
    let full = gibbs_lm(&y, &x, &light(1), &Sequential).unwrap();
    let reduced_x = x.columns(0, 2).into_owned();
    let reduced = gibbs_lm(&y, &reduced_x, &light(1), &Sequential).unwrap();
    let d_full = dic(&full, &y, &x).unwrap();
    let d_reduced = dic(&reduced, &y, &reduced_x).unwrap();
    assert!(d_full.dic < d_reduced.dic);
    // coefficients plus the variance
    assert!((d_full.p_d - 4.0).abs() < 1.0, "p_D {}", d_full.p_d);
    assert!((d_reduced.p_d - 3.0).abs() < 1.0, "p_D {}", d_reduced.p_d);
}

#[test]
fn vague_prior_matches_flat_limit() {
    let x = design(46, 5, 21);
    let y = gen_regression(&x, &truth(5), 0.7, 22).unwrap();
    let a = gibbs_lm(&y, &x, &GibbsConfig::new(3), &Sequential).unwrap();
    let b = gibbs_lm(&y, &x, &GibbsConfig { prior_sd_beta: 1e6, ..GibbsConfig::new(3) }, &Sequential).unwrap();
    for k in 0..6 {
        let draws = a.coefficient_draws(k);
        let sd = (draws.iter().map(|d| (d - a.beta_means[k]).powi(2)).sum::<f64>() / draws.len() as f64).sqrt();
        let mc_error = 4.0 * sd / (draws.len() as f64).sqrt();
        assert!((a.beta_means[k] - b.beta_means[k]).abs() < mc_error);
    }
}

#[test]
fn summaries_map_back_to_raw_scale() {
    let raw = gen_normal_matrix(60, 2, 31, 0).map(|v| 10.0 + 3.0 * v);
    let x = with_intercept(&raw);
    let y = gen_regression(&x, &[5.0, 2.0, -1.0], 0.5, 32).unwrap();
    let names = vec!["wind".to_string(), "surge".to_string()];
    let (zy, zx, record) = standardize(&y, &raw, "risk", &names).unwrap();
    let post = gibbs_lm(&zy, &with_intercept(&zx), &GibbsConfig::new(4), &Sequential).unwrap();
    let table = summarize(&post, &record).unwrap();
    let names: Vec<&str> = table.iter().map(|r| r.name.as_str()).collect();
    assert_eq!(names, ["intercept", "wind", "surge"]);
    for (row, o) in table.iter().zip(ols_oracle(&x, &y)) {
        assert!((row.raw_scale_mean.unwrap() - o).abs() < 0.02 * o.abs().max(1.0), "{} vs {o}", row.name);
        assert!(row.lo95 <= row.mean && row.mean <= row.hi95);
    }
    assert!(table[1].significant && table[2].significant);
}

#[test]
fn executor_order_does_not_matter() {
    let x = design(30, 2, 41);
    let y = gen_regression(&x, &[1.0, 0.5, 0.0], 1.0, 42).unwrap();
    let a = gibbs_lm(&y, &x, &light(9), &Sequential).unwrap();
    let b = gibbs_lm(&y, &x, &light(9), &Reversed).unwrap();
    assert_eq!(a, b);
    assert_eq!(bayes_p(&a, &y, &x, &Sequential).unwrap(), bayes_p(&b, &y, &x, &Reversed).unwrap());
}
