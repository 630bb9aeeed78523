//! Bayesian linear regression by Gibbs sampling.
//!
//! Priors: `βₖ ~ N(0, τ²)` independently (τ = 100 by default) and
//! `p(σ²) ∝ 1/σ²`. The full conditionals are
//!
//! * `β | σ², y ~ N(m, P⁻¹)` with `P = XᵀX/σ² + I/τ²`, `m = P⁻¹Xᵀy/σ²`
//! * `σ² | β, y ~ Inv-Gamma(n/2, RSS(β)/2)`
//!
//! Chains are independent; chain `c` draws from random stream `c`.

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use alloc::{format, vec};

use rand::Rng as _;
use rand_distr::{Distribution, Gamma, StandardNormal};

use crate::error::{input_err, Error, Result};
use crate::exec::Executor;
use crate::linalg::{full_column_rank, ols, Matrix, Vector};
use crate::{math, rng, stats};

pub const RHAT_THRESHOLD: f64 = 1.1;
const SIGMA2_FLOOR: f64 = 1e-250;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GibbsConfig {
    pub n_chains: usize,
    pub n_burn: usize,
    /// Kept draws summed over all chains.
    pub n_keep: usize,
    pub thin: usize,
    pub seed: u64,
    pub prior_sd_beta: f64,
}

impl GibbsConfig {
    pub fn new(seed: u64) -> Self {
        Self { n_chains: 4, n_burn: 1000, n_keep: 10_000, thin: 1, seed, prior_sd_beta: 100.0 }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_chains == 0 || self.thin == 0 {
            return Err(input_err!("n_chains and thin must be positive"));
        }
        if self.n_keep / self.n_chains < 100 {
            return Err(input_err!(
                "{} kept draws over {} chains; at least 100 per chain required",
                self.n_keep,
                self.n_chains
            ));
        }
        if !(self.prior_sd_beta > 0.0) {
            return Err(input_err!("prior_sd_beta must be positive"));
        }
        Ok(())
    }

    fn draws_in_chain(&self, chain: usize) -> usize {
        self.n_keep / self.n_chains + usize::from(chain < self.n_keep % self.n_chains)
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct VariableScale {
    pub name: String,
    pub mean: f64,
    pub sd: f64,
}

impl VariableScale {
    pub fn standardize(&self, v: f64) -> f64 {
        (v - self.mean) / self.sd
    }

    pub fn unstandardize(&self, z: f64) -> f64 {
        z * self.sd + self.mean
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct StandardizationRecord {
    pub response: VariableScale,
    pub predictors: Vec<VariableScale>,
}

fn scale_of(name: &str, values: &[f64]) -> Result<VariableScale> {
    if values.iter().any(|v| !v.is_finite()) {
        return Err(input_err!("variable {name} has missing or non-finite values"));
    }
    let sd = stats::sample_sd(values);
    if !(sd > 0.0) {
        return Err(input_err!("variable {name} has zero variance"));
    }
    Ok(VariableScale { name: name.to_string(), mean: stats::mean(values), sd })
}

/// Centers and scales the response and every predictor column to mean 0 and
/// sd 1 (`n − 1` denominator).
pub fn standardize(
    y: &[f64],
    x: &Matrix,
    response_name: &str,
    predictor_names: &[String],
) -> Result<(Vec<f64>, Matrix, StandardizationRecord)> {
    if x.nrows() != y.len() || predictor_names.len() != x.ncols() {
        return Err(input_err!("response, predictor matrix and names disagree in size"));
    }
    let response = scale_of(response_name, y)?;
    let predictors = (0..x.ncols())
        .map(|j| scale_of(&predictor_names[j], x.column(j).as_slice()))
        .collect::<Result<Vec<_>>>()?;
    let zy = y.iter().map(|&v| response.standardize(v)).collect();
    let zx = Matrix::from_fn(x.nrows(), x.ncols(), |i, j| predictors[j].standardize(x[(i, j)]));
    Ok((zy, zx, StandardizationRecord { response, predictors }))
}

/// Prepends a column of ones.
pub fn with_intercept(x: &Matrix) -> Matrix {
    x.clone().insert_column(0, 1.0)
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Posterior {
    pub n_chains: usize,
    pub seed: u64,
    /// Chain index of every kept draw.
    pub chain: Vec<usize>,
    /// Kept coefficient draws, one vector per draw.
    pub beta: Vec<Vec<f64>>,
    pub sigma2: Vec<f64>,
    pub beta_means: Vec<f64>,
    pub sigma2_mean: f64,
    /// `(2.5%, 97.5%)` quantiles per coefficient.
    pub credible_sets: Vec<(f64, f64)>,
    /// Split-chain potential scale reduction per coefficient, then σ².
    pub rhat: Vec<f64>,
    pub warnings: Vec<String>,
}

impl Posterior {
    pub fn len(&self) -> usize {
        self.sigma2.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sigma2.is_empty()
    }

    pub fn n_coefficients(&self) -> usize {
        self.beta_means.len()
    }

    pub fn coefficient_draws(&self, k: usize) -> Vec<f64> {
        self.beta.iter().map(|b| b[k]).collect()
    }

    /// Builds summaries from raw draws.
    pub fn from_draws(n_chains: usize, seed: u64, chain: Vec<usize>, beta: Vec<Vec<f64>>, sigma2: Vec<f64>) -> Result<Self> {
        if beta.is_empty() || beta.len() != sigma2.len() || chain.len() != sigma2.len() {
            return Err(input_err!("posterior needs matching, non-empty draws"));
        }
        let p = beta[0].len();
        let columns: Vec<Vec<f64>> = (0..p).map(|k| beta.iter().map(|b| b[k]).collect()).collect();
        let beta_means = columns.iter().map(|c| stats::mean(c)).collect();
        let credible_sets = columns
            .iter()
            .map(|c| {
                let mut s = c.clone();
                s.sort_by(f64::total_cmp);
                (stats::quantile_sorted(&s, 0.025), stats::quantile_sorted(&s, 0.975))
            })
            .collect();
        let mut rhat: Vec<f64> = columns.iter().map(|c| split_rhat(c, &chain, n_chains)).collect();
        rhat.push(split_rhat(&sigma2, &chain, n_chains));
        let mut warnings = Vec::new();
        for (k, r) in rhat.iter().enumerate() {
            if *r > RHAT_THRESHOLD {
                let what = if k < p { format!("coefficient {k}") } else { "sigma2".to_string() };
                warnings.push(format!("rhat {r:.3} for {what} exceeds {RHAT_THRESHOLD}"));
            }
        }
        Ok(Self {
            n_chains,
            seed,
            chain,
            beta,
            sigma2_mean: stats::mean(&sigma2),
            sigma2,
            beta_means,
            credible_sets,
            rhat,
            warnings,
        })
    }
}

/// Split-chain `R̂`: each chain is halved and the halves compared as separate
/// sequences.
pub fn split_rhat(values: &[f64], chain: &[usize], n_chains: usize) -> f64 {
    let mut halves: Vec<Vec<f64>> = Vec::new();
    for c in 0..n_chains {
        let draws: Vec<f64> = values.iter().zip(chain).filter(|(_, &k)| k == c).map(|(v, _)| *v).collect();
        let half = draws.len() / 2;
        if half < 2 {
            continue;
        }
        halves.push(draws[..half].to_vec());
        halves.push(draws[draws.len() - half..].to_vec());
    }
    let m = halves.len();
    if m < 2 {
        return f64::NAN;
    }
    let len = halves.iter().map(Vec::len).min().unwrap_or(0);
    let means: Vec<f64> = halves.iter().map(|h| stats::mean(&h[..len])).collect();
    let within = halves.iter().map(|h| stats::sample_variance(&h[..len])).sum::<f64>() / m as f64;
    let between = len as f64 * stats::sample_variance(&means);
    if within == 0.0 {
        return if between == 0.0 { 1.0 } else { f64::INFINITY };
    }
    let var_plus = (len - 1) as f64 / len as f64 * within + between / len as f64;
    math::sqrt(var_plus / within)
}

fn rss(y: &[f64], x: &Matrix, beta: &Vector) -> f64 {
    let fitted = x * beta;
    y.iter().zip(fitted.iter()).map(|(a, b)| (a - b) * (a - b)).sum()
}

/// Runs `config.n_chains` Gibbs chains and pools their kept draws.
pub fn gibbs_lm(y: &[f64], x: &Matrix, config: &GibbsConfig, exec: &impl Executor) -> Result<Posterior> {
    config.validate()?;
    let (n, p) = x.shape();
    if y.len() != n {
        return Err(input_err!("{} responses for {n} design rows", y.len()));
    }
    if n <= p {
        return Err(input_err!("{n} observations cannot identify {p} coefficients"));
    }
    if !full_column_rank(x) {
        return Err(input_err!("design matrix is rank deficient"));
    }
    let yv = Vector::from_column_slice(y);
    let xtx = x.transpose() * x;
    let xty = x.transpose() * &yv;
    let beta_ols = ols(x, &yv)?;
    let s2_ols = (rss(y, x, &beta_ols) / (n - p) as f64).max(SIGMA2_FLOOR);
    let prior_precision = 1.0 / (config.prior_sd_beta * config.prior_sd_beta);
    let shape = n as f64 / 2.0;
    let gamma = Gamma::new(shape, 1.0).map_err(|e| Error::Numeric(format!("gamma({shape}): {e}")))?;

    type ChainDraws = (Vec<Vec<f64>>, Vec<f64>);
    let chains: Vec<Result<ChainDraws>> = exec.map(config.n_chains, |c| {
        let mut r = rng::stream(config.seed, rng::CHAIN_BASE + c as u64);
        let jitter: f64 = r.sample(StandardNormal);
        let mut sigma2 = s2_ols * math::exp(jitter);
        let keep = config.draws_in_chain(c);
        let total = config.n_burn + keep * config.thin;
        let mut betas = Vec::with_capacity(keep);
        let mut sigmas = Vec::with_capacity(keep);
        for iter in 0..total {
            let mut precision = &xtx / sigma2;
            for k in 0..p {
                precision[(k, k)] += prior_precision;
            }
            let chol = precision
                .cholesky()
                .ok_or_else(|| Error::Numeric(format!("conditional precision of beta not positive definite at sigma2 = {sigma2:e}")))?;
            let mean = chol.solve(&(&xty / sigma2));
            let z = Vector::from_fn(p, |_, _| r.sample::<f64, _>(StandardNormal));
            let offset = chol
                .l()
                .transpose()
                .solve_upper_triangular(&z)
                .ok_or_else(|| Error::Numeric("triangular solve failed".into()))?;
            let beta = mean + offset;
            let g: f64 = gamma.sample(&mut r);
            sigma2 = (rss(y, x, &beta) / 2.0 / g).max(SIGMA2_FLOOR);
            if iter >= config.n_burn && (iter - config.n_burn).is_multiple_of(config.thin) {
                betas.push(beta.iter().copied().collect());
                sigmas.push(sigma2);
            }
        }
        Ok((betas, sigmas))
    });

    let mut chain = Vec::with_capacity(config.n_keep);
    let mut beta = Vec::with_capacity(config.n_keep);
    let mut sigma2 = Vec::with_capacity(config.n_keep);
    for (c, result) in chains.into_iter().enumerate() {
        let (b, s) = result?;
        chain.extend(std::iter::repeat_n(c, s.len()));
        beta.extend(b);
        sigma2.extend(s);
    }
    Posterior::from_draws(config.n_chains, config.seed, chain, beta, sigma2)
}

/// Discrepancy measure for posterior predictive checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Discrepancy {
    /// Residual sum of squares `Σ (yᵢ − xᵢβ)²`.
    Rss,
    /// Largest absolute residual.
    MaxAbsResidual,
}

impl Discrepancy {
    fn eval(self, y: impl Iterator<Item = f64>, mu: &[f64]) -> f64 {
        let resid = y.zip(mu).map(|(a, m)| a - m);
        match self {
            Discrepancy::Rss => resid.map(|r| r * r).sum(),
            Discrepancy::MaxAbsResidual => resid.map(math::abs).fold(0.0, f64::max),
        }
    }
}

/// Posterior predictive p-value: the share of draws whose replicated data
/// (`y_rep ~ N(Xβ, σ²I)`) is at least as discrepant as the observed data.
/// Replicate `d` uses its own random stream.
pub fn posterior_predictive_p(
    posterior: &Posterior,
    y: &[f64],
    x: &Matrix,
    discrepancy: Discrepancy,
    exec: &impl Executor,
) -> Result<f64> {
    if posterior.is_empty() {
        return Err(input_err!("empty posterior"));
    }
    if x.nrows() != y.len() || x.ncols() != posterior.n_coefficients() {
        return Err(input_err!("data dimensions do not match the posterior"));
    }
    let exceed: Vec<bool> = exec.map(posterior.len(), |d| {
        let beta = Vector::from_column_slice(&posterior.beta[d]);
        let mu: Vec<f64> = (x * beta).iter().copied().collect();
        let sd = math::sqrt(posterior.sigma2[d]);
        let mut r = rng::stream(posterior.seed, rng::PREDICTIVE_BASE + d as u64);
        let rep = mu.iter().map(|m| m + sd * r.sample::<f64, _>(StandardNormal)).collect::<Vec<_>>();
        discrepancy.eval(rep.into_iter(), &mu) >= discrepancy.eval(y.iter().copied(), &mu)
    });
    Ok(exceed.iter().filter(|&&e| e).count() as f64 / exceed.len() as f64)
}

/// Bayes p-value with the residual-sum-of-squares discrepancy.
pub fn bayes_p(posterior: &Posterior, y: &[f64], x: &Matrix, exec: &impl Executor) -> Result<f64> {
    posterior_predictive_p(posterior, y, x, Discrepancy::Rss, exec)
}

/// Gaussian deviance `−2 log L = n log(2πσ²) + RSS/σ²`.
pub fn deviance(y: &[f64], x: &Matrix, beta: &[f64], sigma2: f64) -> f64 {
    let n = y.len() as f64;
    n * (math::LN_2PI + math::ln(sigma2)) + rss(y, x, &Vector::from_column_slice(beta)) / sigma2
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DicResult {
    pub dic: f64,
    pub p_d: f64,
    pub mean_deviance: f64,
    pub deviance_at_mean: f64,
    pub warnings: Vec<String>,
}

/// `DIC = D̄ + p_D` with `p_D = D̄ − D(β̄, σ̄²)`, on the scale of the data given.
pub fn dic(posterior: &Posterior, y: &[f64], x: &Matrix) -> Result<DicResult> {
    if posterior.is_empty() {
        return Err(input_err!("empty posterior"));
    }
    let mean_deviance = posterior
        .beta
        .iter()
        .zip(&posterior.sigma2)
        .map(|(b, &s)| deviance(y, x, b, s))
        .sum::<f64>()
        / posterior.len() as f64;
    let deviance_at_mean = deviance(y, x, &posterior.beta_means, posterior.sigma2_mean);
    let p_d = mean_deviance - deviance_at_mean;
    let mut warnings = Vec::new();
    if !(p_d > 0.0) {
        warnings.push(format!("effective parameter count p_D = {p_d} is not positive; the posterior may be far from normal"));
    }
    Ok(DicResult { dic: mean_deviance + p_d, p_d, mean_deviance, deviance_at_mean, warnings })
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Diagnostics {
    pub bayes_p: f64,
    pub dic: f64,
    pub p_d: f64,
    pub warnings: Vec<String>,
}

pub fn diagnose(posterior: &Posterior, y: &[f64], x: &Matrix, exec: &impl Executor) -> Result<Diagnostics> {
    let d = dic(posterior, y, x)?;
    Ok(Diagnostics { bayes_p: bayes_p(posterior, y, x, exec)?, dic: d.dic, p_d: d.p_d, warnings: d.warnings })
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CoefficientSummary {
    pub name: String,
    pub mean: f64,
    pub lo95: f64,
    pub hi95: f64,
    /// The 95% credible set excludes zero.
    pub significant: bool,
    pub rhat: f64,
    /// Posterior mean mapped back to the original units of the variables.
    pub raw_scale_mean: Option<f64>,
}

/// Coefficient table: the first coefficient is the intercept, the rest follow
/// the predictors of `record` in order.
pub fn summarize(posterior: &Posterior, record: &StandardizationRecord) -> Result<Vec<CoefficientSummary>> {
    if posterior.is_empty() {
        return Err(input_err!("empty posterior"));
    }
    let p = posterior.n_coefficients();
    let with_intercept = p == record.predictors.len() + 1;
    let names: Vec<String> = if with_intercept {
        core::iter::once("intercept".to_string()).chain(record.predictors.iter().map(|s| s.name.clone())).collect()
    } else {
        (0..p).map(|k| format!("b{k}")).collect()
    };
    let sd_y = record.response.sd;
    let raw: Vec<Option<f64>> = if with_intercept {
        let slopes: Vec<f64> =
            record.predictors.iter().enumerate().map(|(k, s)| posterior.beta_means[k + 1] * sd_y / s.sd).collect();
        let intercept = record.response.mean + sd_y * posterior.beta_means[0]
            - slopes.iter().zip(&record.predictors).map(|(b, s)| b * s.mean).sum::<f64>();
        core::iter::once(Some(intercept)).chain(slopes.into_iter().map(Some)).collect()
    } else {
        vec![None; p]
    };
    Ok((0..p)
        .map(|k| {
            let (lo, hi) = posterior.credible_sets[k];
            CoefficientSummary {
                name: names[k].clone(),
                mean: posterior.beta_means[k],
                lo95: lo,
                hi95: hi,
                significant: lo > 0.0 || hi < 0.0,
                rhat: posterior.rhat[k],
                raw_scale_mean: raw[k],
            }
        })
        .collect())
}
