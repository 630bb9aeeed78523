//! JSON report types written by the pipeline and the subcommands, and the
//! combined report: a descriptive table (mean, sd, min, max per variable)
//! and a coefficient table (posterior mean, 95% bounds, Bayes p, DIC).

use std::path::Path;

use arealrisk_core::bayes::{CoefficientSummary, GibbsConfig, StandardizationRecord};
use arealrisk_core::car::{CarFit, PhiBounds, SelectionRow};
use arealrisk_core::graph::{NeighborGraph, WeightScheme};
use arealrisk_core::moran::MoranResult;
use arealrisk_core::stats;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::formats::{write_csv, write_json};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphReport {
    pub source: String,
    pub n_units: usize,
    pub n_edges: usize,
    pub average_degree: f64,
    pub min_degree: usize,
    pub max_degree: usize,
}

impl GraphReport {
    pub fn new(graph: &NeighborGraph, source: &str) -> Self {
        let degrees: Vec<usize> = (0..graph.len()).map(|i| graph.degree(i)).collect();
        Self {
            source: source.into(),
            n_units: graph.len(),
            n_edges: graph.n_edges(),
            average_degree: graph.average_degree(),
            min_degree: degrees.iter().copied().min().unwrap_or(0),
            max_degree: degrees.iter().copied().max().unwrap_or(0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MoranReport {
    pub variable: String,
    pub weights: WeightScheme,
    #[serde(rename = "I")]
    pub i: f64,
    pub expected: f64,
    pub p: Option<f64>,
    pub n_perm: usize,
    pub seed: u64,
}

impl MoranReport {
    pub fn new(variable: &str, weights: WeightScheme, result: &MoranResult, seed: u64) -> Self {
        Self {
            variable: variable.into(),
            weights,
            i: result.i_statistic,
            expected: result.expected_i,
            p: result.p_value,
            n_perm: result.n_permutations,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub response: String,
    pub phi: f64,
    pub beta: Vec<f64>,
    pub sigma2: f64,
    pub loglik: f64,
    pub aic: f64,
    pub residual_variance: f64,
    pub phi_bounds: PhiBounds,
    pub unit_variances: bool,
    pub warnings: Vec<String>,
}

impl FitReport {
    pub fn new(response: &str, fit: &CarFit) -> Self {
        Self {
            response: response.into(),
            phi: fit.phi,
            beta: fit.beta.clone(),
            sigma2: fit.sigma2,
            loglik: fit.loglik,
            aic: fit.aic,
            residual_variance: fit.residual_variance,
            phi_bounds: fit.phi_bounds,
            unit_variances: fit.unit_variances.is_some(),
            warnings: fit.warnings.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmoothingReport {
    pub selected: String,
    /// AIC comparison; present when the response was chosen automatically.
    pub selection: Option<Vec<SelectionRow>>,
    pub fits: Vec<FitReport>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionReport {
    pub response: String,
    pub n: usize,
    pub coefficients: Vec<CoefficientSummary>,
    pub bayes_p: f64,
    pub dic: f64,
    pub p_d: f64,
    pub standardization: StandardizationRecord,
    pub gibbs: GibbsConfig,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DescriptiveRow {
    pub variable: String,
    pub mean: f64,
    pub sd: f64,
    pub min: f64,
    pub max: f64,
}

impl DescriptiveRow {
    pub fn new(variable: &str, values: &[f64]) -> Self {
        let d = stats::describe(values);
        Self { variable: variable.into(), mean: d.mean, sd: d.sd, min: d.min, max: d.max }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientRow {
    pub variable: String,
    pub posterior_mean: f64,
    pub lower_95: f64,
    pub upper_95: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientTable {
    pub n: usize,
    pub coefficients: Vec<CoefficientRow>,
    pub bayes_p: f64,
    pub dic: f64,
}

/// Coefficient table row as written to CSV; the Bayes p and DIC rows leave
/// the bounds blank.
#[derive(Serialize)]
struct CoefficientCsvRow {
    variable: String,
    posterior_mean: f64,
    lower_95: Option<f64>,
    upper_95: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CombinedReport {
    pub descriptives: Vec<DescriptiveRow>,
    pub regression: CoefficientTable,
}

impl CombinedReport {
    pub fn new(descriptives: Vec<DescriptiveRow>, regression: &RegressionReport) -> Self {
        let coefficients = regression
            .coefficients
            .iter()
            .map(|c| CoefficientRow { variable: c.name.clone(), posterior_mean: c.mean, lower_95: c.lo95, upper_95: c.hi95 })
            .collect();
        Self {
            descriptives,
            regression: CoefficientTable { n: regression.n, coefficients, bayes_p: regression.bayes_p, dic: regression.dic },
        }
    }

    /// Writes `report.json`, `descriptives.csv` and `coefficients.csv`
    /// into `dir`; returns the file names.
    pub fn write(&self, dir: &Path) -> Result<Vec<&'static str>> {
        write_json(&dir.join("report.json"), self)?;
        write_csv(&dir.join("descriptives.csv"), &self.descriptives)?;
        let table = &self.regression;
        let summary_row = |variable: &str, value: f64| CoefficientCsvRow {
            variable: variable.into(),
            posterior_mean: value,
            lower_95: None,
            upper_95: None,
        };
        let rows = table
            .coefficients
            .iter()
            .map(|c| CoefficientCsvRow {
                variable: c.variable.clone(),
                posterior_mean: c.posterior_mean,
                lower_95: Some(c.lower_95),
                upper_95: Some(c.upper_95),
            })
            .chain([summary_row("bayes_p", table.bayes_p), summary_row("dic", table.dic)]);
        write_csv(&dir.join("coefficients.csv"), rows)?;
        Ok(vec!["report.json", "descriptives.csv", "coefficients.csv"])
    }
}
