//! Tabular CSV inputs and outputs.

use std::collections::BTreeMap;
use std::path::Path;

use arealrisk_core::aggregate::CountyAggregate;
use arealrisk_core::bayes::Posterior;
use arealrisk_core::factor::ScoreVector;
use serde::{Deserialize, Serialize};

use super::{read_csv, write_csv, write_csv_records};
use crate::error::{Error, Result};

#[derive(Debug, Serialize, Deserialize)]
struct EdgeRow {
    fips_a: String,
    #[serde(default)]
    fips_b: String,
}

/// Units and undirected edges read from an edge list.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct EdgeList {
    /// Every unit named, sorted.
    pub units: Vec<String>,
    pub edges: Vec<(String, String)>,
}

/// Edge list `fips_a, fips_b`. A row with a blank `fips_b` names a unit
/// without adding an edge.
pub fn read_edges(path: &Path) -> Result<EdgeList> {
    let mut units = Vec::new();
    let mut edges = Vec::new();
    for row in read_csv::<EdgeRow>(path)? {
        if row.fips_a.is_empty() {
            return Err(Error::format(path, "blank fips_a"));
        }
        units.push(row.fips_a.clone());
        if !row.fips_b.is_empty() {
            units.push(row.fips_b.clone());
            edges.push((row.fips_a, row.fips_b));
        }
    }
    units.sort();
    units.dedup();
    Ok(EdgeList { units, edges })
}

pub fn write_edges(path: &Path, edges: &[(String, String)]) -> Result<()> {
    write_csv(path, edges.iter().map(|(a, b)| EdgeRow { fips_a: a.clone(), fips_b: b.clone() }))
}

#[derive(Debug, Serialize, Deserialize)]
struct ScoreRow {
    respondent_id: String,
    county_fips: String,
    raw_score: f64,
    normalized_score: f64,
}

pub fn write_scores(path: &Path, scores: &ScoreVector) -> Result<()> {
    write_csv(
        path,
        (0..scores.raw_scores.len()).map(|i| ScoreRow {
            respondent_id: scores.respondent_ids[i].clone(),
            county_fips: scores.unit_labels[i].clone(),
            raw_score: scores.raw_scores[i],
            normalized_score: scores.normalized_scores[i],
        }),
    )
}

/// Unit labels and normalized scores from a scores CSV.
pub fn read_scores(path: &Path) -> Result<(Vec<String>, Vec<f64>)> {
    Ok(read_csv::<ScoreRow>(path)?.into_iter().map(|r| (r.county_fips, r.normalized_score)).unzip())
}

#[derive(Debug, Serialize, Deserialize)]
struct AggregateRow {
    county_fips: String,
    n: usize,
    mean: f64,
    q1: f64,
    q3: f64,
    srs_variance: f64,
}

pub fn write_aggregates(path: &Path, aggregates: &[CountyAggregate]) -> Result<()> {
    write_csv(
        path,
        aggregates.iter().map(|a| AggregateRow {
            county_fips: a.unit_label.clone(),
            n: a.n,
            mean: a.mean,
            q1: a.q1,
            q3: a.q3,
            srs_variance: a.srs_variance,
        }),
    )
}

pub fn read_aggregates(path: &Path) -> Result<Vec<CountyAggregate>> {
    Ok(read_csv::<AggregateRow>(path)?
        .into_iter()
        .map(|r| CountyAggregate {
            unit_label: r.county_fips,
            n: r.n,
            mean: r.mean,
            q1: r.q1,
            q3: r.q3,
            srs_variance: r.srs_variance,
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmoothedRow {
    pub county_fips: String,
    pub response_name: String,
    pub raw: f64,
    pub smoothed: f64,
}

pub fn write_smoothed(path: &Path, rows: &[SmoothedRow]) -> Result<()> {
    write_csv(path, rows)
}

pub fn read_smoothed(path: &Path) -> Result<Vec<SmoothedRow>> {
    read_csv(path)
}

/// `(county_fips, value)` pairs from any CSV with a `county_fips` column and
/// the named numeric column.
pub fn read_value_column(path: &Path, column: &str) -> Result<Vec<(String, f64)>> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::format(path, e))?;
    let headers = reader.headers().map_err(|e| Error::format(path, e))?.clone();
    let find = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::format(path, format!("no column {name:?}")))
    };
    let (unit_col, value_col) = (find("county_fips")?, find(column)?);
    let mut out = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::format(path, e))?;
        let value = record[value_col]
            .parse()
            .map_err(|_| Error::format(path, format!("row {}: {column} = {:?} is not a number", line + 1, &record[value_col])))?;
        out.push((record[unit_col].to_string(), value));
    }
    Ok(out)
}

/// Per-unit numeric columns keyed by `county_fips`. Blank cells are missing.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CovariateTable {
    pub names: Vec<String>,
    pub rows: BTreeMap<String, Vec<Option<f64>>>,
}

impl CovariateTable {
    /// Column-wise concatenation; both tables must cover the same units and
    /// have distinct column names.
    pub fn join(mut self, other: CovariateTable) -> std::result::Result<Self, String> {
        if let Some(dup) = other.names.iter().find(|n| self.names.contains(n)) {
            return Err(format!("covariate {dup} supplied twice"));
        }
        let width = other.names.len();
        for (unit, values) in self.rows.iter_mut() {
            match other.rows.get(unit) {
                Some(extra) => values.extend(extra.iter().copied()),
                None => values.extend(std::iter::repeat_n(None, width)),
            }
        }
        let own_width = self.names.len();
        for (unit, extra) in other.rows {
            self.rows
                .entry(unit)
                .or_insert_with(|| std::iter::repeat_n(None, own_width).chain(extra.iter().copied()).collect());
        }
        self.names.extend(other.names);
        Ok(self)
    }
}

pub fn read_covariates(path: &Path) -> Result<CovariateTable> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::format(path, e))?;
    let headers = reader.headers().map_err(|e| Error::format(path, e))?.clone();
    if headers.get(0) != Some("county_fips") {
        return Err(Error::format(path, "first column must be county_fips"));
    }
    let names: Vec<String> = headers.iter().skip(1).map(String::from).collect();
    let mut rows = BTreeMap::new();
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::format(path, e))?;
        let unit = record[0].to_string();
        let values = record
            .iter()
            .skip(1)
            .zip(&names)
            .map(|(cell, name)| {
                if cell.is_empty() || cell.eq_ignore_ascii_case("na") {
                    Ok(None)
                } else {
                    cell.parse::<f64>()
                        .ok()
                        .filter(|v| v.is_finite())
                        .map(Some)
                        .ok_or_else(|| Error::format(path, format!("row {}: {name} = {cell:?} is not a number", line + 1)))
                }
            })
            .collect::<Result<Vec<_>>>()?;
        if rows.insert(unit.clone(), values).is_some() {
            return Err(Error::format(path, format!("county {unit} listed twice")));
        }
    }
    Ok(CovariateTable { names, rows })
}

pub fn write_covariates(path: &Path, table: &CovariateTable) -> Result<()> {
    let header: Vec<String> = std::iter::once("county_fips".to_string()).chain(table.names.iter().cloned()).collect();
    let records: Vec<Vec<String>> = table
        .rows
        .iter()
        .map(|(unit, values)| {
            std::iter::once(unit.clone())
                .chain(values.iter().map(|v| v.map(|x| x.to_string()).unwrap_or_default()))
                .collect()
        })
        .collect();
    write_csv_records(path, &header, &records)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExposureRow {
    pub county_fips: String,
    pub wind_zone_frac: f64,
    pub surge_zone_frac: f64,
    /// Blank when no event on or after the cutoff year affected the county.
    pub last_max_wind: Option<f64>,
    pub last_peak_surge: Option<f64>,
}

pub fn write_exposure(path: &Path, rows: &[ExposureRow]) -> Result<()> {
    write_csv(path, rows)
}

pub fn read_exposure(path: &Path) -> Result<Vec<ExposureRow>> {
    read_csv(path)
}

impl From<&[ExposureRow]> for CovariateTable {
    fn from(rows: &[ExposureRow]) -> Self {
        CovariateTable {
            names: ["wind_zone_frac", "surge_zone_frac", "last_max_wind", "last_peak_surge"].map(String::from).to_vec(),
            rows: rows
                .iter()
                .map(|r| {
                    let v = vec![Some(r.wind_zone_frac), Some(r.surge_zone_frac), r.last_max_wind, r.last_peak_surge];
                    (r.county_fips.clone(), v)
                })
                .collect(),
        }
    }
}

#[derive(Debug, Serialize)]
struct LagRow<'a> {
    county_fips: &'a str,
    value: f64,
    spatial_lag: f64,
}

/// Moran-plot pairs.
pub fn write_moran_plot(path: &Path, units: &[String], values: &[f64], lags: &[f64]) -> Result<()> {
    write_csv(
        path,
        units
            .iter()
            .zip(values)
            .zip(lags)
            .map(|((u, &value), &spatial_lag)| LagRow { county_fips: u, value, spatial_lag }),
    )
}

/// Kept draws: `draw, chain, <coefficient names…>, sigma2`.
pub fn write_draws(path: &Path, posterior: &Posterior, names: &[String]) -> Result<()> {
    let header: Vec<String> = ["draw", "chain"]
        .into_iter()
        .map(String::from)
        .chain(names.iter().cloned())
        .chain(std::iter::once("sigma2".to_string()))
        .collect();
    let records: Vec<Vec<String>> = (0..posterior.len())
        .map(|d| {
            [d.to_string(), posterior.chain[d].to_string()]
                .into_iter()
                .chain(posterior.beta[d].iter().map(f64::to_string))
                .chain(std::iter::once(posterior.sigma2[d].to_string()))
                .collect()
        })
        .collect();
    write_csv_records(path, &header, &records)
}
