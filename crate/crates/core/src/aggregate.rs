//! Areal aggregation of respondent scores and the pooled simple-random-sample
//! variance approximation for unit means.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{input_err, Error, Result};
use crate::factor::ScoreVector;
use crate::stats;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CountyAggregate {
    pub unit_label: String,
    pub n: usize,
    pub mean: f64,
    pub q1: f64,
    pub q3: f64,
    /// Pooled variance over all respondents divided by `n`.
    pub srs_variance: f64,
}

/// Which unit-level statistic is used as the areal response.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Response {
    Mean,
    Q1,
    Q3,
}

impl Response {
    pub const ALL: [Response; 3] = [Response::Mean, Response::Q1, Response::Q3];

    pub fn name(self) -> &'static str {
        match self {
            Response::Mean => "mean",
            Response::Q1 => "q1",
            Response::Q3 => "q3",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|r| r.name().eq_ignore_ascii_case(s.trim()))
    }

    pub fn of(self, agg: &CountyAggregate) -> f64 {
        match self {
            Response::Mean => agg.mean,
            Response::Q1 => agg.q1,
            Response::Q3 => agg.q3,
        }
    }
}

/// Pooled sample variance (`n - 1` denominator) over every respondent.
pub fn pooled_variance(scores: &[f64]) -> Result<f64> {
    if scores.len() < 2 {
        return Err(Error::Degenerate(alloc::format!(
            "pooled variance needs at least two respondents, got {}",
            scores.len()
        )));
    }
    let mut sorted = scores.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(stats::sample_variance(&sorted))
}

/// Aggregates scores to units, ordered by unit label. Units without
/// respondents do not appear.
pub fn aggregate_scores(unit_labels: &[String], scores: &[f64]) -> Result<Vec<CountyAggregate>> {
    if scores.is_empty() {
        return Err(input_err!("no scored respondents to aggregate"));
    }
    if unit_labels.len() != scores.len() {
        return Err(input_err!("{} unit labels for {} scores", unit_labels.len(), scores.len()));
    }
    let pooled = pooled_variance(scores)?;

    let mut groups: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    for (label, &s) in unit_labels.iter().zip(scores) {
        groups.entry(label.as_str()).or_default().push(s);
    }
    Ok(groups
        .into_iter()
        .map(|(label, mut values)| {
            // Sorting first makes every statistic independent of input order.
            values.sort_by(f64::total_cmp);
            let n = values.len();
            CountyAggregate {
                unit_label: label.into(),
                n,
                mean: stats::mean(&values),
                q1: stats::quantile_sorted(&values, 0.25),
                q3: stats::quantile_sorted(&values, 0.75),
                srs_variance: pooled / n as f64,
            }
        })
        .collect())
}

pub fn aggregate_score_vector(scores: &ScoreVector) -> Result<Vec<CountyAggregate>> {
    aggregate_scores(&scores.unit_labels, &scores.normalized_scores)
}

/// Aggregates laid out in a reference unit order; units absent from the
/// survey are `None` and listed in `missing_units`.
#[derive(Debug, Clone, PartialEq)]
pub struct AlignedAggregates {
    pub unit_labels: Vec<String>,
    pub rows: Vec<Option<CountyAggregate>>,
    pub missing_units: Vec<String>,
}

impl AlignedAggregates {
    /// Response vector in unit order; fails when any unit lacks data.
    pub fn response(&self, response: Response) -> Result<Vec<f64>> {
        if let Some(first) = self.missing_units.first() {
            return Err(input_err!(
                "{} unit(s) have no survey respondents (first: {first}); drop or impute them before fitting",
                self.missing_units.len()
            ));
        }
        Ok(self.rows.iter().flatten().map(|a| response.of(a)).collect())
    }

    pub fn srs_variances(&self) -> Option<Vec<f64>> {
        self.rows.iter().map(|r| r.as_ref().map(|a| a.srs_variance)).collect()
    }
}

pub fn align_to_units(aggregates: &[CountyAggregate], unit_labels: &[String]) -> AlignedAggregates {
    let by_label: BTreeMap<&str, &CountyAggregate> =
        aggregates.iter().map(|a| (a.unit_label.as_str(), a)).collect();
    let rows: Vec<Option<CountyAggregate>> =
        unit_labels.iter().map(|u| by_label.get(u.as_str()).map(|&a| a.clone())).collect();
    let missing_units = unit_labels
        .iter()
        .zip(&rows)
        .filter(|(_, r)| r.is_none())
        .map(|(u, _)| u.clone())
        .collect();
    AlignedAggregates { unit_labels: unit_labels.to_vec(), rows, missing_units }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;
    use alloc::vec;

    fn labels(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn four_point_unit() {
        let out = aggregate_scores(&labels(&["a"; 4]), &[0.2, 0.4, 0.6, 0.8]).unwrap();
        let a = &out[0];
        assert_eq!(a.n, 4);
        assert!((a.mean - 0.5).abs() < 1e-15);
        assert!((a.q1 - 0.35).abs() < 1e-12);
        assert!((a.q3 - 0.65).abs() < 1e-12);
    }

    #[test]
    fn single_unit_two_scores() {
        let out = aggregate_scores(&labels(&["a", "a"]), &[0.0, 1.0]).unwrap();
        assert_eq!(out[0].srs_variance, 0.25);
    }

    #[test]
    fn pooled_over_all_units() {
        let out = aggregate_scores(&labels(&["a", "b", "b", "b"]), &[0.1, 0.3, 0.5, 0.7]).unwrap();
        let pooled = stats::sample_variance(&[0.1, 0.3, 0.5, 0.7]);
        assert!((out[0].srs_variance - pooled).abs() < 1e-15);
        assert!((out[1].srs_variance - pooled / 3.0).abs() < 1e-15);
    }

    #[test]
    fn empty_input_rejected() {
        assert!(matches!(aggregate_scores(&[], &[]), Err(Error::Input(_))));
    }

    #[test]
    fn alignment_flags_missing_units() {
        let aggs = aggregate_scores(&labels(&["a", "a", "c"]), &[0.1, 0.2, 0.3]).unwrap();
        let aligned = align_to_units(&aggs, &labels(&["a", "b", "c"]));
        assert_eq!(aligned.missing_units, vec!["b".to_string()]);
        assert!(aligned.response(Response::Mean).is_err());
        let aligned = align_to_units(&aggs, &labels(&["c", "a"]));
        let y = aligned.response(Response::Mean).unwrap();
        assert!((y[0] - 0.3).abs() < 1e-15 && (y[1] - 0.15).abs() < 1e-15);
    }

    #[test]
    fn response_names_round_trip() {
        for r in Response::ALL {
            assert_eq!(Response::parse(r.name()), Some(r));
        }
        assert_eq!(Response::parse("Q3"), Some(Response::Q3));
        assert_eq!(Response::parse("median"), None);
    }
}
