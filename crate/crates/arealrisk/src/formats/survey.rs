//! Survey CSV: `respondent_id, county_fips, q_number, q_strength, q_flooding`,
//! answers as category labels (`decreased`, `unchanged`, `increased`, `na`).

use std::path::Path;

use arealrisk_core::factor::RawResponse;
use serde::{Deserialize, Serialize};

use super::{read_csv, write_csv};
use crate::error::{Error, Result};

/// Item columns in the order they enter the factor model.
pub const ITEMS: [&str; 3] = ["q_number", "q_strength", "q_flooding"];

#[derive(Debug, Serialize, Deserialize)]
struct Row {
    respondent_id: String,
    county_fips: String,
    q_number: String,
    q_strength: String,
    q_flooding: String,
}

pub fn read_survey(path: &Path) -> Result<Vec<RawResponse>> {
    Ok(read_csv::<Row>(path)?
        .into_iter()
        .map(|r| RawResponse {
            respondent_id: r.respondent_id,
            unit_label: r.county_fips,
            answers: vec![r.q_number, r.q_strength, r.q_flooding],
        })
        .collect())
}

pub fn write_survey(path: &Path, rows: &[RawResponse]) -> Result<()> {
    if let Some(r) = rows.iter().find(|r| r.answers.len() != ITEMS.len()) {
        return Err(Error::format(path, format!("respondent {} has {} answers, expected 3", r.respondent_id, r.answers.len())));
    }
    write_csv(
        path,
        rows.iter().map(|r| Row {
            respondent_id: r.respondent_id.clone(),
            county_fips: r.unit_label.clone(),
            q_number: r.answers[0].clone(),
            q_strength: r.answers[1].clone(),
            q_flooding: r.answers[2].clone(),
        }),
    )
}
