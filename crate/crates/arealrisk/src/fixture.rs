//! Synthetic study area with known ground truth.
//!
//! Forty-six counties on a jittered 8 × 6 lattice of 30-mile cells (the two
//! inland corners are missing; one coastal county has an offshore island).
//! The coast runs along `y = 0`, inland is north. Each county's mean risk
//! perception is a CAR field plus a linear effect of ten covariates: six
//! spatially smooth resilience indices and the four exposure covariates derived
//! from the generated tracks, events and elevation grid.

use std::path::Path;

use arealrisk_core::bayes::VariableScale;
use arealrisk_core::car::phi_bounds;
use arealrisk_core::exec::Sequential;
use arealrisk_core::exposure::{Date, ElevationGrid, EventRecord, SurgeKind, Track};
use arealrisk_core::geometry::{Point, Polygon, Polyline};
use arealrisk_core::graph::{queen_from_polygons, weights, WeightScheme, DEFAULT_SNAP};
use arealrisk_core::stats;
use arealrisk_core::synth::{gen_car_field, gen_normal_matrix, gen_survey, RespondentCount, SynthSpec};
use serde::{Deserialize, Serialize};

use crate::config::ExposureSettings;
use crate::error::Result;
use crate::formats::geojson::{write_polygons, DEFAULT_ID_PROPERTY};
use crate::formats::grid::write_ascii_grid;
use crate::formats::hazard::{write_events, write_tracks};
use crate::formats::survey::write_survey;
use crate::formats::tables::{write_covariates, write_edges, CovariateTable};
use crate::formats::{write_atomic, write_json};
use crate::pipeline::{exposure_rows, HazardInputs};

const COLS: usize = 8;
const ROWS: usize = 6;
const CELL: f64 = 30.0;
/// Lattice cells left out (row, col); row 0 is on the coast.
const MISSING: [(usize, usize); 2] = [(ROWS - 1, 0), (ROWS - 1, COLS - 1)];
/// Cell whose county also owns an island.
const ISLAND_CELL: (usize, usize) = (0, 3);

pub const LOADINGS: [f64; 3] = [0.63, 0.54, 0.45];
pub const RESILIENCE: [&str; 6] = ["social", "economic", "infrastructure", "community_capital", "institutional", "environmental"];
const EXPOSURE: [&str; 4] = ["wind_zone_frac", "surge_zone_frac", "last_max_wind", "last_peak_surge"];
/// Effect on the latent risk perception of a one-sd change in each
/// covariate, resilience first.
const EFFECTS: [f64; 10] = [0.20, -0.15, 0.0, 0.10, 0.0, -0.10, 0.15, 0.20, 0.10, 0.0];
/// Spatial dependence as a share of the admissible upper bound.
const PHI_SHARE: f64 = 0.9;
const FIELD_SD: f64 = 0.2;

// Independent streams of `gen_normal_matrix`.
const JITTER_STREAM: u64 = 0;
const COVARIATE_STREAM: u64 = 1;
const TRACK_STREAM: u64 = 2;
const ELEVATION_STREAM: u64 = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Truth {
    pub seed: u64,
    pub units: Vec<String>,
    pub loadings: Vec<f64>,
    pub phi: f64,
    pub phi_upper: f64,
    pub field_sd: f64,
    pub covariates: Vec<String>,
    /// Per-sd effects on the latent risk perception, in `covariates` order.
    pub effects: Vec<f64>,
    pub car_field: Vec<f64>,
    pub unit_effects: Vec<f64>,
}

fn round_to(v: f64, digits: i32) -> f64 {
    let s = 10f64.powi(digits);
    (v * s).round() / s
}

fn fips(k: usize) -> String {
    format!("22{:03}", 2 * k + 1)
}

/// Lattice cells that hold a county, coast first, west to east.
fn cells() -> Vec<(usize, usize)> {
    (0..ROWS).flat_map(|r| (0..COLS).map(move |c| (r, c))).filter(|rc| !MISSING.contains(rc)).collect()
}

fn counties(seed: u64) -> Result<Vec<(String, Polygon)>> {
    let jitter = gen_normal_matrix((ROWS + 1) * (COLS + 1), 2, seed, JITTER_STREAM);
    let vertex = |r: usize, c: usize| {
        let interior = r > 0 && r < ROWS && c > 0 && c < COLS;
        let k = r * (COLS + 1) + c;
        let (dx, dy) = if interior {
            (0.1 * CELL * jitter[(k, 0)].clamp(-2.0, 2.0), 0.1 * CELL * jitter[(k, 1)].clamp(-2.0, 2.0))
        } else {
            (0.0, 0.0)
        };
        Point::new(round_to(c as f64 * CELL + dx, 3), round_to(r as f64 * CELL + dy, 3))
    };
    cells()
        .into_iter()
        .enumerate()
        .map(|(k, (r, c))| {
            let ring = vec![vertex(r, c), vertex(r, c + 1), vertex(r + 1, c + 1), vertex(r + 1, c)];
            let mut polygon = Polygon::new(ring, vec![])?;
            if (r, c) == ISLAND_CELL {
                let x0 = c as f64 * CELL + 8.0;
                polygon = Polygon::multi(vec![polygon, Polygon::rectangle(x0, -14.0, x0 + 8.0, -8.0)])?;
            }
            Ok((fips(k), polygon))
        })
        .collect()
}

/// Tracks from the gulf heading inland and dying out at varying distances.
fn tracks(seed: u64) -> Result<Vec<Track>> {
    let landfalls = [(1915, 9, 29, 25.0), (1947, 9, 19, 80.0), (1965, 9, 9, 140.0), (1985, 10, 31, 185.0), (2005, 8, 29, 220.0)];
    let z = gen_normal_matrix(landfalls.len(), 3, seed, TRACK_STREAM);
    landfalls
        .iter()
        .enumerate()
        .map(|(k, &(year, month, day, x))| {
            let x = x + 8.0 * z[(k, 0)].clamp(-2.0, 2.0);
            let drift = 0.3 * z[(k, 1)].clamp(-2.0, 2.0);
            let reach = 90.0 + 30.0 * z[(k, 2)].clamp(-2.0, 2.0);
            let points = (0..5)
                .map(|i| {
                    let y = -60.0 + (reach + 60.0) * i as f64 / 4.0;
                    Point::new(round_to(x + drift * (y + 60.0), 3), round_to(y, 3))
                })
                .collect();
            Ok(Track { event_id: format!("AL{:02}{year}", k + 1), date: Date::new(year, month, day)?, path: Polyline::new(points)? })
        })
        .collect()
}

/// Landfall events with the counties they affected. Every county has one
/// since the default cutoff year; the 1985 event predates it.
fn events(units: &[String]) -> Result<Vec<EventRecord>> {
    let cell_units: Vec<((usize, usize), &String)> = cells().into_iter().zip(units).collect();
    let specs = [
        ("AL041985", (1985, 10, 31), (0, 7), 5, 120.0, 11.0, SurgeKind::Surge),
        ("AL041992", (1992, 8, 26), (0, 7), 5, 100.0, 7.5, SurgeKind::Surge),
        ("AL021998", (1998, 9, 28), (0, 2), 3, 85.0, 5.5, SurgeKind::Tide),
        ("AL122002", (2002, 10, 3), (3, 5), 4, 95.0, 8.0, SurgeKind::Surge),
        ("AL122005", (2005, 8, 29), (5, 7), 5, 110.0, 14.5, SurgeKind::Surge),
        ("AL092008", (2008, 9, 1), (1, 3), 2, 95.0, 10.5, SurgeKind::Tide),
    ];
    specs
        .iter()
        .map(|&(id, (y, m, d), (c0, c1), max_row, wind, surge, kind)| {
            let affected = cell_units
                .iter()
                .filter(|((r, c), _)| *r <= max_row && (c0..=c1).contains(c))
                .map(|(_, u)| (*u).clone())
                .collect();
            let event = EventRecord {
                event_id: id.into(),
                date: Date::new(y, m, d)?,
                affected_units: affected,
                max_wind: wind,
                peak_surge: surge,
                surge_kind: kind,
            };
            event.validate()?;
            Ok(event)
        })
        .collect()
}

/// Two-mile cells rising inland at about 0.45 ft per mile, with a block of
/// nodata cells standing in for a lake.
fn elevation(seed: u64) -> Result<ElevationGrid> {
    let (x0, y0, size, n_cols, n_rows) = (-10.0, -30.0, 2.0, 130, 110);
    let nodata = -9999.0;
    let noise = gen_normal_matrix(n_rows, n_cols, seed, ELEVATION_STREAM);
    let mut values = Vec::with_capacity(n_cols * n_rows);
    for row in 0..n_rows {
        for col in 0..n_cols {
            let lake = (40..45).contains(&row) && (60..65).contains(&col);
            let y = y0 + ((n_rows - row) as f64 - 0.5) * size;
            let v = (0.45 * y + 4.0 * noise[(row, col)]).max(0.5);
            values.push(if lake { nodata } else { round_to(v, 1) });
        }
    }
    Ok(ElevationGrid::new(x0, y0, size, n_cols, n_rows, values, nodata)?)
}

fn standardized(column: &[f64]) -> Vec<f64> {
    let scale = VariableScale { name: String::new(), mean: stats::mean(column), sd: stats::sample_sd(column) };
    column.iter().map(|&v| scale.standardize(v)).collect()
}

const CONFIG: &str = r#"seed = 42

[inputs]
survey = "survey.csv"
geojson = "counties.geojson"
covariates = "covariates.csv"
tracks = "tracks.csv"
events = "events.csv"
elevation = "elevation.asc"
"#;

/// Writes the fixture into `dir` and returns the file names.
pub fn simulate(dir: &Path, seed: u64) -> Result<Vec<&'static str>> {
    std::fs::create_dir_all(dir).map_err(|e| crate::Error::io(dir, e))?;
    let polygons = counties(seed)?;
    let units: Vec<String> = polygons.iter().map(|(u, _)| u.clone()).collect();
    let graph = queen_from_polygons(&polygons, DEFAULT_SNAP)?;
    let binary = weights(&graph, WeightScheme::Binary);
    let phi_upper = phi_bounds(&binary)?.upper;
    let phi = PHI_SHARE * phi_upper;
    let field = gen_car_field(&binary, phi, FIELD_SD * FIELD_SD, 0.0, seed)?;

    // Resilience indices vary smoothly across counties: white noise plus
    // twice-lagged noise, rescaled.
    let noise = gen_normal_matrix(units.len(), RESILIENCE.len(), seed, COVARIATE_STREAM);
    let row = weights(&graph, WeightScheme::RowStandardized);
    let columns: Vec<Vec<f64>> = (0..RESILIENCE.len())
        .map(|j| {
            let z: Vec<f64> = noise.column(j).iter().copied().collect();
            let smooth = row.lag(&row.lag(&z));
            standardized(&z.iter().zip(&smooth).map(|(a, b)| 0.3 * a + b).collect::<Vec<_>>())
        })
        .collect();
    let resilience = CovariateTable {
        names: RESILIENCE.map(String::from).to_vec(),
        rows: units
            .iter()
            .enumerate()
            .map(|(i, u)| (u.clone(), columns.iter().map(|c| Some(round_to(0.5 + 0.1 * c[i], 4))).collect()))
            .collect(),
    };
    let hazard = HazardInputs { tracks: tracks(seed)?, events: events(&units)?, elevation: elevation(seed)? };
    let (exposure, _) = exposure_rows(&units, &polygons, &hazard, &ExposureSettings::default(), &Sequential)?;

    let mut effects = field.clone();
    let mut add = |column: Vec<f64>, beta: f64| {
        for (e, z) in effects.iter_mut().zip(standardized(&column)) {
            *e += beta * z;
        }
    };
    for (j, &beta) in EFFECTS[..RESILIENCE.len()].iter().enumerate() {
        add(units.iter().map(|u| resilience.rows[u][j].expect("filled")).collect(), beta);
    }
    let exposure_columns: [fn(&crate::formats::tables::ExposureRow) -> f64; 4] = [
        |r| r.wind_zone_frac,
        |r| r.surge_zone_frac,
        |r| r.last_max_wind.expect("every county has an event"),
        |r| r.last_peak_surge.expect("every county has an event"),
    ];
    for (k, column) in exposure_columns.iter().enumerate() {
        add(exposure.iter().map(column).collect(), EFFECTS[RESILIENCE.len() + k]);
    }

    let spec = SynthSpec {
        seed,
        n_units: units.len(),
        respondents_per_unit: RespondentCount::Range(10, 150),
        true_loadings: LOADINGS.to_vec(),
        true_phi: phi,
        true_beta: EFFECTS.to_vec(),
        noise_sd: 1.0,
    };
    let survey = gen_survey(&spec, &units, Some(&effects))?;
    let edges: Vec<(String, String)> =
        graph.edges().into_iter().map(|(i, j)| (units[i].clone(), units[j].clone())).collect();

    write_survey(&dir.join("survey.csv"), &survey)?;
    write_polygons(&dir.join("counties.geojson"), &polygons, DEFAULT_ID_PROPERTY)?;
    write_edges(&dir.join("adjacency.csv"), &edges)?;
    write_covariates(&dir.join("covariates.csv"), &resilience)?;
    write_tracks(&dir.join("tracks.csv"), &hazard.tracks)?;
    write_events(&dir.join("events.csv"), &hazard.events)?;
    write_ascii_grid(&dir.join("elevation.asc"), &hazard.elevation)?;
    let truth = Truth {
        seed,
        units,
        loadings: LOADINGS.to_vec(),
        phi,
        phi_upper,
        field_sd: FIELD_SD,
        covariates: RESILIENCE.iter().chain(&EXPOSURE).map(|s| s.to_string()).collect(),
        effects: EFFECTS.to_vec(),
        car_field: field,
        unit_effects: effects,
    };
    write_json(&dir.join("truth.json"), &truth)?;
    write_atomic(&dir.join("config.toml"), CONFIG.replace("seed = 42", &format!("seed = {seed}")).as_bytes())?;
    Ok(vec![
        "survey.csv",
        "counties.geojson",
        "adjacency.csv",
        "covariates.csv",
        "tracks.csv",
        "events.csv",
        "elevation.asc",
        "truth.json",
        "config.toml",
    ])
}
