//! Hazard-exposure covariates from planar geometry and event records.
//!
//! Area fractions are estimated by sampling a regular grid of points (cell
//! centers at the given spacing) over the county's bounding box and counting
//! the in-polygon samples that satisfy the hazard condition.

use alloc::string::String;
use alloc::vec::Vec;
use alloc::{format, vec};
use core::fmt;

use crate::error::{input_err, Error, Result};
use crate::geometry::{Point, Polygon, Polyline};
use crate::math;

pub const DEFAULT_BUFFER_RADIUS_MILES: f64 = 50.0;
pub const DEFAULT_ELEVATION_THRESHOLD_FT: f64 = 35.0;
pub const DEFAULT_CUTOFF_YEAR: i32 = 1992;

/// Calendar date, ordered chronologically.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Date {
    pub year: i32,
    pub month: u8,
    pub day: u8,
}

impl Date {
    pub fn new(year: i32, month: u8, day: u8) -> Result<Self> {
        if !(1..=12).contains(&month) || !(1..=31).contains(&day) {
            return Err(input_err!("invalid date {year}-{month}-{day}"));
        }
        Ok(Self { year, month, day })
    }

    /// Parses `YYYY-MM-DD`.
    pub fn parse(s: &str) -> Result<Self> {
        let mut parts = s.trim().splitn(3, '-');
        let mut next = || parts.next().ok_or_else(|| input_err!("date {s:?} is not YYYY-MM-DD"));
        let (y, m, d) = (next()?, next()?, next()?);
        let bad = |_| input_err!("date {s:?} is not YYYY-MM-DD");
        Self::new(y.parse().map_err(bad)?, m.parse().map_err(bad)?, d.parse().map_err(bad)?)
    }
}

impl fmt::Display for Date {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:04}-{:02}-{:02}", self.year, self.month, self.day)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Track {
    pub event_id: String,
    pub date: Date,
    pub path: Polyline,
}

impl Track {
    pub fn translated(&self, dx: f64, dy: f64) -> Self {
        Self { path: self.path.translated(dx, dy), ..self.clone() }
    }
}

/// Raster of elevations (feet). `values` are row-major with row 0 at the top
/// (largest y), as in ESRI ASCII grids.
#[derive(Debug, Clone, PartialEq)]
pub struct ElevationGrid {
    pub x_lower_left: f64,
    pub y_lower_left: f64,
    pub cell_size: f64,
    pub n_cols: usize,
    pub n_rows: usize,
    pub values: Vec<f64>,
    pub nodata: f64,
}

impl ElevationGrid {
    pub fn new(
        x_lower_left: f64,
        y_lower_left: f64,
        cell_size: f64,
        n_cols: usize,
        n_rows: usize,
        values: Vec<f64>,
        nodata: f64,
    ) -> Result<Self> {
        if !(cell_size > 0.0 && cell_size.is_finite()) {
            return Err(input_err!("cell size must be positive, got {cell_size}"));
        }
        if n_cols == 0 || n_rows == 0 || values.len() != n_cols * n_rows {
            return Err(input_err!("{} values for a {n_cols}x{n_rows} grid", values.len()));
        }
        if !x_lower_left.is_finite() || !y_lower_left.is_finite() {
            return Err(input_err!("grid origin must be finite"));
        }
        Ok(Self { x_lower_left, y_lower_left, cell_size, n_cols, n_rows, values, nodata })
    }

    pub fn cell_center(&self, row: usize, col: usize) -> Point {
        Point::new(
            self.x_lower_left + (col as f64 + 0.5) * self.cell_size,
            self.y_lower_left + ((self.n_rows - row) as f64 - 0.5) * self.cell_size,
        )
    }

    pub fn value(&self, row: usize, col: usize) -> Option<f64> {
        let v = self.values[row * self.n_cols + col];
        (v != self.nodata && v.is_finite()).then_some(v)
    }

    pub fn translated(&self, dx: f64, dy: f64) -> Self {
        Self { x_lower_left: self.x_lower_left + dx, y_lower_left: self.y_lower_left + dy, ..self.clone() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum SurgeKind {
    Surge,
    Tide,
}

impl SurgeKind {
    pub fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "surge" => Some(Self::Surge),
            "tide" => Some(Self::Tide),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Surge => "surge",
            Self::Tide => "tide",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EventRecord {
    pub event_id: String,
    pub date: Date,
    pub affected_units: Vec<String>,
    /// Knots, a multiple of 5.
    pub max_wind: f64,
    /// Feet.
    pub peak_surge: f64,
    pub surge_kind: SurgeKind,
}

impl EventRecord {
    pub fn validate(&self) -> Result<()> {
        if !(self.max_wind >= 0.0) || self.max_wind % 5.0 != 0.0 {
            return Err(input_err!(
                "event {}: max wind {} kt is not a non-negative multiple of 5",
                self.event_id,
                self.max_wind
            ));
        }
        if !(self.peak_surge >= 0.0) {
            return Err(input_err!("event {}: negative peak surge {}", self.event_id, self.peak_surge));
        }
        Ok(())
    }
}

/// Result of an area-fraction estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct Coverage {
    pub fraction: f64,
    /// In-polygon samples (or valid cells) satisfying the condition.
    pub hits: usize,
    /// In-polygon samples (or valid cells) overall.
    pub total: usize,
    pub warnings: Vec<String>,
}

/// Fraction of the county's area within `radius` of any track.
pub fn buffer_fraction(county: &Polygon, tracks: &[Track], radius: f64, resolution: f64) -> Result<Coverage> {
    if !(radius > 0.0) {
        return Err(input_err!("buffer radius must be positive, got {radius}"));
    }
    let bbox = county.bbox();
    let shorter = bbox.width().min(bbox.height());
    if !(resolution > 0.0) || resolution > shorter / 10.0 {
        return Err(Error::Resolution(format!(
            "spacing {resolution} must be positive and at most a tenth of the bounding box's shorter side ({shorter})"
        )));
    }
    let nearby: Vec<&Polyline> = tracks
        .iter()
        .map(|t| &t.path)
        .filter(|p| p.bbox().intersects(&bbox, radius))
        .collect();

    let nx = math::ceil(bbox.width() / resolution) as usize;
    let ny = math::ceil(bbox.height() / resolution) as usize;
    let (mut hits, mut total) = (0, 0);
    for iy in 0..ny {
        let y = bbox.min.y + (iy as f64 + 0.5) * resolution;
        for ix in 0..nx {
            let p = Point::new(bbox.min.x + (ix as f64 + 0.5) * resolution, y);
            if !county.contains(p) {
                continue;
            }
            total += 1;
            if nearby.iter().any(|t| t.within(p, radius)) {
                hits += 1;
            }
        }
    }
    if total == 0 {
        return Err(Error::Resolution(format!("no sample at spacing {resolution} falls inside the polygon")));
    }
    let mut warnings = Vec::new();
    if tracks.is_empty() {
        warnings.push("no tracks supplied; wind-zone fraction is 0".into());
    }
    Ok(Coverage { fraction: hits as f64 / total as f64, hits, total, warnings })
}

/// Fraction of valid elevation cells (centers inside the county) at or below
/// `threshold` feet.
pub fn below_elevation_fraction(county: &Polygon, grid: &ElevationGrid, threshold: f64) -> Result<Coverage> {
    let bbox = county.bbox();
    let (mut hits, mut total) = (0, 0);
    // Column/row windows whose centers can fall inside the bounding box.
    let col_of = |x: f64| (x - grid.x_lower_left) / grid.cell_size - 0.5;
    let c0 = math::floor(col_of(bbox.min.x)).max(0.0) as usize;
    let c1 = (math::ceil(col_of(bbox.max.x)).max(-1.0) + 1.0).min(grid.n_cols as f64) as usize;
    let row_of = |y: f64| grid.n_rows as f64 - 0.5 - (y - grid.y_lower_left) / grid.cell_size;
    let r0 = math::floor(row_of(bbox.max.y)).max(0.0) as usize;
    let r1 = (math::ceil(row_of(bbox.min.y)).max(-1.0) + 1.0).min(grid.n_rows as f64) as usize;
    for row in r0..r1 {
        for col in c0..c1 {
            let Some(v) = grid.value(row, col) else { continue };
            if !county.contains(grid.cell_center(row, col)) {
                continue;
            }
            total += 1;
            if v <= threshold {
                hits += 1;
            }
        }
    }
    if total == 0 {
        return Err(Error::Coverage("no valid elevation cell center lies inside the polygon".into()));
    }
    Ok(Coverage { fraction: hits as f64 / total as f64, hits, total, warnings: vec![] })
}

#[derive(Debug, Clone, PartialEq)]
pub struct LastEvent {
    pub event_id: String,
    pub date: Date,
    pub max_wind: f64,
    pub peak_surge: f64,
    pub surge_kind: SurgeKind,
}

/// The latest event on or after `cutoff_year` affecting `unit`; same-day
/// events are ranked by the stronger wind.
pub fn last_event_covariates(events: &[EventRecord], unit: &str, cutoff_year: i32) -> Result<LastEvent> {
    for e in events {
        e.validate()?;
    }
    events
        .iter()
        .filter(|e| e.date.year >= cutoff_year && e.affected_units.iter().any(|u| u == unit))
        .max_by(|a, b| a.date.cmp(&b.date).then(a.max_wind.total_cmp(&b.max_wind)))
        .map(|e| LastEvent {
            event_id: e.event_id.clone(),
            date: e.date,
            max_wind: e.max_wind,
            peak_surge: e.peak_surge,
            surge_kind: e.surge_kind,
        })
        .ok_or_else(|| Error::MissingCovariate(unit.into()))
}
