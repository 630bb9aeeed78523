//! Hurricane tracks and landfall events.
//!
//! Tracks CSV: `event_id, date, seq, x, y`, one row per track vertex.
//! Events CSV: `event_id, date, county_fips, max_wind_kt, peak_surge_ft,
//! surge_or_tide`, one row per affected county.

use std::collections::BTreeMap;
use std::path::Path;

use arealrisk_core::exposure::{Date, EventRecord, SurgeKind, Track};
use arealrisk_core::geometry::{Point, Polyline};
use serde::{Deserialize, Serialize};

use super::{read_csv, write_csv};
use crate::error::{Error, Result};

#[derive(Debug, Serialize, Deserialize)]
struct TrackRow {
    event_id: String,
    date: String,
    seq: u32,
    x: f64,
    y: f64,
}

/// Tracks ordered by event id, vertices by `seq`.
pub fn read_tracks(path: &Path) -> Result<Vec<Track>> {
    let mut groups: BTreeMap<String, (String, Vec<(u32, Point)>)> = BTreeMap::new();
    for r in read_csv::<TrackRow>(path)? {
        let entry = groups.entry(r.event_id.clone()).or_insert_with(|| (r.date.clone(), Vec::new()));
        if entry.0 != r.date {
            return Err(Error::format(path, format!("track {} has dates {} and {}", r.event_id, entry.0, r.date)));
        }
        entry.1.push((r.seq, Point::new(r.x, r.y)));
    }
    groups
        .into_iter()
        .map(|(event_id, (date, mut points))| {
            points.sort_by_key(|(seq, _)| *seq);
            if points.windows(2).any(|w| w[0].0 == w[1].0) {
                return Err(Error::format(path, format!("track {event_id} repeats a seq number")));
            }
            let date = Date::parse(&date).map_err(|e| Error::format(path, e))?;
            let path_line = Polyline::new(points.into_iter().map(|(_, p)| p).collect())
                .map_err(|e| Error::format(path, format!("track {event_id}: {e}")))?;
            Ok(Track { event_id, date, path: path_line })
        })
        .collect()
}

pub fn write_tracks(path: &Path, tracks: &[Track]) -> Result<()> {
    write_csv(
        path,
        tracks.iter().flat_map(|t| {
            t.path.points().iter().enumerate().map(move |(k, p)| TrackRow {
                event_id: t.event_id.clone(),
                date: t.date.to_string(),
                seq: k as u32,
                x: p.x,
                y: p.y,
            })
        }),
    )
}

#[derive(Debug, Serialize, Deserialize)]
struct EventRow {
    event_id: String,
    date: String,
    county_fips: String,
    max_wind_kt: f64,
    peak_surge_ft: f64,
    surge_or_tide: String,
}

/// Events ordered by id, each with its affected counties in file order.
pub fn read_events(path: &Path) -> Result<Vec<EventRecord>> {
    let mut groups: BTreeMap<String, EventRecord> = BTreeMap::new();
    for (line, r) in read_csv::<EventRow>(path)?.into_iter().enumerate() {
        let at = |m: String| Error::format(path, format!("row {}: {m}", line + 1));
        let date = Date::parse(&r.date).map_err(|e| at(e.to_string()))?;
        let kind = SurgeKind::parse(&r.surge_or_tide)
            .ok_or_else(|| at(format!("surge_or_tide must be surge or tide, got {:?}", r.surge_or_tide)))?;
        let record = groups.entry(r.event_id.clone()).or_insert_with(|| EventRecord {
            event_id: r.event_id.clone(),
            date,
            affected_units: Vec::new(),
            max_wind: r.max_wind_kt,
            peak_surge: r.peak_surge_ft,
            surge_kind: kind,
        });
        if record.date != date || record.max_wind != r.max_wind_kt || record.peak_surge != r.peak_surge_ft || record.surge_kind != kind {
            return Err(at(format!("event {} has inconsistent attributes across rows", r.event_id)));
        }
        record.affected_units.push(r.county_fips);
    }
    let events: Vec<EventRecord> = groups.into_values().collect();
    for e in &events {
        e.validate().map_err(|err| Error::format(path, err))?;
    }
    Ok(events)
}

pub fn write_events(path: &Path, events: &[EventRecord]) -> Result<()> {
    write_csv(
        path,
        events.iter().flat_map(|e| {
            e.affected_units.iter().map(move |u| EventRow {
                event_id: e.event_id.clone(),
                date: e.date.to_string(),
                county_fips: u.clone(),
                max_wind_kt: e.max_wind,
                peak_surge_ft: e.peak_surge,
                surge_or_tide: e.surge_kind.name().to_string(),
            })
        }),
    )
}
