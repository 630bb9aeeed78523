//! GeoJSON FeatureCollections of unit polygons, read with `serde_json`.
//!
//! Coordinates are taken as planar (already projected); the id property
//! (default `GEOID`) may be a string or an integer.

use std::collections::BTreeMap;
use std::path::Path;

use arealrisk_core::geometry::{Point, Polygon};
use serde_json::{json, Map, Value};

use super::{read_text, write_json};
use crate::error::{Error, Result};

pub const DEFAULT_ID_PROPERTY: &str = "GEOID";

fn feature_id(feature: &Value, id_property: &str) -> Option<String> {
    match feature.get("properties")?.get(id_property)? {
        Value::String(s) => Some(s.clone()),
        Value::Number(n) => Some(n.to_string()),
        _ => None,
    }
}

fn ring(value: &Value) -> std::result::Result<Vec<Point>, String> {
    value
        .as_array()
        .ok_or("ring is not an array")?
        .iter()
        .map(|pos| match pos.as_array().map(Vec::as_slice) {
            Some([x, y, ..]) => match (x.as_f64(), y.as_f64()) {
                (Some(x), Some(y)) => Ok(Point::new(x, y)),
                _ => Err("non-numeric coordinate".to_string()),
            },
            _ => Err("position needs two coordinates".to_string()),
        })
        .collect()
}

fn polygon(rings: &Value) -> std::result::Result<Polygon, String> {
    let rings = rings.as_array().ok_or("polygon is not an array of rings")?;
    let (exterior, holes) = rings.split_first().ok_or("polygon without rings")?;
    let holes = holes.iter().map(ring).collect::<std::result::Result<Vec<_>, _>>()?;
    Polygon::new(ring(exterior)?, holes).map_err(|e| e.to_string())
}

fn geometry(value: &Value) -> std::result::Result<Polygon, String> {
    let coords = value.get("coordinates").ok_or("geometry without coordinates")?;
    match value.get("type").and_then(Value::as_str) {
        Some("Polygon") => polygon(coords),
        Some("MultiPolygon") => {
            let parts = coords.as_array().ok_or("MultiPolygon coordinates are not an array")?;
            Polygon::multi(parts.iter().map(polygon).collect::<std::result::Result<_, _>>()?).map_err(|e| e.to_string())
        }
        Some(other) => Err(format!("unsupported geometry type {other}")),
        None => Err("geometry without type".into()),
    }
}

fn features<'a>(path: &Path, doc: &'a Value) -> Result<&'a Vec<Value>> {
    if doc.get("type").and_then(Value::as_str) != Some("FeatureCollection") {
        return Err(Error::format(path, "not a GeoJSON FeatureCollection"));
    }
    doc.get("features").and_then(Value::as_array).ok_or_else(|| Error::format(path, "missing features array"))
}

/// `(id, polygon)` per feature, in file order.
pub fn read_polygons(path: &Path, id_property: &str) -> Result<Vec<(String, Polygon)>> {
    let doc: Value = serde_json::from_str(&read_text(path)?).map_err(|e| Error::format(path, e))?;
    features(path, &doc)?
        .iter()
        .enumerate()
        .map(|(k, f)| {
            let id = feature_id(f, id_property)
                .ok_or_else(|| Error::format(path, format!("feature {k} has no {id_property} property")))?;
            let geom = f.get("geometry").ok_or_else(|| Error::format(path, format!("feature {id} has no geometry")))?;
            let poly = geometry(geom).map_err(|m| Error::format(path, format!("feature {id}: {m}")))?;
            Ok((id, poly))
        })
        .collect()
}

fn coords(points: &[Point]) -> Value {
    Value::Array(points.iter().map(|p| json!([p.x, p.y])).collect())
}

/// Writes polygons as a FeatureCollection with the id under `id_property`.
pub fn write_polygons(path: &Path, polygons: &[(String, Polygon)], id_property: &str) -> Result<()> {
    let features: Vec<Value> = polygons
        .iter()
        .map(|(id, poly)| {
            let parts: Vec<Value> = poly
                .parts()
                .iter()
                .map(|part| {
                    Value::Array(
                        std::iter::once(coords(part.exterior.points()))
                            .chain(part.holes.iter().map(|h| coords(h.points())))
                            .collect(),
                    )
                })
                .collect();
            let geometry = if parts.len() == 1 {
                json!({"type": "Polygon", "coordinates": parts[0]})
            } else {
                json!({"type": "MultiPolygon", "coordinates": parts})
            };
            let mut props = Map::new();
            props.insert(id_property.to_string(), Value::String(id.clone()));
            json!({"type": "Feature", "properties": props, "geometry": geometry})
        })
        .collect();
    write_json(path, &json!({"type": "FeatureCollection", "features": features}))
}

/// Copies `input` to `output`, adding `values[id]` to each feature's
/// properties. Features without values are left unchanged.
pub fn augment(input: &Path, output: &Path, id_property: &str, values: &BTreeMap<String, BTreeMap<String, f64>>) -> Result<()> {
    let mut doc: Value = serde_json::from_str(&read_text(input)?).map_err(|e| Error::format(input, e))?;
    features(input, &doc)?;
    let list = doc.get_mut("features").and_then(Value::as_array_mut).expect("checked above");
    for feature in list {
        let Some(id) = feature_id(feature, id_property) else { continue };
        let Some(extra) = values.get(&id) else { continue };
        if let Some(Value::Object(props)) = feature.get_mut("properties") {
            for (k, v) in extra {
                props.insert(k.clone(), json!(v));
            }
        }
    }
    write_json(output, &doc)
}
