//! Planar geometry primitives: multi-part polygons with holes, polylines, distances and
//! even–odd point-in-polygon tests.

use alloc::vec::Vec;

use crate::error::{input_err, Result};
use crate::math;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundingBox {
    pub min: Point,
    pub max: Point,
}

impl BoundingBox {
    pub fn of(points: impl IntoIterator<Item = Point>) -> Option<Self> {
        let mut it = points.into_iter();
        let first = it.next()?;
        let mut b = BoundingBox { min: first, max: first };
        for p in it {
            b.min.x = b.min.x.min(p.x);
            b.min.y = b.min.y.min(p.y);
            b.max.x = b.max.x.max(p.x);
            b.max.y = b.max.y.max(p.y);
        }
        Some(b)
    }

    pub fn width(&self) -> f64 {
        self.max.x - self.min.x
    }

    pub fn height(&self) -> f64 {
        self.max.y - self.min.y
    }

    /// `true` when the boxes overlap after growing each by `margin`.
    pub fn intersects(&self, other: &BoundingBox, margin: f64) -> bool {
        self.min.x - margin <= other.max.x
            && other.min.x - margin <= self.max.x
            && self.min.y - margin <= other.max.y
            && other.min.y - margin <= self.max.y
    }
}

/// A closed ring: first vertex equals the last.
#[derive(Debug, Clone, PartialEq)]
pub struct Ring(Vec<Point>);

impl Ring {
    /// Closes the ring if needed; at least three distinct vertices required.
    pub fn new(mut points: Vec<Point>) -> Result<Self> {
        if let (Some(&first), Some(&last)) = (points.first(), points.last()) {
            if first != last {
                points.push(first);
            }
        }
        if points.len() < 4 {
            return Err(input_err!("ring has {} distinct vertices; at least 3 required", points.len().saturating_sub(1)));
        }
        Ok(Self(points))
    }

    pub fn points(&self) -> &[Point] {
        &self.0
    }

    pub fn segments(&self) -> impl Iterator<Item = (Point, Point)> + '_ {
        self.0.windows(2).map(|w| (w[0], w[1]))
    }

    /// Even–odd ray crossing test.
    pub fn contains(&self, p: Point) -> bool {
        let mut inside = false;
        for (a, b) in self.segments() {
            if (a.y > p.y) != (b.y > p.y) {
                let x_cross = a.x + (p.y - a.y) / (b.y - a.y) * (b.x - a.x);
                if p.x < x_cross {
                    inside = !inside;
                }
            }
        }
        inside
    }

    pub fn signed_area(&self) -> f64 {
        self.segments().map(|(a, b)| a.x * b.y - b.x * a.y).sum::<f64>() / 2.0
    }
}

/// An exterior ring with optional holes.
#[derive(Debug, Clone, PartialEq)]
pub struct Part {
    pub exterior: Ring,
    pub holes: Vec<Ring>,
}

impl Part {
    fn area(&self) -> f64 {
        math::abs(self.exterior.signed_area()) - self.holes.iter().map(|h| math::abs(h.signed_area())).sum::<f64>()
    }
}

/// One or more disjoint parts (islands are separate parts).
#[derive(Debug, Clone, PartialEq)]
pub struct Polygon {
    parts: Vec<Part>,
}

impl Polygon {
    pub fn new(exterior: Vec<Point>, holes: Vec<Vec<Point>>) -> Result<Self> {
        Ok(Self {
            parts: alloc::vec![Part {
                exterior: Ring::new(exterior)?,
                holes: holes.into_iter().map(Ring::new).collect::<Result<_>>()?,
            }],
        })
    }

    /// Joins single- or multi-part polygons into one multi-part polygon.
    pub fn multi(polygons: Vec<Polygon>) -> Result<Self> {
        let parts: Vec<Part> = polygons.into_iter().flat_map(|p| p.parts).collect();
        if parts.is_empty() {
            return Err(input_err!("multi-part polygon has no parts"));
        }
        Ok(Self { parts })
    }

    pub fn rectangle(x0: f64, y0: f64, x1: f64, y1: f64) -> Self {
        let pts = alloc::vec![
            Point::new(x0, y0),
            Point::new(x1, y0),
            Point::new(x1, y1),
            Point::new(x0, y1),
            Point::new(x0, y0),
        ];
        Self { parts: alloc::vec![Part { exterior: Ring(pts), holes: Vec::new() }] }
    }

    pub fn parts(&self) -> &[Part] {
        &self.parts
    }

    pub fn rings(&self) -> impl Iterator<Item = &Ring> {
        self.parts.iter().flat_map(|p| core::iter::once(&p.exterior).chain(&p.holes))
    }

    pub fn bbox(&self) -> BoundingBox {
        BoundingBox::of(self.parts.iter().flat_map(|p| p.exterior.points().iter().copied())).expect("ring has vertices")
    }

    /// Even–odd rule across all rings, so holes subtract.
    pub fn contains(&self, p: Point) -> bool {
        self.rings().filter(|r| r.contains(p)).count() % 2 == 1
    }

    pub fn area(&self) -> f64 {
        self.parts.iter().map(Part::area).sum()
    }

    pub fn boundary_segments(&self) -> impl Iterator<Item = (Point, Point)> + '_ {
        self.rings().flat_map(Ring::segments)
    }

    pub fn translated(&self, dx: f64, dy: f64) -> Self {
        let shift = |r: &Ring| Ring(r.0.iter().map(|p| Point::new(p.x + dx, p.y + dy)).collect());
        Self {
            parts: self
                .parts
                .iter()
                .map(|p| Part { exterior: shift(&p.exterior), holes: p.holes.iter().map(shift).collect() })
                .collect(),
        }
    }
}

pub fn distance(a: Point, b: Point) -> f64 {
    math::sqrt(distance_sq(a, b))
}

fn distance_sq(a: Point, b: Point) -> f64 {
    let (dx, dy) = (a.x - b.x, a.y - b.y);
    dx * dx + dy * dy
}

/// Squared distance from `p` to the closed segment `[a, b]`.
pub fn point_segment_distance_sq(p: Point, a: Point, b: Point) -> f64 {
    let (abx, aby) = (b.x - a.x, b.y - a.y);
    let len_sq = abx * abx + aby * aby;
    if len_sq == 0.0 {
        return distance_sq(p, a);
    }
    let t = (((p.x - a.x) * abx + (p.y - a.y) * aby) / len_sq).clamp(0.0, 1.0);
    distance_sq(p, Point::new(a.x + t * abx, a.y + t * aby))
}

pub fn point_segment_distance(p: Point, a: Point, b: Point) -> f64 {
    math::sqrt(point_segment_distance_sq(p, a, b))
}

fn orientation(a: Point, b: Point, c: Point) -> f64 {
    (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x)
}

/// Proper or improper intersection of two closed segments.
pub fn segments_intersect(p1: Point, p2: Point, q1: Point, q2: Point) -> bool {
    let d1 = orientation(q1, q2, p1);
    let d2 = orientation(q1, q2, p2);
    let d3 = orientation(p1, p2, q1);
    let d4 = orientation(p1, p2, q2);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0)) && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0)) {
        return true;
    }
    // Collinear and touching cases are covered by the endpoint distances.
    false
}

pub fn segment_segment_distance(p1: Point, p2: Point, q1: Point, q2: Point) -> f64 {
    if segments_intersect(p1, p2, q1, q2) {
        return 0.0;
    }
    let d = point_segment_distance_sq(p1, q1, q2)
        .min(point_segment_distance_sq(p2, q1, q2))
        .min(point_segment_distance_sq(q1, p1, p2))
        .min(point_segment_distance_sq(q2, p1, p2));
    math::sqrt(d)
}

/// Polyline with at least two vertices.
#[derive(Debug, Clone, PartialEq)]
pub struct Polyline(Vec<Point>);

impl Polyline {
    pub fn new(points: Vec<Point>) -> Result<Self> {
        if points.len() < 2 {
            return Err(input_err!("polyline needs at least 2 vertices, got {}", points.len()));
        }
        Ok(Self(points))
    }

    pub fn points(&self) -> &[Point] {
        &self.0
    }

    pub fn segments(&self) -> impl Iterator<Item = (Point, Point)> + '_ {
        self.0.windows(2).map(|w| (w[0], w[1]))
    }

    pub fn bbox(&self) -> BoundingBox {
        BoundingBox::of(self.0.iter().copied()).expect("polyline has vertices")
    }

    /// `true` if `p` lies within `radius` of any segment.
    pub fn within(&self, p: Point, radius: f64) -> bool {
        let r2 = radius * radius;
        self.segments().any(|(a, b)| point_segment_distance_sq(p, a, b) <= r2)
    }

    pub fn translated(&self, dx: f64, dy: f64) -> Self {
        Self(self.0.iter().map(|p| Point::new(p.x + dx, p.y + dy)).collect())
    }
}
