//! Lake boundaries: GeoJSON polygon ingestion, point-in-polygon, mask
//! rasterization and convex hulls.

use std::path::Path;

use serde_json::{json, Map, Value};
use thiserror::Error;

use crate::geo::{GeoRaster, LocalProjection, RasterError};

#[derive(Debug, Error)]
pub enum BoundaryError {
    #[error("invalid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unsupported geometry type {0}; expected Polygon")]
    UnsupportedGeometry(String),
    #[error("missing \"{0}\" member")]
    Missing(&'static str),
    #[error("missing \"coordinates\" member")]
    MissingCoordinates,
    #[error("ring {ring}: unclosed ring (first vertex differs from last)")]
    UnclosedRing { ring: usize },
    #[error("ring {ring}: has {count} vertices, a closed ring needs at least 4")]
    TooFewPoints { ring: usize, count: usize },
    #[error("ring {ring}, vertex {vertex}: invalid coordinate")]
    InvalidCoordinate { ring: usize, vertex: usize },
    #[error("outer ring self-intersects between edges {0} and {1}")]
    SelfIntersecting(usize, usize),
    #[error("polygon has no rings")]
    NoRings,
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

pub type Point = (f64, f64);

/// Polygon in lon/lat: first ring is the shell, the rest are holes.
///
/// Rings are stored closed (first vertex repeated at the end). Orientation
/// is not normalized; containment uses the even-odd rule.
#[derive(Debug, Clone, PartialEq)]
pub struct LakeBoundary {
    rings: Vec<Vec<Point>>,
}

impl LakeBoundary {
    pub fn new(rings: Vec<Vec<Point>>) -> Result<Self, BoundaryError> {
        if rings.is_empty() {
            return Err(BoundaryError::NoRings);
        }
        for (i, ring) in rings.iter().enumerate() {
            for (v, p) in ring.iter().enumerate() {
                if !p.0.is_finite() || !p.1.is_finite() {
                    return Err(BoundaryError::InvalidCoordinate { ring: i, vertex: v });
                }
            }
            if ring.len() < 2 || ring.first() != ring.last() {
                return Err(BoundaryError::UnclosedRing { ring: i });
            }
            if ring.len() < 4 {
                return Err(BoundaryError::TooFewPoints {
                    ring: i,
                    count: ring.len(),
                });
            }
        }
        if let Some((a, b)) = first_self_intersection(&rings[0]) {
            return Err(BoundaryError::SelfIntersecting(a, b));
        }
        Ok(Self { rings })
    }

    pub fn rings(&self) -> &[Vec<Point>] {
        &self.rings
    }

    pub fn outer(&self) -> &[Point] {
        &self.rings[0]
    }

    pub fn holes(&self) -> &[Vec<Point>] {
        &self.rings[1..]
    }

    /// `(min_x, min_y, max_x, max_y)` of the outer ring.
    pub fn bbox(&self) -> (f64, f64, f64, f64) {
        self.outer().iter().fold(
            (f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY),
            |(a, b, c, d), &(x, y)| (a.min(x), b.min(y), c.max(x), d.max(y)),
        )
    }

    /// Local metric frame centred on the outer ring's bounding box.
    pub fn local_frame(&self) -> Result<LocalProjection, RasterError> {
        let (x0, y0, x1, y1) = self.bbox();
        LocalProjection::new((x0 + x1) / 2.0, (y0 + y1) / 2.0)
    }

    /// Even-odd containment; points on any ring edge count as inside.
    pub fn contains(&self, x: f64, y: f64) -> bool {
        let mut inside = false;
        for ring in &self.rings {
            for w in ring.windows(2) {
                if on_segment((x, y), w[0], w[1]) {
                    return true;
                }
                if let Some(xi) = crossing_x(w[0], w[1], y) {
                    if x < xi {
                        inside = !inside;
                    }
                }
            }
        }
        inside
    }

    pub fn to_geojson(&self) -> Value {
        json!({
            "type": "Feature",
            "properties": {},
            "geometry": polygon_geometry(&self.rings),
        })
    }
}

/// x where edge `a→b` crosses the horizontal line at `y`, using the
/// half-open rule (an edge counts when exactly one endpoint is above `y`).
fn crossing_x(a: Point, b: Point, y: f64) -> Option<f64> {
    if (a.1 > y) != (b.1 > y) {
        Some((b.0 - a.0) * (y - a.1) / (b.1 - a.1) + a.0)
    } else {
        None
    }
}

fn cross(o: Point, a: Point, b: Point) -> f64 {
    (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
}

fn on_segment(p: Point, a: Point, b: Point) -> bool {
    cross(a, b, p) == 0.0
        && p.0 >= a.0.min(b.0)
        && p.0 <= a.0.max(b.0)
        && p.1 >= a.1.min(b.1)
        && p.1 <= a.1.max(b.1)
}

fn segments_intersect(p1: Point, p2: Point, q1: Point, q2: Point) -> bool {
    let d1 = cross(q1, q2, p1);
    let d2 = cross(q1, q2, p2);
    let d3 = cross(p1, p2, q1);
    let d4 = cross(p1, p2, q2);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    on_segment(p1, q1, q2) || on_segment(p2, q1, q2) || on_segment(q1, p1, p2) || on_segment(q2, p1, p2)
}

/// Pairwise test over non-adjacent edges of a closed ring.
fn first_self_intersection(ring: &[Point]) -> Option<(usize, usize)> {
    let n = ring.len() - 1;
    for i in 0..n {
        for j in i + 1..n {
            let adjacent = j == i + 1 || (i == 0 && j == n - 1);
            if adjacent {
                continue;
            }
            if segments_intersect(ring[i], ring[i + 1], ring[j], ring[j + 1]) {
                return Some((i, j));
            }
        }
    }
    None
}

fn parse_position(v: &Value, ring: usize, vertex: usize) -> Result<Point, BoundaryError> {
    let bad = || BoundaryError::InvalidCoordinate { ring, vertex };
    let arr = v.as_array().ok_or_else(bad)?;
    if arr.len() < 2 {
        return Err(bad());
    }
    let x = arr[0].as_f64().ok_or_else(bad)?;
    let y = arr[1].as_f64().ok_or_else(bad)?;
    Ok((x, y))
}

fn parse_polygon(geometry: &Value) -> Result<LakeBoundary, BoundaryError> {
    let kind = geometry
        .get("type")
        .and_then(Value::as_str)
        .ok_or(BoundaryError::Missing("type"))?;
    if kind != "Polygon" {
        return Err(BoundaryError::UnsupportedGeometry(kind.to_string()));
    }
    let coords = geometry
        .get("coordinates")
        .ok_or(BoundaryError::MissingCoordinates)?
        .as_array()
        .ok_or(BoundaryError::MissingCoordinates)?;
    let mut rings = Vec::with_capacity(coords.len());
    for (r, ring) in coords.iter().enumerate() {
        let verts = ring
            .as_array()
            .ok_or(BoundaryError::InvalidCoordinate { ring: r, vertex: 0 })?;
        let ring: Vec<Point> = verts
            .iter()
            .enumerate()
            .map(|(v, p)| parse_position(p, r, v))
            .collect::<Result<_, _>>()?;
        rings.push(ring);
    }
    LakeBoundary::new(rings)
}

/// Reads a boundary from GeoJSON text: a bare Polygon geometry, a Feature
/// holding one, or a FeatureCollection with exactly one such Feature.
/// Coordinates are `[lon, lat]`.
pub fn parse_boundary(text: &str) -> Result<LakeBoundary, BoundaryError> {
    let root: Value = serde_json::from_str(text)?;
    let kind = root
        .get("type")
        .and_then(Value::as_str)
        .ok_or(BoundaryError::Missing("type"))?;
    match kind {
        "Feature" => parse_polygon(root.get("geometry").ok_or(BoundaryError::Missing("geometry"))?),
        "FeatureCollection" => {
            let features = root
                .get("features")
                .and_then(Value::as_array)
                .ok_or(BoundaryError::Missing("features"))?;
            match features.as_slice() {
                [single] => parse_polygon(
                    single.get("geometry").ok_or(BoundaryError::Missing("geometry"))?,
                ),
                _ => Err(BoundaryError::UnsupportedGeometry(format!(
                    "FeatureCollection with {} features",
                    features.len()
                ))),
            }
        }
        _ => parse_polygon(&root),
    }
}

pub fn read_boundary(path: impl AsRef<Path>) -> Result<LakeBoundary, BoundaryError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| BoundaryError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_boundary(&text)
}

/// Byte mask on the template grid: 1 where the pixel center is inside the
/// boundary, 0 elsewhere. Boundary coordinates must be in the template's
/// CRS (lon/lat for satellite rasters).
///
/// Works row by row: edge crossings with the row's center line are sorted
/// once and each pixel's parity comes from a binary search, with an exact
/// on-edge check only for pixels next to an edge.
pub fn rasterize_mask(boundary: &LakeBoundary, template: &GeoRaster) -> GeoRaster {
    let (w, h) = (template.width(), template.height());
    let t = *template.transform();
    let mut mask = vec![0u8; w * h];
    let centers_x: Vec<f64> = (0..w).map(|c| t.pixel_to_world(c as f64, 0.0).0).collect();
    let mut xs = Vec::new();
    for row in 0..h {
        let y = t.pixel_to_world(0.0, row as f64).1;
        xs.clear();
        for ring in boundary.rings() {
            for e in ring.windows(2) {
                if let Some(xi) = crossing_x(e[0], e[1], y) {
                    xs.push(xi);
                }
            }
        }
        xs.sort_by(f64::total_cmp);
        let out = &mut mask[row * w..(row + 1) * w];
        for (col, &x) in centers_x.iter().enumerate() {
            let right_of = xs.len() - xs.partition_point(|&xi| xi <= x);
            if right_of % 2 == 1 {
                out[col] = 1;
            }
        }
        // exact on-edge pixels are inside regardless of parity
        for ring in boundary.rings() {
            for e in ring.windows(2) {
                let (a, b) = (e[0], e[1]);
                if y < a.1.min(b.1) || y > a.1.max(b.1) {
                    continue;
                }
                let (lo, hi) = if a.1 == b.1 {
                    (a.0.min(b.0), a.0.max(b.0))
                } else {
                    let x = a.0 + (b.0 - a.0) * (y - a.1) / (b.1 - a.1);
                    (x, x)
                };
                let c0 = t.world_to_pixel(lo, y).0.floor() as i64 - 1;
                let c1 = t.world_to_pixel(hi, y).0.ceil() as i64 + 1;
                for col in c0.max(0)..=c1.min(w as i64 - 1) {
                    let col = col as usize;
                    if out[col] == 0 && on_segment((centers_x[col], y), a, b) {
                        out[col] = 1;
                    }
                }
            }
        }
    }
    GeoRaster::from_u8(w, h, mask, t, template.crs()).expect("template grid is valid")
}

/// Convex hull by Andrew's monotone chain, counter-clockwise, without the
/// closing vertex. Collinear boundary points are dropped; duplicate inputs
/// collapse to one vertex.
pub fn convex_hull(points: &[Point]) -> Vec<Point> {
    let mut pts: Vec<Point> = points.to_vec();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    pts.dedup();
    if pts.len() <= 2 {
        return pts;
    }
    let mut hull: Vec<Point> = Vec::with_capacity(2 * pts.len());
    for &p in &pts {
        while hull.len() >= 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
            hull.pop();
        }
        hull.push(p);
    }
    let lower_len = hull.len() + 1;
    for &p in pts.iter().rev().skip(1) {
        while hull.len() >= lower_len && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
            hull.pop();
        }
        hull.push(p);
    }
    hull.pop();
    hull
}

pub(crate) fn polygon_geometry(rings: &[Vec<Point>]) -> Value {
    json!({
        "type": "Polygon",
        "coordinates": rings
            .iter()
            .map(|r| r.iter().map(|&(x, y)| json!([x, y])).collect::<Vec<_>>())
            .collect::<Vec<_>>(),
    })
}

pub(crate) fn feature(geometry: Value, properties: Map<String, Value>) -> Value {
    json!({ "type": "Feature", "properties": Value::Object(properties), "geometry": geometry })
}

pub(crate) fn feature_collection(features: Vec<Value>) -> Value {
    json!({ "type": "FeatureCollection", "features": features })
}
