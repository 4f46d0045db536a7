//! Lawnmower survey plans over areas of interest and before/after harvest
//! comparison of span rasters.

use std::path::Path;

use serde::Serialize;
use serde_json::{json, Map, Value};
use thiserror::Error;

use crate::aoi::AreaOfInterest;
use crate::geo::{Crs, GeoRaster, LocalProjection};
use crate::vector::{feature, feature_collection, LakeBoundary, Point};

/// 3 knots in meters per second.
pub const DEFAULT_SURVEY_SPEED_MPS: f64 = 3.0 * 1852.0 / 3600.0;

#[derive(Debug, Error)]
pub enum MissionError {
    #[error("depth must be positive and finite, got {0}")]
    BadDepth(f64),
    #[error("aperture must lie in (0, 180) degrees, got {0}")]
    BadAperture(f64),
    #[error("overlap fraction must lie in [0, 1), got {0}")]
    BadOverlap(f64),
    #[error("survey speed must be positive, got {0}")]
    BadSpeed(f64),
    #[error("AOI {0} has no member pixels")]
    EmptyAoi(usize),
    #[error("no comparable cells")]
    NoComparableCells,
    #[error("span rasters use different coordinate systems ({before:?} vs {after:?})")]
    CrsMismatch { before: Crs, after: Crs },
    #[error("geographic span rasters need a projection for region tests")]
    NeedsProjection,
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("plan GeoJSON: {0}")]
    Format(String),
}

/// Across-track coverage of one ping on a flat bottom.
pub fn swath_width(depth_m: f64, aperture_deg: f64) -> Result<f64, MissionError> {
    if !(depth_m > 0.0 && depth_m.is_finite()) {
        return Err(MissionError::BadDepth(depth_m));
    }
    if !(aperture_deg > 0.0 && aperture_deg < 180.0) {
        return Err(MissionError::BadAperture(aperture_deg));
    }
    Ok(2.0 * depth_m * (aperture_deg.to_radians() / 2.0).tan())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PlanConfig {
    pub nominal_depth_m: f64,
    pub aperture_deg: f64,
    pub overlap_frac: f64,
    pub survey_speed_mps: f64,
}

impl Default for PlanConfig {
    fn default() -> Self {
        Self {
            nominal_depth_m: 2.5,
            aperture_deg: 150.0,
            overlap_frac: 0.1,
            survey_speed_mps: DEFAULT_SURVEY_SPEED_MPS,
        }
    }
}

impl PlanConfig {
    pub fn line_spacing(&self) -> Result<f64, MissionError> {
        if !(0.0..1.0).contains(&self.overlap_frac) {
            return Err(MissionError::BadOverlap(self.overlap_frac));
        }
        if !(self.survey_speed_mps > 0.0 && self.survey_speed_mps.is_finite()) {
            return Err(MissionError::BadSpeed(self.survey_speed_mps));
        }
        Ok(swath_width(self.nominal_depth_m, self.aperture_deg)? * (1.0 - self.overlap_frac))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Leg {
    pub start: Point,
    pub end: Point,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SurveyPlan {
    pub aoi_id: usize,
    /// Legs in execution order, lon/lat.
    pub legs: Vec<Leg>,
    pub line_spacing_m: f64,
    /// Leg lengths plus the connecting transits.
    pub total_length_m: f64,
    pub est_duration_s: f64,
    pub survey_speed_mps: f64,
    /// Single-pixel AOI: one zero-length leg at the pixel center.
    pub degenerate: bool,
}

fn dist(a: Point, b: Point) -> f64 {
    (a.0 - b.0).hypot(a.1 - b.1)
}

/// Unit vector along the major principal axis of `points`, east on ties.
pub fn principal_axis(points: &[Point]) -> Point {
    let n = points.len() as f64;
    if points.len() < 2 {
        return (1.0, 0.0);
    }
    let (mx, my) = points.iter().fold((0.0, 0.0), |(sx, sy), p| (sx + p.0, sy + p.1));
    let (mx, my) = (mx / n, my / n);
    let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
    for p in points {
        let (dx, dy) = (p.0 - mx, p.1 - my);
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    let gap = ((sxx - syy).powi(2) + 4.0 * sxy * sxy).sqrt();
    let scale = (sxx + syy).max(f64::MIN_POSITIVE);
    if gap <= 1e-9 * scale {
        return (1.0, 0.0);
    }
    let theta = 0.5 * (2.0 * sxy).atan2(sxx - syy);
    (theta.cos(), theta.sin())
}

/// Extent along `u` of the part of polygon `ring` (in `(u, v)` coordinates)
/// whose `v` lies within `[lo, hi]`.
fn strip_extent(ring: &[Point], lo: f64, hi: f64) -> Option<(f64, f64)> {
    let mut extent: Option<(f64, f64)> = None;
    let mut take = |u: f64| {
        extent = Some(match extent {
            Some((a, b)) => (a.min(u), b.max(u)),
            None => (u, u),
        });
    };
    let n = ring.len();
    for i in 0..n {
        let (p, q) = (ring[i], ring[(i + 1) % n]);
        let dv = q.1 - p.1;
        let (mut t0, mut t1) = (0.0f64, 1.0f64);
        if dv == 0.0 {
            if p.1 < lo || p.1 > hi {
                continue;
            }
        } else {
            let (a, b) = ((lo - p.1) / dv, (hi - p.1) / dv);
            t0 = t0.max(a.min(b));
            t1 = t1.min(a.max(b));
            if t0 > t1 {
                continue;
            }
        }
        take(p.0 + t0 * (q.0 - p.0));
        take(p.0 + t1 * (q.0 - p.0));
    }
    extent
}

/// Parallel legs over a polygon in a metric frame.
///
/// Lines run along `axis` and are spaced `spacing` apart, centered over the
/// polygon's across-axis extent. Each leg spans the polygon's along-axis
/// extent within its own band of width `spacing`, so every polygon point is
/// within `spacing / 2` of a leg. Legs are returned in boustrophedon order,
/// each starting at the end nearest the previous leg's finish.
pub fn plan_lines(ring: &[Point], axis: Point, spacing: f64) -> Vec<(Point, Point)> {
    let (ux, uy) = axis;
    let (vx, vy) = (-uy, ux);
    let uv: Vec<Point> = ring.iter().map(|p| (p.0 * ux + p.1 * uy, p.0 * vx + p.1 * vy)).collect();
    if uv.is_empty() {
        return Vec::new();
    }
    let (vmin, vmax) = uv
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| (a.min(p.1), b.max(p.1)));
    let n = (((vmax - vmin) / spacing).ceil() as usize).max(1);
    let center = 0.5 * (vmin + vmax);
    let to_xy = |u: f64, v: f64| (u * ux + v * vx, u * uy + v * vy);

    let mut legs: Vec<(Point, Point)> = Vec::with_capacity(n);
    for i in 0..n {
        let v = center + (i as f64 - (n as f64 - 1.0) / 2.0) * spacing;
        let Some((u0, u1)) = strip_extent(&uv, v - spacing / 2.0, v + spacing / 2.0) else {
            continue;
        };
        let (a, b) = (to_xy(u0, v), to_xy(u1, v));
        let leg = match legs.last() {
            Some(&(_, prev)) if dist(prev, b) < dist(prev, a) => (b, a),
            _ => (a, b),
        };
        legs.push(leg);
    }
    legs
}

/// Plans a lawnmower survey over one AOI.
///
/// Legs follow the principal axis of the member pixel centers and are
/// clipped to the AOI hull. Line spacing is the swath width at the nominal
/// depth reduced by the overlap fraction.
pub fn plan_survey(
    aoi: &AreaOfInterest,
    proj: &LocalProjection,
    cfg: &PlanConfig,
) -> Result<SurveyPlan, MissionError> {
    let spacing = cfg.line_spacing()?;
    let centers: Vec<Point> = aoi
        .member_centers()
        .into_iter()
        .map(|(lon, lat)| proj.forward_unchecked(lon, lat))
        .collect();
    let (local_legs, degenerate) = match centers.len() {
        0 => return Err(MissionError::EmptyAoi(aoi.id)),
        1 => (vec![(centers[0], centers[0])], true),
        _ => {
            let mut ring: Vec<Point> = aoi
                .hull_lonlat
                .iter()
                .map(|&(lon, lat)| proj.forward_unchecked(lon, lat))
                .collect();
            if ring.len() > 1 && ring.first() == ring.last() {
                ring.pop();
            }
            (plan_lines(&ring, principal_axis(&centers), spacing), false)
        }
    };

    let mut total = 0.0;
    for (i, leg) in local_legs.iter().enumerate() {
        total += dist(leg.0, leg.1);
        if i > 0 {
            total += dist(local_legs[i - 1].1, leg.0);
        }
    }
    let legs = local_legs
        .iter()
        .map(|&(a, b)| Leg {
            start: proj.inverse(a.0, a.1),
            end: proj.inverse(b.0, b.1),
        })
        .collect();
    Ok(SurveyPlan {
        aoi_id: aoi.id,
        legs,
        line_spacing_m: spacing,
        total_length_m: total,
        est_duration_s: total / cfg.survey_speed_mps,
        survey_speed_mps: cfg.survey_speed_mps,
        degenerate,
    })
}

/// One LineString feature per plan, tracing every leg in order.
pub fn plans_to_geojson(plans: &[SurveyPlan]) -> Value {
    let features = plans
        .iter()
        .map(|p| {
            let coords: Vec<Value> = p
                .legs
                .iter()
                .flat_map(|l| [json!([l.start.0, l.start.1]), json!([l.end.0, l.end.1])])
                .collect();
            let mut props = Map::new();
            props.insert("aoi_id".into(), json!(p.aoi_id));
            props.insert("spacing_m".into(), json!(p.line_spacing_m));
            props.insert("total_length_m".into(), json!(p.total_length_m));
            props.insert("est_duration_s".into(), json!(p.est_duration_s));
            props.insert("survey_speed_mps".into(), json!(p.survey_speed_mps));
            props.insert("leg_count".into(), json!(p.legs.len()));
            props.insert("degenerate".into(), json!(p.degenerate));
            feature(json!({"type": "LineString", "coordinates": coords}), props)
        })
        .collect();
    feature_collection(features)
}

pub fn export_plans(plans: &[SurveyPlan], path: impl AsRef<Path>) -> Result<(), MissionError> {
    let path = path.as_ref();
    let text = serde_json::to_string_pretty(&plans_to_geojson(plans)).expect("plain JSON values");
    std::fs::write(path, text).map_err(|source| MissionError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn parse_plans(text: &str) -> Result<Vec<SurveyPlan>, MissionError> {
    let bad = |what: &str| MissionError::Format(what.to_string());
    let root: Value = serde_json::from_str(text).map_err(|e| MissionError::Format(e.to_string()))?;
    let features = root
        .get("features")
        .and_then(Value::as_array)
        .ok_or_else(|| bad("missing features"))?;
    features
        .iter()
        .map(|f| {
            let props = f.get("properties").ok_or_else(|| bad("missing properties"))?;
            let num = |k: &str| props.get(k).and_then(Value::as_f64).ok_or_else(|| bad(k));
            let coords = f
                .pointer("/geometry/coordinates")
                .and_then(Value::as_array)
                .ok_or_else(|| bad("geometry"))?
                .iter()
                .map(|c| {
                    let a = c.as_array()?;
                    Some((a.first()?.as_f64()?, a.get(1)?.as_f64()?))
                })
                .collect::<Option<Vec<Point>>>()
                .ok_or_else(|| bad("coordinates"))?;
            if coords.len() % 2 != 0 || coords.is_empty() {
                return Err(bad("leg coordinates must come in start/end pairs"));
            }
            Ok(SurveyPlan {
                aoi_id: num("aoi_id")? as usize,
                legs: coords.chunks(2).map(|c| Leg { start: c[0], end: c[1] }).collect(),
                line_spacing_m: num("spacing_m")?,
                total_length_m: num("total_length_m")?,
                est_duration_s: num("est_duration_s")?,
                survey_speed_mps: num("survey_speed_mps")?,
                degenerate: props.get("degenerate").and_then(Value::as_bool).unwrap_or(false),
            })
        })
        .collect()
}

pub fn read_plans(path: impl AsRef<Path>) -> Result<Vec<SurveyPlan>, MissionError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| MissionError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_plans(&text)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HarvestReport {
    pub mean_diff_m: f64,
    pub median_diff_m: f64,
    pub stddev_m: f64,
    pub valid_cell_count: usize,
    pub compared_area_m2: f64,
}

/// Region filter for [`harvest_diff`]. The projection maps local metric
/// cell centers back to lon/lat.
#[derive(Debug, Clone, Copy)]
pub struct Region<'a> {
    pub boundary: &'a LakeBoundary,
    pub proj: Option<&'a LocalProjection>,
}

/// `before − after` over cells valid in both rasters.
///
/// `after` is sampled at each `before` cell center by nearest neighbor, so
/// the grids need not align.
pub fn harvest_diff(
    before: &GeoRaster,
    after: &GeoRaster,
    region: Option<Region<'_>>,
) -> Result<HarvestReport, MissionError> {
    if before.crs() != after.crs() {
        return Err(MissionError::CrsMismatch {
            before: before.crs(),
            after: after.crs(),
        });
    }
    if let Some(r) = region {
        if before.crs() == Crs::LocalMetric && r.proj.is_none() {
            return Err(MissionError::NeedsProjection);
        }
    }
    let t_after = after.transform();
    let t = before.transform();
    let mut diffs = Vec::new();
    let mut area = 0.0;
    for row in 0..before.height() {
        for col in 0..before.width() {
            let Some(b) = before.get(col, row) else {
                continue;
            };
            let (x, y) = before.pixel_center(col, row);
            let (ac, ar) = t_after.world_to_cell(x, y);
            if ac < 0 || ar < 0 {
                continue;
            }
            let Some(a) = after.get(ac as usize, ar as usize) else {
                continue;
            };
            let (lon, lat) = match (before.crs(), region.and_then(|r| r.proj)) {
                (Crs::LocalMetric, Some(p)) => p.inverse(x, y),
                _ => (x, y),
            };
            if let Some(r) = region {
                if !r.boundary.contains(lon, lat) {
                    continue;
                }
            }
            diffs.push(b - a);
            area += match before.crs() {
                Crs::LocalMetric => t.pixel_width * t.pixel_height,
                Crs::Geographic => {
                    let m = std::f64::consts::PI / 180.0 * crate::geo::EARTH_RADIUS_M;
                    t.pixel_width * m * lat.to_radians().cos() * t.pixel_height * m
                }
            };
        }
    }
    if diffs.is_empty() {
        return Err(MissionError::NoComparableCells);
    }
    let n = diffs.len() as f64;
    let mean = diffs.iter().sum::<f64>() / n;
    let var = diffs.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / n;
    let mut sorted = diffs.clone();
    sorted.sort_by(f64::total_cmp);
    let mid = sorted.len() / 2;
    let median = if sorted.len() % 2 == 1 {
        sorted[mid]
    } else {
        0.5 * (sorted[mid - 1] + sorted[mid])
    };
    Ok(HarvestReport {
        mean_diff_m: mean,
        median_diff_m: median,
        stddev_m: var.sqrt(),
        valid_cell_count: diffs.len(),
        compared_area_m2: area,
    })
}
