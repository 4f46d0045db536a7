//! Areas of interest from the SAV index: intensity classes by 1-D k-means
//! over the value histogram, then spatial k-means over the medium and high
//! density pixels.

use std::collections::BTreeMap;
use std::path::Path;

use log::info;
use serde_json::{json, Map, Value};
use thiserror::Error;

use crate::geo::{AffineTransform, Crs, GeoRaster, LocalProjection, RasterError};
use crate::kmeans::{kmeans, KMeansConfig, KMeansError};
use crate::spectral::SavIndexRaster;
use crate::vector::{convex_hull, feature, feature_collection, polygon_geometry};

#[derive(Debug, Error)]
pub enum AoiError {
    #[error("only {distinct} distinct index values for k = {k}; use a smaller k")]
    TooFewValues { distinct: usize, k: usize },
    #[error("intensity clustering needs k >= 3 to separate medium/high from shore, got {0}")]
    TooFewClasses(usize),
    #[error(transparent)]
    KMeans(#[from] KMeansError),
    #[error(transparent)]
    Raster(#[from] RasterError),
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("AOI GeoJSON: {0}")]
    Format(String),
}

/// Density class labels for the default five-class split.
pub const CLASS_NAMES: [&str; 5] = ["none", "low", "medium", "high", "shore"];

/// Per-pixel intensity classes, labels `1..=k` in ascending centroid order
/// and 0 for nodata.
#[derive(Debug, Clone)]
pub struct IntensityClassMap {
    pub classes: GeoRaster,
    pub centroids: Vec<f64>,
    pub inertia: f64,
}

impl IntensityClassMap {
    pub fn k(&self) -> usize {
        self.centroids.len()
    }

    /// Labels treated as medium and high density: the two just below the
    /// top (shore) class.
    pub fn medium_high_labels(&self) -> (u8, u8) {
        let k = self.k() as u8;
        (k - 2, k - 1)
    }
}

/// Clusters the scaled index values into `cfg.k` intensity classes.
///
/// The clustering runs on the histogram of scaled values (each distinct value
/// weighted by its pixel count), which yields the same fixpoint as clustering
/// every pixel. Centroids are sorted ascending and pixels take the label of
/// the nearest centroid, ties to the lower label.
pub fn classify_intensity(
    index: &SavIndexRaster,
    cfg: &KMeansConfig,
) -> Result<IntensityClassMap, AoiError> {
    let mut histogram = [0u64; 256];
    for i in 0..index.len() {
        if let Some(v) = index.scaled_at(i) {
            histogram[v as usize] += 1;
        }
    }
    let values: Vec<[f64; 1]> = (0..256)
        .filter(|&v| histogram[v] > 0)
        .map(|v| [v as f64])
        .collect();
    if values.len() < cfg.k {
        return Err(AoiError::TooFewValues {
            distinct: values.len(),
            k: cfg.k,
        });
    }
    let weights: Vec<f64> = values.iter().map(|v| histogram[v[0] as usize] as f64).collect();
    let result = kmeans(&values, Some(&weights), cfg)?;
    let mut centroids: Vec<f64> = result.centroids.iter().map(|c| c[0]).collect();
    centroids.sort_by(f64::total_cmp);

    let mut lut = [0u8; 256];
    for (v, slot) in lut.iter_mut().enumerate() {
        let mut best = 0;
        for (j, c) in centroids.iter().enumerate().skip(1) {
            if (v as f64 - c).abs() < (v as f64 - centroids[best]).abs() {
                best = j;
            }
        }
        *slot = best as u8 + 1;
    }
    let labels: Vec<u8> = (0..index.len())
        .map(|i| index.scaled_at(i).map_or(0, |v| lut[v as usize]))
        .collect();
    let grid = &index.raw;
    let classes = GeoRaster::from_u8(grid.width(), grid.height(), labels, *grid.transform(), grid.crs())?;
    Ok(IntensityClassMap {
        classes,
        centroids,
        inertia: result.inertia,
    })
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ClassCounts {
    pub medium: usize,
    pub high: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AreaOfInterest {
    /// 1-based, ordered by descending member count.
    pub id: usize,
    pub centroid_lonlat: (f64, f64),
    pub member_pixels: Vec<(usize, usize)>,
    /// Closed lon/lat ring around the member pixel footprints.
    pub hull_lonlat: Vec<(f64, f64)>,
    pub area_m2: f64,
    pub class_counts: ClassCounts,
    /// Transform of the class raster the member pixels index into.
    pub grid: AffineTransform,
}

impl AreaOfInterest {
    pub fn member_count(&self) -> usize {
        self.member_pixels.len()
    }

    /// Member pixel centers in lon/lat.
    pub fn member_centers(&self) -> Vec<(f64, f64)> {
        self.member_pixels
            .iter()
            .map(|&(c, r)| self.grid.pixel_to_world(c as f64, r as f64))
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct AoiExtraction {
    pub aois: Vec<AreaOfInterest>,
    pub selected_pixels: usize,
    pub requested_k: usize,
    pub used_k: usize,
    pub empty_clusters: usize,
    pub below_min_members: usize,
}

fn pixel_area_m2(grid: &AffineTransform, crs: Crs, proj: &LocalProjection) -> f64 {
    match crs {
        Crs::Geographic => {
            let (mx, my) = proj.meters_per_degree();
            grid.pixel_width * mx * grid.pixel_height * my
        }
        Crs::LocalMetric => grid.pixel_width * grid.pixel_height,
    }
}

/// Spatially clusters medium/high pixels into areas of interest.
///
/// Pixel centers are projected into `proj`'s metric frame before clustering.
/// Empty clusters are dropped, as are clusters smaller than `min_members`.
pub fn extract_aois(
    classes: &IntensityClassMap,
    proj: &LocalProjection,
    cfg: &KMeansConfig,
    min_members: usize,
) -> Result<AoiExtraction, AoiError> {
    if classes.k() < 3 {
        return Err(AoiError::TooFewClasses(classes.k()));
    }
    let (medium, high) = classes.medium_high_labels();
    let raster = &classes.classes;
    let grid = *raster.transform();
    let crs = raster.crs();
    let labels = raster.as_u8().expect("class map is bytes");
    let to_local = |x: f64, y: f64| -> (f64, f64) {
        match crs {
            Crs::Geographic => proj.forward_unchecked(x, y),
            Crs::LocalMetric => (x, y),
        }
    };
    let to_lonlat = |x: f64, y: f64| -> (f64, f64) {
        match crs {
            Crs::Geographic => proj.inverse(x, y),
            Crs::LocalMetric => (x, y),
        }
    };

    let mut pixels = Vec::new();
    let mut points = Vec::new();
    for row in 0..raster.height() {
        for col in 0..raster.width() {
            let label = labels[row * raster.width() + col];
            if label == medium || label == high {
                let (x, y) = raster.pixel_center(col, row);
                let (lx, ly) = to_local(x, y);
                pixels.push((col, row, label));
                points.push([lx, ly]);
            }
        }
    }
    if points.is_empty() {
        return Ok(AoiExtraction {
            aois: Vec::new(),
            selected_pixels: 0,
            requested_k: cfg.k,
            used_k: 0,
            empty_clusters: 0,
            below_min_members: 0,
        });
    }

    let result = kmeans(&points, None, cfg)?;
    if result.k_reduced() {
        info!("AOI clustering: k reduced from {} to {}", cfg.k, result.k());
    }
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); result.k()];
    for (i, &c) in result.assignment.iter().enumerate() {
        members[c].push(i);
    }
    let empty_clusters = members.iter().filter(|m| m.is_empty()).count();
    let pixel_area = pixel_area_m2(&grid, crs, proj);

    let mut aois = Vec::new();
    let mut below_min_members = 0;
    for group in members.iter().filter(|m| !m.is_empty()) {
        if group.len() < min_members.max(1) {
            below_min_members += 1;
            continue;
        }
        let n = group.len() as f64;
        let (sx, sy) = group
            .iter()
            .fold((0.0, 0.0), |(sx, sy), &i| (sx + points[i][0], sy + points[i][1]));
        let centroid_lonlat = to_lonlat(sx / n, sy / n);

        let mut corners = Vec::with_capacity(group.len() * 4);
        let mut counts = ClassCounts::default();
        for &i in group {
            let (col, row, label) = pixels[i];
            if label == medium {
                counts.medium += 1;
            } else {
                counts.high += 1;
            }
            for (dc, dr) in [(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)] {
                let (x, y) = grid.pixel_corner(col as f64 + dc, row as f64 + dr);
                corners.push(to_local(x, y));
            }
        }
        let mut hull: Vec<(f64, f64)> = convex_hull(&corners)
            .into_iter()
            .map(|(x, y)| to_lonlat(x, y))
            .collect();
        hull.push(hull[0]);

        aois.push(AreaOfInterest {
            id: 0,
            centroid_lonlat,
            member_pixels: group.iter().map(|&i| (pixels[i].0, pixels[i].1)).collect(),
            hull_lonlat: hull,
            area_m2: n * pixel_area,
            class_counts: counts,
            grid,
        });
    }
    // stable: equal sizes keep cluster order
    aois.sort_by_key(|a| std::cmp::Reverse(a.member_count()));
    for (i, aoi) in aois.iter_mut().enumerate() {
        aoi.id = i + 1;
    }
    Ok(AoiExtraction {
        aois,
        selected_pixels: points.len(),
        requested_k: cfg.k,
        used_k: result.k(),
        empty_clusters,
        below_min_members,
    })
}

pub fn aois_to_geojson(aois: &[AreaOfInterest]) -> Value {
    let features = aois
        .iter()
        .map(|a| {
            let mut props = Map::new();
            props.insert("id".into(), json!(a.id));
            props.insert("centroid".into(), json!([a.centroid_lonlat.0, a.centroid_lonlat.1]));
            props.insert("area_m2".into(), json!(a.area_m2));
            props.insert("member_count".into(), json!(a.member_count()));
            props.insert(
                "class_counts".into(),
                json!({ "medium": a.class_counts.medium, "high": a.class_counts.high }),
            );
            props.insert(
                "grid".into(),
                json!([a.grid.origin_x, a.grid.origin_y, a.grid.pixel_width, a.grid.pixel_height]),
            );
            props.insert(
                "member_pixels".into(),
                json!(a.member_pixels.iter().map(|&(c, r)| [c, r]).collect::<Vec<_>>()),
            );
            feature(polygon_geometry(std::slice::from_ref(&a.hull_lonlat)), props)
        })
        .collect();
    feature_collection(features)
}

pub fn export_aois(aois: &[AreaOfInterest], path: impl AsRef<Path>) -> Result<(), AoiError> {
    let path = path.as_ref();
    let text = serde_json::to_string_pretty(&aois_to_geojson(aois)).expect("JSON values serialize");
    std::fs::write(path, text + "\n").map_err(|source| AoiError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn pair(v: &Value) -> Option<(f64, f64)> {
    let a = v.as_array()?;
    Some((a.first()?.as_f64()?, a.get(1)?.as_f64()?))
}

pub fn parse_aois(text: &str) -> Result<Vec<AreaOfInterest>, AoiError> {
    let bad = |what: &str| AoiError::Format(what.to_string());
    let root: Value = serde_json::from_str(text).map_err(|e| AoiError::Format(e.to_string()))?;
    let features = root
        .get("features")
        .and_then(Value::as_array)
        .ok_or_else(|| bad("missing features"))?;
    features
        .iter()
        .map(|f| {
            let props = f.get("properties").ok_or_else(|| bad("missing properties"))?;
            let num = |k: &str| props.get(k).and_then(Value::as_f64).ok_or_else(|| bad(k));
            let grid = props
                .get("grid")
                .and_then(Value::as_array)
                .filter(|g| g.len() == 4)
                .ok_or_else(|| bad("grid"))?;
            let g: Vec<f64> = grid.iter().filter_map(Value::as_f64).collect();
            if g.len() != 4 {
                return Err(bad("grid"));
            }
            let grid = AffineTransform::new(g[0], g[1], g[2], g[3]).map_err(|e| AoiError::Format(e.to_string()))?;
            let member_pixels = props
                .get("member_pixels")
                .and_then(Value::as_array)
                .ok_or_else(|| bad("member_pixels"))?
                .iter()
                .map(|p| {
                    let a = p.as_array()?;
                    Some((a.first()?.as_u64()? as usize, a.get(1)?.as_u64()? as usize))
                })
                .collect::<Option<Vec<_>>>()
                .ok_or_else(|| bad("member_pixels"))?;
            let counts = props.get("class_counts").ok_or_else(|| bad("class_counts"))?;
            let count = |k: &str| counts.get(k).and_then(Value::as_u64).map(|v| v as usize).ok_or_else(|| bad(k));
            let hull = f
                .pointer("/geometry/coordinates/0")
                .and_then(Value::as_array)
                .ok_or_else(|| bad("geometry"))?
                .iter()
                .map(pair)
                .collect::<Option<Vec<_>>>()
                .ok_or_else(|| bad("geometry"))?;
            Ok(AreaOfInterest {
                id: num("id")? as usize,
                centroid_lonlat: props.get("centroid").and_then(pair).ok_or_else(|| bad("centroid"))?,
                member_pixels,
                hull_lonlat: hull,
                area_m2: num("area_m2")?,
                class_counts: ClassCounts {
                    medium: count("medium")?,
                    high: count("high")?,
                },
                grid,
            })
        })
        .collect()
}

pub fn read_aois(path: impl AsRef<Path>) -> Result<Vec<AreaOfInterest>, AoiError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| AoiError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_aois(&text)
}

/// Pixel counts per label, for summaries.
pub fn class_histogram(classes: &IntensityClassMap) -> BTreeMap<u8, usize> {
    let mut out = BTreeMap::new();
    for &l in classes.classes.as_u8().expect("class map is bytes") {
        if l != 0 {
            *out.entry(l).or_insert(0) += 1;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geo::AffineTransform;

    fn index_from_scaled(width: usize, height: usize, scaled: &[Option<u8>]) -> SavIndexRaster {
        let t = AffineTransform::new(9.74, 52.35, 0.0001, 0.0001).unwrap();
        // raw chosen so that scale_to_byte(raw) == scaled
        let raw: Vec<f32> = scaled
            .iter()
            .map(|s| s.map_or(f32::NAN, |v| (v as f64 * 2.0 / 255.0 - 1.0) as f32))
            .collect();
        let raw = GeoRaster::from_f32(width, height, raw, t, Crs::Geographic).unwrap();
        let idx = SavIndexRaster::from_raw(raw).unwrap();
        for (i, s) in scaled.iter().enumerate() {
            assert_eq!(idx.scaled_at(i), *s);
        }
        idx
    }

    #[test]
    fn five_distinct_values_become_five_classes() {
        let scaled: Vec<Option<u8>> = [10u8, 60, 128, 200, 250, 10, 60, 128]
            .iter()
            .map(|&v| Some(v))
            .chain([None])
            .collect();
        let idx = index_from_scaled(9, 1, &scaled);
        let map = classify_intensity(&idx, &KMeansConfig::new(5, 3)).unwrap();
        assert_eq!(map.centroids, vec![10.0, 60.0, 128.0, 200.0, 250.0]);
        assert_eq!(map.inertia, 0.0);
        assert_eq!(map.classes.as_u8().unwrap(), &[1, 2, 3, 4, 5, 1, 2, 3, 0]);
    }

    #[test]
    fn too_few_values() {
        let idx = index_from_scaled(3, 1, &[Some(1), Some(2), Some(2)]);
        let err = classify_intensity(&idx, &KMeansConfig::new(5, 0)).unwrap_err();
        assert!(err.to_string().contains("smaller k"));
    }

    fn class_map(width: usize, height: usize, labels: Vec<u8>) -> IntensityClassMap {
        let t = AffineTransform::new(9.74, 52.35, 0.0001, 0.0001).unwrap();
        IntensityClassMap {
            classes: GeoRaster::from_u8(width, height, labels, t, Crs::Geographic).unwrap(),
            centroids: vec![128.0, 140.0, 160.0, 180.0, 220.0],
            inertia: 0.0,
        }
    }

    #[test]
    fn single_medium_pixel() {
        let mut labels = vec![1u8; 25];
        labels[12] = 3;
        let map = class_map(5, 5, labels);
        let proj = LocalProjection::new(9.7402, 52.3498).unwrap();
        let out = extract_aois(&map, &proj, &KMeansConfig::new(15, 1), 1).unwrap();
        assert_eq!(out.aois.len(), 1);
        assert_eq!(out.used_k, 1);
        let aoi = &out.aois[0];
        assert_eq!(aoi.member_pixels, vec![(2, 2)]);
        assert_eq!(aoi.class_counts, ClassCounts { medium: 1, high: 0 });
        let center = map.classes.pixel_center(2, 2);
        assert!((aoi.centroid_lonlat.0 - center.0).abs() < 1e-9);
        assert!((aoi.centroid_lonlat.1 - center.1).abs() < 1e-9);
        assert_eq!(aoi.hull_lonlat.len(), 5);
    }

    #[test]
    fn no_selected_pixels() {
        let map = class_map(3, 3, vec![1, 2, 5, 0, 1, 2, 5, 5, 1]);
        let proj = LocalProjection::new(9.74, 52.35).unwrap();
        let out = extract_aois(&map, &proj, &KMeansConfig::new(15, 1), 1).unwrap();
        assert!(out.aois.is_empty());
    }

    #[test]
    fn geojson_round_trip() {
        let mut labels = vec![1u8; 100];
        for i in [11, 12, 21, 22, 77, 78] {
            labels[i] = if i < 50 { 3 } else { 4 };
        }
        let map = class_map(10, 10, labels);
        let proj = LocalProjection::new(9.7405, 52.3495).unwrap();
        let out = extract_aois(&map, &proj, &KMeansConfig::new(2, 5), 1).unwrap();
        assert_eq!(out.aois.len(), 2);
        let text = aois_to_geojson(&out.aois).to_string();
        assert_eq!(parse_aois(&text).unwrap(), out.aois);
    }
}
