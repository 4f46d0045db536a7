use std::collections::HashMap;

use serde::Serialize;

use super::soundings::Sounding;
use super::SonarError;
use crate::geo::{AffineTransform, Crs, GeoRaster, LocalProjection};

/// Inclusive depth window in meters below the surface.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GateConfig {
    upper_m: f64,
    lower_m: f64,
}

impl GateConfig {
    pub fn new(upper_m: f64, lower_m: f64) -> Result<Self, SonarError> {
        if !(upper_m > 0.0 && upper_m < lower_m && lower_m.is_finite()) {
            return Err(SonarError::BadGates {
                upper: upper_m,
                lower: lower_m,
            });
        }
        Ok(Self { upper_m, lower_m })
    }

    pub fn upper_m(&self) -> f64 {
        self.upper_m
    }

    pub fn lower_m(&self) -> f64 {
        self.lower_m
    }

    pub fn admits(&self, depth_m: f64) -> bool {
        depth_m >= self.upper_m && depth_m <= self.lower_m
    }
}

impl Default for GateConfig {
    fn default() -> Self {
        Self {
            upper_m: 1.0,
            lower_m: 5.0,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct GateCounts {
    pub kept: usize,
    pub dropped_above: usize,
    pub dropped_below: usize,
}

pub fn gate_filter(soundings: &[Sounding], gates: &GateConfig) -> (Vec<Sounding>, GateCounts) {
    let mut counts = GateCounts::default();
    let mut kept = Vec::with_capacity(soundings.len());
    for s in soundings {
        if s.depth_m < gates.upper_m {
            counts.dropped_above += 1;
        } else if s.depth_m > gates.lower_m {
            counts.dropped_below += 1;
        } else {
            kept.push(*s);
        }
    }
    counts.kept = kept.len();
    (kept, counts)
}

/// Min/max/count/intensity-sum reducer for one grid cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellStats {
    pub d_top: f64,
    pub d_bottom: f64,
    pub count: u64,
    pub intensity_sum: f64,
}

impl CellStats {
    fn single(depth: f64, intensity: f64) -> Self {
        Self {
            d_top: depth,
            d_bottom: depth,
            count: 1,
            intensity_sum: intensity,
        }
    }

    pub fn merge(&mut self, other: &CellStats) {
        self.d_top = self.d_top.min(other.d_top);
        self.d_bottom = self.d_bottom.max(other.d_bottom);
        self.count += other.count;
        self.intensity_sum += other.intensity_sum;
    }

    pub fn span(&self) -> f64 {
        self.d_bottom - self.d_top
    }

    pub fn mean_intensity_db(&self) -> f64 {
        self.intensity_sum / self.count as f64
    }
}

/// Sparse per-cell accumulator. Accumulators over disjoint sounding subsets
/// merge into the same grid regardless of order.
#[derive(Debug, Clone)]
pub struct SpanAccumulator {
    proj: LocalProjection,
    resolution_m: f64,
    cells: HashMap<(i64, i64), CellStats>,
}

impl SpanAccumulator {
    pub fn new(proj: LocalProjection, resolution_m: f64) -> Result<Self, SonarError> {
        if !(resolution_m > 0.0 && resolution_m.is_finite()) {
            return Err(SonarError::BadResolution(resolution_m));
        }
        Ok(Self {
            proj,
            resolution_m,
            cells: HashMap::new(),
        })
    }

    /// Cell index `(floor(x / res), floor(y / res))` in the local frame.
    pub fn cell_of(&self, s: &Sounding) -> (i64, i64) {
        let (x, y) = self.proj.forward_unchecked(s.lon, s.lat);
        (
            (x / self.resolution_m).floor() as i64,
            (y / self.resolution_m).floor() as i64,
        )
    }

    pub fn insert(&mut self, s: &Sounding) {
        let key = self.cell_of(s);
        let stats = CellStats::single(s.depth_m, s.intensity_db);
        self.cells
            .entry(key)
            .and_modify(|c| c.merge(&stats))
            .or_insert(stats);
    }

    pub fn extend<'a>(&mut self, soundings: impl IntoIterator<Item = &'a Sounding>) {
        for s in soundings {
            self.insert(s);
        }
    }

    pub fn merge(&mut self, other: &SpanAccumulator) {
        for (key, stats) in &other.cells {
            self.cells
                .entry(*key)
                .and_modify(|c| c.merge(stats))
                .or_insert(*stats);
        }
    }

    pub fn finish(self) -> Result<SpanGrid, SonarError> {
        if self.cells.is_empty() {
            return Err(SonarError::NoSoundings);
        }
        let (mut x0, mut y0, mut x1, mut y1) = (i64::MAX, i64::MAX, i64::MIN, i64::MIN);
        for &(ix, iy) in self.cells.keys() {
            x0 = x0.min(ix);
            x1 = x1.max(ix);
            y0 = y0.min(iy);
            y1 = y1.max(iy);
        }
        let width = (x1 - x0 + 1) as usize;
        let height = (y1 - y0 + 1) as usize;
        let mut cells = vec![None; width * height];
        for ((ix, iy), stats) in self.cells {
            let col = (ix - x0) as usize;
            let row = (y1 - iy) as usize;
            cells[row * width + col] = Some(stats);
        }
        Ok(SpanGrid {
            resolution_m: self.resolution_m,
            proj: self.proj,
            min_cell_x: x0,
            max_cell_y: y1,
            width,
            height,
            cells,
        })
    }
}

/// Dense grid over the tight bounding box of occupied cells, north-up.
#[derive(Debug, Clone, PartialEq)]
pub struct SpanGrid {
    resolution_m: f64,
    proj: LocalProjection,
    min_cell_x: i64,
    max_cell_y: i64,
    width: usize,
    height: usize,
    cells: Vec<Option<CellStats>>,
}

impl SpanGrid {
    pub fn resolution_m(&self) -> f64 {
        self.resolution_m
    }

    pub fn projection(&self) -> &LocalProjection {
        &self.proj
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn transform(&self) -> AffineTransform {
        AffineTransform::new(
            self.min_cell_x as f64 * self.resolution_m,
            (self.max_cell_y + 1) as f64 * self.resolution_m,
            self.resolution_m,
            self.resolution_m,
        )
        .expect("resolution is positive")
    }

    /// Stats at raster position `(col, row)`.
    pub fn cell(&self, col: usize, row: usize) -> Option<&CellStats> {
        if col >= self.width || row >= self.height {
            return None;
        }
        self.cells[row * self.width + col].as_ref()
    }

    /// Stats at local-frame cell index `(ix, iy)`.
    pub fn cell_at_index(&self, ix: i64, iy: i64) -> Option<&CellStats> {
        let col = ix - self.min_cell_x;
        let row = self.max_cell_y - iy;
        if col < 0 || row < 0 {
            return None;
        }
        self.cell(col as usize, row as usize)
    }

    /// Occupied cells as `(ix, iy, stats)`.
    pub fn occupied(&self) -> impl Iterator<Item = (i64, i64, &CellStats)> + '_ {
        self.cells.iter().enumerate().filter_map(move |(i, c)| {
            c.as_ref().map(|c| {
                let (col, row) = (i % self.width, i / self.width);
                (self.min_cell_x + col as i64, self.max_cell_y - row as i64, c)
            })
        })
    }

    pub fn occupied_count(&self) -> usize {
        self.cells.iter().filter(|c| c.is_some()).count()
    }

    pub fn sounding_count(&self) -> u64 {
        self.cells.iter().flatten().map(|c| c.count).sum()
    }

    fn layer(&self, f: impl Fn(&CellStats) -> f64) -> GeoRaster {
        let samples = self
            .cells
            .iter()
            .map(|c| c.as_ref().map_or(f32::NAN, |c| f(c) as f32))
            .collect();
        GeoRaster::from_f32(self.width, self.height, samples, self.transform(), Crs::LocalMetric)
            .expect("layer values are finite")
    }
}

pub fn build_span_grid(
    soundings: &[Sounding],
    proj: &LocalProjection,
    resolution_m: f64,
) -> Result<SpanGrid, SonarError> {
    let mut acc = SpanAccumulator::new(*proj, resolution_m)?;
    acc.extend(soundings);
    acc.finish()
}

/// Vegetation height: deepest minus shallowest return per cell.
pub fn span_layer(grid: &SpanGrid) -> GeoRaster {
    grid.layer(CellStats::span)
}

/// Deepest return per cell, taken as the lakebed.
pub fn bathy_layer(grid: &SpanGrid) -> GeoRaster {
    grid.layer(|c| c.d_bottom)
}

pub fn backscatter_layer(grid: &SpanGrid) -> GeoRaster {
    grid.layer(CellStats::mean_intensity_db)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HardTarget {
    pub col: usize,
    pub row: usize,
    pub lon: f64,
    pub lat: f64,
    pub mean_intensity_db: f64,
    pub count: u64,
}

/// Cells whose mean backscatter reaches the threshold. Advisory only:
/// nothing is masked in the exported layers.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HardTargetReport {
    pub threshold_db: f64,
    pub targets: Vec<HardTarget>,
}

pub fn flag_hard_targets(grid: &SpanGrid, threshold_db: f64) -> HardTargetReport {
    let t = grid.transform();
    let mut targets = Vec::new();
    for row in 0..grid.height {
        for col in 0..grid.width {
            if let Some(c) = grid.cell(col, row) {
                let db = c.mean_intensity_db();
                if db >= threshold_db {
                    let (x, y) = t.pixel_to_world(col as f64, row as f64);
                    let (lon, lat) = grid.proj.inverse(x, y);
                    targets.push(HardTarget {
                        col,
                        row,
                        lon,
                        lat,
                        mean_intensity_db: db,
                        count: c.count,
                    });
                }
            }
        }
    }
    HardTargetReport {
        threshold_db,
        targets,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn proj() -> LocalProjection {
        LocalProjection::new(9.74, 52.35).unwrap()
    }

    fn at(x: f64, y: f64, depth: f64, db: f64) -> Sounding {
        let (lon, lat) = proj().inverse(x, y);
        Sounding {
            ping_id: 0,
            beam_id: 0,
            lon,
            lat,
            depth_m: depth,
            intensity_db: db,
        }
    }

    #[test]
    fn gates_inclusive() {
        let g = GateConfig::default();
        let input: Vec<Sounding> = [0.5, 1.0, 3.0, 5.0, 6.0].iter().map(|&d| at(0.0, 0.0, d, 0.0)).collect();
        let (kept, counts) = gate_filter(&input, &g);
        let depths: Vec<f64> = kept.iter().map(|s| s.depth_m).collect();
        assert_eq!(depths, vec![1.0, 3.0, 5.0]);
        assert_eq!(counts, GateCounts { kept: 3, dropped_above: 1, dropped_below: 1 });
        let (again, _) = gate_filter(&kept, &g);
        assert_eq!(again, kept);
    }

    #[test]
    fn gate_example_triplet() {
        let input: Vec<Sounding> = [0.5, 3.0, 6.0].iter().map(|&d| at(0.0, 0.0, d, 0.0)).collect();
        let (kept, counts) = gate_filter(&input, &GateConfig::default());
        assert_eq!(kept.len(), 1);
        assert_eq!(kept[0].depth_m, 3.0);
        assert_eq!((counts.dropped_above, counts.dropped_below), (1, 1));
    }

    #[test]
    fn invalid_gates() {
        assert!(GateConfig::new(5.0, 1.0).is_err());
        assert!(GateConfig::new(0.0, 1.0).is_err());
        assert!(GateConfig::new(1.0, 1.0).is_err());
    }

    #[test]
    fn singleton_cell() {
        let g = build_span_grid(&[at(0.35, 0.75, 2.0, 10.0)], &proj(), 0.1).unwrap();
        assert_eq!((g.width(), g.height()), (1, 1));
        let c = g.cell(0, 0).unwrap();
        assert_eq!((c.d_top, c.d_bottom, c.count), (2.0, 2.0, 1));
        let span = span_layer(&g);
        assert_eq!(span.valid_count(), 1);
        assert_eq!(span.value(0), Some(0.0));
    }

    #[test]
    fn same_cell_span() {
        let s: Vec<Sounding> = [2.0, 2.8, 3.5].iter().map(|&d| at(1.23, 4.56, d, 5.0)).collect();
        let g = build_span_grid(&s, &proj(), 0.1).unwrap();
        assert!((g.cell(0, 0).unwrap().span() - 1.5).abs() < 1e-12);
    }

    #[test]
    fn canopy_cell_span() {
        let s = [at(3.0, 3.0, 2.0, 3.0), at(3.0, 3.0, 3.3, 10.0)];
        let g = build_span_grid(&s, &proj(), 0.1).unwrap();
        assert!((span_layer(&g).value(0).unwrap() - 1.3).abs() < 1e-6);
        assert_eq!(bathy_layer(&g).value(0), Some(3.3f32 as f64));
        assert_eq!(backscatter_layer(&g).value(0), Some(6.5));
    }

    #[test]
    fn layers_share_grid_and_mask() {
        let s = [at(0.05, 0.05, 2.0, 1.0), at(1.05, -0.95, 2.5, 2.0)];
        let g = build_span_grid(&s, &proj(), 0.1).unwrap();
        let (a, b, c) = (span_layer(&g), bathy_layer(&g), backscatter_layer(&g));
        assert!(a.same_grid(&b) && b.same_grid(&c));
        for i in 0..a.len() {
            assert_eq!(a.is_valid(i), b.is_valid(i));
            assert_eq!(b.is_valid(i), c.is_valid(i));
        }
        assert_eq!(a.valid_count(), 2);
        assert_eq!((g.width(), g.height()), (11, 11));
        // north-up: the first sounding (north-west) lands at row 0, col 0
        assert!(g.cell(0, 0).is_some());
        assert!(g.cell(10, 10).is_some());
    }

    #[test]
    fn empty_input() {
        assert!(matches!(build_span_grid(&[], &proj(), 0.1), Err(SonarError::NoSoundings)));
    }

    #[test]
    fn hard_targets() {
        let mut s: Vec<Sounding> = (0..5).map(|i| at(i as f64 * 0.1 + 0.05, 0.05, 3.0, 10.0)).collect();
        s.push(at(0.25, 0.05, 3.0, 30.0));
        s.push(at(0.25, 0.05, 3.0, 30.0));
        let g = build_span_grid(&s, &proj(), 0.1).unwrap();
        let before = (span_layer(&g), bathy_layer(&g));
        assert!(flag_hard_targets(&g, 100.0).targets.is_empty());
        let report = flag_hard_targets(&g, 20.0);
        assert_eq!(report.targets.len(), 1);
        assert_eq!(report.targets[0].col, 2);
        let after = (span_layer(&g), bathy_layer(&g));
        assert_eq!(before.0.as_f32(), after.0.as_f32());
        assert_eq!(before.1.as_f32(), after.1.as_f32());
    }
}
