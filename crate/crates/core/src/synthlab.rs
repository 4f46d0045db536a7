//! Deterministic synthetic lakes: band rasters, boundary, soundings and the
//! ground truth they were generated from.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geo::{write_geotiff, AffineTransform, Crs, GeoRaster, LocalProjection, RasterError, TiffError, TransformError};
use crate::mission::SurveyPlan;
use crate::rng::SplitMix64;
use crate::sonar::{RawSounding, Sounding};
use crate::spectral::{BandIds, BandSet, SpectralError};
use crate::vector::{BoundaryError, LakeBoundary, Point};

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("invalid scenario: {0}")]
    Invalid(String),
    #[error(transparent)]
    Raster(#[from] RasterError),
    #[error(transparent)]
    Transform(#[from] TransformError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error(transparent)]
    Boundary(#[from] BoundaryError),
    #[error(transparent)]
    Tiff(#[from] TiffError),
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> SynthError + '_ {
    move |source| SynthError::Io {
        path: path.display().to_string(),
        source,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Density {
    Medium,
    High,
}

impl Density {
    /// Red-edge reflectance added over open water.
    pub fn red_edge_boost(self) -> f64 {
        match self {
            Density::Medium => 0.02,
            Density::High => 0.04,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Patch {
    pub center: Point,
    pub radius_m: f64,
    pub canopy_height_m: f64,
    pub density: Density,
}

/// Axis-aligned ellipse, `semi_x_m` east-west and `semi_y_m` north-south.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ellipse {
    pub center: Point,
    pub semi_x_m: f64,
    pub semi_y_m: f64,
}

/// Disc on the lakebed returning strong backscatter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HardObject {
    pub center: Point,
    pub radius_m: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub seed: u64,
    pub lake: Ellipse,
    pub bed_depth_m: f64,
    pub patches: Vec<Patch>,
    pub shore_ring_width_m: f64,
    pub noise_sigma_m: f64,
    #[serde(default = "default_pixel_m")]
    pub pixel_m: f64,
    #[serde(default)]
    pub hard_objects: Vec<HardObject>,
}

fn default_pixel_m() -> f64 {
    10.0
}

/// Reflectances `(red, red_edge, green, nir)` per surface type.
const WATER: [f64; 4] = [0.03, 0.03, 0.10, 0.02];
const SHORE: [f64; 4] = [0.05, 0.30, 0.10, 0.06];
const LAND: [f64; 4] = [0.10, 0.15, 0.08, 0.30];

/// Sub-samples per pixel side when mixing patch cover into water pixels.
const SUPERSAMPLE: usize = 10;

pub const BED_INTENSITY_DB: f64 = 10.0;
pub const CANOPY_INTENSITY_DB: f64 = 3.0;
pub const HARD_TARGET_BOOST_DB: f64 = 20.0;

impl Scenario {
    /// A 1.5 km by 0.6 km lake with `n` disjoint patches placed from `seed`.
    ///
    /// Radii are drawn from 40..80 m, densities alternate high/medium, and
    /// patch edges stay at least 200 m apart.
    pub fn random_patches(seed: u64, n: usize) -> Result<Self, SynthError> {
        let lake = Ellipse {
            center: (9.7475, 52.346),
            semi_x_m: 750.0,
            semi_y_m: 300.0,
        };
        let mut sc = Scenario {
            seed,
            lake,
            bed_depth_m: 3.0,
            patches: Vec::new(),
            shore_ring_width_m: 20.0,
            noise_sigma_m: 0.05,
            pixel_m: 10.0,
            hard_objects: Vec::new(),
        };
        let proj = sc.projection()?;
        let mut rng = SplitMix64::new(seed);
        let mut placed: Vec<(Point, f64)> = Vec::new();
        let mut attempts = 0;
        while placed.len() < n {
            attempts += 1;
            if attempts > 10_000 {
                return Err(SynthError::Invalid(format!("could not place {n} disjoint patches")));
            }
            let radius = 40.0 + 40.0 * rng.next_f64();
            let x = (2.0 * rng.next_f64() - 1.0) * lake.semi_x_m;
            let y = (2.0 * rng.next_f64() - 1.0) * lake.semi_y_m;
            if !sc.disc_in_water((x, y), radius + sc.pixel_m) {
                continue;
            }
            if placed.iter().any(|&(c, r)| (c.0 - x).hypot(c.1 - y) < r + radius + 200.0) {
                continue;
            }
            placed.push(((x, y), radius));
        }
        sc.patches = placed
            .iter()
            .enumerate()
            .map(|(i, &((x, y), radius_m))| Patch {
                center: proj.inverse(x, y),
                radius_m,
                canopy_height_m: 1.3,
                density: if i % 2 == 0 { Density::High } else { Density::Medium },
            })
            .collect();
        sc.validate()?;
        Ok(sc)
    }

    /// One high-density patch with a uniform 1.3 m canopy.
    pub fn harvest(seed: u64) -> Self {
        let lake = Ellipse {
            center: (9.7475, 52.346),
            semi_x_m: 400.0,
            semi_y_m: 250.0,
        };
        Scenario {
            seed,
            lake,
            bed_depth_m: 3.0,
            patches: vec![Patch {
                center: lake.center,
                radius_m: 60.0,
                canopy_height_m: 1.3,
                density: Density::High,
            }],
            shore_ring_width_m: 20.0,
            noise_sigma_m: 0.05,
            pixel_m: 10.0,
            hard_objects: Vec::new(),
        }
    }

    pub fn projection(&self) -> Result<LocalProjection, SynthError> {
        Ok(LocalProjection::new(self.lake.center.0, self.lake.center.1)?)
    }

    fn local(&self, lonlat: Point) -> Result<Point, SynthError> {
        Ok(self.projection()?.forward(lonlat.0, lonlat.1)?)
    }

    /// Ellipse test in the local frame, with both semi-axes shrunk by `inset`.
    fn in_ellipse(&self, (x, y): Point, inset: f64) -> bool {
        let (a, b) = (self.lake.semi_x_m - inset, self.lake.semi_y_m - inset);
        a > 0.0 && b > 0.0 && (x / a).powi(2) + (y / b).powi(2) <= 1.0
    }

    /// Open water: inside the lake and inside the shore ring.
    pub fn in_water(&self, p: Point) -> bool {
        self.in_ellipse(p, self.shore_ring_width_m)
    }

    fn disc_in_water(&self, c: Point, r: f64) -> bool {
        (0..64).all(|k| {
            let t = k as f64 * std::f64::consts::TAU / 64.0;
            self.in_water((c.0 + r * t.cos(), c.1 + r * t.sin()))
        })
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        let bad = |m: String| Err(SynthError::Invalid(m));
        if !(self.lake.semi_x_m > 0.0 && self.lake.semi_y_m > 0.0) {
            return bad("lake semi-axes must be positive".into());
        }
        if !(self.shore_ring_width_m >= 0.0
            && self.shore_ring_width_m < self.lake.semi_x_m.min(self.lake.semi_y_m))
        {
            return bad("shore ring must be narrower than the lake".into());
        }
        if !(self.bed_depth_m > 0.0 && self.noise_sigma_m >= 0.0 && self.pixel_m > 0.0) {
            return bad("bed depth and pixel size must be positive, noise non-negative".into());
        }
        for (i, p) in self.patches.iter().enumerate() {
            if p.radius_m.is_nan() || p.radius_m <= 0.0 {
                return bad(format!("patch {i}: radius must be positive"));
            }
            if !(p.canopy_height_m >= 0.0 && p.canopy_height_m < self.bed_depth_m) {
                return bad(format!("patch {i}: canopy height must lie in [0, bed depth)"));
            }
            if !self.disc_in_water(self.local(p.center)?, p.radius_m) {
                return bad(format!("patch {i} is not inside the lake"));
            }
        }
        Ok(())
    }

    /// Ground truth for downstream checks.
    pub fn truth(&self) -> serde_json::Value {
        serde_json::json!({
            "scenario": self,
            "expected_aoi_centroids": self.patches.iter().map(|p| [p.center.0, p.center.1]).collect::<Vec<_>>(),
            "canopy_heights_m": self.patches.iter().map(|p| p.canopy_height_m).collect::<Vec<_>>(),
        })
    }

    fn patch_at(&self, p: Point, centers: &[Point]) -> Option<&Patch> {
        self.patches
            .iter()
            .zip(centers)
            .find(|(patch, c)| (p.0 - c.0).hypot(p.1 - c.1) <= patch.radius_m)
            .map(|(patch, _)| patch)
    }
}

/// Lake outline as a 64-gon inscribed in the ellipse.
pub fn lake_boundary(sc: &Scenario) -> Result<LakeBoundary, SynthError> {
    let proj = sc.projection()?;
    let mut ring: Vec<Point> = (0..64)
        .map(|k| {
            let t = k as f64 * std::f64::consts::TAU / 64.0;
            proj.inverse(sc.lake.semi_x_m * t.cos(), sc.lake.semi_y_m * t.sin())
        })
        .collect();
    ring.push(ring[0]);
    Ok(LakeBoundary::new(vec![ring])?)
}

/// Band rasters on a geographic grid of `sc.pixel_m` pixels plus the lake
/// boundary.
///
/// Pixels are typed land, shore or water by their center. Water pixels mix
/// in patch cover by the fraction of sub-samples falling inside a patch.
pub fn generate_bands(sc: &Scenario) -> Result<(BandSet, LakeBoundary), SynthError> {
    sc.validate()?;
    let proj = sc.projection()?;
    let px = sc.pixel_m;
    let margin = 3.0 * px;
    let width = ((2.0 * (sc.lake.semi_x_m + margin)) / px).ceil() as usize;
    let height = ((2.0 * (sc.lake.semi_y_m + margin)) / px).ceil() as usize;
    let (x0, y0) = (-(width as f64) * px / 2.0, height as f64 * px / 2.0);
    let (mx, my) = proj.meters_per_degree();
    let (lon0, lat0) = proj.inverse(x0, y0);
    let transform = AffineTransform::new(lon0, lat0, px / mx, px / my)?;
    let centers: Vec<Point> = sc.patches.iter().map(|p| sc.local(p.center)).collect::<Result<_, _>>()?;

    let n = width * height;
    let mut bands: [Vec<f32>; 4] = std::array::from_fn(|_| Vec::with_capacity(n));
    let step = px / SUPERSAMPLE as f64;
    for row in 0..height {
        for col in 0..width {
            let cx = x0 + (col as f64 + 0.5) * px;
            let cy = y0 - (row as f64 + 0.5) * px;
            let refl = if !sc.in_ellipse((cx, cy), 0.0) {
                LAND
            } else if !sc.in_water((cx, cy)) {
                SHORE
            } else {
                let mut boost = 0.0;
                for i in 0..SUPERSAMPLE {
                    for j in 0..SUPERSAMPLE {
                        let sx = x0 + col as f64 * px + (i as f64 + 0.5) * step;
                        let sy = y0 - row as f64 * px - (j as f64 + 0.5) * step;
                        if let Some(p) = sc.patch_at((sx, sy), &centers) {
                            boost += p.density.red_edge_boost();
                        }
                    }
                }
                let mut w = WATER;
                w[1] += boost / (SUPERSAMPLE * SUPERSAMPLE) as f64;
                w
            };
            for (band, v) in bands.iter_mut().zip(refl) {
                band.push(v as f32);
            }
        }
    }
    let [red, red_edge, green, nir] =
        bands.map(|b| GeoRaster::from_f32(width, height, b, transform, Crs::Geographic));
    let set = BandSet::new(red?, red_edge?, green?, nir?)?;
    Ok((set, lake_boundary(sc)?))
}

/// Files written by [`write_scenario`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioFiles {
    pub band_dir: PathBuf,
    pub boundary: PathBuf,
    pub truth: PathBuf,
}

/// Writes `bands/B0x.tif`, `boundary.geojson` and `truth.json` under `dir`.
pub fn write_scenario(sc: &Scenario, dir: &Path) -> Result<ScenarioFiles, SynthError> {
    let (bands, boundary) = generate_bands(sc)?;
    let band_dir = dir.join("bands");
    fs::create_dir_all(&band_dir).map_err(io_err(&band_dir))?;
    let ids = BandIds::default();
    for (id, raster) in [
        (&ids.red, bands.red()),
        (&ids.red_edge, bands.red_edge()),
        (&ids.green, bands.green()),
        (&ids.nir, bands.nir()),
    ] {
        write_geotiff(raster, band_dir.join(format!("{id}.tif")))?;
    }
    let boundary_path = dir.join("boundary.geojson");
    let text = serde_json::to_string_pretty(&boundary.to_geojson()).expect("plain JSON values");
    fs::write(&boundary_path, text).map_err(io_err(&boundary_path))?;
    let truth_path = dir.join("truth.json");
    let text = serde_json::to_string_pretty(&sc.truth()).expect("plain JSON values");
    fs::write(&truth_path, text).map_err(io_err(&truth_path))?;
    Ok(ScenarioFiles {
        band_dir,
        boundary: boundary_path,
        truth: truth_path,
    })
}

pub fn read_scenario(path: &Path) -> Result<Scenario, SynthError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let value: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| SynthError::Invalid(format!("{}: {e}", path.display())))?;
    // accept either a bare scenario or a truth document wrapping one
    let inner = value.get("scenario").cloned().unwrap_or(value);
    let sc: Scenario =
        serde_json::from_value(inner).map_err(|e| SynthError::Invalid(format!("{}: {e}", path.display())))?;
    sc.validate()?;
    Ok(sc)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SonarSim {
    pub ping_spacing_m: f64,
    pub beams: u16,
    pub aperture_deg: f64,
    /// Post-harvest scan: canopy removed, bed returns only.
    pub harvested: bool,
}

impl Default for SonarSim {
    fn default() -> Self {
        Self {
            ping_spacing_m: 0.5,
            beams: 256,
            aperture_deg: 150.0,
            harvested: false,
        }
    }
}

/// Simulated multibeam returns along every leg of `plans`.
///
/// Pings are spaced evenly along each leg. Beam footprints lie on a flat bed
/// at `bed_depth_m`, spread evenly over the aperture across track; beams
/// landing outside open water are dropped. Inside a patch a beam returns the
/// canopy top and then the bed, both at the bed footprint position.
pub fn generate_soundings(
    sc: &Scenario,
    plans: &[SurveyPlan],
    sim: &SonarSim,
) -> Result<Vec<Sounding>, SynthError> {
    sc.validate()?;
    if sim.ping_spacing_m.is_nan() || sim.ping_spacing_m <= 0.0 || sim.beams == 0 || sim.beams > 256 {
        return Err(SynthError::Invalid("ping spacing must be positive and beams in 1..=256".into()));
    }
    if !(sim.aperture_deg > 0.0 && sim.aperture_deg < 180.0) {
        return Err(SynthError::Invalid("aperture must lie in (0, 180) degrees".into()));
    }
    let proj = sc.projection()?;
    let centers: Vec<Point> = sc.patches.iter().map(|p| sc.local(p.center)).collect::<Result<_, _>>()?;
    let hard: Vec<(Point, f64)> = sc
        .hard_objects
        .iter()
        .map(|h| Ok((sc.local(h.center)?, h.radius_m)))
        .collect::<Result<_, SynthError>>()?;
    let offsets: Vec<f64> = (0..sim.beams)
        .map(|j| {
            let half = sim.aperture_deg.to_radians() / 2.0;
            let theta = if sim.beams == 1 {
                0.0
            } else {
                -half + 2.0 * half * j as f64 / (sim.beams - 1) as f64
            };
            sc.bed_depth_m * theta.tan()
        })
        .collect();

    let stream = if sim.harvested { 0x5eed_0002 } else { 0x5eed_0001 };
    let mut rng = SplitMix64::new(sc.seed ^ stream);
    let mut out = Vec::new();
    let mut ping_id = 0u64;
    for plan in plans {
        for leg in &plan.legs {
            let a = proj.forward(leg.start.0, leg.start.1)?;
            let b = proj.forward(leg.end.0, leg.end.1)?;
            let len = (b.0 - a.0).hypot(b.1 - a.1);
            let (dx, dy) = if len > 0.0 { ((b.0 - a.0) / len, (b.1 - a.1) / len) } else { (1.0, 0.0) };
            // port-side unit normal
            let (nx, ny) = (-dy, dx);
            let pings = (len / sim.ping_spacing_m).floor() as u64 + 1;
            for i in 0..pings {
                let t = i as f64 * sim.ping_spacing_m;
                let (px, py) = (a.0 + t * dx, a.1 + t * dy);
                for (beam, off) in offsets.iter().enumerate() {
                    let f = (px + off * nx, py + off * ny);
                    if !sc.in_water(f) {
                        continue;
                    }
                    let (lon, lat) = proj.inverse(f.0, f.1);
                    let boost = if hard.iter().any(|&(c, r)| (f.0 - c.0).hypot(f.1 - c.1) <= r) {
                        HARD_TARGET_BOOST_DB
                    } else {
                        0.0
                    };
                    let mut emit = |depth_m: f64, intensity_db: f64| {
                        out.push(Sounding {
                            ping_id,
                            beam_id: beam as u16,
                            lon,
                            lat,
                            depth_m,
                            intensity_db,
                        })
                    };
                    if let (Some(p), false) = (sc.patch_at(f, &centers), sim.harvested) {
                        let top = sc.bed_depth_m - p.canopy_height_m + sc.noise_sigma_m * rng.next_gaussian();
                        emit(top, CANOPY_INTENSITY_DB + boost);
                    }
                    let bed = sc.bed_depth_m + sc.noise_sigma_m * rng.next_gaussian();
                    emit(bed, BED_INTENSITY_DB + boost);
                }
                ping_id += 1;
            }
        }
    }
    Ok(out)
}

/// Raw-mode copies of `soundings` for a uniform sound speed.
pub fn to_travel_time(soundings: &[Sounding], speed_mps: f64) -> Vec<RawSounding> {
    soundings
        .iter()
        .map(|s| RawSounding {
            ping_id: s.ping_id,
            beam_id: s.beam_id,
            lon: s.lon,
            lat: s.lat,
            twtt_s: 2.0 * s.depth_m / speed_mps,
            intensity_db: s.intensity_db,
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{sav_index, water_mask};

    fn bare(patches: Vec<Patch>) -> Scenario {
        Scenario {
            seed: 7,
            lake: Ellipse {
                center: (9.7475, 52.346),
                semi_x_m: 300.0,
                semi_y_m: 200.0,
            },
            bed_depth_m: 3.0,
            patches,
            shore_ring_width_m: 20.0,
            noise_sigma_m: 0.0,
            pixel_m: 10.0,
            hard_objects: Vec::new(),
        }
    }

    fn pixel_of(bands: &BandSet, lonlat: Point) -> usize {
        let r = bands.red();
        let (c, row) = r.transform().world_to_cell(lonlat.0, lonlat.1);
        row as usize * r.width() + c as usize
    }

    #[test]
    fn no_patches_means_zero_index_over_water() {
        let sc = bare(Vec::new());
        let (bands, _) = generate_bands(&sc).unwrap();
        let index = sav_index(&bands);
        let water = water_mask(&bands, 0.0);
        let raw = index.raw.as_f32().unwrap();
        let mut seen = 0;
        for (i, &w) in water.as_u8().unwrap().iter().enumerate() {
            if w == 1 && bands.red_edge().value(i) == Some(0.03f32 as f64) {
                assert_eq!(raw[i], 0.0);
                seen += 1;
            }
        }
        assert!(seen > 100);
    }

    #[test]
    fn high_patch_core_and_shore_values() {
        let sc = bare(vec![Patch {
            center: (9.7475, 52.346),
            radius_m: 50.0,
            canopy_height_m: 1.3,
            density: Density::High,
        }]);
        let (bands, boundary) = generate_bands(&sc).unwrap();
        let index = sav_index(&bands);
        let i = pixel_of(&bands, sc.lake.center);
        assert!((index.raw.value(i).unwrap() - 0.4).abs() < 1e-6);
        let proj = sc.projection().unwrap();
        let shore = pixel_of(&bands, proj.inverse(0.0, 190.0));
        let v = index.raw.value(shore).unwrap();
        assert!((v - 0.25 / 0.35).abs() < 1e-6);
        assert!(boundary.contains(sc.lake.center.0, sc.lake.center.1));
        let land = pixel_of(&bands, proj.inverse(0.0, 225.0));
        assert_eq!(water_mask(&bands, 0.0).as_u8().unwrap()[land], 0);
    }

    #[test]
    fn patches_outside_lake_are_rejected() {
        let sc = bare(vec![Patch {
            center: (9.7475, 52.346),
            radius_m: 500.0,
            canopy_height_m: 1.0,
            density: Density::Medium,
        }]);
        assert!(matches!(sc.validate(), Err(SynthError::Invalid(_))));
        let mut sc = bare(Vec::new());
        sc.patches.push(Patch {
            center: sc.lake.center,
            radius_m: 10.0,
            canopy_height_m: 3.5,
            density: Density::High,
        });
        assert!(sc.validate().is_err());
    }

    #[test]
    fn random_patches_are_disjoint_and_deterministic() {
        let a = Scenario::random_patches(11, 3).unwrap();
        assert_eq!(a, Scenario::random_patches(11, 3).unwrap());
        assert_eq!(a.patches.len(), 3);
        let proj = a.projection().unwrap();
        for (i, p) in a.patches.iter().enumerate() {
            assert!((40.0..80.0).contains(&p.radius_m));
            for q in &a.patches[i + 1..] {
                let (x1, y1) = proj.forward(p.center.0, p.center.1).unwrap();
                let (x2, y2) = proj.forward(q.center.0, q.center.1).unwrap();
                assert!((x1 - x2).hypot(y1 - y2) > p.radius_m + q.radius_m);
            }
        }
    }

    fn one_leg_plan(sc: &Scenario, y: f64) -> SurveyPlan {
        let proj = sc.projection().unwrap();
        SurveyPlan {
            aoi_id: 1,
            legs: vec![crate::mission::Leg {
                start: proj.inverse(-60.0, y),
                end: proj.inverse(60.0, y),
            }],
            line_spacing_m: 16.0,
            total_length_m: 120.0,
            est_duration_s: 120.0 / 1.5,
            survey_speed_mps: 1.5,
            degenerate: false,
        }
    }

    #[test]
    fn noiseless_patch_has_two_returns_per_beam() {
        let sc = bare(vec![Patch {
            center: (9.7475, 52.346),
            radius_m: 40.0,
            canopy_height_m: 1.3,
            density: Density::High,
        }]);
        let s = generate_soundings(&sc, &[one_leg_plan(&sc, 0.0)], &SonarSim::default()).unwrap();
        let canopy: Vec<&Sounding> = s.iter().filter(|s| s.intensity_db == CANOPY_INTENSITY_DB).collect();
        assert!(!canopy.is_empty());
        for c in canopy {
            assert!((c.depth_m - 1.7).abs() < 1e-12);
        }
        assert!(s.iter().all(|s| s.depth_m == 1.7 || s.depth_m == 3.0 || (s.depth_m - 1.7).abs() < 1e-12));
        let harvested = SonarSim {
            harvested: true,
            ..SonarSim::default()
        };
        let after = generate_soundings(&sc, &[one_leg_plan(&sc, 0.0)], &harvested).unwrap();
        assert!(after.iter().all(|s| s.depth_m == 3.0));
        assert!(after.len() < s.len());
    }

    #[test]
    fn same_seed_same_output() {
        let mut sc = bare(Vec::new());
        sc.noise_sigma_m = 0.05;
        let plan = [one_leg_plan(&sc, 10.0)];
        let a = generate_soundings(&sc, &plan, &SonarSim::default()).unwrap();
        let b = generate_soundings(&sc, &plan, &SonarSim::default()).unwrap();
        assert_eq!(a, b);
        sc.seed += 1;
        assert_ne!(a, generate_soundings(&sc, &plan, &SonarSim::default()).unwrap());
    }

    #[test]
    fn hard_objects_raise_intensity() {
        let mut sc = bare(Vec::new());
        sc.hard_objects.push(HardObject {
            center: sc.lake.center,
            radius_m: 1.0,
        });
        let s = generate_soundings(&sc, &[one_leg_plan(&sc, 0.0)], &SonarSim::default()).unwrap();
        let loud = s.iter().filter(|s| s.intensity_db == BED_INTENSITY_DB + HARD_TARGET_BOOST_DB).count();
        assert!(loud > 0 && loud < s.len());
    }

    #[test]
    fn scenario_json_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let sc = Scenario::random_patches(3, 2).unwrap();
        let files = write_scenario(&sc, dir.path()).unwrap();
        assert_eq!(read_scenario(&files.truth).unwrap(), sc);
        assert!(files.band_dir.join("B05.tif").exists());
    }
}
