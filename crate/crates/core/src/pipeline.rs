//! Pipeline stages over files in an output directory.
//!
//! Every stage reads its inputs from disk and writes its artifacts next to
//! them, so running the stages one by one produces the same bytes as
//! [`run_all`].

use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use log::{info, warn};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::aoi::{classify_intensity, export_aois, extract_aois, read_aois, AoiError};
use crate::geo::{read_geotiff, write_geotiff, LocalProjection, RasterError, TiffError};
use crate::kmeans::KMeansConfig;
use crate::mission::{
    export_plans, harvest_diff, plan_survey, read_plans, MissionError, PlanConfig, Region,
};
use crate::sonar::{
    backscatter_layer, bathy_layer, build_span_grid, flag_hard_targets, gate_filter, read_soundings,
    read_svp, span_layer, svp_correct, write_soundings, GateConfig, SonarError, SoundVelocityProfile,
    SoundingSet,
};
use crate::spectral::{
    apply_masks, load_bands, sav_index, water_mask, BandIds, DirectoryProvider, SavIndexRaster, SpectralError,
};
use crate::synthlab::{generate_soundings, to_travel_time, write_scenario, Scenario, SonarSim, SynthError};
use crate::vector::{rasterize_mask, read_boundary, BoundaryError, LakeBoundary};

pub const SAV_RAW: &str = "sav_raw.tif";
pub const SAV_SCALED: &str = "sav_scaled.tif";
pub const WATER_MASK: &str = "water_mask.tif";
pub const LAKE_MASK: &str = "lake_mask.tif";
pub const CLASSES: &str = "classes.tif";
pub const AOIS: &str = "aois.geojson";
pub const PLANS: &str = "plans.geojson";
pub const HARVEST_REPORT: &str = "harvest_report.json";
pub const CONFIG_ECHO: &str = "config.json";

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("configuration: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error(transparent)]
    Boundary(#[from] BoundaryError),
    #[error(transparent)]
    Aoi(#[from] AoiError),
    #[error(transparent)]
    Mission(#[from] MissionError),
    #[error(transparent)]
    Sonar(#[from] SonarError),
    #[error(transparent)]
    Synth(#[from] SynthError),
    #[error(transparent)]
    Tiff(#[from] TiffError),
    #[error(transparent)]
    Raster(#[from] RasterError),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> PipelineError + '_ {
    move |source| PipelineError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Effective run configuration, echoed to `config.json` by every stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub band_dir: Option<PathBuf>,
    pub boundary_path: Option<PathBuf>,
    pub band_ids: BandIds,
    pub seed: u64,
    pub k_i: usize,
    pub k_a: usize,
    pub min_members: usize,
    pub ndwi_threshold: f64,
    pub gates: (f64, f64),
    pub grid_res: f64,
    pub swath_aperture: f64,
    pub survey_speed_kn: f64,
    pub nominal_depth_m: f64,
    pub overlap_frac: f64,
    pub hard_target_db: f64,
    /// Local frame origin; defaults to the boundary's bounding-box center.
    pub ref_lon: Option<f64>,
    pub ref_lat: Option<f64>,
    pub output_dir: PathBuf,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            band_dir: None,
            boundary_path: None,
            band_ids: BandIds::default(),
            seed: 0,
            k_i: 5,
            k_a: 15,
            min_members: 1,
            ndwi_threshold: 0.0,
            gates: (1.0, 5.0),
            grid_res: 0.1,
            swath_aperture: 150.0,
            survey_speed_kn: 3.0,
            nominal_depth_m: 2.5,
            overlap_frac: 0.1,
            hard_target_db: 25.0,
            ref_lon: None,
            ref_lat: None,
            output_dir: PathBuf::from("out"),
        }
    }
}

impl PipelineConfig {
    pub fn from_file(path: &Path) -> Result<Self, PipelineError> {
        let text = fs::read_to_string(path).map_err(io_err(path))?;
        serde_json::from_str(&text).map_err(|e| PipelineError::Config(format!("{}: {e}", path.display())))
    }

    pub fn plan_config(&self) -> PlanConfig {
        PlanConfig {
            nominal_depth_m: self.nominal_depth_m,
            aperture_deg: self.swath_aperture,
            overlap_frac: self.overlap_frac,
            survey_speed_mps: self.survey_speed_kn * 1852.0 / 3600.0,
        }
    }

    pub fn gate_config(&self) -> Result<GateConfig, PipelineError> {
        Ok(GateConfig::new(self.gates.0, self.gates.1)?)
    }

    pub fn out(&self, name: &str) -> PathBuf {
        self.output_dir.join(name)
    }

    fn boundary(&self) -> Result<LakeBoundary, PipelineError> {
        let path = self
            .boundary_path
            .as_ref()
            .ok_or_else(|| PipelineError::Config("boundary_path is required".into()))?;
        Ok(read_boundary(path)?)
    }

    /// Local metric frame shared by all stages of a run.
    pub fn frame(&self) -> Result<LocalProjection, PipelineError> {
        match (self.ref_lon, self.ref_lat) {
            (Some(lon), Some(lat)) => Ok(LocalProjection::new(lon, lat)?),
            (None, None) => Ok(self.boundary()?.local_frame()?),
            _ => Err(PipelineError::Config("ref_lon and ref_lat must be given together".into())),
        }
    }

    fn prepare(&self) -> Result<(), PipelineError> {
        fs::create_dir_all(&self.output_dir).map_err(io_err(&self.output_dir))?;
        let path = self.out(CONFIG_ECHO);
        let text = serde_json::to_string_pretty(self).expect("config serializes");
        fs::write(&path, text + "\n").map_err(io_err(&path))
    }
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<(), PipelineError> {
    let text = serde_json::to_string_pretty(value).expect("plain JSON values");
    fs::write(path, text + "\n").map_err(io_err(path))
}

fn path_str(p: &Path) -> String {
    p.display().to_string()
}

/// SAV index cropped to the lake and masked to water.
pub fn stage_apa(cfg: &PipelineConfig) -> Result<Value, PipelineError> {
    cfg.prepare()?;
    let band_dir = cfg
        .band_dir
        .as_ref()
        .ok_or_else(|| PipelineError::Config("band_dir is required".into()))?;
    let bands = load_bands(&DirectoryProvider::new(band_dir), &cfg.band_ids)?;
    let boundary = cfg.boundary()?;
    let index = sav_index(&bands);
    let water = water_mask(&bands, cfg.ndwi_threshold);
    let lake = rasterize_mask(&boundary, bands.red());
    let masked = apply_masks(&index, &water, &lake)?;

    write_geotiff(&masked.raw, cfg.out(SAV_RAW))?;
    write_geotiff(&masked.scaled, cfg.out(SAV_SCALED))?;
    write_geotiff(&water, cfg.out(WATER_MASK))?;
    write_geotiff(&lake, cfg.out(LAKE_MASK))?;
    let count = |r: &crate::geo::GeoRaster| r.as_u8().map_or(0, |v| v.iter().filter(|&&m| m == 1).count());
    info!("apa: {} of {} pixels kept", masked.raw.valid_count(), masked.len());
    Ok(json!({
        "stage": "apa",
        "width": masked.raw.width(),
        "height": masked.raw.height(),
        "water_pixels": count(&water),
        "lake_pixels": count(&lake),
        "valid_pixels": masked.raw.valid_count(),
        "outputs": [SAV_RAW, SAV_SCALED, WATER_MASK, LAKE_MASK],
    }))
}

/// Intensity classes and spatial AOIs from the masked index.
pub fn stage_aoi(cfg: &PipelineConfig) -> Result<Value, PipelineError> {
    cfg.prepare()?;
    let raw = read_geotiff(cfg.out(SAV_RAW))?;
    let index = SavIndexRaster::from_raw(raw)?;
    let proj = cfg.frame()?;
    let classes = classify_intensity(&index, &KMeansConfig::new(cfg.k_i, cfg.seed))?;
    let extraction = extract_aois(&classes, &proj, &KMeansConfig::new(cfg.k_a, cfg.seed), cfg.min_members)?;
    write_geotiff(&classes.classes, cfg.out(CLASSES))?;
    export_aois(&extraction.aois, cfg.out(AOIS))?;
    if extraction.used_k < cfg.k_a {
        warn!("aoi: k reduced from {} to {}", cfg.k_a, extraction.used_k);
    }
    info!("aoi: {} areas from {} pixels", extraction.aois.len(), extraction.selected_pixels);
    let aois: Vec<Value> = extraction
        .aois
        .iter()
        .map(|a| {
            json!({
                "id": a.id,
                "centroid": [a.centroid_lonlat.0, a.centroid_lonlat.1],
                "member_count": a.member_count(),
                "area_m2": a.area_m2,
            })
        })
        .collect();
    Ok(json!({
        "stage": "aoi",
        "intensity_centroids": classes.centroids,
        "selected_pixels": extraction.selected_pixels,
        "requested_k": extraction.requested_k,
        "used_k": extraction.used_k,
        "empty_clusters": extraction.empty_clusters,
        "aoi_count": aois.len(),
        "aois": aois,
        "outputs": [CLASSES, AOIS],
    }))
}

/// Lawnmower plans for every AOI.
pub fn stage_plan(cfg: &PipelineConfig) -> Result<Value, PipelineError> {
    cfg.prepare()?;
    let aois = read_aois(cfg.out(AOIS))?;
    let proj = cfg.frame()?;
    let plan_cfg = cfg.plan_config();
    let plans = aois
        .iter()
        .map(|a| plan_survey(a, &proj, &plan_cfg))
        .collect::<Result<Vec<_>, _>>()?;
    export_plans(&plans, cfg.out(PLANS))?;
    let summary: Vec<Value> = plans
        .iter()
        .map(|p| {
            json!({
                "aoi_id": p.aoi_id,
                "legs": p.legs.len(),
                "total_length_m": p.total_length_m,
                "est_duration_s": p.est_duration_s,
                "degenerate": p.degenerate,
            })
        })
        .collect();
    Ok(json!({
        "stage": "plan",
        "line_spacing_m": plan_cfg.line_spacing()?,
        "plans": summary,
        "outputs": [PLANS],
    }))
}

/// One sonar scan to grid: soundings file, optional sound velocity profile
/// and a label prefixed to the output file names.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanInput {
    pub soundings: PathBuf,
    pub svp: Option<PathBuf>,
    pub label: String,
}

impl ScanInput {
    pub fn layer_names(&self) -> [String; 4] {
        let l = &self.label;
        [
            format!("{l}_span.tif"),
            format!("{l}_bathy.tif"),
            format!("{l}_backscatter.tif"),
            format!("{l}_hard_targets.json"),
        ]
    }
}

/// Gated span, bathymetry and backscatter layers plus the hard-target report.
pub fn stage_sonar_grid(cfg: &PipelineConfig, scan: &ScanInput) -> Result<Value, PipelineError> {
    cfg.prepare()?;
    let gates = cfg.gate_config()?;
    let proj = cfg.frame()?;
    let soundings = match read_soundings(&scan.soundings)? {
        SoundingSet::Depth(s) => s,
        SoundingSet::TravelTime(raw) => {
            let svp = match &scan.svp {
                Some(path) => read_svp(path, SoundVelocityProfile::DEFAULT_NOMINAL_SPEED)?,
                None => {
                    warn!("sonar-grid: travel-time input without a profile, using a uniform nominal speed");
                    SoundVelocityProfile::uniform(SoundVelocityProfile::DEFAULT_NOMINAL_SPEED)?
                }
            };
            raw.iter().map(|r| svp_correct(r, &svp)).collect::<Result<Vec<_>, _>>()?
        }
    };
    let total = soundings.len();
    let (kept, counts) = gate_filter(&soundings, &gates);
    drop(soundings);
    let grid = build_span_grid(&kept, &proj, cfg.grid_res)?;
    let span = span_layer(&grid);
    let [span_name, bathy_name, back_name, hard_name] = scan.layer_names();
    write_geotiff(&span, cfg.out(&span_name))?;
    write_geotiff(&bathy_layer(&grid), cfg.out(&bathy_name))?;
    write_geotiff(&backscatter_layer(&grid), cfg.out(&back_name))?;
    let report = flag_hard_targets(&grid, cfg.hard_target_db);
    write_json(&cfg.out(&hard_name), &report)?;

    let values: Vec<f64> = (0..span.len()).filter_map(|i| span.value(i)).collect();
    let mean_span = values.iter().sum::<f64>() / values.len() as f64;
    info!("sonar-grid: {} of {total} soundings gridded into {} cells", counts.kept, values.len());
    Ok(json!({
        "stage": "sonar-grid",
        "label": scan.label,
        "soundings": total,
        "gates": counts,
        "width": grid.width(),
        "height": grid.height(),
        "occupied_cells": values.len(),
        "mean_span_m": mean_span,
        "hard_targets": report.targets.len(),
        "outputs": [span_name, bathy_name, back_name, hard_name],
    }))
}

/// Before/after comparison of two span rasters.
pub fn stage_diff(
    cfg: &PipelineConfig,
    before: &Path,
    after: &Path,
    region: Option<&Path>,
) -> Result<Value, PipelineError> {
    cfg.prepare()?;
    let before = read_geotiff(before)?;
    let after = read_geotiff(after)?;
    let boundary = region.map(read_boundary).transpose()?;
    let proj = match boundary {
        Some(_) => Some(cfg.frame()?),
        None => None,
    };
    let region = boundary.as_ref().map(|b| Region {
        boundary: b,
        proj: proj.as_ref(),
    });
    let report = harvest_diff(&before, &after, region)?;
    write_json(&cfg.out(HARVEST_REPORT), &report)?;
    info!("diff: mean {:.4} m over {} cells", report.mean_diff_m, report.valid_cell_count);
    let mut summary = serde_json::to_value(report).expect("report serializes");
    summary["stage"] = json!("diff");
    summary["outputs"] = json!([HARVEST_REPORT]);
    Ok(summary)
}

/// What [`stage_synth`] generates.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthRequest {
    pub scenario: Scenario,
    /// Simulate before and after scans along these plans.
    pub plans: Option<PathBuf>,
    pub sim: SonarSim,
    /// Write soundings as two-way travel times at this uniform speed.
    pub twtt_speed: Option<f64>,
}

fn write_sounding_file(set: &SoundingSet, path: &Path) -> Result<(), PipelineError> {
    let file = fs::File::create(path).map_err(io_err(path))?;
    write_soundings(set, BufWriter::new(file)).map_err(io_err(path))
}

/// Scenario bands, boundary and truth; with plans, also the before and
/// after sounding files.
pub fn stage_synth(cfg: &PipelineConfig, req: &SynthRequest) -> Result<Value, PipelineError> {
    cfg.prepare()?;
    let files = write_scenario(&req.scenario, &cfg.output_dir)?;
    let mut summary = json!({
        "stage": "synth",
        "patches": req.scenario.patches.len(),
        "band_dir": path_str(&files.band_dir),
        "boundary": path_str(&files.boundary),
        "truth": path_str(&files.truth),
    });
    if let Some(plan_path) = &req.plans {
        let plans = read_plans(plan_path)?;
        for (label, harvested) in [("before", false), ("after", true)] {
            let sim = SonarSim { harvested, ..req.sim };
            let soundings = generate_soundings(&req.scenario, &plans, &sim)?;
            let set = match req.twtt_speed {
                Some(speed) => SoundingSet::TravelTime(to_travel_time(&soundings, speed)),
                None => SoundingSet::Depth(soundings),
            };
            let path = cfg.out(&format!("soundings_{label}.csv"));
            write_sounding_file(&set, &path)?;
            summary[format!("soundings_{label}")] = json!({"path": path_str(&path), "count": set.len()});
        }
    }
    Ok(summary)
}

/// Optional sonar part of [`run_all`].
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunAllScans {
    pub before: Option<ScanInput>,
    pub after: Option<ScanInput>,
    pub region: Option<PathBuf>,
}

/// apa, aoi and plan; then gridding of each given scan and, with both
/// scans, the harvest comparison of their span layers.
pub fn run_all(cfg: &PipelineConfig, scans: &RunAllScans) -> Result<Value, PipelineError> {
    let mut stages = vec![stage_apa(cfg)?, stage_aoi(cfg)?, stage_plan(cfg)?];
    for scan in [&scans.before, &scans.after].into_iter().flatten() {
        stages.push(stage_sonar_grid(cfg, scan)?);
    }
    if let (Some(b), Some(a)) = (&scans.before, &scans.after) {
        let before = cfg.out(&b.layer_names()[0]);
        let after = cfg.out(&a.layer_names()[0]);
        stages.push(stage_diff(cfg, &before, &after, scans.region.as_deref())?);
    }
    Ok(json!({"stage": "run-all", "stages": stages}))
}
