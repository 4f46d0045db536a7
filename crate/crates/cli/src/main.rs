//! `savmap` command-line front end. Prints one JSON summary line on stdout
//! per successful run; logs go to stderr.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{error::ErrorKind, Args, Parser, Subcommand, ValueEnum};
use log::error;

use savmap::pipeline::{
    run_all, stage_aoi, stage_apa, stage_diff, stage_plan, stage_sonar_grid, stage_synth, PipelineConfig,
    PipelineError, RunAllScans, ScanInput, SynthRequest,
};
use savmap::synthlab::{read_scenario, Scenario, SonarSim};

/// Environment variable overriding the output directory of the config file.
const OUTPUT_DIR_ENV: &str = "SAVMAP_OUTPUT_DIR";

#[derive(Debug, Parser)]
#[command(name = "savmap", version, about = "Submerged aquatic vegetation mapping pipeline")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Settings shared by all subcommands; each overrides the config file.
#[derive(Debug, Default, Args)]
struct Common {
    /// JSON config file; flags take precedence over its values
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    output_dir: Option<PathBuf>,
    #[arg(long)]
    band_dir: Option<PathBuf>,
    /// Lake boundary GeoJSON
    #[arg(long)]
    boundary: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Intensity classes
    #[arg(long)]
    k_i: Option<usize>,
    /// Maximum number of areas of interest
    #[arg(long)]
    k_a: Option<usize>,
    #[arg(long)]
    min_members: Option<usize>,
    #[arg(long, allow_negative_numbers = true)]
    ndwi_threshold: Option<f64>,
    /// Upper depth gate in meters
    #[arg(long)]
    gate_upper: Option<f64>,
    /// Lower depth gate in meters
    #[arg(long)]
    gate_lower: Option<f64>,
    /// Sonar grid resolution in meters
    #[arg(long)]
    grid_res: Option<f64>,
    /// Swath aperture in degrees
    #[arg(long)]
    aperture: Option<f64>,
    /// Survey speed in knots
    #[arg(long)]
    speed_kn: Option<f64>,
    /// Depth used for line spacing, meters
    #[arg(long)]
    nominal_depth: Option<f64>,
    /// Swath overlap fraction in [0, 1)
    #[arg(long)]
    overlap: Option<f64>,
    /// Backscatter level flagged as a hard target, dB
    #[arg(long, allow_negative_numbers = true)]
    hard_target_db: Option<f64>,
    /// Local frame origin longitude (default: boundary center)
    #[arg(long, allow_negative_numbers = true)]
    ref_lon: Option<f64>,
    /// Local frame origin latitude (default: boundary center)
    #[arg(long, allow_negative_numbers = true)]
    ref_lat: Option<f64>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Preset {
    /// 1.5 km lake with randomly placed patches
    Patches,
    /// One 60 m patch with a 1.3 m canopy
    Harvest,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// SAV index cropped to the lake and masked to water
    Apa(Common),
    /// Intensity classes and areas of interest
    Aoi(Common),
    /// Survey plans for every area of interest
    Plan(Common),
    /// Span, bathymetry and backscatter layers from a soundings file
    SonarGrid {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        soundings: PathBuf,
        /// Sound velocity profile CSV for travel-time input
        #[arg(long)]
        svp: Option<PathBuf>,
        /// Prefix of the output layer names
        #[arg(long, default_value = "scan")]
        label: String,
    },
    /// Before/after comparison of two span rasters
    Diff {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        before: PathBuf,
        #[arg(long)]
        after: PathBuf,
        /// Restrict the comparison to this polygon
        #[arg(long)]
        region: Option<PathBuf>,
    },
    /// Synthetic scenario: bands, boundary, truth and optional soundings
    Synth {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value = "patches")]
        preset: Preset,
        /// Patch count for the patches preset
        #[arg(long, default_value_t = 3)]
        patches: usize,
        /// Scenario JSON (or a truth.json) instead of a preset
        #[arg(long, conflicts_with = "preset")]
        scenario: Option<PathBuf>,
        /// Simulate before and after scans along these plans
        #[arg(long)]
        plans: Option<PathBuf>,
        #[arg(long, default_value_t = 0.5)]
        ping_spacing: f64,
        /// Write two-way travel times at this sound speed instead of depths
        #[arg(long)]
        twtt_speed: Option<f64>,
    },
    /// apa, aoi and plan; with soundings also sonar-grid and diff
    RunAll {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        before_soundings: Option<PathBuf>,
        #[arg(long, requires = "before_soundings")]
        after_soundings: Option<PathBuf>,
        #[arg(long)]
        svp: Option<PathBuf>,
        #[arg(long)]
        region: Option<PathBuf>,
    },
}

impl Common {
    /// Defaults, then the config file, then the environment, then flags.
    fn resolve(&self) -> Result<PipelineConfig, PipelineError> {
        let mut cfg = match &self.config {
            Some(path) => PipelineConfig::from_file(path)?,
            None => PipelineConfig::default(),
        };
        if let Some(dir) = std::env::var_os(OUTPUT_DIR_ENV) {
            cfg.output_dir = PathBuf::from(dir);
        }
        macro_rules! set {
            ($($flag:ident => $field:ident),* $(,)?) => {
                $(if let Some(v) = &self.$flag { cfg.$field = v.clone().into(); })*
            };
        }
        set!(
            output_dir => output_dir,
            seed => seed,
            k_i => k_i,
            k_a => k_a,
            min_members => min_members,
            ndwi_threshold => ndwi_threshold,
            grid_res => grid_res,
            aperture => swath_aperture,
            speed_kn => survey_speed_kn,
            nominal_depth => nominal_depth_m,
            overlap => overlap_frac,
            hard_target_db => hard_target_db,
            band_dir => band_dir,
            boundary => boundary_path,
            ref_lon => ref_lon,
            ref_lat => ref_lat,
        );
        if let Some(v) = self.gate_upper {
            cfg.gates.0 = v;
        }
        if let Some(v) = self.gate_lower {
            cfg.gates.1 = v;
        }
        Ok(cfg)
    }
}

fn run(command: Command) -> Result<serde_json::Value, PipelineError> {
    match command {
        Command::Apa(c) => stage_apa(&c.resolve()?),
        Command::Aoi(c) => stage_aoi(&c.resolve()?),
        Command::Plan(c) => stage_plan(&c.resolve()?),
        Command::SonarGrid {
            common,
            soundings,
            svp,
            label,
        } => stage_sonar_grid(&common.resolve()?, &ScanInput { soundings, svp, label }),
        Command::Diff {
            common,
            before,
            after,
            region,
        } => stage_diff(&common.resolve()?, &before, &after, region.as_deref()),
        Command::Synth {
            common,
            preset,
            patches,
            scenario,
            plans,
            ping_spacing,
            twtt_speed,
        } => {
            let cfg = common.resolve()?;
            let scenario = match (scenario, preset) {
                (Some(path), _) => read_scenario(&path)?,
                (None, Preset::Patches) => Scenario::random_patches(cfg.seed, patches)?,
                (None, Preset::Harvest) => Scenario::harvest(cfg.seed),
            };
            let sim = SonarSim {
                ping_spacing_m: ping_spacing,
                aperture_deg: cfg.swath_aperture,
                ..SonarSim::default()
            };
            stage_synth(
                &cfg,
                &SynthRequest {
                    scenario,
                    plans,
                    sim,
                    twtt_speed,
                },
            )
        }
        Command::RunAll {
            common,
            before_soundings,
            after_soundings,
            svp,
            region,
        } => {
            let scan = |path: Option<PathBuf>, label: &str| {
                path.map(|soundings| ScanInput {
                    soundings,
                    svp: svp.clone(),
                    label: label.to_string(),
                })
            };
            let scans = RunAllScans {
                before: scan(before_soundings, "before"),
                after: scan(after_soundings, "after"),
                region,
            };
            run_all(&common.resolve()?, &scans)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    match run(cli.command) {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            error!("{e}");
            ExitCode::from(2)
        }
    }
}
