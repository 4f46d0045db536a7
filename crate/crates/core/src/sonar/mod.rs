//! Multibeam sonar processing: sounding files, sound velocity correction,
//! depth gates, min/max gridding and the exported layers.
//!
//! Depths are meters below the water surface, positive down. Within a grid
//! cell the shallowest gated return is the canopy top and the deepest is the
//! lakebed; their difference is the vegetation height (span).

mod grid;
mod soundings;
mod svp;

pub use grid::{
    backscatter_layer, bathy_layer, build_span_grid, flag_hard_targets, gate_filter, span_layer,
    CellStats, GateConfig, GateCounts, HardTarget, HardTargetReport, SpanAccumulator, SpanGrid,
};
pub use soundings::{
    read_soundings, soundings_from_reader, write_soundings, RawSounding, Sounding, SoundingSet,
    DEPTH_HEADER, TWTT_HEADER,
};
pub use svp::{read_svp, svp_correct, SoundVelocityProfile};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum SonarError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("row {row}: {message}")]
    Row { row: u64, message: String },
    #[error("header: {0}")]
    Header(String),
    #[error("sound velocity profile: {0}")]
    Profile(String),
    #[error("two-way travel time must be positive, got {0}")]
    BadTravelTime(f64),
    #[error("invalid gates: need 0 < upper ({upper}) < lower ({lower})")]
    BadGates { upper: f64, lower: f64 },
    #[error("grid resolution must be positive, got {0}")]
    BadResolution(f64),
    #[error("no soundings after gating")]
    NoSoundings,
    #[error(transparent)]
    Raster(#[from] crate::geo::RasterError),
}
