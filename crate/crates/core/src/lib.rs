//! Submerged aquatic vegetation (SAV) mapping for artificial lakes.
//!
//! The crate covers both halves of the survey workflow:
//!
//! * satellite side: red-edge/red normalized difference index, NDWI water
//!   masking, lake-boundary cropping and two-stage k-means that turns the
//!   index into areas of interest ([`spectral`], [`aoi`]);
//! * sonar side: sounding ingestion, sound velocity correction, depth gating
//!   and min/max gridding into a vegetation height (span) layer ([`sonar`]).
//!
//! [`mission`] plans lawnmower surveys over areas of interest and compares
//! before/after harvest scans, [`synthlab`] generates deterministic synthetic
//! scenes with ground truth, and [`pipeline`] wires everything together for
//! the command line tool.

pub mod aoi;
pub mod geo;
pub mod kmeans;
pub mod mission;
pub mod pipeline;
pub mod rng;
pub mod sonar;
pub mod spectral;
pub mod synthlab;
pub mod vector;

pub use geo::{AffineTransform, Crs, GeoRaster, LocalProjection, RasterData};
