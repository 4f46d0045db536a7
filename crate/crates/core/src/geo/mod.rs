//! Georeferenced rasters, affine pixel/world transforms, the local metric
//! frame and a minimal GeoTIFF codec.

mod geotiff;
mod projection;
mod raster;
mod transform;

pub use geotiff::{decode_geotiff, encode_geotiff, read_geotiff, write_geotiff, TiffError};
pub use projection::{LocalProjection, EARTH_RADIUS_M};
pub use raster::{Crs, GeoRaster, RasterData, RasterError};
pub use transform::{AffineTransform, TransformError};
