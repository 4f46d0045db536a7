use thiserror::Error;

use super::transform::AffineTransform;

#[derive(Debug, Error, PartialEq)]
pub enum RasterError {
    #[error("raster is empty ({width} x {height})")]
    Empty { width: usize, height: usize },
    #[error("sample count {got} does not match {width} x {height}")]
    SampleCount {
        width: usize,
        height: usize,
        got: usize,
    },
    #[error("sample {index} is {value}, neither nodata nor finite")]
    InvalidSample { index: usize, value: f64 },
    #[error("nodata value {0} is not representable for this sample type")]
    BadNodata(f64),
    #[error("invalid coordinate ({lon}, {lat})")]
    BadCoordinate { lon: f64, lat: f64 },
    #[error("grid mismatch: {left} vs {right}")]
    GridMismatch { left: String, right: String },
}

/// Coordinate reference recorded with a raster.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Crs {
    /// WGS84 longitude/latitude in degrees (EPSG:4326).
    Geographic,
    /// Meters east/north in an equirectangular frame about a reference
    /// point (see [`LocalProjection`](super::LocalProjection)). The reference
    /// itself is not stored in the file.
    LocalMetric,
}

#[derive(Debug, Clone, PartialEq)]
pub enum RasterData {
    Float32(Vec<f32>),
    Byte(Vec<u8>),
}

impl RasterData {
    pub fn len(&self) -> usize {
        match self {
            RasterData::Float32(v) => v.len(),
            RasterData::Byte(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// A north-up georeferenced grid stored row-major.
///
/// Float rasters use NaN as nodata unless an explicit finite sentinel is
/// given. Byte rasters are class maps and masks where 0 means "no data /
/// outside" and valid classes start at 1.
#[derive(Debug, Clone)]
pub struct GeoRaster {
    width: usize,
    height: usize,
    data: RasterData,
    transform: AffineTransform,
    crs: Crs,
    nodata: f64,
}

impl GeoRaster {
    pub fn new(
        width: usize,
        height: usize,
        data: RasterData,
        transform: AffineTransform,
        crs: Crs,
        nodata: f64,
    ) -> Result<Self, RasterError> {
        if width == 0 || height == 0 {
            return Err(RasterError::Empty { width, height });
        }
        if data.len() != width * height {
            return Err(RasterError::SampleCount {
                width,
                height,
                got: data.len(),
            });
        }
        match &data {
            RasterData::Float32(v) => {
                if !nodata.is_nan() && !nodata.is_finite() {
                    return Err(RasterError::BadNodata(nodata));
                }
                let nd = nodata as f32;
                for (index, &s) in v.iter().enumerate() {
                    let is_nodata = if nodata.is_nan() { s.is_nan() } else { s == nd };
                    if !is_nodata && !s.is_finite() {
                        return Err(RasterError::InvalidSample {
                            index,
                            value: s as f64,
                        });
                    }
                }
            }
            RasterData::Byte(_) => {
                if !(nodata.fract() == 0.0 && (0.0..=255.0).contains(&nodata)) {
                    return Err(RasterError::BadNodata(nodata));
                }
            }
        }
        Ok(Self {
            width,
            height,
            data,
            transform,
            crs,
            nodata,
        })
    }

    /// Float raster with NaN nodata.
    pub fn from_f32(
        width: usize,
        height: usize,
        samples: Vec<f32>,
        transform: AffineTransform,
        crs: Crs,
    ) -> Result<Self, RasterError> {
        Self::new(width, height, RasterData::Float32(samples), transform, crs, f64::NAN)
    }

    /// Byte raster with nodata 0.
    pub fn from_u8(
        width: usize,
        height: usize,
        samples: Vec<u8>,
        transform: AffineTransform,
        crs: Crs,
    ) -> Result<Self, RasterError> {
        Self::new(width, height, RasterData::Byte(samples), transform, crs, 0.0)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn len(&self) -> usize {
        self.width * self.height
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn data(&self) -> &RasterData {
        &self.data
    }

    pub fn transform(&self) -> &AffineTransform {
        &self.transform
    }

    pub fn crs(&self) -> Crs {
        self.crs
    }

    pub fn nodata(&self) -> f64 {
        self.nodata
    }

    pub fn as_f32(&self) -> Option<&[f32]> {
        match &self.data {
            RasterData::Float32(v) => Some(v),
            RasterData::Byte(_) => None,
        }
    }

    pub fn as_u8(&self) -> Option<&[u8]> {
        match &self.data {
            RasterData::Byte(v) => Some(v),
            RasterData::Float32(_) => None,
        }
    }

    /// Sample at a flat index, `None` when it is nodata.
    pub fn value(&self, index: usize) -> Option<f64> {
        match &self.data {
            RasterData::Float32(v) => {
                let s = v[index];
                if self.nodata.is_nan() {
                    (!s.is_nan()).then_some(s as f64)
                } else {
                    (s != self.nodata as f32).then_some(s as f64)
                }
            }
            RasterData::Byte(v) => {
                let s = v[index];
                (s as f64 != self.nodata).then_some(s as f64)
            }
        }
    }

    pub fn get(&self, col: usize, row: usize) -> Option<f64> {
        if col >= self.width || row >= self.height {
            return None;
        }
        self.value(row * self.width + col)
    }

    pub fn is_valid(&self, index: usize) -> bool {
        self.value(index).is_some()
    }

    pub fn valid_count(&self) -> usize {
        (0..self.len()).filter(|&i| self.is_valid(i)).count()
    }

    /// World coordinates of the center of pixel `(col, row)`.
    pub fn pixel_center(&self, col: usize, row: usize) -> (f64, f64) {
        self.transform.pixel_to_world(col as f64, row as f64)
    }

    /// Same size, transform and CRS.
    pub fn same_grid(&self, other: &GeoRaster) -> bool {
        self.width == other.width
            && self.height == other.height
            && self.transform == other.transform
            && self.crs == other.crs
    }

    pub fn check_same_grid(&self, other: &GeoRaster) -> Result<(), RasterError> {
        if self.same_grid(other) {
            Ok(())
        } else {
            Err(RasterError::GridMismatch {
                left: self.describe_grid(),
                right: other.describe_grid(),
            })
        }
    }

    /// Short human-readable grid description used in diagnostics.
    pub fn describe_grid(&self) -> String {
        let t = &self.transform;
        format!(
            "{}x{} @ ({}, {}) step ({}, {}) {:?}",
            self.width, self.height, t.origin_x, t.origin_y, t.pixel_width, t.pixel_height, self.crs
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit() -> AffineTransform {
        AffineTransform::new(0.0, 0.0, 1.0, 1.0).unwrap()
    }

    #[test]
    fn sample_count_checked() {
        let err = GeoRaster::from_f32(2, 2, vec![0.0; 3], unit(), Crs::Geographic).unwrap_err();
        assert!(matches!(err, RasterError::SampleCount { got: 3, .. }));
        assert!(GeoRaster::from_u8(0, 2, vec![], unit(), Crs::Geographic).is_err());
    }

    #[test]
    fn infinities_rejected() {
        let err = GeoRaster::from_f32(2, 1, vec![1.0, f32::INFINITY], unit(), Crs::Geographic)
            .unwrap_err();
        assert!(matches!(err, RasterError::InvalidSample { index: 1, .. }));
    }

    #[test]
    fn nodata_lookup() {
        let r = GeoRaster::from_f32(2, 2, vec![1.0, 2.0, f32::NAN, 4.0], unit(), Crs::Geographic)
            .unwrap();
        assert_eq!(r.get(0, 0), Some(1.0));
        assert_eq!(r.get(0, 1), None);
        assert_eq!(r.valid_count(), 3);

        let b = GeoRaster::from_u8(3, 1, vec![0, 1, 5], unit(), Crs::Geographic).unwrap();
        assert_eq!(b.value(0), None);
        assert_eq!(b.value(2), Some(5.0));
    }

    #[test]
    fn finite_float_sentinel() {
        let r = GeoRaster::new(
            2,
            1,
            RasterData::Float32(vec![-9999.0, 3.0]),
            unit(),
            Crs::LocalMetric,
            -9999.0,
        )
        .unwrap();
        assert_eq!(r.value(0), None);
        assert_eq!(r.value(1), Some(3.0));
    }
}
