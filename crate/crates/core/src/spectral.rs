//! Band ingestion, the red-edge/red SAV index (green channel of the APA
//! composite) and NDWI water masking.

use std::collections::BTreeMap;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geo::{read_geotiff, GeoRaster, RasterData, RasterError, TiffError};

#[derive(Debug, Error)]
pub enum SpectralError {
    #[error("band not found: {band} ({detail})")]
    BandNotFound { band: String, detail: String },
    #[error("band {band}: {source}")]
    BandRead {
        band: String,
        #[source]
        source: TiffError,
    },
    #[error("band grid mismatch: {left_band} is {left}, {right_band} is {right}")]
    GridMismatch {
        left_band: String,
        left: String,
        right_band: String,
        right: String,
    },
    #[error("band {band} must be float32 reflectance")]
    NotFloat { band: String },
    #[error("band {band}: reflectance {value} at pixel {index} outside [0, 1]")]
    OutOfRange {
        band: String,
        index: usize,
        value: f64,
    },
    #[error(transparent)]
    Raster(#[from] RasterError),
}

/// Sentinel-2 band identifiers for the four inputs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct BandIds {
    pub red: String,
    pub red_edge: String,
    pub green: String,
    pub nir: String,
}

impl Default for BandIds {
    fn default() -> Self {
        Self {
            red: "B04".into(),
            red_edge: "B05".into(),
            green: "B03".into(),
            nir: "B08".into(),
        }
    }
}

/// Source of band rasters.
pub trait BandProvider {
    fn load(&self, band: &str) -> Result<GeoRaster, SpectralError>;
}

/// Reads `<dir>/<band>.tif`, with per-band filename overrides.
#[derive(Debug, Clone)]
pub struct DirectoryProvider {
    dir: PathBuf,
    overrides: BTreeMap<String, String>,
}

impl DirectoryProvider {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self {
            dir: dir.into(),
            overrides: BTreeMap::new(),
        }
    }

    pub fn with_file(mut self, band: &str, file_name: &str) -> Self {
        self.overrides.insert(band.to_string(), file_name.to_string());
        self
    }

    pub fn path_for(&self, band: &str) -> PathBuf {
        match self.overrides.get(band) {
            Some(name) => self.dir.join(name),
            None => self.dir.join(format!("{band}.tif")),
        }
    }
}

impl BandProvider for DirectoryProvider {
    fn load(&self, band: &str) -> Result<GeoRaster, SpectralError> {
        let path = self.path_for(band);
        if !path.is_file() {
            return Err(SpectralError::BandNotFound {
                band: band.to_string(),
                detail: format!("no file {}", path.display()),
            });
        }
        read_geotiff(&path).map_err(|source| SpectralError::BandRead {
            band: band.to_string(),
            source,
        })
    }
}

/// Four co-registered float reflectance rasters.
#[derive(Debug, Clone)]
pub struct BandSet {
    red: GeoRaster,
    red_edge: GeoRaster,
    green: GeoRaster,
    nir: GeoRaster,
}

impl BandSet {
    pub fn new(
        red: GeoRaster,
        red_edge: GeoRaster,
        green: GeoRaster,
        nir: GeoRaster,
    ) -> Result<Self, SpectralError> {
        Self::with_ids(&BandIds::default(), red, red_edge, green, nir)
    }

    fn with_ids(
        ids: &BandIds,
        red: GeoRaster,
        red_edge: GeoRaster,
        green: GeoRaster,
        nir: GeoRaster,
    ) -> Result<Self, SpectralError> {
        let bands = [
            (&ids.red, &red),
            (&ids.red_edge, &red_edge),
            (&ids.green, &green),
            (&ids.nir, &nir),
        ];
        for (name, raster) in bands {
            let samples = raster
                .as_f32()
                .ok_or_else(|| SpectralError::NotFloat { band: name.clone() })?;
            for (index, _) in samples.iter().enumerate() {
                if let Some(v) = raster.value(index) {
                    if !(0.0..=1.0).contains(&v) {
                        return Err(SpectralError::OutOfRange {
                            band: name.clone(),
                            index,
                            value: v,
                        });
                    }
                }
            }
        }
        for (name, raster) in &bands[1..] {
            if !raster.same_grid(&red) {
                return Err(SpectralError::GridMismatch {
                    left_band: ids.red.clone(),
                    left: red.describe_grid(),
                    right_band: (*name).clone(),
                    right: raster.describe_grid(),
                });
            }
        }
        Ok(Self {
            red,
            red_edge,
            green,
            nir,
        })
    }

    pub fn red(&self) -> &GeoRaster {
        &self.red
    }
    pub fn red_edge(&self) -> &GeoRaster {
        &self.red_edge
    }
    pub fn green(&self) -> &GeoRaster {
        &self.green
    }
    pub fn nir(&self) -> &GeoRaster {
        &self.nir
    }
}

pub fn load_bands(provider: &dyn BandProvider, ids: &BandIds) -> Result<BandSet, SpectralError> {
    let red = provider.load(&ids.red)?;
    let red_edge = provider.load(&ids.red_edge)?;
    let green = provider.load(&ids.green)?;
    let nir = provider.load(&ids.nir)?;
    BandSet::with_ids(ids, red, red_edge, green, nir)
}

/// `(a - b) / (a + b)`, `None` when the denominator is zero.
pub fn normalized_difference(a: f64, b: f64) -> Option<f64> {
    let sum = a + b;
    if sum == 0.0 || !sum.is_finite() {
        None
    } else {
        Some((a - b) / sum)
    }
}

/// Maps an index in `[-1, 1]` to `0..=255`, rounding half away from zero.
pub fn scale_to_byte(raw: f64) -> u8 {
    (255.0 * (raw + 1.0) / 2.0).round().clamp(0.0, 255.0) as u8
}

/// SAV index: the float index and its 0–255 scaled form.
///
/// `raw` carries validity (NaN nodata). `scaled` mirrors it with 0 at
/// nodata pixels; since 0 is also a legal scaled value (raw ≈ −1), use
/// [`scaled_at`](Self::scaled_at) rather than the byte raster's nodata.
#[derive(Debug, Clone)]
pub struct SavIndexRaster {
    pub raw: GeoRaster,
    pub scaled: GeoRaster,
}

impl SavIndexRaster {
    /// Rebuilds the scaled layer from a raw index raster.
    pub fn from_raw(raw: GeoRaster) -> Result<Self, SpectralError> {
        let samples = raw.as_f32().ok_or_else(|| SpectralError::NotFloat {
            band: "index".into(),
        })?;
        let scaled: Vec<u8> = samples
            .iter()
            .enumerate()
            .map(|(i, &v)| if raw.is_valid(i) { scale_to_byte(v as f64) } else { 0 })
            .collect();
        let scaled = GeoRaster::from_u8(raw.width(), raw.height(), scaled, *raw.transform(), raw.crs())?;
        Ok(Self { raw, scaled })
    }

    pub fn scaled_at(&self, index: usize) -> Option<u8> {
        self.raw
            .is_valid(index)
            .then(|| self.scaled.as_u8().expect("scaled layer is bytes")[index])
    }

    pub fn len(&self) -> usize {
        self.raw.len()
    }

    pub fn is_empty(&self) -> bool {
        self.raw.is_empty()
    }
}

fn band_pair_map(
    a: &GeoRaster,
    b: &GeoRaster,
    f: impl Fn(f64, f64) -> Option<f32>,
) -> Vec<f32> {
    (0..a.len())
        .map(|i| match (a.value(i), b.value(i)) {
            (Some(x), Some(y)) => f(x, y).unwrap_or(f32::NAN),
            _ => f32::NAN,
        })
        .collect()
}

/// `(red_edge - red) / (red_edge + red)` per pixel. The raw value is stored
/// as f32 and the scaled byte is derived from that stored value.
pub fn sav_index(bands: &BandSet) -> SavIndexRaster {
    let raw = band_pair_map(&bands.red_edge, &bands.red, |re, r| {
        normalized_difference(re, r).map(|v| v as f32)
    });
    let grid = &bands.red;
    let raw = GeoRaster::from_f32(grid.width(), grid.height(), raw, *grid.transform(), grid.crs())
        .expect("index values are finite or NaN");
    SavIndexRaster::from_raw(raw).expect("raw index is float")
}

/// NDWI `(green - nir) / (green + nir)` as f32, NaN where undefined.
pub fn ndwi(bands: &BandSet) -> GeoRaster {
    let values = band_pair_map(&bands.green, &bands.nir, |g, n| {
        normalized_difference(g, n).map(|v| v as f32)
    });
    let grid = &bands.green;
    GeoRaster::from_f32(grid.width(), grid.height(), values, *grid.transform(), grid.crs())
        .expect("NDWI values are finite or NaN")
}

/// 1 where NDWI > `threshold`, 0 for land and for undefined NDWI (byte
/// rasters reserve 0 for "outside").
pub fn water_mask(bands: &BandSet, threshold: f64) -> GeoRaster {
    let index = ndwi(bands);
    let mask: Vec<u8> = (0..index.len())
        .map(|i| match index.value(i) {
            Some(v) if v > threshold => 1,
            _ => 0,
        })
        .collect();
    GeoRaster::from_u8(index.width(), index.height(), mask, *index.transform(), index.crs())
        .expect("mask grid matches bands")
}

/// Clears the index wherever either mask is 0 (or nodata).
pub fn apply_masks(
    index: &SavIndexRaster,
    water: &GeoRaster,
    lake: &GeoRaster,
) -> Result<SavIndexRaster, SpectralError> {
    index.raw.check_same_grid(water)?;
    index.raw.check_same_grid(lake)?;
    let samples = match index.raw.data() {
        RasterData::Float32(v) => v,
        RasterData::Byte(_) => {
            return Err(SpectralError::NotFloat {
                band: "index".into(),
            })
        }
    };
    let keep = |m: &GeoRaster, i: usize| matches!(m.value(i), Some(v) if v != 0.0);
    let masked: Vec<f32> = samples
        .iter()
        .enumerate()
        .map(|(i, &v)| if keep(water, i) && keep(lake, i) { v } else { f32::NAN })
        .collect();
    let raw = GeoRaster::from_f32(
        index.raw.width(),
        index.raw.height(),
        masked,
        *index.raw.transform(),
        index.raw.crs(),
    )?;
    SavIndexRaster::from_raw(raw)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geo::{AffineTransform, Crs};

    fn grid() -> AffineTransform {
        AffineTransform::new(9.7, 52.36, 0.0001, 0.0001).unwrap()
    }

    fn band(values: &[f32]) -> GeoRaster {
        GeoRaster::from_f32(values.len(), 1, values.to_vec(), grid(), Crs::Geographic).unwrap()
    }

    fn bands(red: &[f32], red_edge: &[f32]) -> BandSet {
        let n = red.len();
        BandSet::new(band(red), band(red_edge), band(&vec![0.06; n]), band(&vec![0.02; n])).unwrap()
    }

    #[test]
    fn index_examples() {
        let s = sav_index(&bands(&[0.02, 0.05, 0.0, 0.0], &[0.06, 0.05, 0.1, 0.0]));
        assert_eq!(s.raw.value(0), Some(0.5));
        assert_eq!(s.scaled_at(0), Some(191));
        assert_eq!(s.raw.value(1), Some(0.0));
        assert_eq!(s.scaled_at(1), Some(128));
        assert_eq!(s.raw.value(2), Some(1.0));
        assert_eq!(s.scaled_at(2), Some(255));
        assert_eq!(s.raw.value(3), None);
        assert_eq!(s.scaled_at(3), None);
    }

    #[test]
    fn nodata_propagates() {
        let s = sav_index(&bands(&[f32::NAN, 0.02], &[0.05, f32::NAN]));
        assert_eq!(s.raw.valid_count(), 0);
    }

    #[test]
    fn water_mask_examples() {
        let b = BandSet::new(
            band(&[0.1; 4]),
            band(&[0.1; 4]),
            band(&[0.05, 0.02, 0.04, 0.0]),
            band(&[0.01, 0.20, 0.04, 0.0]),
        )
        .unwrap();
        assert_eq!(water_mask(&b, 0.0).as_u8().unwrap(), &[1, 0, 0, 0]);
        let ndwi = ndwi(&b);
        assert!((ndwi.value(0).unwrap() - 0.666_666_6).abs() < 1e-6);
        assert_eq!(ndwi.value(3), None);
    }

    #[test]
    fn rejects_mismatched_grids() {
        let coarse = GeoRaster::from_f32(
            1,
            1,
            vec![0.05],
            AffineTransform::new(9.7, 52.36, 0.0002, 0.0002).unwrap(),
            Crs::Geographic,
        )
        .unwrap();
        let err = BandSet::new(band(&[0.05]), coarse, band(&[0.05]), band(&[0.05])).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("band grid mismatch"), "{msg}");
        assert!(msg.contains("B04") && msg.contains("B05"), "{msg}");
    }

    #[test]
    fn rejects_out_of_range_reflectance() {
        let err = BandSet::new(band(&[1.5]), band(&[0.1]), band(&[0.1]), band(&[0.1])).unwrap_err();
        assert!(matches!(err, SpectralError::OutOfRange { .. }));
    }

    #[test]
    fn masks() {
        let s = sav_index(&bands(&[0.02; 4], &[0.06; 4]));
        let ones = GeoRaster::from_u8(4, 1, vec![1; 4], grid(), Crs::Geographic).unwrap();
        let zeros = GeoRaster::from_u8(4, 1, vec![0; 4], grid(), Crs::Geographic).unwrap();
        let same = apply_masks(&s, &ones, &ones).unwrap();
        assert_eq!(same.raw.as_f32(), s.raw.as_f32());
        let none = apply_masks(&s, &ones, &zeros).unwrap();
        assert_eq!(none.raw.valid_count(), 0);
        let other = GeoRaster::from_u8(2, 2, vec![1; 4], grid(), Crs::Geographic).unwrap();
        assert!(apply_masks(&s, &other, &ones).is_err());
    }
}
