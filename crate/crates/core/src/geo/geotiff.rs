//! Minimal GeoTIFF codec.
//!
//! The writer emits one fixed layout: little-endian classic TIFF, a single
//! IFD with the tags below in ascending order, a single uncompressed strip.
//!
//! ```text
//! offset 0     "II" 42 u32:8
//! offset 8     IFD: u16 count, count x 12-byte entries, u32 next = 0
//!              256 ImageWidth LONG, 257 ImageLength LONG,
//!              258 BitsPerSample SHORT (32 | 8), 259 Compression SHORT = 1,
//!              262 PhotometricInterpretation SHORT = 1, 273 StripOffsets LONG,
//!              277 SamplesPerPixel SHORT = 1, 278 RowsPerStrip LONG = height,
//!              279 StripByteCounts LONG, 339 SampleFormat SHORT (3 | 1),
//!              33550 ModelPixelScale DOUBLE[3], 33922 ModelTiepoint DOUBLE[6],
//!              34735 GeoKeyDirectory SHORT[12],
//!              [42113 GDAL_NODATA ASCII, only for non-NaN nodata]
//! then         out-of-line values in tag order, each padded to an even length
//! then         pixel data, row-major
//! ```
//!
//! The reader accepts that layout and any baseline little-endian TIFF that
//! stays inside the same feature set (multiple strips, SHORT or LONG size
//! tags, missing RowsPerStrip).

use std::path::{Path, PathBuf};

use thiserror::Error;

use super::raster::{Crs, GeoRaster, RasterData, RasterError};
use super::transform::AffineTransform;

const IMAGE_WIDTH: u16 = 256;
const IMAGE_LENGTH: u16 = 257;
const BITS_PER_SAMPLE: u16 = 258;
const COMPRESSION: u16 = 259;
const PHOTOMETRIC: u16 = 262;
const STRIP_OFFSETS: u16 = 273;
const SAMPLES_PER_PIXEL: u16 = 277;
const ROWS_PER_STRIP: u16 = 278;
const STRIP_BYTE_COUNTS: u16 = 279;
const PLANAR_CONFIGURATION: u16 = 284;
const TILE_WIDTH: u16 = 322;
const SAMPLE_FORMAT: u16 = 339;
const MODEL_PIXEL_SCALE: u16 = 33550;
const MODEL_TIEPOINT: u16 = 33922;
const GEO_KEY_DIRECTORY: u16 = 34735;
const GDAL_NODATA: u16 = 42113;

const TYPE_BYTE: u16 = 1;
const TYPE_ASCII: u16 = 2;
const TYPE_SHORT: u16 = 3;
const TYPE_LONG: u16 = 4;
const TYPE_DOUBLE: u16 = 12;

const GT_MODEL_TYPE: u16 = 1024;
const GEOGRAPHIC_TYPE: u16 = 2048;
const PROJECTED_CS_TYPE: u16 = 3072;
const MODEL_PROJECTED: u16 = 1;
const MODEL_GEOGRAPHIC: u16 = 2;
const EPSG_WGS84: u16 = 4326;
const USER_DEFINED: u16 = 32767;

#[derive(Debug, Error)]
pub enum TiffError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("not a TIFF file: bad magic {0:02x?}")]
    BadMagic([u8; 4]),
    #[error("big-endian (\"MM\") byte order is not supported")]
    BigEndian,
    #[error("Compression (259) = {0}: only uncompressed (1) is supported")]
    Compressed(u64),
    #[error("SamplesPerPixel (277) = {0}: only single-sample pixels are supported")]
    MultiSample(u64),
    #[error("missing required tag {name} ({tag})")]
    MissingTag { tag: u16, name: &'static str },
    #[error("missing geo tag {name} ({tag})")]
    MissingGeoTag { tag: u16, name: &'static str },
    #[error("unsupported {name} ({tag}): {detail}")]
    Unsupported {
        tag: u16,
        name: &'static str,
        detail: String,
    },
    #[error("malformed TIFF: {0}")]
    Malformed(String),
    #[error("raster larger than 4 GiB cannot be written as classic TIFF")]
    TooLarge,
    #[error(transparent)]
    Raster(#[from] RasterError),
}

fn tag_name(tag: u16) -> &'static str {
    match tag {
        IMAGE_WIDTH => "ImageWidth",
        IMAGE_LENGTH => "ImageLength",
        BITS_PER_SAMPLE => "BitsPerSample",
        COMPRESSION => "Compression",
        PHOTOMETRIC => "PhotometricInterpretation",
        STRIP_OFFSETS => "StripOffsets",
        SAMPLES_PER_PIXEL => "SamplesPerPixel",
        ROWS_PER_STRIP => "RowsPerStrip",
        STRIP_BYTE_COUNTS => "StripByteCounts",
        PLANAR_CONFIGURATION => "PlanarConfiguration",
        TILE_WIDTH => "TileWidth",
        SAMPLE_FORMAT => "SampleFormat",
        MODEL_PIXEL_SCALE => "ModelPixelScaleTag",
        MODEL_TIEPOINT => "ModelTiepointTag",
        GEO_KEY_DIRECTORY => "GeoKeyDirectoryTag",
        GDAL_NODATA => "GDAL_NODATA",
        _ => "tag",
    }
}

enum Value {
    Short(Vec<u16>),
    Long(Vec<u32>),
    Double(Vec<f64>),
    Ascii(Vec<u8>),
}

impl Value {
    fn type_code(&self) -> u16 {
        match self {
            Value::Short(_) => TYPE_SHORT,
            Value::Long(_) => TYPE_LONG,
            Value::Double(_) => TYPE_DOUBLE,
            Value::Ascii(_) => TYPE_ASCII,
        }
    }

    fn count(&self) -> u32 {
        match self {
            Value::Short(v) => v.len() as u32,
            Value::Long(v) => v.len() as u32,
            Value::Double(v) => v.len() as u32,
            Value::Ascii(v) => v.len() as u32,
        }
    }

    fn bytes(&self) -> Vec<u8> {
        match self {
            Value::Short(v) => v.iter().flat_map(|x| x.to_le_bytes()).collect(),
            Value::Long(v) => v.iter().flat_map(|x| x.to_le_bytes()).collect(),
            Value::Double(v) => v.iter().flat_map(|x| x.to_le_bytes()).collect(),
            Value::Ascii(v) => v.clone(),
        }
    }
}

/// Text written to GDAL_NODATA; shortest representation that parses back to
/// the same value.
fn nodata_text(nodata: f64) -> String {
    if nodata.fract() == 0.0 && nodata.abs() < 1e15 {
        format!("{}", nodata as i64)
    } else {
        format!("{nodata}")
    }
}

/// Serializes a raster into the fixed layout described in the module docs.
pub fn encode_geotiff(raster: &GeoRaster) -> Result<Vec<u8>, TiffError> {
    let (bits, format, payload): (u16, u16, Vec<u8>) = match raster.data() {
        RasterData::Float32(v) => (32, 3, v.iter().flat_map(|x| x.to_le_bytes()).collect()),
        RasterData::Byte(v) => (8, 1, v.clone()),
    };
    let t = raster.transform();
    let geo_keys: Vec<u16> = match raster.crs() {
        Crs::Geographic => vec![
            1, 1, 0, 2,
            GT_MODEL_TYPE, 0, 1, MODEL_GEOGRAPHIC,
            GEOGRAPHIC_TYPE, 0, 1, EPSG_WGS84,
        ],
        Crs::LocalMetric => vec![
            1, 1, 0, 2,
            GT_MODEL_TYPE, 0, 1, MODEL_PROJECTED,
            PROJECTED_CS_TYPE, 0, 1, USER_DEFINED,
        ],
    };
    let width = u32::try_from(raster.width()).map_err(|_| TiffError::TooLarge)?;
    let height = u32::try_from(raster.height()).map_err(|_| TiffError::TooLarge)?;
    let strip_len = u32::try_from(payload.len()).map_err(|_| TiffError::TooLarge)?;

    let mut entries: Vec<(u16, Value)> = vec![
        (IMAGE_WIDTH, Value::Long(vec![width])),
        (IMAGE_LENGTH, Value::Long(vec![height])),
        (BITS_PER_SAMPLE, Value::Short(vec![bits])),
        (COMPRESSION, Value::Short(vec![1])),
        (PHOTOMETRIC, Value::Short(vec![1])),
        (STRIP_OFFSETS, Value::Long(vec![0])), // patched below
        (SAMPLES_PER_PIXEL, Value::Short(vec![1])),
        (ROWS_PER_STRIP, Value::Long(vec![height])),
        (STRIP_BYTE_COUNTS, Value::Long(vec![strip_len])),
        (SAMPLE_FORMAT, Value::Short(vec![format])),
        (
            MODEL_PIXEL_SCALE,
            Value::Double(vec![t.pixel_width, t.pixel_height, 0.0]),
        ),
        (
            MODEL_TIEPOINT,
            Value::Double(vec![0.0, 0.0, 0.0, t.origin_x, t.origin_y, 0.0]),
        ),
        (GEO_KEY_DIRECTORY, Value::Short(geo_keys)),
    ];
    if !raster.nodata().is_nan() {
        let mut text = nodata_text(raster.nodata()).into_bytes();
        text.push(0);
        entries.push((GDAL_NODATA, Value::Ascii(text)));
    }

    let ifd_len = 2 + 12 * entries.len() + 4;
    let mut extra_offset = 8 + ifd_len;
    let mut extra = Vec::new();
    let mut inline: Vec<[u8; 4]> = Vec::with_capacity(entries.len());
    for (_, value) in &entries {
        let bytes = value.bytes();
        if bytes.len() <= 4 {
            let mut field = [0u8; 4];
            field[..bytes.len()].copy_from_slice(&bytes);
            inline.push(field);
        } else {
            let offset = u32::try_from(extra_offset).map_err(|_| TiffError::TooLarge)?;
            inline.push(offset.to_le_bytes());
            extra.extend_from_slice(&bytes);
            extra_offset += bytes.len();
            if bytes.len() % 2 == 1 {
                extra.push(0);
                extra_offset += 1;
            }
        }
    }
    let strip_offset = u32::try_from(extra_offset).map_err(|_| TiffError::TooLarge)?;
    u32::try_from(extra_offset + payload.len()).map_err(|_| TiffError::TooLarge)?;
    let strip_idx = entries.iter().position(|(t, _)| *t == STRIP_OFFSETS).unwrap();
    inline[strip_idx] = strip_offset.to_le_bytes();

    let mut out = Vec::with_capacity(extra_offset + payload.len());
    out.extend_from_slice(b"II");
    out.extend_from_slice(&42u16.to_le_bytes());
    out.extend_from_slice(&8u32.to_le_bytes());
    out.extend_from_slice(&(entries.len() as u16).to_le_bytes());
    for ((tag, value), field) in entries.iter().zip(&inline) {
        out.extend_from_slice(&tag.to_le_bytes());
        out.extend_from_slice(&value.type_code().to_le_bytes());
        out.extend_from_slice(&value.count().to_le_bytes());
        out.extend_from_slice(field);
    }
    out.extend_from_slice(&0u32.to_le_bytes());
    out.extend_from_slice(&extra);
    out.extend_from_slice(&payload);
    Ok(out)
}

pub fn write_geotiff(raster: &GeoRaster, path: impl AsRef<Path>) -> Result<(), TiffError> {
    let path = path.as_ref();
    let bytes = encode_geotiff(raster)?;
    std::fs::write(path, bytes).map_err(|source| TiffError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn read_geotiff(path: impl AsRef<Path>) -> Result<GeoRaster, TiffError> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|source| TiffError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    decode_geotiff(&bytes)
}

struct Entry {
    tag: u16,
    typ: u16,
    count: u32,
    field: [u8; 4],
}

struct Reader<'a> {
    bytes: &'a [u8],
}

impl<'a> Reader<'a> {
    fn slice(&self, offset: usize, len: usize) -> Result<&'a [u8], TiffError> {
        offset
            .checked_add(len)
            .and_then(|end| self.bytes.get(offset..end))
            .ok_or_else(|| {
                TiffError::Malformed(format!(
                    "range {offset}..{} outside file of {} bytes",
                    offset.saturating_add(len),
                    self.bytes.len()
                ))
            })
    }

    fn u16_at(&self, offset: usize) -> Result<u16, TiffError> {
        let b = self.slice(offset, 2)?;
        Ok(u16::from_le_bytes([b[0], b[1]]))
    }

    fn u32_at(&self, offset: usize) -> Result<u32, TiffError> {
        let b = self.slice(offset, 4)?;
        Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
    }

    /// Raw value bytes of an entry, whether stored inline or at an offset.
    fn value_bytes(&self, e: &Entry) -> Result<Vec<u8>, TiffError> {
        let size = match e.typ {
            TYPE_BYTE | TYPE_ASCII => 1,
            TYPE_SHORT => 2,
            TYPE_LONG => 4,
            TYPE_DOUBLE => 8,
            other => {
                return Err(TiffError::Unsupported {
                    tag: e.tag,
                    name: tag_name(e.tag),
                    detail: format!("field type {other}"),
                })
            }
        };
        let len = size * e.count as usize;
        if len <= 4 {
            Ok(e.field[..len].to_vec())
        } else {
            let offset = u32::from_le_bytes(e.field) as usize;
            Ok(self.slice(offset, len)?.to_vec())
        }
    }

    fn integers(&self, e: &Entry) -> Result<Vec<u64>, TiffError> {
        let data = self.value_bytes(e)?;
        match e.typ {
            TYPE_BYTE => Ok(data.iter().map(|&b| b as u64).collect()),
            TYPE_SHORT => Ok(data
                .chunks_exact(2)
                .map(|c| u16::from_le_bytes([c[0], c[1]]) as u64)
                .collect()),
            TYPE_LONG => Ok(data
                .chunks_exact(4)
                .map(|c| u32::from_le_bytes([c[0], c[1], c[2], c[3]]) as u64)
                .collect()),
            other => Err(TiffError::Unsupported {
                tag: e.tag,
                name: tag_name(e.tag),
                detail: format!("expected an integer field, found type {other}"),
            }),
        }
    }

    fn doubles(&self, e: &Entry) -> Result<Vec<f64>, TiffError> {
        if e.typ != TYPE_DOUBLE {
            return Err(TiffError::Unsupported {
                tag: e.tag,
                name: tag_name(e.tag),
                detail: format!("expected DOUBLE values, found type {}", e.typ),
            });
        }
        Ok(self
            .value_bytes(e)?
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }

    fn ascii(&self, e: &Entry) -> Result<String, TiffError> {
        if e.typ != TYPE_ASCII {
            return Err(TiffError::Unsupported {
                tag: e.tag,
                name: tag_name(e.tag),
                detail: format!("expected ASCII, found type {}", e.typ),
            });
        }
        let text: Vec<u8> = self
            .value_bytes(e)?
            .into_iter()
            .take_while(|&b| b != 0)
            .collect();
        String::from_utf8(text)
            .map_err(|_| TiffError::Malformed(format!("{} is not ASCII", tag_name(e.tag))))
    }
}

/// Parses a GeoTIFF from memory.
pub fn decode_geotiff(bytes: &[u8]) -> Result<GeoRaster, TiffError> {
    if bytes.len() < 8 {
        let mut magic = [0u8; 4];
        for (m, b) in magic.iter_mut().zip(bytes) {
            *m = *b;
        }
        return Err(TiffError::BadMagic(magic));
    }
    let magic: [u8; 4] = bytes[..4].try_into().unwrap();
    if &magic[..2] == b"MM" {
        return Err(TiffError::BigEndian);
    }
    if &magic[..2] != b"II" || u16::from_le_bytes([magic[2], magic[3]]) != 42 {
        return Err(TiffError::BadMagic(magic));
    }
    let reader = Reader { bytes };
    let ifd = reader.u32_at(4)? as usize;
    let count = reader.u16_at(ifd)? as usize;
    let mut entries = Vec::with_capacity(count);
    for i in 0..count {
        let base = ifd + 2 + 12 * i;
        let raw = reader.slice(base, 12)?;
        entries.push(Entry {
            tag: u16::from_le_bytes([raw[0], raw[1]]),
            typ: u16::from_le_bytes([raw[2], raw[3]]),
            count: u32::from_le_bytes([raw[4], raw[5], raw[6], raw[7]]),
            field: [raw[8], raw[9], raw[10], raw[11]],
        });
    }
    let find = |tag: u16| entries.iter().find(|e| e.tag == tag);
    let scalar = |tag: u16| -> Result<Option<u64>, TiffError> {
        match find(tag) {
            None => Ok(None),
            Some(e) => Ok(reader.integers(e)?.first().copied()),
        }
    };
    let required = |tag: u16| -> Result<u64, TiffError> {
        scalar(tag)?.ok_or(TiffError::MissingTag {
            tag,
            name: tag_name(tag),
        })
    };

    let width = required(IMAGE_WIDTH)? as usize;
    let height = required(IMAGE_LENGTH)? as usize;

    let compression = scalar(COMPRESSION)?.unwrap_or(1);
    if compression != 1 {
        return Err(TiffError::Compressed(compression));
    }
    let samples = scalar(SAMPLES_PER_PIXEL)?.unwrap_or(1);
    if samples != 1 {
        return Err(TiffError::MultiSample(samples));
    }
    if find(TILE_WIDTH).is_some() {
        return Err(TiffError::Unsupported {
            tag: TILE_WIDTH,
            name: tag_name(TILE_WIDTH),
            detail: "tiled layout".into(),
        });
    }
    if let Some(e) = find(BITS_PER_SAMPLE) {
        if e.count != 1 {
            return Err(TiffError::MultiSample(e.count as u64));
        }
    }
    let bits = required(BITS_PER_SAMPLE)?;
    let format = scalar(SAMPLE_FORMAT)?.unwrap_or(1);
    let sample_bytes = match (bits, format) {
        (32, 3) => 4,
        (8, 1) => 1,
        (8, _) | (32, _) => {
            return Err(TiffError::Unsupported {
                tag: SAMPLE_FORMAT,
                name: tag_name(SAMPLE_FORMAT),
                detail: format!("{format} with {bits}-bit samples"),
            })
        }
        _ => {
            return Err(TiffError::Unsupported {
                tag: BITS_PER_SAMPLE,
                name: tag_name(BITS_PER_SAMPLE),
                detail: format!("{bits} bits per sample"),
            })
        }
    };

    let offsets = reader.integers(find(STRIP_OFFSETS).ok_or(TiffError::MissingTag {
        tag: STRIP_OFFSETS,
        name: tag_name(STRIP_OFFSETS),
    })?)?;
    let counts = reader.integers(find(STRIP_BYTE_COUNTS).ok_or(TiffError::MissingTag {
        tag: STRIP_BYTE_COUNTS,
        name: tag_name(STRIP_BYTE_COUNTS),
    })?)?;
    if offsets.len() != counts.len() {
        return Err(TiffError::Malformed(format!(
            "{} strip offsets but {} strip byte counts",
            offsets.len(),
            counts.len()
        )));
    }
    let expected = width
        .checked_mul(height)
        .and_then(|n| n.checked_mul(sample_bytes))
        .ok_or_else(|| TiffError::Malformed("image dimensions overflow".into()))?;
    let mut payload = Vec::with_capacity(expected);
    for (&off, &len) in offsets.iter().zip(&counts) {
        payload.extend_from_slice(reader.slice(off as usize, len as usize)?);
    }
    if payload.len() != expected {
        return Err(TiffError::Malformed(format!(
            "strips hold {} bytes, expected {expected} for {width}x{height}",
            payload.len()
        )));
    }

    let geo = |tag: u16| {
        find(tag).ok_or(TiffError::MissingGeoTag {
            tag,
            name: tag_name(tag),
        })
    };
    let scale = reader.doubles(geo(MODEL_PIXEL_SCALE)?)?;
    let tie = reader.doubles(geo(MODEL_TIEPOINT)?)?;
    let keys = reader.integers(geo(GEO_KEY_DIRECTORY)?)?;
    if scale.len() < 2 {
        return Err(TiffError::Malformed("ModelPixelScaleTag (33550) needs 3 values".into()));
    }
    if tie.len() < 6 {
        return Err(TiffError::Malformed("ModelTiepointTag (33922) needs 6 values".into()));
    }
    let transform = AffineTransform::new(
        tie[3] - tie[0] * scale[0],
        tie[4] + tie[1] * scale[1],
        scale[0],
        scale[1],
    )
    .map_err(|e| TiffError::Malformed(format!("ModelPixelScaleTag (33550): {e}")))?;
    let crs = parse_geo_keys(&keys)?;

    let nodata = match find(GDAL_NODATA) {
        Some(e) => {
            let text = reader.ascii(e)?;
            let trimmed = text.trim();
            if trimmed.eq_ignore_ascii_case("nan") {
                f64::NAN
            } else {
                trimmed.parse::<f64>().map_err(|_| TiffError::Unsupported {
                    tag: GDAL_NODATA,
                    name: tag_name(GDAL_NODATA),
                    detail: format!("unparseable value {trimmed:?}"),
                })?
            }
        }
        None if sample_bytes == 1 => 0.0,
        None => f64::NAN,
    };

    let data = if sample_bytes == 4 {
        RasterData::Float32(
            payload
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
                .collect(),
        )
    } else {
        RasterData::Byte(payload)
    };
    Ok(GeoRaster::new(width, height, data, transform, crs, nodata)?)
}

fn parse_geo_keys(keys: &[u64]) -> Result<Crs, TiffError> {
    let bad = |detail: String| TiffError::Unsupported {
        tag: GEO_KEY_DIRECTORY,
        name: tag_name(GEO_KEY_DIRECTORY),
        detail,
    };
    if keys.len() < 4 {
        return Err(bad("directory header truncated".into()));
    }
    let n = keys[3] as usize;
    if keys.len() < 4 + 4 * n {
        return Err(bad(format!("declares {n} keys but holds {}", (keys.len() - 4) / 4)));
    }
    let lookup = |id: u16| {
        keys[4..4 + 4 * n]
            .chunks_exact(4)
            .find(|k| k[0] == id as u64 && k[1] == 0)
            .map(|k| k[3])
    };
    match lookup(GT_MODEL_TYPE) {
        Some(m) if m == MODEL_GEOGRAPHIC as u64 => match lookup(GEOGRAPHIC_TYPE) {
            None => Ok(Crs::Geographic),
            Some(c) if c == EPSG_WGS84 as u64 => Ok(Crs::Geographic),
            Some(c) => Err(bad(format!("GeographicTypeGeoKey {c}, only 4326 is supported"))),
        },
        Some(m) if m == MODEL_PROJECTED as u64 => match lookup(PROJECTED_CS_TYPE) {
            Some(c) if c == USER_DEFINED as u64 => Ok(Crs::LocalMetric),
            Some(c) => Err(bad(format!(
                "ProjectedCSTypeGeoKey {c}, only 32767 (local metric frame) is supported"
            ))),
            None => Err(bad("projected model without ProjectedCSTypeGeoKey".into())),
        },
        Some(m) => Err(bad(format!("GTModelTypeGeoKey {m}"))),
        None => Err(bad("no GTModelTypeGeoKey".into())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn geo_transform() -> AffineTransform {
        AffineTransform::new(9.0, 52.0, 0.0001, 0.0001).unwrap()
    }

    fn bits_equal(a: &GeoRaster, b: &GeoRaster) -> bool {
        match (a.data(), b.data()) {
            (RasterData::Float32(x), RasterData::Float32(y)) => {
                x.len() == y.len() && x.iter().zip(y).all(|(p, q)| p.to_bits() == q.to_bits())
            }
            (RasterData::Byte(x), RasterData::Byte(y)) => x == y,
            _ => false,
        }
    }

    #[test]
    fn float_round_trip_keeps_nan() {
        let r = GeoRaster::from_f32(2, 2, vec![1.0, 2.0, f32::NAN, 4.0], geo_transform(), Crs::Geographic)
            .unwrap();
        let back = decode_geotiff(&encode_geotiff(&r).unwrap()).unwrap();
        assert!(bits_equal(&r, &back));
        assert_eq!(back.transform(), r.transform());
        assert_eq!(back.crs(), Crs::Geographic);
        assert!(back.nodata().is_nan());
        assert_eq!(back.get(0, 1), None);
    }

    #[test]
    fn single_byte_pixel() {
        let r = GeoRaster::from_u8(1, 1, vec![255], geo_transform(), Crs::LocalMetric).unwrap();
        let bytes = encode_geotiff(&r).unwrap();
        let back = decode_geotiff(&bytes).unwrap();
        assert!(bits_equal(&r, &back));
        assert_eq!(back.nodata(), 0.0);
        assert_eq!(back.crs(), Crs::LocalMetric);
    }

    #[test]
    fn file_size_matches_layout() {
        // header 8 + IFD (2 + 13*12 + 4) + scale 24 + tiepoint 48 + geokeys 24
        let overhead = 8 + 2 + 13 * 12 + 4 + 3 * 8 + 6 * 8 + 12 * 2;
        let r = GeoRaster::from_f32(256, 257, vec![0.0; 256 * 257], geo_transform(), Crs::Geographic)
            .unwrap();
        assert_eq!(encode_geotiff(&r).unwrap().len(), overhead + 256 * 257 * 4);
    }

    #[test]
    fn tags_ascending_and_strip_offset_points_at_payload() {
        let r = GeoRaster::from_u8(3, 2, vec![1, 2, 3, 4, 5, 6], geo_transform(), Crs::Geographic)
            .unwrap();
        let bytes = encode_geotiff(&r).unwrap();
        assert_eq!(&bytes[..8], &[b'I', b'I', 42, 0, 8, 0, 0, 0]);
        let n = u16::from_le_bytes([bytes[8], bytes[9]]) as usize;
        assert_eq!(n, 14); // byte raster carries GDAL_NODATA "0"
        let tags: Vec<u16> = (0..n)
            .map(|i| u16::from_le_bytes([bytes[10 + 12 * i], bytes[11 + 12 * i]]))
            .collect();
        assert_eq!(
            tags,
            vec![256, 257, 258, 259, 262, 273, 277, 278, 279, 339, 33550, 33922, 34735, 42113]
        );
        assert_eq!(&bytes[bytes.len() - 6..], &[1, 2, 3, 4, 5, 6]);
    }

    #[test]
    fn finite_float_nodata_written_as_ascii() {
        let r = GeoRaster::new(
            2,
            1,
            RasterData::Float32(vec![-9999.5, 1.0]),
            geo_transform(),
            Crs::Geographic,
            -9999.5,
        )
        .unwrap();
        let back = decode_geotiff(&encode_geotiff(&r).unwrap()).unwrap();
        assert_eq!(back.nodata(), -9999.5);
        assert_eq!(back.value(0), None);
    }

    #[test]
    fn rejects_big_endian() {
        let err = decode_geotiff(b"MM\0*\0\0\0\x08").unwrap_err();
        assert!(matches!(err, TiffError::BigEndian));
        assert!(err.to_string().contains("big-endian"));
    }

    #[test]
    fn rejects_bad_magic() {
        assert!(matches!(decode_geotiff(b"GIF89a..").unwrap_err(), TiffError::BadMagic(_)));
        assert!(matches!(decode_geotiff(b"II").unwrap_err(), TiffError::BadMagic(_)));
    }

    fn patch_short(bytes: &mut [u8], tag: u16, value: u16) {
        let n = u16::from_le_bytes([bytes[8], bytes[9]]) as usize;
        for i in 0..n {
            let base = 10 + 12 * i;
            if u16::from_le_bytes([bytes[base], bytes[base + 1]]) == tag {
                bytes[base + 8..base + 10].copy_from_slice(&value.to_le_bytes());
                return;
            }
        }
        panic!("tag {tag} not present");
    }

    fn rename_tag(bytes: &mut [u8], tag: u16, new_tag: u16) {
        let n = u16::from_le_bytes([bytes[8], bytes[9]]) as usize;
        for i in 0..n {
            let base = 10 + 12 * i;
            if u16::from_le_bytes([bytes[base], bytes[base + 1]]) == tag {
                bytes[base..base + 2].copy_from_slice(&new_tag.to_le_bytes());
                return;
            }
        }
        panic!("tag {tag} not present");
    }

    fn sample() -> Vec<u8> {
        let r = GeoRaster::from_f32(4, 3, vec![0.5; 12], geo_transform(), Crs::Geographic).unwrap();
        encode_geotiff(&r).unwrap()
    }

    #[test]
    fn rejects_compressed() {
        let mut bytes = sample();
        patch_short(&mut bytes, COMPRESSION, 5);
        let err = decode_geotiff(&bytes).unwrap_err();
        assert!(matches!(err, TiffError::Compressed(5)));
        assert!(err.to_string().contains("Compression (259)"));
    }

    #[test]
    fn rejects_multi_sample() {
        let mut bytes = sample();
        patch_short(&mut bytes, SAMPLES_PER_PIXEL, 3);
        let err = decode_geotiff(&bytes).unwrap_err();
        assert!(err.to_string().contains("SamplesPerPixel (277)"));
    }

    #[test]
    fn rejects_missing_geo_tags() {
        for tag in [MODEL_PIXEL_SCALE, MODEL_TIEPOINT, GEO_KEY_DIRECTORY] {
            let mut bytes = sample();
            rename_tag(&mut bytes, tag, 65000);
            let err = decode_geotiff(&bytes).unwrap_err();
            match &err {
                TiffError::MissingGeoTag { tag: t, .. } => assert_eq!(*t, tag),
                other => panic!("unexpected {other}"),
            }
            assert!(err.to_string().contains(&format!("({tag})")));
        }
    }

    #[test]
    fn rejects_truncated_strip() {
        let bytes = sample();
        let err = decode_geotiff(&bytes[..bytes.len() - 4]).unwrap_err();
        assert!(matches!(err, TiffError::Malformed(_)));
    }

    #[test]
    fn reads_multi_strip_baseline_file() {
        // Hand-built 2x2 byte image, two strips, SHORT dimensions, no RowsPerStrip default
        // exercised with explicit value 1.
        let mut f = Vec::new();
        f.extend_from_slice(b"II\x2a\x00\x08\x00\x00\x00");
        let entries: Vec<(u16, u16, u32, u32)> = vec![
            (256, 3, 1, 2),
            (257, 3, 1, 2),
            (258, 3, 1, 8),
            (273, 4, 2, 0), // patched
            (278, 3, 1, 1),
            (279, 4, 2, 0), // patched
            (33550, 12, 3, 0),
            (33922, 12, 6, 0),
            (34735, 3, 8, 0),
        ];
        let ifd_end = 8 + 2 + 12 * entries.len() + 4;
        let offsets_at = ifd_end;
        let counts_at = offsets_at + 8;
        let scale_at = counts_at + 8;
        let tie_at = scale_at + 24;
        let keys_at = tie_at + 48;
        let data_at = keys_at + 16;
        f.extend_from_slice(&(entries.len() as u16).to_le_bytes());
        for (tag, typ, count, value) in entries {
            let v = match tag {
                273 => offsets_at as u32,
                279 => counts_at as u32,
                33550 => scale_at as u32,
                33922 => tie_at as u32,
                34735 => keys_at as u32,
                _ => value,
            };
            f.extend_from_slice(&tag.to_le_bytes());
            f.extend_from_slice(&typ.to_le_bytes());
            f.extend_from_slice(&count.to_le_bytes());
            if typ == 3 && count == 1 {
                f.extend_from_slice(&(v as u16).to_le_bytes());
                f.extend_from_slice(&[0, 0]);
            } else {
                f.extend_from_slice(&v.to_le_bytes());
            }
        }
        f.extend_from_slice(&0u32.to_le_bytes());
        for off in [data_at as u32, data_at as u32 + 2] {
            f.extend_from_slice(&off.to_le_bytes());
        }
        for len in [2u32, 2] {
            f.extend_from_slice(&len.to_le_bytes());
        }
        for d in [2.0f64, 3.0, 0.0] {
            f.extend_from_slice(&d.to_le_bytes());
        }
        // tie raster (1, 1) to world (12, 7)
        for d in [1.0f64, 1.0, 0.0, 12.0, 7.0, 0.0] {
            f.extend_from_slice(&d.to_le_bytes());
        }
        for k in [1u16, 1, 0, 1, 1024, 0, 1, 2] {
            f.extend_from_slice(&k.to_le_bytes());
        }
        f.extend_from_slice(&[9, 8, 7, 6]);
        let r = decode_geotiff(&f).unwrap();
        assert_eq!(r.as_u8().unwrap(), &[9, 8, 7, 6]);
        assert_eq!(r.transform().origin_x, 10.0);
        assert_eq!(r.transform().origin_y, 10.0);
        assert_eq!(r.crs(), Crs::Geographic);
        assert_eq!(r.value(0), Some(9.0));
    }
}
