use std::io::{Read, Write};
use std::path::Path;

use super::SonarError;

pub const DEPTH_HEADER: [&str; 6] = ["ping_id", "beam_id", "lon", "lat", "depth_m", "intensity_db"];
pub const TWTT_HEADER: [&str; 6] = ["ping_id", "beam_id", "lon", "lat", "twtt_s", "intensity_db"];

/// Georeferenced return with a corrected depth.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sounding {
    pub ping_id: u64,
    pub beam_id: u16,
    pub lon: f64,
    pub lat: f64,
    pub depth_m: f64,
    pub intensity_db: f64,
}

/// Return carrying two-way travel time instead of depth.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RawSounding {
    pub ping_id: u64,
    pub beam_id: u16,
    pub lon: f64,
    pub lat: f64,
    pub twtt_s: f64,
    pub intensity_db: f64,
}

/// Contents of a sounding file; the mode is fixed per file.
#[derive(Debug, Clone, PartialEq)]
pub enum SoundingSet {
    Depth(Vec<Sounding>),
    TravelTime(Vec<RawSounding>),
}

impl SoundingSet {
    pub fn len(&self) -> usize {
        match self {
            SoundingSet::Depth(v) => v.len(),
            SoundingSet::TravelTime(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

struct Columns {
    ping: usize,
    beam: usize,
    lon: usize,
    lat: usize,
    range: usize,
    intensity: usize,
    depth_mode: bool,
}

fn columns(header: &csv::StringRecord) -> Result<Columns, SonarError> {
    let names: Vec<&str> = header.iter().map(str::trim).collect();
    for name in &names {
        if !DEPTH_HEADER.contains(name) && !TWTT_HEADER.contains(name) {
            return Err(SonarError::Header(format!("unknown column {name:?}")));
        }
    }
    let find = |n: &str| names.iter().position(|c| *c == n);
    let (depth, twtt) = (find("depth_m"), find("twtt_s"));
    let (range, depth_mode) = match (depth, twtt) {
        (Some(_), Some(_)) => {
            return Err(SonarError::Header(
                "mixed mode: both depth_m and twtt_s columns present".into(),
            ))
        }
        (Some(d), None) => (d, true),
        (None, Some(t)) => (t, false),
        (None, None) => return Err(SonarError::Header("need a depth_m or twtt_s column".into())),
    };
    let need = |n: &'static str| find(n).ok_or_else(|| SonarError::Header(format!("missing column {n:?}")));
    if names.len() != 6 {
        return Err(SonarError::Header(format!("expected 6 columns, found {}", names.len())));
    }
    Ok(Columns {
        ping: need("ping_id")?,
        beam: need("beam_id")?,
        lon: need("lon")?,
        lat: need("lat")?,
        range,
        intensity: need("intensity_db")?,
        depth_mode,
    })
}

/// Parses a sounding CSV from any reader. Row numbers in diagnostics are
/// file line numbers (the header is line 1).
pub fn soundings_from_reader(reader: impl Read) -> Result<SoundingSet, SonarError> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let header = rdr
        .headers()
        .map_err(|e| SonarError::Header(e.to_string()))?
        .clone();
    let cols = columns(&header)?;
    let mut depth = Vec::new();
    let mut twtt = Vec::new();
    let mut record = csv::StringRecord::new();
    let mut line = 1u64;
    loop {
        match rdr.read_record(&mut record) {
            Ok(false) => break,
            Ok(true) => {}
            Err(e) => {
                return Err(SonarError::Row {
                    row: line + 1,
                    message: e.to_string(),
                })
            }
        }
        line = record.position().map_or(line + 1, |p| p.line());
        let err = |message: String| SonarError::Row { row: line, message };
        if record.len() != 6 {
            return Err(err(format!("expected 6 fields, found {}", record.len())));
        }
        let float = |i: usize, name: &str| -> Result<f64, SonarError> {
            let v: f64 = record[i]
                .trim()
                .parse()
                .map_err(|_| err(format!("{name} {:?} is not a number", &record[i])))?;
            if !v.is_finite() {
                return Err(err(format!("{name} is not finite")));
            }
            Ok(v)
        };
        let ping_id: u64 = record[cols.ping]
            .trim()
            .parse()
            .map_err(|_| err(format!("ping_id {:?} is not an integer", &record[cols.ping])))?;
        let beam_id: u16 = record[cols.beam]
            .trim()
            .parse()
            .map_err(|_| err(format!("beam_id {:?} is not an integer", &record[cols.beam])))?;
        if beam_id >= 256 {
            return Err(err(format!("beam_id {beam_id} outside 0..=255")));
        }
        let lon = float(cols.lon, "lon")?;
        let lat = float(cols.lat, "lat")?;
        if lon.abs() > 180.0 || lat.abs() > 90.0 {
            return Err(err(format!("position ({lon}, {lat}) out of range")));
        }
        let intensity_db = float(cols.intensity, "intensity_db")?;
        if cols.depth_mode {
            let depth_m = float(cols.range, "depth_m")?;
            if depth_m <= 0.0 {
                return Err(err(format!("depth_m {depth_m} must be positive")));
            }
            depth.push(Sounding {
                ping_id,
                beam_id,
                lon,
                lat,
                depth_m,
                intensity_db,
            });
        } else {
            let twtt_s = float(cols.range, "twtt_s")?;
            if twtt_s <= 0.0 {
                return Err(err(format!("twtt_s {twtt_s} must be positive")));
            }
            twtt.push(RawSounding {
                ping_id,
                beam_id,
                lon,
                lat,
                twtt_s,
                intensity_db,
            });
        }
    }
    Ok(if cols.depth_mode {
        SoundingSet::Depth(depth)
    } else {
        SoundingSet::TravelTime(twtt)
    })
}

pub fn read_soundings(path: impl AsRef<Path>) -> Result<SoundingSet, SonarError> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|source| SonarError::Io {
        path: path.display().to_string(),
        source,
    })?;
    soundings_from_reader(std::io::BufReader::new(file))
}

/// Writes soundings with the canonical header order. Floats use the
/// shortest round-trip representation, so output is deterministic.
pub fn write_soundings(set: &SoundingSet, mut out: impl Write) -> std::io::Result<()> {
    match set {
        SoundingSet::Depth(v) => {
            writeln!(out, "{}", DEPTH_HEADER.join(","))?;
            for s in v {
                writeln!(
                    out,
                    "{},{},{},{},{},{}",
                    s.ping_id, s.beam_id, s.lon, s.lat, s.depth_m, s.intensity_db
                )?;
            }
        }
        SoundingSet::TravelTime(v) => {
            writeln!(out, "{}", TWTT_HEADER.join(","))?;
            for s in v {
                writeln!(
                    out,
                    "{},{},{},{},{},{}",
                    s.ping_id, s.beam_id, s.lon, s.lat, s.twtt_s, s.intensity_db
                )?;
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<SoundingSet, SonarError> {
        soundings_from_reader(text.as_bytes())
    }

    #[test]
    fn depth_rows() {
        let set = parse(
            "ping_id,beam_id,lon,lat,depth_m,intensity_db\n\
             0,0,9.74,52.35,2.5,10\n0,1,9.7401,52.35,2.6,9.5\n1,255,9.74,52.3501,3.1,-4\n",
        )
        .unwrap();
        match set {
            SoundingSet::Depth(v) => {
                assert_eq!(v.len(), 3);
                assert_eq!(v[2].beam_id, 255);
                assert_eq!(v[1].depth_m, 2.6);
            }
            _ => panic!("expected depth mode"),
        }
    }

    #[test]
    fn columns_in_any_order() {
        let set = parse("lat,lon,ping_id,beam_id,intensity_db,twtt_s\n52.35,9.74,3,4,1.5,0.004\n").unwrap();
        assert_eq!(
            set,
            SoundingSet::TravelTime(vec![RawSounding {
                ping_id: 3,
                beam_id: 4,
                lon: 9.74,
                lat: 52.35,
                twtt_s: 0.004,
                intensity_db: 1.5
            }])
        );
    }

    #[test]
    fn mixed_mode_rejected() {
        let err = parse("ping_id,beam_id,lon,lat,depth_m,twtt_s\n").unwrap_err();
        assert!(err.to_string().contains("mixed mode"), "{err}");
    }

    #[test]
    fn unknown_column_rejected() {
        let err = parse("ping_id,beam_id,lon,lat,depth_m,quality\n").unwrap_err();
        assert!(err.to_string().contains("unknown column \"quality\""), "{err}");
    }

    #[test]
    fn negative_depth_names_row() {
        let err = parse("ping_id,beam_id,lon,lat,depth_m,intensity_db\n0,0,9.74,52.35,2,1\n0,1,9.74,52.35,-1,1\n")
            .unwrap_err();
        match err {
            SonarError::Row { row, message } => {
                assert_eq!(row, 3);
                assert!(message.contains("depth_m"));
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn non_finite_and_beam_range() {
        let err = parse("ping_id,beam_id,lon,lat,depth_m,intensity_db\n0,0,NaN,52.35,2,1\n").unwrap_err();
        assert!(err.to_string().contains("row 2"), "{err}");
        let err = parse("ping_id,beam_id,lon,lat,depth_m,intensity_db\n0,256,9.7,52.35,2,1\n").unwrap_err();
        assert!(err.to_string().contains("beam_id 256"), "{err}");
    }

    #[test]
    fn write_then_read() {
        let set = SoundingSet::Depth(vec![Sounding {
            ping_id: 7,
            beam_id: 12,
            lon: 9.747_512_345_678_9,
            lat: 52.346_000_000_1,
            depth_m: 2.123_456_789,
            intensity_db: 10.0,
        }]);
        let mut buf = Vec::new();
        write_soundings(&set, &mut buf).unwrap();
        assert_eq!(parse(std::str::from_utf8(&buf).unwrap()).unwrap(), set);
    }
}
