use std::path::Path;

use super::soundings::{RawSounding, Sounding};
use super::SonarError;

/// Layered sound speed profile: sample `i` holds from its depth down to the
/// next sample's depth; the first sample also covers the water above it and
/// the last extends without bound.
#[derive(Debug, Clone, PartialEq)]
pub struct SoundVelocityProfile {
    samples: Vec<(f64, f64)>,
    nominal_speed: f64,
}

impl SoundVelocityProfile {
    pub const DEFAULT_NOMINAL_SPEED: f64 = 1500.0;

    pub fn new(samples: Vec<(f64, f64)>, nominal_speed: f64) -> Result<Self, SonarError> {
        if samples.is_empty() {
            return Err(SonarError::Profile("needs at least one sample".into()));
        }
        for w in samples.windows(2) {
            if w[1].0 <= w[0].0 {
                return Err(SonarError::Profile(format!(
                    "depths must increase strictly ({} then {})",
                    w[0].0, w[1].0
                )));
            }
        }
        for &(d, c) in &samples {
            if !d.is_finite() || !(1300.0..=1700.0).contains(&c) {
                return Err(SonarError::Profile(format!(
                    "sample ({d}, {c}): speed must lie in [1300, 1700] m/s"
                )));
            }
        }
        if !(1300.0..=1700.0).contains(&nominal_speed) {
            return Err(SonarError::Profile(format!(
                "nominal speed {nominal_speed} outside [1300, 1700] m/s"
            )));
        }
        Ok(Self {
            samples,
            nominal_speed,
        })
    }

    pub fn uniform(speed: f64) -> Result<Self, SonarError> {
        Self::new(vec![(0.0, speed)], Self::DEFAULT_NOMINAL_SPEED)
    }

    pub fn samples(&self) -> &[(f64, f64)] {
        &self.samples
    }

    pub fn nominal_speed(&self) -> f64 {
        self.nominal_speed
    }

    /// Depth-weighted harmonic mean speed over `[0, depth]`.
    pub fn harmonic_mean_speed(&self, depth: f64) -> f64 {
        let mut slowness = 0.0; // integral of dz / c
        let mut layers = 0;
        let mut only_speed = self.samples[0].1;
        for (i, &(top, speed)) in self.samples.iter().enumerate() {
            let top = if i == 0 { 0.0 } else { top };
            let bottom = self.samples.get(i + 1).map_or(f64::INFINITY, |s| s.0);
            if top >= depth {
                break;
            }
            let thickness = bottom.min(depth) - top;
            if thickness > 0.0 {
                slowness += thickness / speed;
                layers += 1;
                only_speed = speed;
            }
        }
        if layers <= 1 {
            only_speed
        } else {
            depth / slowness
        }
    }
}

/// Converts travel time to depth with the profile's harmonic mean speed
/// over the nominal-speed depth (single pass).
pub fn svp_correct(s: &RawSounding, svp: &SoundVelocityProfile) -> Result<Sounding, SonarError> {
    if !(s.twtt_s > 0.0 && s.twtt_s.is_finite()) {
        return Err(SonarError::BadTravelTime(s.twtt_s));
    }
    let one_way = s.twtt_s / 2.0;
    let nominal_depth = one_way * svp.nominal_speed();
    Ok(Sounding {
        ping_id: s.ping_id,
        beam_id: s.beam_id,
        lon: s.lon,
        lat: s.lat,
        depth_m: one_way * svp.harmonic_mean_speed(nominal_depth),
        intensity_db: s.intensity_db,
    })
}

/// Reads a `depth_m,speed_mps` CSV.
pub fn read_svp(path: impl AsRef<Path>, nominal_speed: f64) -> Result<SoundVelocityProfile, SonarError> {
    let path = path.as_ref();
    let mut rdr = csv::Reader::from_path(path).map_err(|e| SonarError::Io {
        path: path.display().to_string(),
        source: std::io::Error::other(e.to_string()),
    })?;
    let header = rdr.headers().map_err(|e| SonarError::Header(e.to_string()))?.clone();
    let names: Vec<&str> = header.iter().map(str::trim).collect();
    if names != ["depth_m", "speed_mps"] {
        return Err(SonarError::Header(format!(
            "expected depth_m,speed_mps, found {}",
            names.join(",")
        )));
    }
    let mut samples = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let row = i as u64 + 2;
        let rec = rec.map_err(|e| SonarError::Row { row, message: e.to_string() })?;
        let parse = |j: usize| -> Result<f64, SonarError> {
            rec.get(j)
                .and_then(|v| v.trim().parse::<f64>().ok())
                .filter(|v| v.is_finite())
                .ok_or_else(|| SonarError::Row {
                    row,
                    message: format!("bad value {:?}", rec.get(j).unwrap_or("")),
                })
        };
        samples.push((parse(0)?, parse(1)?));
    }
    SoundVelocityProfile::new(samples, nominal_speed)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn raw(twtt: f64) -> RawSounding {
        RawSounding {
            ping_id: 0,
            beam_id: 0,
            lon: 9.74,
            lat: 52.35,
            twtt_s: twtt,
            intensity_db: 0.0,
        }
    }

    #[test]
    fn uniform_nominal_is_identity() {
        let svp = SoundVelocityProfile::uniform(1500.0).unwrap();
        for twtt in [0.0013, 0.004, 0.0066667, 0.01] {
            let s = svp_correct(&raw(twtt), &svp).unwrap();
            assert_eq!(s.depth_m, (twtt / 2.0) * 1500.0);
        }
    }

    #[test]
    fn uniform_slow_water() {
        let svp = SoundVelocityProfile::uniform(1480.0).unwrap();
        let s = svp_correct(&raw(0.004), &svp).unwrap();
        assert!((s.depth_m - 2.96).abs() < 1e-12);
    }

    #[test]
    fn two_layer_profile() {
        let svp = SoundVelocityProfile::new(vec![(0.0, 1480.0), (2.0, 1500.0)], 1500.0).unwrap();
        // 4 ms at 1500 m/s nominal reaches 3 m: 2 m at 1480 and 1 m at 1500
        let harmonic = 3.0 / (2.0 / 1480.0 + 1.0 / 1500.0);
        let s = svp_correct(&raw(0.004), &svp).unwrap();
        assert!((s.depth_m - 0.002 * harmonic).abs() < 1e-9);
        assert!((s.depth_m - 2.973_214_285_714_286).abs() < 1e-9);
    }

    #[test]
    fn rejects_bad_input() {
        let svp = SoundVelocityProfile::uniform(1500.0).unwrap();
        assert!(svp_correct(&raw(0.0), &svp).is_err());
        assert!(svp_correct(&raw(-1.0), &svp).is_err());
        assert!(SoundVelocityProfile::new(vec![], 1500.0).is_err());
        assert!(SoundVelocityProfile::new(vec![(0.0, 1200.0)], 1500.0).is_err());
        assert!(SoundVelocityProfile::new(vec![(1.0, 1500.0), (1.0, 1490.0)], 1500.0).is_err());
    }
}
