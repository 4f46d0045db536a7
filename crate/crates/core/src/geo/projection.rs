use serde::{Deserialize, Serialize};

use super::raster::RasterError;

pub const EARTH_RADIUS_M: f64 = 6_378_137.0;

/// Equirectangular metric frame centred on a reference point.
///
/// `x` points east and `y` north, both in meters. Over a lake a few
/// kilometres across the distortion stays below a centimetre.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocalProjection {
    pub lon0: f64,
    pub lat0: f64,
    cos_lat0: f64,
}

impl LocalProjection {
    pub fn new(lon0: f64, lat0: f64) -> Result<Self, RasterError> {
        if !lon0.is_finite() || !lat0.is_finite() || lat0.abs() >= 89.0 || lon0.abs() > 180.0 {
            return Err(RasterError::BadCoordinate { lon: lon0, lat: lat0 });
        }
        Ok(Self {
            lon0,
            lat0,
            cos_lat0: lat0.to_radians().cos(),
        })
    }

    pub fn earth_radius(&self) -> f64 {
        EARTH_RADIUS_M
    }

    pub fn forward(&self, lon: f64, lat: f64) -> Result<(f64, f64), RasterError> {
        if !lon.is_finite() || !lat.is_finite() || lat.abs() >= 89.0 {
            return Err(RasterError::BadCoordinate { lon, lat });
        }
        Ok(self.forward_unchecked(lon, lat))
    }

    pub(crate) fn forward_unchecked(&self, lon: f64, lat: f64) -> (f64, f64) {
        (
            EARTH_RADIUS_M * (lon - self.lon0).to_radians() * self.cos_lat0,
            EARTH_RADIUS_M * (lat - self.lat0).to_radians(),
        )
    }

    pub fn inverse(&self, x: f64, y: f64) -> (f64, f64) {
        (
            self.lon0 + (x / (EARTH_RADIUS_M * self.cos_lat0)).to_degrees(),
            self.lat0 + (y / EARTH_RADIUS_M).to_degrees(),
        )
    }

    /// Meters per degree of longitude and latitude in this frame.
    pub fn meters_per_degree(&self) -> (f64, f64) {
        let m = EARTH_RADIUS_M * std::f64::consts::PI / 180.0;
        (m * self.cos_lat0, m)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn reference_maps_to_origin() {
        let p = LocalProjection::new(9.74, 52.35).unwrap();
        assert_eq!(p.forward(9.74, 52.35).unwrap(), (0.0, 0.0));
    }

    #[test]
    fn maschsee_offset() {
        // Values from an independent evaluation of R·Δλ·cos φ0 and R·Δφ.
        let p = LocalProjection::new(9.74, 52.35).unwrap();
        let (x, y) = p.forward(9.7475, 52.346).unwrap();
        assert!((x - 509.984_922_970).abs() < 1e-6, "x = {x}");
        assert!((y - -445.277_963_174).abs() < 1e-6, "y = {y}");
    }

    #[test]
    fn rejects_non_finite() {
        let p = LocalProjection::new(9.74, 52.35).unwrap();
        assert!(p.forward(f64::NAN, 52.0).is_err());
        assert!(p.forward(9.0, f64::INFINITY).is_err());
        assert!(p.forward(9.0, 89.5).is_err());
        assert!(LocalProjection::new(0.0, 89.0).is_err());
    }

    proptest! {
        #[test]
        fn inverse_recovers_lonlat(dlon in -0.1f64..0.1, dlat in -0.09f64..0.09) {
            let p = LocalProjection::new(9.74, 52.35).unwrap();
            let (lon, lat) = (9.74 + dlon, 52.35 + dlat);
            let (x, y) = p.forward(lon, lat).unwrap();
            let (lon2, lat2) = p.inverse(x, y);
            prop_assert!((lon2 - lon).abs() < 1e-9);
            prop_assert!((lat2 - lat).abs() < 1e-9);
        }

        #[test]
        fn forward_inverse_meters(x in -10_000.0f64..10_000.0, y in -10_000.0f64..10_000.0) {
            let p = LocalProjection::new(9.74, 52.35).unwrap();
            let (lon, lat) = p.inverse(x, y);
            let (x2, y2) = p.forward(lon, lat).unwrap();
            prop_assert!((x2 - x).abs() < 1e-6 && (y2 - y).abs() < 1e-6);
        }
    }
}
