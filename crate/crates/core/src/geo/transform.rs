use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum TransformError {
    #[error("pixel size must be finite and positive, got {width} x {height}")]
    BadPixelSize { width: f64, height: f64 },
    #[error("origin must be finite, got ({x}, {y})")]
    BadOrigin { x: f64, y: f64 },
}

/// North-up affine transform.
///
/// `(origin_x, origin_y)` is the world position of the outer (top-left)
/// corner of pixel `(0, 0)`. Rows run downward, so world y decreases as the
/// row index grows.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AffineTransform {
    pub origin_x: f64,
    pub origin_y: f64,
    pub pixel_width: f64,
    pub pixel_height: f64,
}

impl AffineTransform {
    pub fn new(
        origin_x: f64,
        origin_y: f64,
        pixel_width: f64,
        pixel_height: f64,
    ) -> Result<Self, TransformError> {
        if !(pixel_width.is_finite() && pixel_width > 0.0)
            || !(pixel_height.is_finite() && pixel_height > 0.0)
        {
            return Err(TransformError::BadPixelSize {
                width: pixel_width,
                height: pixel_height,
            });
        }
        if !origin_x.is_finite() || !origin_y.is_finite() {
            return Err(TransformError::BadOrigin {
                x: origin_x,
                y: origin_y,
            });
        }
        Ok(Self {
            origin_x,
            origin_y,
            pixel_width,
            pixel_height,
        })
    }

    /// World coordinates of the center of pixel `(col, row)`.
    pub fn pixel_to_world(&self, col: f64, row: f64) -> (f64, f64) {
        (
            self.origin_x + (col + 0.5) * self.pixel_width,
            self.origin_y - (row + 0.5) * self.pixel_height,
        )
    }

    /// Inverse of [`pixel_to_world`](Self::pixel_to_world): the fractional
    /// pixel whose center is at `(x, y)`.
    pub fn world_to_pixel(&self, x: f64, y: f64) -> (f64, f64) {
        (
            (x - self.origin_x) / self.pixel_width - 0.5,
            (self.origin_y - y) / self.pixel_height - 0.5,
        )
    }

    /// Integer pixel containing the world point (may be out of bounds).
    pub fn world_to_cell(&self, x: f64, y: f64) -> (i64, i64) {
        (
            ((x - self.origin_x) / self.pixel_width).floor() as i64,
            ((self.origin_y - y) / self.pixel_height).floor() as i64,
        )
    }

    /// World position of the top-left corner of pixel `(col, row)`.
    pub fn pixel_corner(&self, col: f64, row: f64) -> (f64, f64) {
        (
            self.origin_x + col * self.pixel_width,
            self.origin_y - row * self.pixel_height,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn center_of_origin_pixel() {
        let t = AffineTransform::new(0.0, 0.0, 1.0, 1.0).unwrap();
        assert_eq!(t.pixel_to_world(0.0, 0.0), (0.5, -0.5));
    }

    #[test]
    fn offset_transform() {
        let t = AffineTransform::new(10.0, 20.0, 2.0, 2.0).unwrap();
        assert_eq!(t.pixel_to_world(3.0, 1.0), (17.0, 17.0));
    }

    #[test]
    fn rejects_bad_pixel_size() {
        assert!(AffineTransform::new(0.0, 0.0, 0.0, 1.0).is_err());
        assert!(AffineTransform::new(0.0, 0.0, 1.0, -1.0).is_err());
        assert!(AffineTransform::new(f64::NAN, 0.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn cell_lookup_matches_center() {
        let t = AffineTransform::new(9.0, 52.0, 0.0001, 0.0001).unwrap();
        for (c, r) in [(0, 0), (5, 7), (123, 4)] {
            let (x, y) = t.pixel_to_world(c as f64, r as f64);
            assert_eq!(t.world_to_cell(x, y), (c, r));
        }
    }

    proptest! {
        #[test]
        fn pixel_world_round_trip(
            ox in -180.0f64..180.0,
            oy in -90.0f64..90.0,
            pw in 5e-5f64..100.0,
            ph in 5e-5f64..100.0,
            c in 0u32..5000,
            r in 0u32..5000,
        ) {
            let t = AffineTransform::new(ox, oy, pw, ph).unwrap();
            let (x, y) = t.pixel_to_world(c as f64, r as f64);
            let (c2, r2) = t.world_to_pixel(x, y);
            prop_assert!((c2 - c as f64).abs() < 1e-9);
            prop_assert!((r2 - r as f64).abs() < 1e-9);
        }
    }
}
