use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An affine window over the world plane.
///
/// The camera translation maps to the image center; world vectors are
/// rotated by `-rotation` and scaled by `zoom` pixels per world unit.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CameraPose {
    pub translation: [f64; 2],
    pub rotation: f64,
    pub zoom: f64,
    pub width: usize,
    pub height: usize,
}

impl CameraPose {
    pub fn new(translation: [f64; 2], rotation: f64, zoom: f64, width: usize, height: usize) -> Result<Self> {
        let cam = Self {
            translation,
            rotation,
            zoom,
            width,
            height,
        };
        cam.validate()?;
        Ok(cam)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.zoom.is_finite() && self.zoom > 0.0) {
            return Err(Error::InvalidArgument(format!("camera zoom {} must be positive", self.zoom)));
        }
        if self.width == 0 || self.height == 0 {
            return Err(Error::InvalidArgument("camera image size must be at least 1x1".into()));
        }
        if !(self.translation.iter().all(|t| t.is_finite()) && self.rotation.is_finite()) {
            return Err(Error::InvalidArgument("camera pose must be finite".into()));
        }
        Ok(())
    }

    pub fn pixel_count(&self) -> usize {
        self.width * self.height
    }

    /// Linear part of the world-to-pixel map, row-major.
    pub fn linear(&self) -> [[f64; 2]; 2] {
        let (s, c) = self.rotation.sin_cos();
        let z = self.zoom;
        [[z * c, z * s], [-z * s, z * c]]
    }

    pub fn world_to_pixel(&self, p: [f64; 2]) -> [f64; 2] {
        let m = self.linear();
        let d = [p[0] - self.translation[0], p[1] - self.translation[1]];
        [
            m[0][0] * d[0] + m[0][1] * d[1] + 0.5 * self.width as f64,
            m[1][0] * d[0] + m[1][1] * d[1] + 0.5 * self.height as f64,
        ]
    }

    pub fn pixel_to_world(&self, q: [f64; 2]) -> [f64; 2] {
        let (s, c) = self.rotation.sin_cos();
        let u = (q[0] - 0.5 * self.width as f64) / self.zoom;
        let v = (q[1] - 0.5 * self.height as f64) / self.zoom;
        [
            c * u - s * v + self.translation[0],
            s * u + c * v + self.translation[1],
        ]
    }

    /// Axis-aligned world-space bounds of the visible window.
    pub fn world_bounds(&self) -> ([f64; 2], [f64; 2]) {
        let corners = [
            [0.0, 0.0],
            [self.width as f64, 0.0],
            [0.0, self.height as f64],
            [self.width as f64, self.height as f64],
        ];
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for c in corners {
            let w = self.pixel_to_world(c);
            for k in 0..2 {
                lo[k] = lo[k].min(w[k]);
                hi[k] = hi[k].max(w[k]);
            }
        }
        (lo, hi)
    }
}
