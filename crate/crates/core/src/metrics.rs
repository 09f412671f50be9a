//! Reconstruction quality and transient-removal metrics.

use crate::camera::CameraPose;
use crate::error::{Error, Result};
use crate::image::{Image, Mask};
use crate::raster::{standalone_peak_weight, RenderSettings};
use crate::scene::GaussianPrimitive;

pub use crate::ssim::ssim;

/// PSNR in dB for images in [0, 1]; identical images give `f64::INFINITY`.
pub fn psnr(a: &Image, b: &Image) -> Result<f64> {
    a.same_size(b)?;
    let mse = a
        .data
        .iter()
        .zip(&b.data)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        / a.data.len() as f64;
    if mse == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (1.0 / mse).log10())
}

/// A contaminated view: where the transient was, and from where.
#[derive(Clone, Debug)]
pub struct MaskedView {
    pub camera: CameraPose,
    pub mask: Mask,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RemovalMetrics {
    /// Fraction of transient-region primitives that were pruned; 1.0 when
    /// there are none.
    pub distractor_removal_rate: f64,
    /// Fraction of static-region primitives that survived; 1.0 when there
    /// are none.
    pub static_retention: f64,
    pub transient_total: usize,
    pub transient_pruned: usize,
    pub static_total: usize,
    pub static_pruned: usize,
}

/// A primitive counts as transient-region when its projected center lies
/// inside the mask of some contaminated view in which it is visible on its
/// own (peak weight at or above the visibility threshold).
pub fn is_transient_region(g: &GaussianPrimitive, views: &[MaskedView], settings: &RenderSettings) -> bool {
    views.iter().any(|v| {
        v.mask.contains_point(v.camera.world_to_pixel(g.position))
            && standalone_peak_weight(g, &v.camera, settings) >= settings.visibility_threshold
    })
}

/// Classifies survivors and pruned primitives by mask overlap.
pub fn removal_metrics(
    survivors: &[GaussianPrimitive],
    pruned: &[GaussianPrimitive],
    views: &[MaskedView],
    settings: &RenderSettings,
) -> Result<RemovalMetrics> {
    if views.is_empty() {
        return Err(Error::Dataset("no transient masks to evaluate removal against".into()));
    }
    for v in views {
        if v.mask.width != v.camera.width || v.mask.height != v.camera.height {
            return Err(Error::DimensionMismatch {
                got_w: v.mask.width,
                got_h: v.mask.height,
                want_w: v.camera.width,
                want_h: v.camera.height,
            });
        }
    }
    let mut m = RemovalMetrics {
        distractor_removal_rate: 1.0,
        static_retention: 1.0,
        transient_total: 0,
        transient_pruned: 0,
        static_total: 0,
        static_pruned: 0,
    };
    for (g, was_pruned) in survivors.iter().map(|g| (g, false)).chain(pruned.iter().map(|g| (g, true))) {
        if is_transient_region(g, views, settings) {
            m.transient_total += 1;
            m.transient_pruned += was_pruned as usize;
        } else {
            m.static_total += 1;
            m.static_pruned += was_pruned as usize;
        }
    }
    if m.transient_total > 0 {
        m.distractor_removal_rate = m.transient_pruned as f64 / m.transient_total as f64;
    }
    if m.static_total > 0 {
        m.static_retention = 1.0 - m.static_pruned as f64 / m.static_total as f64;
    }
    Ok(m)
}
