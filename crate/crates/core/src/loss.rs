//! Training objective: photometric term plus the opacity regularizer
//! weighted by semantic score.

use crate::error::{Error, Result};
use crate::image::Image;
use crate::ssim;

/// Weight of the `1 - SSIM` term in the photometric loss.
pub const DEFAULT_SSIM_WEIGHT: f64 = 0.2;
pub const DEFAULT_LAMBDA_C: f64 = 0.01;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LossBreakdown {
    pub photometric: f64,
    pub semantic: f64,
    pub total: f64,
    pub lambda_c: f64,
}

/// `(1 - w) * L1 + w * (1 - SSIM)` and its gradient w.r.t. `rendered`.
///
/// With `ssim_weight == 0` the SSIM term is skipped, so images smaller
/// than the SSIM window are accepted.
pub fn photometric_loss(rendered: &Image, target: &Image, ssim_weight: f64) -> Result<(f64, Image)> {
    rendered.same_size(target)?;
    let count = rendered.data.len() as f64;
    let mut grad = Image::new(rendered.width, rendered.height);
    let mut l1 = 0.0;
    for ((g, &r), &t) in grad.data.iter_mut().zip(&rendered.data).zip(&target.data) {
        let d = r - t;
        l1 += d.abs();
        *g = (1.0 - ssim_weight) * sign(d) / count;
    }
    l1 /= count;
    let mut loss = (1.0 - ssim_weight) * l1;
    if ssim_weight != 0.0 {
        let (s, sg) = ssim::ssim_with_grad(rendered, target)?;
        loss += ssim_weight * (1.0 - s);
        for (g, d) in grad.data.iter_mut().zip(&sg.data) {
            *g -= ssim_weight * d;
        }
    }
    Ok((loss, grad))
}

fn sign(d: f64) -> f64 {
    if d > 0.0 {
        1.0
    } else if d < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Mean of score times opacity over the live primitives, with its gradient
/// with respect to each opacity (`s_j / N`).
pub fn clip_regularizer(scores: &[f64], opacities: &[f64]) -> Result<(f64, Vec<f64>)> {
    if scores.len() != opacities.len() {
        return Err(Error::LengthMismatch {
            what: "opacities",
            got: opacities.len(),
            expected: scores.len(),
        });
    }
    if scores.is_empty() {
        return Err(Error::InvalidArgument(
            "semantic regularizer evaluated on an empty scene".into(),
        ));
    }
    let n = scores.len() as f64;
    let value = scores.iter().zip(opacities).map(|(s, a)| s * a).sum::<f64>() / n;
    let grad = scores.iter().map(|s| s / n).collect();
    Ok((value, grad))
}

pub fn total_loss(photometric: f64, semantic: f64, lambda_c: f64) -> Result<LossBreakdown> {
    if !(photometric.is_finite() && semantic.is_finite() && lambda_c.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "non-finite loss input ({photometric}, {semantic}, {lambda_c})"
        )));
    }
    Ok(LossBreakdown {
        photometric,
        semantic,
        total: photometric + lambda_c * semantic,
        lambda_c,
    })
}
