//! Differentiable splatting of 2D Gaussians through an affine camera.
//!
//! Primitives are sorted by depth (ties by index) and composited front to
//! back. For a pixel center `p` and primitive `i` with screen mean `m_i`,
//! the response is `g_i = exp(-d_i^2 / 2)` with `d_i` the Mahalanobis
//! distance under the screen covariance, the contribution weight is
//! `w_i = alpha_i g_i T_i` and `T_{i+1} = T_i (1 - alpha_i g_i)`.

use crate::camera::CameraPose;
use crate::error::{Error, Result};
use crate::image::{Image, RenderedImage};
use crate::scene::{GaussianPrimitive, SceneModel};

/// Contribution weight a primitive must reach at some pixel to count as
/// visible in a view.
pub const DEFAULT_VISIBILITY_THRESHOLD: f64 = 1.0 / 255.0;

const TILE: usize = 16;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RenderSettings {
    pub background: [f64; 3],
    /// Support radius in screen-space standard deviations; `f64::INFINITY`
    /// disables truncation.
    pub truncation: f64,
    pub visibility_threshold: f64,
}

impl Default for RenderSettings {
    fn default() -> Self {
        Self {
            background: [0.0; 3],
            truncation: 3.0,
            visibility_threshold: DEFAULT_VISIBILITY_THRESHOLD,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct VisibilityMask {
    pub flags: Vec<bool>,
    /// Peak contribution weight of each primitive over all pixels.
    pub peak_weight: Vec<f64>,
}

impl VisibilityMask {
    pub fn len(&self) -> usize {
        self.flags.len()
    }

    pub fn is_empty(&self) -> bool {
        self.flags.is_empty()
    }

    pub fn visible_count(&self) -> usize {
        self.flags.iter().filter(|&&v| v).count()
    }
}

/// Gradients of a scalar loss with respect to every primitive parameter.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Gradients {
    pub position: Vec<[f64; 2]>,
    pub log_scale: Vec<[f64; 2]>,
    pub rotation: Vec<f64>,
    pub color: Vec<[f64; 3]>,
    pub opacity_logit: Vec<f64>,
    /// Gradient with respect to the projected mean in pixel units; used by
    /// densification.
    pub screen_position: Vec<[f64; 2]>,
}

impl Gradients {
    pub fn zeros(n: usize) -> Self {
        Self {
            position: vec![[0.0; 2]; n],
            log_scale: vec![[0.0; 2]; n],
            rotation: vec![0.0; n],
            color: vec![[0.0; 3]; n],
            opacity_logit: vec![0.0; n],
            screen_position: vec![[0.0; 2]; n],
        }
    }

    pub fn len(&self) -> usize {
        self.opacity_logit.len()
    }

    pub fn is_empty(&self) -> bool {
        self.opacity_logit.is_empty()
    }

    /// Flattened in primitive order: position(2), log_scale(2), rotation,
    /// color(3), opacity_logit.
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.len() * PARAMS_PER_PRIMITIVE);
        for j in 0..self.len() {
            out.extend_from_slice(&self.position[j]);
            out.extend_from_slice(&self.log_scale[j]);
            out.push(self.rotation[j]);
            out.extend_from_slice(&self.color[j]);
            out.push(self.opacity_logit[j]);
        }
        out
    }
}

pub const PARAMS_PER_PRIMITIVE: usize = 9;

/// Reads parameter `k` (in [`Gradients::flatten`] order) of a primitive.
pub fn param(g: &GaussianPrimitive, k: usize) -> f64 {
    match k {
        0 | 1 => g.position[k],
        2 | 3 => g.log_scale[k - 2],
        4 => g.rotation,
        5..=7 => g.color[k - 5],
        8 => g.opacity_logit,
        _ => panic!("parameter index {k} out of range"),
    }
}

pub fn param_mut(g: &mut GaussianPrimitive, k: usize) -> &mut f64 {
    match k {
        0 | 1 => &mut g.position[k],
        2 | 3 => &mut g.log_scale[k - 2],
        4 => &mut g.rotation,
        5..=7 => &mut g.color[k - 5],
        8 => &mut g.opacity_logit,
        _ => panic!("parameter index {k} out of range"),
    }
}

/// A primitive in screen space.
#[derive(Clone, Copy, Debug)]
struct Splat {
    index: usize,
    mean: [f64; 2],
    cos: f64,
    sin: f64,
    inv_var: [f64; 2],
    alpha: f64,
    color: [f64; 3],
    /// Inclusive pixel bounds, or `None` when the support misses the image.
    bounds: Option<[usize; 4]>,
}

impl Splat {
    #[inline]
    fn local(&self, px: f64, py: f64) -> (f64, f64, f64) {
        let dx = px - self.mean[0];
        let dy = py - self.mean[1];
        let u = self.cos * dx + self.sin * dy;
        let v = -self.sin * dx + self.cos * dy;
        (u, v, u * u * self.inv_var[0] + v * v * self.inv_var[1])
    }
}

fn project(g: &GaussianPrimitive, index: usize, camera: &CameraPose, truncation: f64) -> Splat {
    let mean = camera.world_to_pixel(g.position);
    let s = [camera.zoom * g.log_scale[0].exp(), camera.zoom * g.log_scale[1].exp()];
    let (sin, cos) = (g.rotation - camera.rotation).sin_cos();
    let bounds = if truncation.is_finite() {
        let ex = truncation * (s[0] * s[0] * cos * cos + s[1] * s[1] * sin * sin).sqrt();
        let ey = truncation * (s[0] * s[0] * sin * sin + s[1] * s[1] * cos * cos).sqrt();
        pixel_span(mean[0], ex, camera.width)
            .zip(pixel_span(mean[1], ey, camera.height))
            .map(|((x0, x1), (y0, y1))| [x0, x1, y0, y1])
    } else {
        Some([0, camera.width - 1, 0, camera.height - 1])
    };
    Splat {
        index,
        mean,
        cos,
        sin,
        inv_var: [1.0 / (s[0] * s[0]), 1.0 / (s[1] * s[1])],
        alpha: g.opacity(),
        color: g.color,
        bounds,
    }
}

/// Pixel indices whose centers fall within `center ± extent`.
fn pixel_span(center: f64, extent: f64, size: usize) -> Option<(usize, usize)> {
    let lo = (center - extent - 0.5).ceil();
    let hi = (center + extent - 0.5).floor();
    if !(lo.is_finite() && hi.is_finite()) || hi < 0.0 || lo > (size - 1) as f64 || hi < lo {
        return None;
    }
    Some((lo.max(0.0) as usize, hi.min((size - 1) as f64) as usize))
}

/// Depth order with index tie-break.
pub fn depth_order(gaussians: &[GaussianPrimitive]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..gaussians.len()).collect();
    order.sort_by(|&a, &b| gaussians[a].depth.total_cmp(&gaussians[b].depth).then(a.cmp(&b)));
    order
}

/// Projected primitives binned into screen tiles in compositing order.
struct Binned {
    splats: Vec<Splat>,
    tiles_x: usize,
    tiles: Vec<Vec<u32>>,
    r2: f64,
}

fn bin(gaussians: &[GaussianPrimitive], camera: &CameraPose, settings: &RenderSettings) -> Binned {
    let tiles_x = camera.width.div_ceil(TILE);
    let tiles_y = camera.height.div_ceil(TILE);
    let mut tiles = vec![Vec::new(); tiles_x * tiles_y];
    let mut splats = Vec::with_capacity(gaussians.len());
    for j in depth_order(gaussians) {
        let splat = project(&gaussians[j], j, camera, settings.truncation);
        if let Some([x0, x1, y0, y1]) = splat.bounds {
            let slot = splats.len() as u32;
            for ty in y0 / TILE..=y1 / TILE {
                for tx in x0 / TILE..=x1 / TILE {
                    tiles[ty * tiles_x + tx].push(slot);
                }
            }
            splats.push(splat);
        }
    }
    let r2 = settings.truncation * settings.truncation;
    Binned {
        splats,
        tiles_x,
        tiles,
        r2,
    }
}

impl Binned {
    fn tile_of(&self, x: usize, y: usize) -> &[u32] {
        &self.tiles[(y / TILE) * self.tiles_x + x / TILE]
    }

    /// Splat slot, response and local coordinates for every primitive
    /// covering pixel `(x, y)`, front to back.
    #[inline]
    fn covering(&self, x: usize, y: usize) -> impl Iterator<Item = (usize, f64, f64, f64)> + '_ {
        let (px, py) = (x as f64 + 0.5, y as f64 + 0.5);
        self.tile_of(x, y).iter().filter_map(move |&slot| {
            let s = &self.splats[slot as usize];
            let [x0, x1, y0, y1] = s.bounds.unwrap();
            if x < x0 || x > x1 || y < y0 || y > y1 {
                return None;
            }
            let (u, v, d2) = s.local(px, py);
            (d2 <= self.r2).then(|| (slot as usize, (-0.5 * d2).exp(), u, v))
        })
    }
}

/// Renders the scene and reports which primitives contributed.
pub fn render(scene: &SceneModel, camera: &CameraPose, settings: &RenderSettings) -> (RenderedImage, VisibilityMask) {
    render_gaussians(scene.gaussians(), camera, settings)
}

pub fn render_gaussians(
    gaussians: &[GaussianPrimitive],
    camera: &CameraPose,
    settings: &RenderSettings,
) -> (RenderedImage, VisibilityMask) {
    let binned = bin(gaussians, camera, settings);
    let mut image = Image::new(camera.width, camera.height);
    let mut peak = vec![0.0f64; gaussians.len()];
    for y in 0..camera.height {
        for x in 0..camera.width {
            let mut t = 1.0;
            let mut rgb = [0.0; 3];
            for (slot, resp, _, _) in binned.covering(x, y) {
                let s = &binned.splats[slot];
                let a = s.alpha * resp;
                let w = a * t;
                for c in 0..3 {
                    rgb[c] += w * s.color[c];
                }
                if w > peak[s.index] {
                    peak[s.index] = w;
                }
                t *= 1.0 - a;
            }
            for c in 0..3 {
                rgb[c] = (rgb[c] + t * settings.background[c]).clamp(0.0, 1.0);
            }
            image.set_pixel(x, y, rgb);
        }
    }
    let flags = peak.iter().map(|&w| w >= settings.visibility_threshold).collect();
    (image, VisibilityMask { flags, peak_weight: peak })
}

/// Backpropagates `image_gradient` (dL/dpixel) to all primitive parameters.
///
/// Primitives that are not visible in this view get exactly zero gradient.
pub fn backward(
    scene: &SceneModel,
    camera: &CameraPose,
    settings: &RenderSettings,
    image_gradient: &Image,
) -> Result<Gradients> {
    if image_gradient.width != camera.width || image_gradient.height != camera.height {
        return Err(Error::DimensionMismatch {
            got_w: image_gradient.width,
            got_h: image_gradient.height,
            want_w: camera.width,
            want_h: camera.height,
        });
    }
    let gaussians = scene.gaussians();
    let n = gaussians.len();
    let binned = bin(gaussians, camera, settings);

    // Screen-space accumulators per splat slot.
    let ns = binned.splats.len();
    let mut d_mean = vec![[0.0f64; 2]; ns];
    let mut d_psi = vec![0.0f64; ns];
    let mut d_ls = vec![[0.0f64; 2]; ns];
    let mut d_alpha = vec![0.0f64; ns];
    let mut d_color = vec![[0.0f64; 3]; ns];
    let mut peak = vec![0.0f64; ns];

    struct Hit {
        slot: usize,
        resp: f64,
        u: f64,
        v: f64,
        a: f64,
        t: f64,
    }
    let mut hits: Vec<Hit> = Vec::new();

    for y in 0..camera.height {
        for x in 0..camera.width {
            hits.clear();
            let mut t = 1.0;
            for (slot, resp, u, v) in binned.covering(x, y) {
                let a = binned.splats[slot].alpha * resp;
                hits.push(Hit { slot, resp, u, v, a, t });
                peak[slot] = peak[slot].max(a * t);
                t *= 1.0 - a;
            }
            if hits.is_empty() {
                continue;
            }
            let grad = image_gradient.pixel(x, y);
            if grad == [0.0; 3] {
                continue;
            }
            // Color composited behind the current hit, as seen from just behind it.
            let mut behind = settings.background;
            for h in hits.iter().rev() {
                let s = &binned.splats[h.slot];
                let w = h.a * h.t;
                let mut dl_da = 0.0;
                for c in 0..3 {
                    d_color[h.slot][c] += w * grad[c];
                    dl_da += (s.color[c] - behind[c]) * grad[c];
                }
                dl_da *= h.t;
                for c in 0..3 {
                    behind[c] = h.a * s.color[c] + (1.0 - h.a) * behind[c];
                }

                d_alpha[h.slot] += dl_da * h.resp;
                let dl_dd2 = dl_da * s.alpha * (-0.5 * h.resp);
                let (iu, iv) = (s.inv_var[0], s.inv_var[1]);
                let du = 2.0 * h.u * iu;
                let dv = 2.0 * h.v * iv;
                // d(d2)/d(mean) = -d(d2)/d(delta)
                d_mean[h.slot][0] -= dl_dd2 * (du * s.cos - dv * s.sin);
                d_mean[h.slot][1] -= dl_dd2 * (du * s.sin + dv * s.cos);
                d_psi[h.slot] += dl_dd2 * 2.0 * h.u * h.v * (iu - iv);
                d_ls[h.slot][0] += dl_dd2 * (-2.0 * h.u * h.u * iu);
                d_ls[h.slot][1] += dl_dd2 * (-2.0 * h.v * h.v * iv);
            }
        }
    }

    let lin = camera.linear();
    let mut grads = Gradients::zeros(n);
    for (slot, s) in binned.splats.iter().enumerate() {
        if peak[slot] < settings.visibility_threshold {
            continue;
        }
        let j = s.index;
        let dm = d_mean[slot];
        grads.screen_position[j] = dm;
        grads.position[j] = [
            lin[0][0] * dm[0] + lin[1][0] * dm[1],
            lin[0][1] * dm[0] + lin[1][1] * dm[1],
        ];
        grads.log_scale[j] = d_ls[slot];
        grads.rotation[j] = d_psi[slot];
        grads.color[j] = d_color[slot];
        grads.opacity_logit[j] = d_alpha[slot] * s.alpha * (1.0 - s.alpha);
    }
    Ok(grads)
}

/// Peak unoccluded weight of a single primitive in a view, ignoring every
/// other primitive.
pub fn standalone_peak_weight(g: &GaussianPrimitive, camera: &CameraPose, settings: &RenderSettings) -> f64 {
    let s = project(g, 0, camera, settings.truncation);
    let Some([x0, x1, y0, y1]) = s.bounds else {
        return 0.0;
    };
    let r2 = settings.truncation * settings.truncation;
    // The maximum sits at the pixel center nearest the mean when it is on
    // screen; otherwise scan the support.
    let mut best = 0.0f64;
    for y in y0..=y1 {
        for x in x0..=x1 {
            let (_, _, d2) = s.local(x as f64 + 0.5, y as f64 + 0.5);
            if d2 <= r2 {
                best = best.max(s.alpha * (-0.5 * d2).exp());
            }
        }
    }
    best
}
