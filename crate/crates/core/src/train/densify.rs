//! Adaptive density control: clone small, split large high-gradient
//! primitives.

use crate::error::Result;
use crate::raster::{Gradients, VisibilityMask};
use crate::scene::{GaussianPrimitive, SceneModel};

/// Child centers sit this many major-axis standard deviations from the
/// parent center.
const SPLIT_OFFSET: f64 = 0.75;

/// Running screen-space gradient magnitudes, aligned with the scene.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct DensifyStats {
    pub grad_sum: Vec<f64>,
    pub visible: Vec<u64>,
}

impl DensifyStats {
    pub fn new(n: usize) -> Self {
        Self {
            grad_sum: vec![0.0; n],
            visible: vec![0; n],
        }
    }

    pub fn len(&self) -> usize {
        self.grad_sum.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grad_sum.is_empty()
    }

    pub fn record(&mut self, grads: &Gradients, visibility: &VisibilityMask) {
        for (j, &v) in visibility.flags.iter().enumerate() {
            if v {
                let [gx, gy] = grads.screen_position[j];
                self.grad_sum[j] += gx.hypot(gy);
                self.visible[j] += 1;
            }
        }
    }

    pub fn mean(&self, j: usize) -> f64 {
        if self.visible[j] == 0 {
            0.0
        } else {
            self.grad_sum[j] / self.visible[j] as f64
        }
    }

    pub fn remove_masked(&mut self, remove: &[bool]) {
        let mut it = remove.iter();
        self.grad_sum.retain(|_| !*it.next().unwrap());
        let mut it = remove.iter();
        self.visible.retain(|_| !*it.next().unwrap());
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DensifyParams {
    pub grad_threshold: f64,
    pub scale_threshold: f64,
    pub split_factor: f64,
    pub max_gaussians: usize,
    /// Primitives fainter than this are culled after cloning and splitting.
    pub cull_opacity: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DensifyOutcome {
    pub cloned: usize,
    pub split: usize,
    pub culled: usize,
    /// Number of primitives appended at the end of the scene.
    pub added: usize,
    /// Over the indices after appending: the split parents that were removed.
    pub removed: Vec<bool>,
}

impl DensifyOutcome {
    pub fn is_noop(&self) -> bool {
        self.cloned == 0 && self.split == 0 && self.culled == 0
    }
}

pub fn split_children(g: &GaussianPrimitive, factor: f64) -> [GaussianPrimitive; 2] {
    let [sx, sy] = g.scale();
    let (s, c) = g.rotation.sin_cos();
    let (axis, sigma) = if sx >= sy { ([c, s], sx) } else { ([-s, c], sy) };
    let shrink = factor.ln();
    let child = |sign: f64| GaussianPrimitive {
        position: [
            g.position[0] + sign * SPLIT_OFFSET * sigma * axis[0],
            g.position[1] + sign * SPLIT_OFFSET * sigma * axis[1],
        ],
        log_scale: [g.log_scale[0] - shrink, g.log_scale[1] - shrink],
        ..*g
    };
    [child(1.0), child(-1.0)]
}

/// Clones or splits every primitive whose mean screen-space gradient
/// reaches the threshold, highest gradient first, without growing the scene
/// past `max_gaussians`, then culls near-transparent primitives. Offspring
/// start with zeroed semantic statistics.
pub fn densify(scene: &mut SceneModel, stats: &DensifyStats, params: &DensifyParams) -> Result<DensifyOutcome> {
    assert_eq!(stats.len(), scene.len(), "densify statistics out of sync with the scene");
    let mut candidates: Vec<(f64, usize)> = (0..scene.len())
        .map(|j| (stats.mean(j), j))
        .filter(|&(g, _)| g >= params.grad_threshold && g > 0.0)
        .collect();
    candidates.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));

    let n = scene.len();
    let mut budget = params.max_gaussians.saturating_sub(n);
    let mut offspring = Vec::new();
    let mut parents = Vec::new();
    let (mut cloned, mut split) = (0, 0);
    for (_, j) in candidates {
        if budget == 0 {
            break;
        }
        budget -= 1;
        let g = scene.gaussians()[j];
        if g.max_scale() <= params.scale_threshold {
            offspring.push(g);
            cloned += 1;
        } else {
            offspring.extend(split_children(&g, params.split_factor));
            parents.push(j);
            split += 1;
        }
    }
    let added = offspring.len();
    if added > 0 {
        scene.add_gaussians(offspring)?;
    }
    let mut removed = vec![false; scene.len()];
    for &j in &parents {
        removed[j] = true;
    }
    let faint: Vec<bool> = scene.gaussians().iter().map(|g| g.opacity() < params.cull_opacity).collect();
    // never cull a scene down to nothing
    let mut culled = 0;
    if faint.iter().zip(&removed).any(|(&f, &r)| !f && !r) {
        for (r, &f) in removed.iter_mut().zip(&faint) {
            culled += (f && !*r) as usize;
            *r |= f;
        }
    }
    if removed.iter().any(|&r| r) {
        scene.remove_masked(&removed)?;
    }
    Ok(DensifyOutcome {
        cloned,
        split,
        culled,
        added,
        removed,
    })
}
