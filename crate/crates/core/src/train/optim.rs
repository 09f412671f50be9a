//! Adam with per-parameter-group learning rates, kept index-aligned with
//! the scene through structural edits.

use crate::raster::{param_mut, Gradients, PARAMS_PER_PRIMITIVE};
use crate::scene::GaussianPrimitive;

use super::TrainConfig;

const P: usize = PARAMS_PER_PRIMITIVE;

#[derive(Clone, Debug, PartialEq)]
pub struct Adam {
    beta1: f64,
    beta2: f64,
    eps: f64,
    step: u64,
    m: Vec<[f64; P]>,
    v: Vec<[f64; P]>,
}

/// Learning rate per flattened parameter slot.
pub fn learning_rates(c: &TrainConfig, position_lr: f64) -> [f64; P] {
    [
        position_lr,
        position_lr,
        c.lr_scale,
        c.lr_scale,
        c.lr_rotation,
        c.lr_color,
        c.lr_color,
        c.lr_color,
        c.lr_opacity,
    ]
}

/// Log-linear decay from `lr_position` to `lr_position_final`.
pub fn position_lr(c: &TrainConfig, iteration: usize, total: usize) -> f64 {
    let t = (iteration as f64 / total.max(1) as f64).clamp(0.0, 1.0);
    if c.lr_position == 0.0 || c.lr_position_final == 0.0 {
        return c.lr_position * (1.0 - t);
    }
    (c.lr_position.ln() * (1.0 - t) + c.lr_position_final.ln() * t).exp()
}

impl Adam {
    pub fn new(n: usize, c: &TrainConfig) -> Self {
        Self {
            beta1: c.adam_beta1,
            beta2: c.adam_beta2,
            eps: c.adam_eps,
            step: 0,
            m: vec![[0.0; P]; n],
            v: vec![[0.0; P]; n],
        }
    }

    pub fn len(&self) -> usize {
        self.m.len()
    }

    pub fn is_empty(&self) -> bool {
        self.m.is_empty()
    }

    pub fn moments(&self, i: usize) -> (&[f64; P], &[f64; P]) {
        (&self.m[i], &self.v[i])
    }

    pub fn step(&mut self, gaussians: &mut [GaussianPrimitive], grads: &Gradients, lr: &[f64; P]) {
        assert_eq!(gaussians.len(), self.m.len(), "optimizer state out of sync with the scene");
        self.step += 1;
        let bc1 = 1.0 - self.beta1.powi(self.step as i32);
        let bc2 = 1.0 - self.beta2.powi(self.step as i32);
        for (i, g) in gaussians.iter_mut().enumerate() {
            let grad = [
                grads.position[i][0],
                grads.position[i][1],
                grads.log_scale[i][0],
                grads.log_scale[i][1],
                grads.rotation[i],
                grads.color[i][0],
                grads.color[i][1],
                grads.color[i][2],
                grads.opacity_logit[i],
            ];
            let (m, v) = (&mut self.m[i], &mut self.v[i]);
            for k in 0..P {
                m[k] = self.beta1 * m[k] + (1.0 - self.beta1) * grad[k];
                v[k] = self.beta2 * v[k] + (1.0 - self.beta2) * grad[k] * grad[k];
                let update = lr[k] * (m[k] / bc1) / ((v[k] / bc2).sqrt() + self.eps);
                *param_mut(g, k) -= update;
            }
            for c in &mut g.color {
                *c = c.clamp(0.0, 1.0);
            }
        }
    }

    /// Drops the state of every index where `remove` is true.
    pub fn remove_masked(&mut self, remove: &[bool]) {
        assert_eq!(remove.len(), self.m.len());
        let mut it = remove.iter();
        self.m.retain(|_| !*it.next().unwrap());
        let mut it = remove.iter();
        self.v.retain(|_| !*it.next().unwrap());
    }

    /// Appends zeroed state for `n` new primitives.
    pub fn extend_zeroed(&mut self, n: usize) {
        self.m.extend(std::iter::repeat([0.0; P]).take(n));
        self.v.extend(std::iter::repeat([0.0; P]).take(n));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_step_moves_by_learning_rate() {
        let c = TrainConfig::default();
        let mut g = vec![GaussianPrimitive::new([0.0, 0.0], [0.1, 0.1], 0.0, [0.5; 3], 0.5)];
        let mut grads = Gradients::zeros(1);
        grads.position[0] = [2.0, -3.0];
        grads.color[0] = [1.0, 0.0, -1.0];
        let mut adam = Adam::new(1, &c);
        let lr = learning_rates(&c, 0.01);
        adam.step(&mut g, &grads, &lr);
        // bias-corrected first Adam step is lr * sign(grad)
        assert!((g[0].position[0] + 0.01).abs() < 1e-9);
        assert!((g[0].position[1] - 0.01).abs() < 1e-9);
        assert!((g[0].color[0] - (0.5 - c.lr_color)).abs() < 1e-9);
        assert_eq!(g[0].color[1], 0.5);
        assert_eq!(g[0].log_scale, [0.1f64.ln(); 2]);
    }

    #[test]
    fn state_follows_structural_edits() {
        let c = TrainConfig::default();
        let mut g: Vec<_> = (0..3)
            .map(|i| GaussianPrimitive::new([i as f64, 0.0], [0.1, 0.1], 0.0, [0.5; 3], 0.5))
            .collect();
        let mut grads = Gradients::zeros(3);
        grads.opacity_logit = vec![1.0, 2.0, 3.0];
        let mut adam = Adam::new(3, &c);
        adam.step(&mut g, &grads, &learning_rates(&c, 0.0));
        let kept = *adam.moments(2).0;
        adam.remove_masked(&[false, true, false]);
        adam.extend_zeroed(2);
        assert_eq!(adam.len(), 4);
        assert_eq!(adam.moments(1).0, &kept);
        assert_eq!(adam.moments(3).1, &[0.0; P]);
    }

    #[test]
    fn position_lr_decays_log_linearly() {
        let c = TrainConfig::default();
        assert!((position_lr(&c, 0, 100) - c.lr_position).abs() < 1e-15);
        assert!((position_lr(&c, 100, 100) - c.lr_position_final).abs() < 1e-15);
        let mid = position_lr(&c, 50, 100);
        assert!((mid - (c.lr_position * c.lr_position_final).sqrt()).abs() < 1e-12);
    }
}
