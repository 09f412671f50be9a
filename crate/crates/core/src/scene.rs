//! The mutable primitive set and its per-primitive semantic statistics.
//!
//! Both lists live side by side in [`SceneModel`] and every structural
//! operation touches them together, so index `j` always names the same
//! primitive in either list.

use std::collections::HashSet;

use crate::error::{Error, Result};

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

pub fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

/// One 2D splat.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GaussianPrimitive {
    pub position: [f64; 2],
    /// Log of the per-axis standard deviation, world units.
    pub log_scale: [f64; 2],
    /// Radians, counter-clockwise from the world x axis.
    pub rotation: f64,
    pub color: [f64; 3],
    pub opacity_logit: f64,
    /// Compositing sort key; smaller is nearer.
    pub depth: f64,
}

impl GaussianPrimitive {
    pub fn new(position: [f64; 2], scale: [f64; 2], rotation: f64, color: [f64; 3], opacity: f64) -> Self {
        Self {
            position,
            log_scale: [scale[0].ln(), scale[1].ln()],
            rotation,
            color,
            opacity_logit: logit(opacity),
            depth: 0.0,
        }
    }

    pub fn with_depth(mut self, depth: f64) -> Self {
        self.depth = depth;
        self
    }

    pub fn opacity(&self) -> f64 {
        sigmoid(self.opacity_logit)
    }

    pub fn scale(&self) -> [f64; 2] {
        [self.log_scale[0].exp(), self.log_scale[1].exp()]
    }

    pub fn max_scale(&self) -> f64 {
        self.log_scale[0].max(self.log_scale[1]).exp()
    }

    pub fn validate(&self) -> std::result::Result<(), String> {
        let finite = self.position.iter().all(|v| v.is_finite())
            && self.rotation.is_finite()
            && self.opacity_logit.is_finite();
        if !finite {
            return Err("non-finite position, rotation or opacity".into());
        }
        for s in self.scale() {
            if !(s.is_finite() && s > 0.0) {
                return Err(format!("scale {s} is not a positive finite number"));
            }
        }
        if !self.color.iter().all(|c| (0.0..=1.0).contains(c)) {
            return Err(format!("color {:?} outside [0,1]", self.color));
        }
        if !self.depth.is_finite() {
            return Err("non-finite depth".into());
        }
        Ok(())
    }
}

/// Accumulated distractor evidence and the number of iterations the
/// primitive was visible in.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct SemanticStats {
    pub accum_score: f64,
    pub view_count: u64,
}

impl SemanticStats {
    /// Accumulated score divided by view count; primitives never seen carry
    /// no evidence and score zero.
    pub fn normalized(&self) -> f64 {
        if self.view_count == 0 {
            0.0
        } else {
            self.accum_score / self.view_count as f64
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct SceneModel {
    gaussians: Vec<GaussianPrimitive>,
    stats: Vec<SemanticStats>,
    generation: u64,
}

impl SceneModel {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_gaussians(gaussians: Vec<GaussianPrimitive>) -> Result<Self> {
        let mut scene = Self::new();
        if !gaussians.is_empty() {
            scene.add_gaussians(gaussians)?;
        }
        Ok(scene)
    }

    /// Rebuilds a scene with existing statistics, e.g. from a checkpoint.
    pub fn from_parts(
        gaussians: Vec<GaussianPrimitive>,
        stats: Vec<SemanticStats>,
        generation: u64,
    ) -> Result<Self> {
        if gaussians.len() != stats.len() {
            return Err(Error::LengthMismatch {
                what: "stats",
                got: stats.len(),
                expected: gaussians.len(),
            });
        }
        for (index, g) in gaussians.iter().enumerate() {
            g.validate()
                .map_err(|reason| Error::InvalidPrimitive { index, reason })?;
        }
        Ok(Self {
            gaussians,
            stats,
            generation,
        })
    }

    pub fn len(&self) -> usize {
        self.gaussians.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gaussians.is_empty()
    }

    pub fn generation(&self) -> u64 {
        self.generation
    }

    pub fn gaussians(&self) -> &[GaussianPrimitive] {
        &self.gaussians
    }

    /// Parameter access for the optimizer. Structure (the count) cannot be
    /// changed through this slice.
    pub fn gaussians_mut(&mut self) -> &mut [GaussianPrimitive] {
        &mut self.gaussians
    }

    pub fn stats(&self) -> &[SemanticStats] {
        &self.stats
    }

    pub(crate) fn stats_mut(&mut self) -> &mut [SemanticStats] {
        &mut self.stats
    }

    pub fn opacities(&self) -> Vec<f64> {
        self.gaussians.iter().map(GaussianPrimitive::opacity).collect()
    }

    pub fn view_counts(&self) -> Vec<u64> {
        self.stats.iter().map(|s| s.view_count).collect()
    }

    /// Appends primitives with zeroed statistics and returns their indices.
    pub fn add_gaussians(&mut self, new: Vec<GaussianPrimitive>) -> Result<Vec<usize>> {
        if new.is_empty() {
            return Err(Error::InvalidArgument("no primitives to add".into()));
        }
        for (offset, g) in new.iter().enumerate() {
            g.validate().map_err(|reason| Error::InvalidPrimitive {
                index: offset,
                reason,
            })?;
        }
        let start = self.gaussians.len();
        let added = new.len();
        self.gaussians.extend(new);
        self.stats
            .extend(std::iter::repeat(SemanticStats::default()).take(added));
        self.generation += 1;
        Ok((start..start + added).collect())
    }

    /// Removes the given indices from both lists, keeping survivor order.
    /// An empty set is a no-op and does not bump the generation.
    pub fn remove_gaussians(&mut self, indices: &[usize]) -> Result<usize> {
        if indices.is_empty() {
            return Ok(0);
        }
        let len = self.len();
        let mut doomed = vec![false; len];
        for &index in indices {
            if index >= len {
                return Err(Error::IndexOutOfRange { index, len });
            }
            if doomed[index] {
                return Err(Error::DuplicateIndex(index));
            }
            doomed[index] = true;
        }
        self.retain_where(|j| !doomed[j]);
        Ok(indices.len())
    }

    /// Removes every primitive whose mask entry is true.
    pub fn remove_masked(&mut self, mask: &[bool]) -> Result<usize> {
        if mask.len() != self.len() {
            return Err(Error::LengthMismatch {
                what: "prune mask",
                got: mask.len(),
                expected: self.len(),
            });
        }
        let removed = mask.iter().filter(|&&m| m).count();
        if removed > 0 {
            self.retain_where(|j| !mask[j]);
        }
        Ok(removed)
    }

    fn retain_where(&mut self, keep: impl Fn(usize) -> bool) {
        let mut j = 0;
        self.gaussians.retain(|_| {
            let k = keep(j);
            j += 1;
            k
        });
        let mut j = 0;
        self.stats.retain(|_| {
            let k = keep(j);
            j += 1;
            k
        });
        self.generation += 1;
    }

    /// Per-primitive normalized semantic score, accumulated score over view
    /// count, in primitive order.
    pub fn normalized_scores(&self) -> Vec<f64> {
        self.stats.iter().map(SemanticStats::normalized).collect()
    }
}

/// Checks that a set of indices is unique, used by callers that build
/// removal sets incrementally.
pub fn unique_indices(indices: &[usize]) -> bool {
    let mut seen = HashSet::with_capacity(indices.len());
    indices.iter().all(|i| seen.insert(*i))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn prim(x: f64) -> GaussianPrimitive {
        GaussianPrimitive::new([x, 0.0], [0.1, 0.2], 0.3, [0.5, 0.5, 0.5], 0.5)
    }

    fn scene_of(n: usize) -> SceneModel {
        SceneModel::from_gaussians((0..n).map(|i| prim(i as f64)).collect()).unwrap()
    }

    #[test]
    fn add_appends_zeroed_stats() {
        let mut scene = scene_of(5);
        scene.stats_mut()[2] = SemanticStats {
            accum_score: 0.3,
            view_count: 4,
        };
        let generation = scene.generation();
        let idx = scene.add_gaussians(vec![prim(10.0), prim(11.0), prim(12.0)]).unwrap();
        assert_eq!(idx, vec![5, 6, 7]);
        assert_eq!(scene.len(), 8);
        assert_eq!(scene.stats().len(), 8);
        for s in &scene.stats()[5..8] {
            assert_eq!(*s, SemanticStats::default());
        }
        assert!(scene.generation() > generation);
    }

    #[test]
    fn add_into_empty_scene() {
        let mut scene = SceneModel::new();
        assert_eq!(scene.add_gaussians(vec![prim(0.0)]).unwrap(), vec![0]);
        assert_eq!((scene.len(), scene.stats().len()), (1, 1));
    }

    #[test]
    fn add_rejects_non_finite_scale() {
        let mut scene = scene_of(2);
        let mut bad = prim(0.0);
        bad.log_scale[1] = f64::INFINITY;
        let err = scene.add_gaussians(vec![prim(1.0), bad]).unwrap_err();
        assert!(matches!(err, Error::InvalidPrimitive { index: 1, .. }), "{err}");
        assert_eq!(scene.len(), 2);
    }

    #[test]
    fn remove_keeps_order_and_alignment() {
        let mut scene = scene_of(5);
        for (j, s) in scene.stats_mut().iter_mut().enumerate() {
            s.view_count = j as u64;
        }
        assert_eq!(scene.remove_gaussians(&[1, 3]).unwrap(), 2);
        let xs: Vec<f64> = scene.gaussians().iter().map(|g| g.position[0]).collect();
        assert_eq!(xs, vec![0.0, 2.0, 4.0]);
        assert_eq!(scene.view_counts(), vec![0, 2, 4]);
    }

    #[test]
    fn remove_nothing_is_identity() {
        let mut scene = scene_of(3);
        let generation = scene.generation();
        assert_eq!(scene.remove_gaussians(&[]).unwrap(), 0);
        assert_eq!(scene.generation(), generation);
        assert_eq!(scene.len(), 3);
    }

    #[test]
    fn remove_out_of_range_leaves_scene() {
        let mut scene = scene_of(5);
        let generation = scene.generation();
        assert!(matches!(
            scene.remove_gaussians(&[7]),
            Err(Error::IndexOutOfRange { index: 7, len: 5 })
        ));
        assert!(matches!(scene.remove_gaussians(&[1, 1]), Err(Error::DuplicateIndex(1))));
        assert_eq!(scene.len(), 5);
        assert_eq!(scene.generation(), generation);
    }

    #[test]
    fn normalized_scores_direct() {
        let mut scene = scene_of(2);
        scene.stats_mut()[0] = SemanticStats {
            accum_score: 0.4,
            view_count: 20,
        };
        let s = scene.normalized_scores();
        assert!((s[0] - 0.02).abs() < 1e-15);
        assert_eq!(s[1], 0.0);
    }

    #[derive(Clone, Debug)]
    enum Op {
        Add(usize),
        Remove(Vec<usize>),
    }

    fn op() -> impl Strategy<Value = Op> {
        prop_oneof![
            (1usize..4).prop_map(Op::Add),
            proptest::collection::vec(0usize..64, 0..5).prop_map(Op::Remove),
        ]
    }

    proptest! {
        #[test]
        fn interleavings_match_list_filter(ops in proptest::collection::vec(op(), 1..30)) {
            let mut scene = SceneModel::new();
            // Reference: plain list of ids with a parallel list of counts.
            let mut reference: Vec<(f64, u64)> = Vec::new();
            let mut next_id = 0.0;
            for op in ops {
                match op {
                    Op::Add(k) => {
                        let new: Vec<_> = (0..k).map(|i| prim(next_id + i as f64)).collect();
                        let idx = scene.add_gaussians(new).unwrap();
                        for (i, j) in idx.iter().enumerate() {
                            scene.stats_mut()[*j].view_count = (next_id as u64) + i as u64;
                            reference.push((next_id + i as f64, next_id as u64 + i as u64));
                        }
                        next_id += k as f64;
                    }
                    Op::Remove(raw) => {
                        let len = reference.len();
                        if len == 0 { continue; }
                        let mut set: Vec<usize> = raw.into_iter().map(|i| i % len).collect();
                        set.sort_unstable();
                        set.dedup();
                        let before = scene.generation();
                        scene.remove_gaussians(&set).unwrap();
                        if !set.is_empty() {
                            prop_assert!(scene.generation() > before);
                        }
                        reference = reference
                            .into_iter()
                            .enumerate()
                            .filter(|(j, _)| !set.contains(j))
                            .map(|(_, v)| v)
                            .collect();
                    }
                }
                prop_assert_eq!(scene.gaussians().len(), scene.stats().len());
                let got: Vec<(f64, u64)> = scene
                    .gaussians()
                    .iter()
                    .zip(scene.stats())
                    .map(|(g, s)| (g.position[0], s.view_count))
                    .collect();
                prop_assert_eq!(&got, &reference);
            }
        }
    }
}
