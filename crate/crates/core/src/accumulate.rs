use crate::error::{Error, Result};
use crate::raster::VisibilityMask;
use crate::scene::SceneModel;
use crate::scorer::{ViewScore, NEUTRAL_SCORE};

/// Per-view increment for a visible primitive.
#[inline]
pub fn increment(view_score: &ViewScore, beta: f64) -> f64 {
    beta * (view_score.distractor - NEUTRAL_SCORE).max(0.0)
}

/// Adds this view's distractor evidence to every visible primitive and
/// bumps its view count. Returns the number of primitives updated.
pub fn accumulate(scene: &mut SceneModel, visibility: &VisibilityMask, view_score: &ViewScore, beta: f64) -> Result<usize> {
    if visibility.len() != scene.len() {
        return Err(Error::LengthMismatch {
            what: "visibility mask",
            got: visibility.len(),
            expected: scene.len(),
        });
    }
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(Error::InvalidArgument(format!("beta {beta} must be positive")));
    }
    let inc = increment(view_score, beta);
    let mut updated = 0;
    for (stats, &visible) in scene.stats_mut().iter_mut().zip(&visibility.flags) {
        if visible {
            stats.accum_score += inc;
            stats.view_count += 1;
            updated += 1;
        }
    }
    Ok(updated)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::GaussianPrimitive;

    fn scene(n: usize) -> SceneModel {
        SceneModel::from_gaussians(
            (0..n)
                .map(|i| GaussianPrimitive::new([i as f64, 0.0], [0.1, 0.1], 0.0, [0.5; 3], 0.5))
                .collect(),
        )
        .unwrap()
    }

    fn mask(flags: Vec<bool>) -> VisibilityMask {
        let peak_weight = flags.iter().map(|&f| if f { 1.0 } else { 0.0 }).collect();
        VisibilityMask { flags, peak_weight }
    }

    #[test]
    fn distractor_view_adds_evidence() {
        let mut s = scene(2);
        let n = accumulate(&mut s, &mask(vec![true, false]), &ViewScore::new(0.7, 0.3).unwrap(), 0.1).unwrap();
        assert_eq!(n, 1);
        assert!((s.stats()[0].accum_score - 0.02).abs() < 1e-15);
        assert_eq!(s.stats()[0].view_count, 1);
        assert_eq!(s.stats()[1], Default::default());
    }

    #[test]
    fn clean_view_only_counts() {
        let mut s = scene(1);
        accumulate(&mut s, &mask(vec![true]), &ViewScore::new(0.4, 0.8).unwrap(), 0.1).unwrap();
        assert_eq!(s.stats()[0].accum_score, 0.0);
        assert_eq!(s.stats()[0].view_count, 1);
    }

    #[test]
    fn mismatch_leaves_scene_untouched() {
        let mut s = scene(3);
        let err = accumulate(&mut s, &mask(vec![true]), &ViewScore::new(0.9, 0.1).unwrap(), 0.1);
        assert!(matches!(err, Err(Error::LengthMismatch { .. })));
        assert!(s.stats().iter().all(|st| *st == Default::default()));
    }
}
