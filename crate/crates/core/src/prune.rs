//! The pruning predicate and score-distribution threshold calibration.

use crate::error::{Error, Result};

pub const DEFAULT_TAU: f64 = 0.015;
pub const DEFAULT_N_MIN: u64 = 10;
pub const DEFAULT_ALPHA_MIN: f64 = 0.1;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PruneParams {
    pub tau: f64,
    pub n_min: u64,
    pub alpha_min: f64,
}

impl Default for PruneParams {
    fn default() -> Self {
        Self {
            tau: DEFAULT_TAU,
            n_min: DEFAULT_N_MIN,
            alpha_min: DEFAULT_ALPHA_MIN,
        }
    }
}

/// How many primitives each clause selected. A primitive matching both
/// clauses is counted in both tallies.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ClauseTally {
    pub semantic: usize,
    pub unstable: usize,
    pub total: usize,
}

/// `(s > tau) or (n < n_min and alpha < alpha_min)` per primitive.
pub fn prune_mask(scores: &[f64], counts: &[u64], opacities: &[f64], params: &PruneParams) -> Result<(Vec<bool>, ClauseTally)> {
    for (what, len) in [("view counts", counts.len()), ("opacities", opacities.len())] {
        if len != scores.len() {
            return Err(Error::LengthMismatch {
                what,
                got: len,
                expected: scores.len(),
            });
        }
    }
    let mut tally = ClauseTally::default();
    let mask = scores
        .iter()
        .zip(counts)
        .zip(opacities)
        .map(|((&s, &n), &a)| {
            let semantic = s > params.tau;
            let unstable = n < params.n_min && a < params.alpha_min;
            tally.semantic += semantic as usize;
            tally.unstable += unstable as usize;
            tally.total += (semantic || unstable) as usize;
            semantic || unstable
        })
        .collect();
    Ok((mask, tally))
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScoreHistogram {
    pub count: usize,
    pub positive: usize,
    pub min: f64,
    pub max: f64,
    /// 10th..90th percentiles of the positive scores (nearest rank).
    pub deciles: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Calibration {
    Threshold {
        tau: f64,
        /// Positive scores that `s > tau` selects on this sample.
        pruned: usize,
        histogram: ScoreHistogram,
    },
    /// Every score is zero: nothing was ever seen in a distractor view.
    NoDistractors { histogram: ScoreHistogram },
}

impl Calibration {
    pub fn histogram(&self) -> &ScoreHistogram {
        match self {
            Calibration::Threshold { histogram, .. } | Calibration::NoDistractors { histogram } => histogram,
        }
    }

    pub fn tau(&self) -> Option<f64> {
        match self {
            Calibration::Threshold { tau, .. } => Some(*tau),
            Calibration::NoDistractors { .. } => None,
        }
    }
}

/// A threshold above every observed score selects nothing.
pub fn threshold_warning(tau: f64, histogram: &ScoreHistogram) -> Option<String> {
    (tau > histogram.max).then(|| {
        format!(
            "tau {tau} exceeds the largest observed score {:.6}; semantic pruning will remove nothing",
            histogram.max
        )
    })
}

/// Nearest-rank quantile of an ascending slice, `q` in [0, 1].
fn nearest_rank(sorted: &[f64], q: f64) -> f64 {
    let rank = ((q * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len());
    sorted[rank - 1]
}

pub fn score_histogram(scores: &[f64]) -> ScoreHistogram {
    let mut positive: Vec<f64> = scores.iter().copied().filter(|&s| s > 0.0).collect();
    positive.sort_by(f64::total_cmp);
    let min = scores.iter().copied().fold(f64::INFINITY, f64::min);
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let deciles = if positive.is_empty() {
        Vec::new()
    } else {
        (1..10).map(|d| nearest_rank(&positive, d as f64 / 10.0)).collect()
    };
    ScoreHistogram {
        count: scores.len(),
        positive: positive.len(),
        min,
        max,
        deciles,
    }
}

/// Picks `tau` so that `s > tau` removes about `target_fraction` of the
/// positive-score primitives.
///
/// The boundary value is the nearest-rank `(1 - f)` quantile of the sorted
/// positive scores. Tied scores share a fate, so `tau` goes halfway to the
/// next distinct score above the boundary or below it, whichever prunes a
/// count closer to the target (the smaller count on a draw).
pub fn calibrate_threshold(scores: &[f64], target_fraction: f64) -> Result<Calibration> {
    if scores.is_empty() {
        return Err(Error::InvalidArgument("no scores to calibrate on".into()));
    }
    if !(target_fraction > 0.0 && target_fraction < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "target fraction {target_fraction} must lie in (0, 1)"
        )));
    }
    let histogram = score_histogram(scores);
    let mut positive: Vec<f64> = scores.iter().copied().filter(|&s| s > 0.0).collect();
    if positive.is_empty() {
        return Ok(Calibration::NoDistractors { histogram });
    }
    positive.sort_by(f64::total_cmp);
    let m = positive.len();
    let rank = (((1.0 - target_fraction) * m as f64).ceil() as usize).clamp(1, m);
    let boundary = positive[rank - 1];
    let first = positive.partition_point(|&s| s < boundary);
    let past = positive.partition_point(|&s| s <= boundary);
    let above = match positive.get(past) {
        Some(&next) => 0.5 * (boundary + next),
        None => boundary,
    };
    let below = if first == 0 { 0.5 * boundary } else { 0.5 * (positive[first - 1] + boundary) };
    let target = target_fraction * m as f64;
    let (keep_tie, drop_tie) = ((m - past) as f64, (m - first) as f64);
    let tau = if (drop_tie - target).abs() < (keep_tie - target).abs() { below } else { above };
    let pruned = positive.iter().filter(|&&s| s > tau).count();
    Ok(Calibration::Threshold { tau, pruned, histogram })
}
