use crate::error::{Error, Result};

use super::TrainConfig;

/// Phases enabled at one iteration.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Phases {
    pub accumulate: bool,
    pub regularize: bool,
    pub prune: bool,
}

/// Iteration gates after applying the schedule scale.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Schedule {
    pub iterations: usize,
    pub accum_start: usize,
    pub reg_start: usize,
    pub prune_start: usize,
    pub prune_interval: usize,
    pub densify_start: usize,
    pub densify_until: usize,
    pub densify_interval: usize,
    pub prune_enabled: bool,
}

fn scaled(v: usize, scale: f64) -> usize {
    (v as f64 * scale).round() as usize
}

impl Schedule {
    pub fn from_config(c: &TrainConfig) -> Result<Self> {
        let s = c.schedule_scale;
        let sched = Self {
            iterations: scaled(c.iterations, s),
            accum_start: scaled(c.accum_start, s),
            reg_start: scaled(c.reg_start, s),
            prune_start: scaled(c.prune_start, s),
            prune_interval: scaled(c.prune_interval, s),
            densify_start: scaled(c.densify_start, s),
            densify_until: scaled(c.densify_until, s),
            densify_interval: scaled(c.densify_interval, s),
            prune_enabled: c.prune_enabled,
        };
        sched.validate()?;
        Ok(sched)
    }

    fn validate(&self) -> Result<()> {
        let ordered = 0 < self.accum_start
            && self.accum_start <= self.reg_start
            && self.reg_start <= self.prune_start
            && self.prune_start <= self.iterations;
        if !ordered {
            return Err(Error::Config(format!(
                "gates must satisfy 0 < accum_start ({}) <= reg_start ({}) <= prune_start ({}) <= iterations ({}) after scaling",
                self.accum_start, self.reg_start, self.prune_start, self.iterations
            )));
        }
        if self.prune_interval == 0 || self.densify_interval == 0 {
            return Err(Error::Config("prune and densify intervals must be at least 1 after scaling".into()));
        }
        Ok(())
    }

    pub fn gate(&self, iteration: usize) -> Phases {
        Phases {
            accumulate: iteration >= self.accum_start,
            regularize: iteration >= self.reg_start,
            prune: self.prune_enabled
                && iteration >= self.prune_start
                && (iteration - self.prune_start) % self.prune_interval == 0,
        }
    }

    pub fn densify_at(&self, iteration: usize) -> bool {
        iteration > self.densify_start && iteration <= self.densify_until && iteration % self.densify_interval == 0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn full_scale() -> Schedule {
        Schedule::from_config(&TrainConfig {
            schedule_scale: 1.0,
            ..TrainConfig::default()
        })
        .unwrap()
    }

    #[test]
    fn gate_examples_at_full_scale() {
        let s = full_scale();
        assert_eq!(s.gate(499), Phases::default());
        assert_eq!(
            s.gate(6000),
            Phases {
                accumulate: true,
                regularize: true,
                prune: true
            }
        );
        assert_eq!(
            s.gate(6500),
            Phases {
                accumulate: true,
                regularize: true,
                prune: false
            }
        );
        assert!(s.gate(5000).prune);
        assert!(!s.gate(4999).prune);
    }

    #[test]
    fn default_scale_shrinks_every_gate() {
        let s = Schedule::from_config(&TrainConfig::default()).unwrap();
        assert_eq!(
            (s.iterations, s.accum_start, s.reg_start, s.prune_start, s.prune_interval),
            (2000, 50, 200, 500, 100)
        );
        let prunes: Vec<usize> = (1..=s.iterations).filter(|&i| s.gate(i).prune).collect();
        assert_eq!(prunes.first(), Some(&500));
        assert_eq!(prunes.last(), Some(&2000));
        assert_eq!(prunes.len(), 16);
    }

    #[test]
    fn disabled_pruning_never_fires() {
        let s = Schedule::from_config(&TrainConfig {
            prune_enabled: false,
            ..TrainConfig::default()
        })
        .unwrap();
        assert!((0..=s.iterations).all(|i| !s.gate(i).prune));
    }
}
