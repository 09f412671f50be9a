use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::accumulate::accumulate;
use crate::camera::CameraPose;
use crate::checkpoint::{Checkpoint, PrunedRecord};
use crate::dataset::{DatasetManifest, InitPoint};
use crate::error::{Error, Result};
use crate::image::Image;
use crate::loss::{clip_regularizer, photometric_loss, total_loss, LossBreakdown};
use crate::prune::{prune_mask, ClauseTally};
use crate::raster::{backward, render, RenderSettings};
use crate::scene::{GaussianPrimitive, SceneModel};
use crate::scorer::ViewScorer;

use super::densify::{densify, DensifyParams, DensifyStats};
use super::optim::{learning_rates, position_lr, Adam};
use super::{Schedule, TrainConfig};

#[derive(Clone, Debug)]
pub struct TrainView {
    pub view_id: String,
    pub camera: CameraPose,
    pub image: Image,
}

#[derive(Clone, Debug)]
pub struct TrainData {
    pub views: Vec<TrainView>,
    pub background: [f64; 3],
}

impl TrainData {
    pub fn from_manifest(dataset: &DatasetManifest) -> Result<Self> {
        let views = dataset
            .train_views()
            .map(|v| {
                let image = dataset.load_image(v)?;
                if image.width != v.camera.width || image.height != v.camera.height {
                    return Err(Error::Dataset(format!(
                        "view `{}`: image is {}x{}, camera expects {}x{}",
                        v.view_id, image.width, image.height, v.camera.width, v.camera.height
                    )));
                }
                Ok(TrainView {
                    view_id: v.view_id.clone(),
                    camera: v.camera,
                    image,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        if views.is_empty() {
            return Err(Error::Dataset("dataset has no train views".into()));
        }
        Ok(Self {
            views,
            background: dataset.world.background,
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct IterationLog {
    pub iteration: usize,
    pub view: usize,
    pub loss: LossBreakdown,
    /// Distractor score of the rendered view, when scored.
    pub view_score: Option<f64>,
    /// Primitives whose semantic statistics were updated.
    pub accumulated: usize,
    pub primitives: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PruneEvent {
    pub iteration: usize,
    pub removed: usize,
    pub tally: ClauseTally,
    pub remaining: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DensifyEvent {
    pub iteration: usize,
    pub cloned: usize,
    pub split: usize,
    pub culled: usize,
    pub primitives: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainReport {
    pub log: Vec<IterationLog>,
    pub prune_events: Vec<PruneEvent>,
    pub densify_events: Vec<DensifyEvent>,
    pub initial_primitives: usize,
    pub final_primitives: usize,
    pub wall_time_secs: f64,
}

impl TrainReport {
    /// The report with its timing zeroed, for run-to-run comparison.
    pub fn without_timing(&self) -> Self {
        Self {
            wall_time_secs: 0.0,
            ..self.clone()
        }
    }

    pub fn loss_csv(&self) -> String {
        let mut out = String::from("iteration,view,photometric,semantic,total,view_score,accumulated,primitives\n");
        for r in &self.log {
            let score = r.view_score.map(|s| format!("{s:.6}")).unwrap_or_default();
            writeln!(
                out,
                "{},{},{:.9},{:.9},{:.9},{},{},{}",
                r.iteration, r.view, r.loss.photometric, r.loss.semantic, r.loss.total, score, r.accumulated, r.primitives
            )
            .unwrap();
        }
        out
    }

    pub fn total_pruned(&self) -> usize {
        self.prune_events.iter().map(|e| e.removed).sum()
    }
}

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    pub report: TrainReport,
    pub checkpoint: Checkpoint,
}

/// Seeds a scene from sparse points: isotropic primitives sized by the mean
/// distance to their three nearest neighbours.
pub fn init_scene(points: &[InitPoint], opacity: f64, seed: u64) -> Result<SceneModel> {
    if points.is_empty() {
        return Err(Error::Dataset("no init points".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_de97);
    let gaussians = points
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let mut d: Vec<f64> = points
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, q)| (p.position[0] - q.position[0]).hypot(p.position[1] - q.position[1]))
                .collect();
            d.sort_by(f64::total_cmp);
            let k = d.len().min(3);
            let scale = if k == 0 { 0.1 } else { d[..k].iter().sum::<f64>() / k as f64 };
            let scale = scale.clamp(0.01, 0.5);
            GaussianPrimitive::new(p.position, [scale, scale], 0.0, p.color, opacity).with_depth(rng.gen::<f64>())
        })
        .collect();
    SceneModel::from_gaussians(gaussians)
}

/// Trains on a dataset's train split, starting from its init points.
pub fn train(config: &TrainConfig, dataset: &DatasetManifest, scorer: &dyn ViewScorer) -> Result<TrainOutcome> {
    let data = TrainData::from_manifest(dataset)?;
    let init = init_scene(&dataset.load_init_points()?, config.init_opacity, config.seed)?;
    train_scene(config, &data, init, scorer, None)
}

fn training_error(iteration: usize, reason: impl Into<String>) -> Error {
    Error::Training {
        iteration,
        reason: reason.into(),
    }
}

/// The training loop proper. Checkpoints go to `checkpoint_dir` every
/// `checkpoint_interval` iterations when both are set.
pub fn train_scene(
    config: &TrainConfig,
    data: &TrainData,
    init: SceneModel,
    scorer: &dyn ViewScorer,
    checkpoint_dir: Option<&Path>,
) -> Result<TrainOutcome> {
    config.validate()?;
    let schedule = Schedule::from_config(config)?;
    if data.views.is_empty() {
        return Err(Error::Dataset("no train views".into()));
    }
    if init.is_empty() {
        return Err(Error::InvalidArgument("initial scene is empty".into()));
    }
    for v in &data.views {
        scorer.check_view(&v.view_id)?;
    }
    let start = Instant::now();
    let settings = RenderSettings {
        background: data.background,
        truncation: config.truncation,
        ..RenderSettings::default()
    };
    let densify_params = DensifyParams {
        grad_threshold: config.densify_grad_threshold,
        scale_threshold: config.densify_scale_threshold,
        split_factor: config.split_factor,
        max_gaussians: config.max_gaussians,
        cull_opacity: config.cull_opacity,
    };
    let prune_params = config.prune_params();

    let mut scene = init;
    let mut adam = Adam::new(scene.len(), config);
    let mut dstats = DensifyStats::new(scene.len());
    let mut archive = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut order: Vec<usize> = Vec::new();
    let mut report = TrainReport {
        log: Vec::with_capacity(schedule.iterations),
        prune_events: Vec::new(),
        densify_events: Vec::new(),
        initial_primitives: scene.len(),
        final_primitives: 0,
        wall_time_secs: 0.0,
    };

    for it in 1..=schedule.iterations {
        if order.is_empty() {
            order = (0..data.views.len()).collect();
            order.shuffle(&mut rng);
            order.reverse();
        }
        let vi = order.pop().unwrap();
        let view = &data.views[vi];
        let phases = schedule.gate(it);

        let (rendered, visibility) = render(&scene, &view.camera, &settings);
        let mut view_score = None;
        let mut accumulated = 0;
        if phases.accumulate {
            let s = scorer.score(&view.view_id, &rendered)?;
            accumulated = accumulate(&mut scene, &visibility, &s, config.beta)?;
            view_score = Some(s.distractor);
        }

        let (photo, pixel_grad) = photometric_loss(&rendered, &view.image, config.ssim_weight)?;
        let mut grads = backward(&scene, &view.camera, &settings, &pixel_grad)?;
        let mut semantic = 0.0;
        if phases.regularize {
            let opacities = scene.opacities();
            let (value, d_alpha) = clip_regularizer(&scene.normalized_scores(), &opacities)?;
            semantic = value;
            for ((g, da), a) in grads.opacity_logit.iter_mut().zip(d_alpha).zip(opacities) {
                *g += config.lambda_c * da * a * (1.0 - a);
            }
        }
        let loss = total_loss(photo, semantic, config.lambda_c).map_err(|e| training_error(it, e.to_string()))?;

        dstats.record(&grads, &visibility);
        let lr = learning_rates(config, position_lr(config, it, schedule.iterations));
        adam.step(scene.gaussians_mut(), &grads, &lr);
        if let Some(j) = scene.gaussians().iter().position(|g| g.validate().is_err()) {
            return Err(training_error(it, format!("primitive {j} diverged")));
        }

        if phases.prune {
            let (mask, tally) = prune_mask(
                &scene.normalized_scores(),
                &scene.view_counts(),
                &scene.opacities(),
                &prune_params,
            )?;
            if tally.total == scene.len() {
                return Err(training_error(it, "pruning would remove every primitive"));
            }
            for (j, _) in mask.iter().enumerate().filter(|(_, &m)| m) {
                archive.push(PrunedRecord {
                    iteration: it,
                    gaussian: scene.gaussians()[j],
                    stats: scene.stats()[j],
                });
            }
            let removed = scene.remove_masked(&mask)?;
            adam.remove_masked(&mask);
            dstats.remove_masked(&mask);
            log::info!(
                "iteration {it}: pruned {removed} ({} semantic, {} unstable), {} remain",
                tally.semantic,
                tally.unstable,
                scene.len()
            );
            report.prune_events.push(PruneEvent {
                iteration: it,
                removed,
                tally,
                remaining: scene.len(),
            });
        }

        if schedule.densify_at(it) {
            let out = densify(&mut scene, &dstats, &densify_params)?;
            if !out.is_noop() {
                adam.extend_zeroed(out.added);
                adam.remove_masked(&out.removed);
                report.densify_events.push(DensifyEvent {
                    iteration: it,
                    cloned: out.cloned,
                    split: out.split,
                    culled: out.culled,
                    primitives: scene.len(),
                });
            }
            dstats = DensifyStats::new(scene.len());
        }

        if it % 100 == 0 {
            log::debug!("iteration {it}: loss {:.6}, {} primitives", loss.total, scene.len());
        }
        report.log.push(IterationLog {
            iteration: it,
            view: vi,
            loss,
            view_score,
            accumulated,
            primitives: scene.len(),
        });

        if let (Some(dir), true) = (checkpoint_dir, config.checkpoint_interval > 0) {
            if it % config.checkpoint_interval == 0 {
                let ck = Checkpoint {
                    scene: scene.clone(),
                    pruned: archive.clone(),
                };
                ck.save(&dir.join(format!("iter_{it:06}.ckpt")))?;
            }
        }
    }

    report.final_primitives = scene.len();
    report.wall_time_secs = start.elapsed().as_secs_f64();
    Ok(TrainOutcome {
        report,
        checkpoint: Checkpoint { scene, pruned: archive },
    })
}
