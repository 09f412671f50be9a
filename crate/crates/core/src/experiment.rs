//! Arms of the A/B and ablation experiments, and held-out evaluation.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dataset::DatasetManifest;
use crate::error::{Error, Result};
use crate::metrics::{psnr, removal_metrics, ssim, RemovalMetrics};
use crate::raster::{render, RenderSettings};
use crate::scene::SceneModel;
use crate::scorer::ViewScorer;
use crate::train::{train, TrainConfig, TrainOutcome};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Arm {
    /// No regularizer, no pruning.
    Vanilla,
    RegOnly,
    PruneOnly,
    Combined,
}

impl Arm {
    pub const ALL: [Arm; 4] = [Arm::Vanilla, Arm::RegOnly, Arm::PruneOnly, Arm::Combined];

    pub fn name(self) -> &'static str {
        match self {
            Arm::Vanilla => "vanilla",
            Arm::RegOnly => "reg-only",
            Arm::PruneOnly => "prune-only",
            Arm::Combined => "combined",
        }
    }

    /// `base` with this arm's regularizer and pruning switches applied.
    pub fn config(self, base: &TrainConfig) -> TrainConfig {
        let (regularize, prune) = match self {
            Arm::Vanilla => (false, false),
            Arm::RegOnly => (true, false),
            Arm::PruneOnly => (false, true),
            Arm::Combined => (true, true),
        };
        TrainConfig {
            lambda_c: if regularize { base.lambda_c } else { 0.0 },
            prune_enabled: prune,
            ..base.clone()
        }
    }
}

impl fmt::Display for Arm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Arm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Arm::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown arm `{s}` (vanilla, reg-only, prune-only, combined)")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ViewQuality {
    pub view_id: String,
    pub psnr: f64,
    pub ssim: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EvalSummary {
    /// PSNR of the squared error pooled over every test pixel, so a single
    /// perfectly reproduced view does not make the aggregate infinite.
    pub psnr: f64,
    pub mean_ssim: f64,
    pub views: Vec<ViewQuality>,
}

/// PSNR and SSIM of `scene` on the held-out test views.
pub fn evaluate_test_views(scene: &SceneModel, dataset: &DatasetManifest, truncation: f64) -> Result<EvalSummary> {
    let settings = RenderSettings {
        background: dataset.world.background,
        truncation,
        ..RenderSettings::default()
    };
    let mut views = Vec::new();
    let (mut sse, mut count) = (0.0, 0usize);
    for v in dataset.test_views() {
        let target = dataset.load_image(v)?;
        let (img, _) = render(scene, &v.camera, &settings);
        img.same_size(&target)?;
        sse += img.data.iter().zip(&target.data).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
        count += img.data.len();
        views.push(ViewQuality {
            view_id: v.view_id.clone(),
            psnr: psnr(&img, &target)?,
            ssim: ssim(&img, &target)?,
        });
    }
    if views.is_empty() {
        return Err(Error::Dataset("dataset has no test views".into()));
    }
    let n = views.len() as f64;
    let mse = sse / count as f64;
    Ok(EvalSummary {
        psnr: if mse == 0.0 { f64::INFINITY } else { 10.0 * (1.0 / mse).log10() },
        mean_ssim: views.iter().map(|v| v.ssim).sum::<f64>() / n,
        views,
    })
}

#[derive(Clone, Debug)]
pub struct ArmResult {
    pub arm: Arm,
    pub seed: u64,
    pub eval: EvalSummary,
    pub removal: RemovalMetrics,
    pub outcome: TrainOutcome,
}

/// Removal metrics of a trained scene against the dataset's masks.
pub fn removal_for(outcome: &TrainOutcome, dataset: &DatasetManifest, truncation: f64) -> Result<RemovalMetrics> {
    let settings = RenderSettings {
        background: dataset.world.background,
        truncation,
        ..RenderSettings::default()
    };
    let pruned: Vec<_> = outcome.checkpoint.pruned.iter().map(|r| r.gaussian).collect();
    removal_metrics(
        outcome.checkpoint.scene.gaussians(),
        &pruned,
        &dataset.masked_views()?,
        &settings,
    )
}

pub fn run_arm(dataset: &DatasetManifest, base: &TrainConfig, arm: Arm, scorer: &dyn ViewScorer) -> Result<ArmResult> {
    let config = arm.config(base);
    let outcome = train(&config, dataset, scorer)?;
    let eval = evaluate_test_views(&outcome.checkpoint.scene, dataset, config.truncation)?;
    let removal = removal_for(&outcome, dataset, config.truncation)?;
    Ok(ArmResult {
        arm,
        seed: config.seed,
        eval,
        removal,
        outcome,
    })
}

/// One line per arm: PSNR, SSIM, removal, retention, primitive counts.
pub fn summary_table(results: &[ArmResult]) -> String {
    let mut out = format!(
        "{:<12} {:>6} {:>9} {:>8} {:>9} {:>10} {:>7} {:>7} {:>8}\n",
        "arm", "seed", "psnr_db", "ssim", "removal", "retention", "final", "pruned", "secs"
    );
    for r in results {
        out.push_str(&format!(
            "{:<12} {:>6} {:>9.3} {:>8.4} {:>9.3} {:>10.4} {:>7} {:>7} {:>8.1}\n",
            r.arm.name(),
            r.seed,
            r.eval.psnr,
            r.eval.mean_ssim,
            r.removal.distractor_removal_rate,
            r.removal.static_retention,
            r.outcome.report.final_primitives,
            r.outcome.report.total_pruned(),
            r.outcome.report.wall_time_secs,
        ));
    }
    out
}
