use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use semsplat::checkpoint::Checkpoint;
use semsplat::dataset::{generate_synthetic, load_dataset, DatasetManifest, GeneratorParams, Split};
use semsplat::experiment::{evaluate_test_views, run_arm, summary_table, Arm, ArmResult, EvalSummary};
use semsplat::metrics::{removal_metrics, RemovalMetrics};
use semsplat::prune::{calibrate_threshold, threshold_warning, Calibration};
use semsplat::raster::{render, RenderSettings};
use semsplat::scorer::{resolve, OracleScorer, ScoreFile, ViewScorer};
use semsplat::train::{init_scene, train_scene, TrainConfig, TrainData, TrainOutcome};
use semsplat::{Error, Result};

#[derive(Parser, Debug)]
#[command(name = "semsplat", version, about = "Semantic transient suppression for 2D Gaussian splatting")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Write a synthetic benchmark dataset.
    Generate(GenerateArgs),
    /// Train one scene and write its log and checkpoints.
    Train(TrainArgs),
    /// Suggest a pruning threshold from a checkpoint's score distribution.
    Calibrate(CalibrateArgs),
    /// Held-out quality and transient-removal metrics for a checkpoint.
    Evaluate(EvaluateArgs),
    /// Render a checkpoint from dataset cameras to PPM files.
    Render(RenderArgs),
    /// Train every arm on one or more datasets and tabulate the results.
    Report(ReportArgs),
    /// Score a dataset's images with the oracle and write a score file.
    Score(ScoreArgs),
}

#[derive(Args, Debug)]
pub struct GenerateArgs {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// TOML file of generator parameters; unset keys keep their defaults.
    #[arg(long)]
    pub params: Option<PathBuf>,
    #[arg(long)]
    pub train_views: Option<usize>,
    #[arg(long)]
    pub test_views: Option<usize>,
    #[arg(long)]
    pub contamination: Option<f64>,
    #[arg(long)]
    pub hard_mode: bool,
}

/// One optional flag per [`TrainConfig`] field, same names in kebab case.
#[derive(Args, Debug, Default, Serialize)]
pub struct ConfigFlags {
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub iterations: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub schedule_scale: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub accum_start: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reg_start: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub prune_start: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub prune_interval: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub densify_start: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub densify_until: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub densify_interval: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda_c: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ssim_weight: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tau: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_min: Option<u64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha_min: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub prune_enabled: Option<bool>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub densify_grad_threshold: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub densify_scale_threshold: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub split_factor: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_gaussians: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cull_opacity: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lr_position: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lr_position_final: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lr_color: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lr_opacity: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lr_scale: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lr_rotation: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub adam_beta1: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub adam_beta2: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub adam_eps: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub init_opacity: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub truncation: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// `oracle` or the path of a score file.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scorer: Option<String>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub checkpoint_interval: Option<usize>,
}

impl ConfigFlags {
    /// Defaults, then the config file, then these flags.
    pub fn resolve(&self, file: Option<&Path>) -> Result<TrainConfig> {
        let base = match file {
            Some(p) => TrainConfig::load(p)?,
            None => TrainConfig::default(),
        };
        let table = toml::Table::try_from(self).map_err(|e| Error::Config(e.to_string()))?;
        let config = base.merged(&table)?;
        config.validate()?;
        Ok(config)
    }
}

#[derive(Args, Debug)]
pub struct TrainArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    /// Apply an ablation arm's switches on top of the resolved config.
    #[arg(long)]
    pub arm: Option<Arm>,
    #[command(flatten)]
    pub flags: ConfigFlags,
}

#[derive(Args, Debug)]
pub struct CalibrateArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long, default_value_t = 0.038)]
    pub target_fraction: f64,
    /// Also write the deciles as CSV.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long)]
    pub dataset: PathBuf,
    /// A second checkpoint to compare against.
    #[arg(long)]
    pub baseline: Option<PathBuf>,
    /// Directory for metrics.txt and metrics.csv; stdout only when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, default_value_t = 3.0)]
    pub truncation: f64,
}

#[derive(Args, Debug)]
pub struct RenderArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// `train`, `test` or `all`.
    #[arg(long, default_value = "test")]
    pub split: String,
    #[arg(long, default_value_t = 3.0)]
    pub truncation: f64,
}

#[derive(Args, Debug)]
pub struct ReportArgs {
    /// Existing datasets to run on.
    #[arg(long = "dataset")]
    pub datasets: Vec<PathBuf>,
    /// Generate one default benchmark per seed under `<out>/data`.
    #[arg(long, value_delimiter = ',')]
    pub generate_seeds: Vec<u64>,
    #[arg(long)]
    pub params: Option<PathBuf>,
    #[arg(long, value_delimiter = ',', default_values_t = Arm::ALL.to_vec())]
    pub arms: Vec<Arm>,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub flags: ConfigFlags,
}

#[derive(Args, Debug)]
pub struct ScoreArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::Io {
        path: dir.to_path_buf(),
        source: e,
    })
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

fn generator_params(file: Option<&Path>) -> Result<GeneratorParams> {
    let Some(path) = file else {
        return Ok(GeneratorParams::default());
    };
    let text = fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {}", path.display(), e.message())))
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Generate(a) => generate(a),
        Command::Train(a) => train_cmd(a),
        Command::Calibrate(a) => calibrate(a),
        Command::Evaluate(a) => evaluate(a),
        Command::Render(a) => render_cmd(a),
        Command::Report(a) => report(a),
        Command::Score(a) => score(a),
    }
}

fn generate(a: GenerateArgs) -> Result<()> {
    let mut p = generator_params(a.params.as_deref())?;
    if let Some(n) = a.train_views {
        p.train_views = n;
    }
    if let Some(n) = a.test_views {
        p.test_views = n;
    }
    if let Some(c) = a.contamination {
        p.contamination = c;
    }
    p.hard_mode |= a.hard_mode;
    let m = generate_synthetic(&p, a.seed, &a.out)?;
    let contaminated = m.train_views().filter(|v| v.has_transient).count();
    println!(
        "wrote {} train ({} contaminated) and {} test views to {}",
        m.train_views().count(),
        contaminated,
        m.test_views().count(),
        a.out.display()
    );
    Ok(())
}

fn train_cmd(a: TrainArgs) -> Result<()> {
    let mut config = a.flags.resolve(a.config.as_deref())?;
    if let Some(arm) = a.arm {
        config = arm.config(&config);
    }
    let dataset = load_dataset(&a.dataset)?;
    let scorer = resolve(&config.scorer)?;
    create_dir(&a.out)?;
    let ck_dir = a.out.join("checkpoints");
    if config.checkpoint_interval > 0 {
        create_dir(&ck_dir)?;
    }
    let data = TrainData::from_manifest(&dataset)?;
    let init = init_scene(&dataset.load_init_points()?, config.init_opacity, config.seed)?;
    let outcome = train_scene(&config, &data, init, scorer.as_ref(), Some(&ck_dir))?;
    write_train_outputs(&a.out, &config, &outcome)?;
    println!(
        "trained {} iterations: {} -> {} primitives, {} pruned, {:.1}s",
        outcome.report.log.len(),
        outcome.report.initial_primitives,
        outcome.report.final_primitives,
        outcome.report.total_pruned(),
        outcome.report.wall_time_secs
    );
    Ok(())
}

fn write_train_outputs(out: &Path, config: &TrainConfig, outcome: &TrainOutcome) -> Result<()> {
    write(&out.join("config.toml"), &config.to_toml())?;
    write(&out.join("loss.csv"), &outcome.report.loss_csv())?;
    let mut events = String::from("iteration,removed,semantic,unstable,remaining\n");
    for e in &outcome.report.prune_events {
        writeln!(
            events,
            "{},{},{},{},{}",
            e.iteration, e.removed, e.tally.semantic, e.tally.unstable, e.remaining
        )
        .unwrap();
    }
    write(&out.join("prune_events.csv"), &events)?;
    let mut dens = String::from("iteration,cloned,split,culled,primitives\n");
    for e in &outcome.report.densify_events {
        writeln!(dens, "{},{},{},{},{}", e.iteration, e.cloned, e.split, e.culled, e.primitives).unwrap();
    }
    write(&out.join("densify_events.csv"), &dens)?;
    outcome.checkpoint.save(&out.join("final.ckpt"))
}

fn calibrate(a: CalibrateArgs) -> Result<()> {
    let ck = Checkpoint::load(&a.checkpoint)?;
    let scores = ck.scene.normalized_scores();
    let c = calibrate_threshold(&scores, a.target_fraction)?;
    let h = c.histogram();
    let mut text = String::new();
    writeln!(text, "primitives {}  positive {}  min {:.6}  max {:.6}", h.count, h.positive, h.min, h.max).unwrap();
    for (d, v) in h.deciles.iter().enumerate() {
        writeln!(text, "p{:<3} {v:.6}", (d + 1) * 10).unwrap();
    }
    match &c {
        Calibration::Threshold { tau, pruned, .. } => {
            writeln!(
                text,
                "suggested tau {tau:.6} prunes {pruned} of {} positive-score primitives (target {:.1}%)",
                h.positive,
                a.target_fraction * 100.0
            )
            .unwrap();
            if let Some(w) = threshold_warning(*tau, h) {
                log::warn!("{w}");
            }
        }
        Calibration::NoDistractors { .. } => {
            writeln!(text, "no distractors detected: every score is zero").unwrap();
        }
    }
    print!("{text}");
    if let Some(path) = &a.csv {
        let mut csv = String::from("percentile,score\n");
        for (d, v) in h.deciles.iter().enumerate() {
            writeln!(csv, "{},{v:.9}", (d + 1) * 10).unwrap();
        }
        write(path, &csv)?;
    }
    Ok(())
}

struct Evaluated {
    name: String,
    eval: EvalSummary,
    removal: Option<RemovalMetrics>,
}

fn evaluate_checkpoint(name: &str, path: &Path, dataset: &DatasetManifest, truncation: f64) -> Result<Evaluated> {
    let ck = Checkpoint::load(path)?;
    let eval = evaluate_test_views(&ck.scene, dataset, truncation)?;
    let views = dataset.masked_views()?;
    let removal = if views.is_empty() {
        None
    } else {
        let settings = RenderSettings {
            background: dataset.world.background,
            truncation,
            ..RenderSettings::default()
        };
        let pruned: Vec<_> = ck.pruned.iter().map(|r| r.gaussian).collect();
        Some(removal_metrics(ck.scene.gaussians(), &pruned, &views, &settings)?)
    };
    Ok(Evaluated {
        name: name.into(),
        eval,
        removal,
    })
}

fn evaluate(a: EvaluateArgs) -> Result<()> {
    let dataset = load_dataset(&a.dataset)?;
    let mut rows = vec![evaluate_checkpoint("checkpoint", &a.checkpoint, &dataset, a.truncation)?];
    if let Some(b) = &a.baseline {
        rows.push(evaluate_checkpoint("baseline", b, &dataset, a.truncation)?);
    }
    let mut text = String::new();
    let mut csv = String::from("checkpoint,view,psnr_db,ssim\n");
    for r in &rows {
        writeln!(text, "{}: psnr {:.3} dB, ssim {:.4}", r.name, r.eval.psnr, r.eval.mean_ssim).unwrap();
        if let Some(m) = &r.removal {
            writeln!(
                text,
                "  distractor removal {:.3} ({}/{}), static retention {:.4} ({} of {} pruned)",
                m.distractor_removal_rate, m.transient_pruned, m.transient_total, m.static_retention, m.static_pruned, m.static_total
            )
            .unwrap();
        }
        for v in &r.eval.views {
            writeln!(text, "  {:<12} {:>8.3} {:>7.4}", v.view_id, v.psnr, v.ssim).unwrap();
            writeln!(csv, "{},{},{:.6},{:.6}", r.name, v.view_id, v.psnr, v.ssim).unwrap();
        }
        writeln!(csv, "{},all,{:.6},{:.6}", r.name, r.eval.psnr, r.eval.mean_ssim).unwrap();
    }
    if let [c, b] = &rows[..] {
        writeln!(text, "psnr gain over baseline {:+.3} dB", c.eval.psnr - b.eval.psnr).unwrap();
    }
    print!("{text}");
    if let Some(out) = &a.out {
        create_dir(out)?;
        write(&out.join("metrics.txt"), &text)?;
        write(&out.join("metrics.csv"), &csv)?;
    }
    Ok(())
}

fn render_cmd(a: RenderArgs) -> Result<()> {
    let ck = Checkpoint::load(&a.checkpoint)?;
    let dataset = load_dataset(&a.dataset)?;
    let split = match a.split.as_str() {
        "train" => Some(Split::Train),
        "test" => Some(Split::Test),
        "all" => None,
        other => return Err(Error::InvalidArgument(format!("unknown split `{other}`"))),
    };
    let settings = RenderSettings {
        background: dataset.world.background,
        truncation: a.truncation,
        ..RenderSettings::default()
    };
    create_dir(&a.out)?;
    let mut n = 0;
    for v in dataset.views.iter().filter(|v| split.is_none_or(|s| v.split == s)) {
        let (img, _) = render(&ck.scene, &v.camera, &settings);
        img.write_ppm(&a.out.join(format!("{}.ppm", v.view_id)))?;
        n += 1;
    }
    println!("rendered {n} views to {}", a.out.display());
    Ok(())
}

fn report(a: ReportArgs) -> Result<()> {
    let base = a.flags.resolve(a.config.as_deref())?;
    create_dir(&a.out)?;
    let mut runs: Vec<(DatasetManifest, u64)> = Vec::new();
    for d in &a.datasets {
        runs.push((load_dataset(d)?, base.seed));
    }
    if !a.generate_seeds.is_empty() {
        let params = generator_params(a.params.as_deref())?;
        for &seed in &a.generate_seeds {
            let dir = a.out.join("data").join(format!("seed_{seed}"));
            runs.push((generate_synthetic(&params, seed, &dir)?, seed));
        }
    }
    if runs.is_empty() {
        return Err(Error::InvalidArgument("report needs --dataset or --generate-seeds".into()));
    }
    let scorer = resolve(&base.scorer)?;
    let mut results: Vec<ArmResult> = Vec::new();
    for (dataset, seed) in &runs {
        let config = TrainConfig { seed: *seed, ..base.clone() };
        for &arm in &a.arms {
            log::info!("training {arm} on {} (seed {seed})", dataset.root.display());
            let r = run_arm(dataset, &config, arm, scorer.as_ref())?;
            results.push(r);
        }
    }
    let table = summary_table(&results);
    let mut csv = String::from("arm,seed,psnr_db,ssim,removal,retention,final,pruned\n");
    for r in &results {
        writeln!(
            csv,
            "{},{},{:.6},{:.6},{:.6},{:.6},{},{}",
            r.arm,
            r.seed,
            r.eval.psnr,
            r.eval.mean_ssim,
            r.removal.distractor_removal_rate,
            r.removal.static_retention,
            r.outcome.report.final_primitives,
            r.outcome.report.total_pruned()
        )
        .unwrap();
    }
    print!("{table}");
    write(&a.out.join("summary.txt"), &table)?;
    write(&a.out.join("summary.csv"), &csv)?;
    Ok(())
}

fn score(a: ScoreArgs) -> Result<()> {
    let dataset = load_dataset(&a.dataset)?;
    let oracle = OracleScorer::default();
    let records = dataset
        .train_views()
        .map(|v| Ok((v.view_id.clone(), oracle.score(&v.view_id, &dataset.load_image(v)?)?)))
        .collect::<Result<Vec<_>>>()?;
    let file = ScoreFile::from_records(records)?;
    file.save(&a.out)?;
    println!("wrote {} scores to {}", file.len(), a.out.display());
    Ok(())
}
