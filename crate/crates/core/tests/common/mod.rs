#![allow(dead_code)]

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use semsplat::accumulate::accumulate;
use semsplat::camera::CameraPose;
use semsplat::dataset::{generate_synthetic, DatasetManifest, GeneratorParams};
use semsplat::image::Image;
use semsplat::loss::{clip_regularizer, photometric_loss, DEFAULT_SSIM_WEIGHT};
use semsplat::prune::{prune_mask, PruneParams};
use semsplat::raster::{backward, param, param_mut, render, RenderSettings, VisibilityMask, PARAMS_PER_PRIMITIVE};
use semsplat::scene::{GaussianPrimitive, SceneModel, SemanticStats};
use semsplat::scorer::ViewScore;
use semsplat::train::{densify, Adam, DensifyParams, DensifyStats, TrainConfig};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// 16x16 view of roughly [-1, 1]^2.
pub fn small_camera(rng: &mut ChaCha8Rng) -> CameraPose {
    CameraPose::new(
        [rng.gen_range(-0.1..0.1), rng.gen_range(-0.1..0.1)],
        rng.gen_range(-0.5..0.5),
        rng.gen_range(7.0..9.0),
        16,
        16,
    )
    .unwrap()
}

pub fn random_gaussian(rng: &mut ChaCha8Rng, extent: f64) -> GaussianPrimitive {
    GaussianPrimitive::new(
        [rng.gen_range(-extent..extent), rng.gen_range(-extent..extent)],
        [rng.gen_range(0.12..0.45), rng.gen_range(0.12..0.45)],
        rng.gen_range(-1.5..1.5),
        [rng.gen_range(0.05..0.95), rng.gen_range(0.05..0.95), rng.gen_range(0.05..0.95)],
        rng.gen_range(0.2..0.9),
    )
    .with_depth(rng.gen())
}

pub fn random_image(rng: &mut ChaCha8Rng, w: usize, h: usize) -> Image {
    Image::from_data(w, h, (0..w * h * 3).map(|_| rng.gen()).collect()).unwrap()
}

pub struct GradScene {
    pub scene: SceneModel,
    pub camera: CameraPose,
    pub target: Image,
    pub lambda_c: f64,
}

pub fn grad_scene(seed: u64) -> GradScene {
    let mut r = rng(seed);
    let n = r.gen_range(1..=8);
    let gaussians: Vec<_> = (0..n).map(|_| random_gaussian(&mut r, 0.8)).collect();
    let stats = (0..n)
        .map(|_| SemanticStats {
            accum_score: r.gen_range(0.0..1.0),
            view_count: r.gen_range(20..40),
        })
        .collect();
    GradScene {
        scene: SceneModel::from_parts(gaussians, stats, 0).unwrap(),
        camera: small_camera(&mut r),
        target: random_image(&mut r, 16, 16),
        lambda_c: r.gen_range(0.01..1.0),
    }
}

pub fn untruncated() -> RenderSettings {
    RenderSettings {
        truncation: f64::INFINITY,
        background: [0.1, 0.2, 0.3],
        ..RenderSettings::default()
    }
}

/// Photometric plus weighted semantic regularizer, as optimized.
pub fn objective(s: &GradScene, scene: &SceneModel, settings: &RenderSettings) -> f64 {
    let (img, _) = render(scene, &s.camera, settings);
    let (photo, _) = photometric_loss(&img, &s.target, DEFAULT_SSIM_WEIGHT).unwrap();
    let (clip, _) = clip_regularizer(&scene.normalized_scores(), &scene.opacities()).unwrap();
    photo + s.lambda_c * clip
}

pub fn analytic_gradient(s: &GradScene, settings: &RenderSettings) -> Vec<f64> {
    let (img, _) = render(&s.scene, &s.camera, settings);
    let (_, pixel_grad) = photometric_loss(&img, &s.target, DEFAULT_SSIM_WEIGHT).unwrap();
    let mut g = backward(&s.scene, &s.camera, settings, &pixel_grad).unwrap();
    let alphas = s.scene.opacities();
    let (_, d_alpha) = clip_regularizer(&s.scene.normalized_scores(), &alphas).unwrap();
    for ((o, da), a) in g.opacity_logit.iter_mut().zip(d_alpha).zip(alphas) {
        *o += s.lambda_c * da * a * (1.0 - a);
    }
    g.flatten()
}

/// Worst relative error between analytic and central-difference gradients
/// over every parameter of the scene.
pub fn gradient_error(seed: u64) -> (f64, usize) {
    let s = grad_scene(seed);
    let settings = untruncated();
    let (_, vis) = render(&s.scene, &s.camera, &settings);
    assert!(vis.flags.iter().all(|&v| v), "scene {seed}: every primitive should be visible");
    let analytic = analytic_gradient(&s, &settings);
    let h = 1e-6;
    let mut worst: f64 = 0.0;
    let mut checked = 0;
    for j in 0..s.scene.len() {
        for k in 0..PARAMS_PER_PRIMITIVE {
            let eval = |delta: f64| {
                let mut gs: Vec<GaussianPrimitive> = s.scene.gaussians().to_vec();
                *param_mut(&mut gs[j], k) += delta;
                let scene = SceneModel::from_parts(gs, s.scene.stats().to_vec(), 0).unwrap();
                objective(&s, &scene, &settings)
            };
            let fd = (eval(h) - eval(-h)) / (2.0 * h);
            let a = analytic[j * PARAMS_PER_PRIMITIVE + k];
            let scale = fd.abs().max(a.abs()).max(1e-6);
            let rel = (fd - a).abs() / scale;
            assert!(param(&s.scene.gaussians()[j], k).is_finite());
            worst = worst.max(rel);
            checked += 1;
        }
    }
    (worst, checked)
}

/// A random view score, clean (distractor at most 0.5) when asked.
pub fn random_view_score(rng: &mut ChaCha8Rng, clean: bool) -> ViewScore {
    let d = if clean {
        rng.gen_range(0.0..=0.5)
    } else if rng.gen_bool(0.3) {
        0.5
    } else {
        rng.gen_range(0.0..=1.0)
    };
    ViewScore::new(d, rng.gen_range(0.0..=1.0)).unwrap()
}

pub fn random_visibility(rng: &mut ChaCha8Rng, n: usize) -> VisibilityMask {
    let density = rng.gen_range(0.0..1.0);
    let flags: Vec<bool> = (0..n).map(|_| rng.gen_bool(density)).collect();
    let peak_weight = flags.iter().map(|&f| if f { rng.gen_range(1.0 / 255.0..1.0) } else { 0.0 }).collect();
    VisibilityMask { flags, peak_weight }
}

/// Result of replaying one accumulation trace.
pub struct ReplayResult {
    pub engine: Vec<SemanticStats>,
    pub oracle: Vec<(f64, u64)>,
}

/// Runs the engine and an independent scalar replay over the same trace.
pub fn replay_trace(seed: u64, iterations: usize, clean: bool, beta: f64) -> ReplayResult {
    let mut r = rng(seed);
    let n = r.gen_range(1..40);
    let gaussians: Vec<_> = (0..n).map(|_| random_gaussian(&mut r, 1.0)).collect();
    let mut scene = SceneModel::from_gaussians(gaussians).unwrap();
    let mut trace = Vec::with_capacity(iterations);
    for _ in 0..iterations {
        let vis = random_visibility(&mut r, n);
        let score = random_view_score(&mut r, clean);
        accumulate(&mut scene, &vis, &score, beta).unwrap();
        trace.push((vis.flags, score.distractor));
    }
    let mut oracle = vec![(0.0f64, 0u64); n];
    for (flags, d) in &trace {
        let excess = if *d > 0.5 { d - 0.5 } else { 0.0 };
        for j in 0..n {
            if flags[j] {
                oracle[j].0 += beta * excess;
                oracle[j].1 += 1;
            }
        }
    }
    ReplayResult {
        engine: scene.stats().to_vec(),
        oracle,
    }
}

pub fn naive_prune(s: f64, n: u64, a: f64, p: &PruneParams) -> bool {
    if s > p.tau {
        return true;
    }
    if n < p.n_min {
        if a < p.alpha_min {
            return true;
        }
    }
    false
}

/// A score, count or opacity that lands on the thresholds often.
pub fn prune_tuple(rng: &mut ChaCha8Rng, p: &PruneParams) -> (f64, u64, f64) {
    let s = match rng.gen_range(0..5) {
        0 => p.tau,
        1 => 0.0,
        _ => rng.gen_range(0.0..0.05),
    };
    let n = if rng.gen_bool(0.2) { p.n_min } else { rng.gen_range(0..25) };
    let a = if rng.gen_bool(0.2) { p.alpha_min } else { rng.gen_range(0.0..1.0) };
    (s, n, a)
}

/// Summary of one random densify/prune interleaving.
pub struct Interleaving {
    pub ops: usize,
    pub violations: Vec<String>,
}

/// Random accumulate, densify and prune steps on a scene plus its optimizer
/// and densification statistics, checking alignment after every step.
pub fn interleave(seed: u64) -> Interleaving {
    let mut r = rng(seed);
    let config = TrainConfig::default();
    let n0 = r.gen_range(3..30);
    let mut scene = SceneModel::from_gaussians((0..n0).map(|_| random_gaussian(&mut r, 1.0)).collect()).unwrap();
    let mut adam = Adam::new(scene.len(), &config);
    let mut dstats = DensifyStats::new(scene.len());
    let params = DensifyParams {
        grad_threshold: 0.5,
        scale_threshold: 0.25,
        split_factor: 1.6,
        max_gaussians: 120,
        cull_opacity: 0.05,
    };
    let mut violations = Vec::new();
    let steps = r.gen_range(5..30);
    for step in 0..steps {
        let before = scene.len();
        let generation = scene.generation();
        match r.gen_range(0..3) {
            0 => {
                let vis = random_visibility(&mut r, scene.len());
                accumulate(&mut scene, &vis, &random_view_score(&mut r, false), 0.1).unwrap();
                let mut g = semsplat::raster::Gradients::zeros(scene.len());
                for sp in &mut g.screen_position {
                    *sp = [r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0)];
                }
                dstats.record(&g, &vis);
            }
            1 => {
                let old_stats = scene.stats().to_vec();
                let out = densify(&mut scene, &dstats, &params).unwrap();
                adam.extend_zeroed(out.added);
                adam.remove_masked(&out.removed);
                // survivors keep their statistics; offspring start at zero
                let kept: Vec<SemanticStats> = old_stats
                    .iter()
                    .zip(&out.removed)
                    .filter(|(_, &rm)| !rm)
                    .map(|(s, _)| *s)
                    .collect();
                let offspring_start = kept.len();
                if scene.stats()[..offspring_start] != kept[..] {
                    violations.push(format!("step {step}: survivor stats changed by densify"));
                }
                let removed_offspring = out.removed[before..].iter().filter(|&&x| x).count();
                let fresh = out.added - removed_offspring;
                if scene.len() != offspring_start + fresh {
                    violations.push(format!("step {step}: densify count mismatch"));
                }
                if scene.stats()[offspring_start..].iter().any(|s| *s != SemanticStats::default()) {
                    violations.push(format!("step {step}: offspring stats not zero"));
                }
                if !out.is_noop() && scene.generation() == generation {
                    violations.push(format!("step {step}: generation not bumped by densify"));
                }
                let expected = before + out.added - out.removed.iter().filter(|&&x| x).count();
                if scene.len() != expected {
                    violations.push(format!("step {step}: expected {expected} primitives, found {}", scene.len()));
                }
                dstats = DensifyStats::new(scene.len());
            }
            _ => {
                let p = PruneParams {
                    tau: r.gen_range(0.0..0.05),
                    ..PruneParams::default()
                };
                let (mask, tally) = prune_mask(&scene.normalized_scores(), &scene.view_counts(), &scene.opacities(), &p).unwrap();
                if tally.total == scene.len() {
                    continue;
                }
                let survivors: Vec<_> = scene
                    .gaussians()
                    .iter()
                    .zip(scene.stats())
                    .zip(&mask)
                    .filter(|(_, &m)| !m)
                    .map(|((g, s), _)| (*g, *s))
                    .collect();
                let removed = scene.remove_masked(&mask).unwrap();
                adam.remove_masked(&mask);
                dstats.remove_masked(&mask);
                let now: Vec<_> = scene.gaussians().iter().copied().zip(scene.stats().iter().copied()).collect();
                if now != survivors {
                    violations.push(format!("step {step}: prune reordered or altered survivors"));
                }
                if removed != tally.total || scene.len() != before - removed {
                    violations.push(format!("step {step}: prune count mismatch"));
                }
                if removed > 0 && scene.generation() == generation {
                    violations.push(format!("step {step}: generation not bumped by prune"));
                }
            }
        }
        if adam.len() != scene.len() || dstats.len() != scene.len() || scene.stats().len() != scene.gaussians().len() {
            violations.push(format!(
                "step {step}: lists out of alignment (scene {}, stats {}, adam {}, densify {})",
                scene.len(),
                scene.stats().len(),
                adam.len(),
                dstats.len()
            ));
        }
    }
    Interleaving { ops: steps, violations }
}

/// A small benchmark that trains in seconds.
pub fn tiny_params() -> GeneratorParams {
    GeneratorParams {
        width: 32,
        height: 32,
        train_views: 12,
        test_views: 3,
        zoom: [14.0, 16.0],
        sprite_radius: [3.0, 4.0],
        background_points: 60,
        ..GeneratorParams::default()
    }
}

pub fn tiny_config() -> TrainConfig {
    // 300 iterations after the default 0.1 schedule scale
    TrainConfig {
        iterations: 3_000,
        accum_start: 300,
        reg_start: 1_000,
        prune_start: 1_500,
        prune_interval: 500,
        densify_start: 500,
        densify_until: 2_500,
        ..TrainConfig::default()
    }
}

pub fn tiny_dataset(dir: &Path, seed: u64) -> DatasetManifest {
    generate_synthetic(&tiny_params(), seed, dir).unwrap()
}
