//! Runs every headline criterion at its pinned tolerance and prints one
//! PASS/FAIL line per criterion. Exits nonzero if any fails.

mod common;

use std::process::ExitCode;
use std::time::Instant;

use rand::Rng;

use semsplat::dataset::{generate_synthetic, GeneratorParams};
use semsplat::experiment::{run_arm, summary_table, Arm, ArmResult};
use semsplat::metrics::is_transient_region;
use semsplat::prune::{calibrate_threshold, prune_mask, Calibration, PruneParams};
use semsplat::raster::RenderSettings;
use semsplat::scorer::OracleScorer;
use semsplat::train::TrainConfig;

use common::*;

struct Outcome {
    name: &'static str,
    passed: bool,
    detail: String,
}

fn outcome(name: &'static str, passed: bool, detail: String) -> Outcome {
    Outcome { name, passed, detail }
}

fn gradient_correctness() -> Outcome {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    let mut params = 0;
    let scenes = 12;
    for seed in 0..scenes {
        let (err, n) = gradient_error(seed);
        worst = worst.max(err);
        params += n;
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        "gradient correctness",
        worst < 1e-4 && secs < 60.0,
        format!("{scenes} scenes, {params} parameters, worst relative error {worst:.2e}, {secs:.1}s"),
    )
}

fn accumulation_oracle() -> Outcome {
    let beta = 0.1;
    let mut mismatches = 0;
    let mut clean_nonzero = 0;
    let mut bound_violations = 0;
    for seed in 0..100u64 {
        let clean = seed % 4 == 0;
        let r = replay_trace(1_000 + seed, 200, clean, beta);
        for (e, &(s, n)) in r.engine.iter().zip(&r.oracle) {
            if e.accum_score != s || e.view_count != n {
                mismatches += 1;
            }
            if clean && e.accum_score != 0.0 {
                clean_nonzero += 1;
            }
            if e.accum_score > beta / 2.0 * e.view_count as f64 {
                bound_violations += 1;
            }
        }
    }
    outcome(
        "accumulation oracle equivalence",
        mismatches == 0 && clean_nonzero == 0 && bound_violations == 0,
        format!("100 traces x 200 iterations: {mismatches} mismatches, {clean_nonzero} nonzero clean scores, {bound_violations} bound violations"),
    )
}

fn pruning_predicate() -> Outcome {
    let mut r = rng(77);
    let mut disagreements = 0;
    let total = 100_000;
    for _ in 0..(total / 1_000) {
        let p = PruneParams {
            tau: r.gen_range(0.0..0.04),
            n_min: r.gen_range(0..20),
            alpha_min: r.gen_range(0.0..0.5),
        };
        let rows: Vec<_> = (0..1_000).map(|_| prune_tuple(&mut r, &p)).collect();
        let s: Vec<f64> = rows.iter().map(|t| t.0).collect();
        let n: Vec<u64> = rows.iter().map(|t| t.1).collect();
        let a: Vec<f64> = rows.iter().map(|t| t.2).collect();
        let (mask, _) = prune_mask(&s, &n, &a, &p).unwrap();
        disagreements += rows
            .iter()
            .zip(&mask)
            .filter(|(t, &m)| naive_prune(t.0, t.1, t.2, &p) != m)
            .count();
    }

    // nested pruned sets along each threshold axis
    let base = PruneParams::default();
    let rows: Vec<_> = (0..5_000).map(|_| prune_tuple(&mut r, &base)).collect();
    let s: Vec<f64> = rows.iter().map(|t| t.0).collect();
    let n: Vec<u64> = rows.iter().map(|t| t.1).collect();
    let a: Vec<f64> = rows.iter().map(|t| t.2).collect();
    let mut monotonic_breaks = 0;
    let subset = |small: &[bool], large: &[bool]| small.iter().zip(large).all(|(&x, &y)| !x || y);
    let mut sweep = |params: Vec<PruneParams>, growing: bool| {
        let masks: Vec<Vec<bool>> = params.iter().map(|p| prune_mask(&s, &n, &a, p).unwrap().0).collect();
        for w in masks.windows(2) {
            let ok = if growing { subset(&w[0], &w[1]) } else { subset(&w[1], &w[0]) };
            monotonic_breaks += !ok as usize;
        }
    };
    sweep((0..=50).map(|i| PruneParams { tau: i as f64 * 0.001, ..base }).collect(), false);
    sweep((0..=30).map(|i| PruneParams { n_min: i, ..base }).collect(), true);
    sweep((0..=50).map(|i| PruneParams { alpha_min: i as f64 * 0.02, ..base }).collect(), true);
    outcome(
        "pruning predicate",
        disagreements == 0 && monotonic_breaks == 0,
        format!("{total} tuples, {disagreements} disagreements; {monotonic_breaks} monotonicity breaks over tau, n_min, alpha_min sweeps"),
    )
}

struct Benchmark {
    results: Vec<ArmResult>,
    datasets: Vec<semsplat::dataset::DatasetManifest>,
    secs: f64,
    _dirs: Vec<tempfile::TempDir>,
}

fn run_benchmark(seeds: &[u64]) -> Benchmark {
    let start = Instant::now();
    let scorer = OracleScorer::default();
    let mut results = Vec::new();
    let mut datasets = Vec::new();
    let mut dirs = Vec::new();
    for &seed in seeds {
        let dir = tempfile::tempdir().unwrap();
        let dataset = generate_synthetic(&GeneratorParams::default(), seed, dir.path()).unwrap();
        let config = TrainConfig {
            seed,
            ..TrainConfig::default()
        };
        for arm in Arm::ALL {
            results.push(run_arm(&dataset, &config, arm, &scorer).unwrap());
        }
        datasets.push(dataset);
        dirs.push(dir);
    }
    Benchmark {
        results,
        datasets,
        secs: start.elapsed().as_secs_f64(),
        _dirs: dirs,
    }
}

fn arm_result<'a>(b: &'a Benchmark, seed: u64, arm: Arm) -> &'a ArmResult {
    b.results.iter().find(|r| r.seed == seed && r.arm == arm).unwrap()
}

fn calibration_anchor(b: &Benchmark) -> Outcome {
    // scores of the unpruned baseline scene, where ghost primitives survive
    let vanilla = arm_result(b, 0, Arm::Vanilla);
    let dataset = &b.datasets[0];
    let scene = &vanilla.outcome.checkpoint.scene;
    let views = dataset.masked_views().unwrap();
    let settings = RenderSettings {
        background: dataset.world.background,
        ..RenderSettings::default()
    };
    let scores = scene.normalized_scores();
    let mut flagged: Vec<f64> = scene
        .gaussians()
        .iter()
        .zip(&scores)
        .filter(|(g, &s)| s > 0.0 && is_transient_region(g, &views, &settings))
        .map(|(_, &s)| s)
        .collect();
    flagged.sort_by(f64::total_cmp);
    let median = if flagged.is_empty() { 0.0 } else { flagged[(flagged.len() - 1) / 2] };
    let (lo, hi) = (10f64.powf(-2.5), 10f64.powf(-1.5));
    let in_band = median >= lo && median <= hi;

    let target = 0.038;
    let (calibrated, detail) = match calibrate_threshold(&scores, target).unwrap() {
        Calibration::Threshold { tau, pruned, histogram } => {
            let expected = target * histogram.positive as f64;
            let actual = scores.iter().filter(|&&s| s > tau).count();
            // tied scores make only some counts reachable by any threshold
            let mut reachable: Vec<usize> = scores
                .iter()
                .filter(|&&v| v > 0.0)
                .map(|&v| scores.iter().filter(|&&s| s > v).count())
                .collect();
            reachable.push(histogram.positive);
            reachable.sort_unstable();
            reachable.dedup();
            let below = reachable.iter().rev().find(|&&c| (c as f64) <= expected);
            let above = reachable.iter().find(|&&c| (c as f64) > expected);
            (
                (actual as f64 - expected).abs() <= 1.0 && actual == pruned,
                format!(
                    "tau {tau:.5} prunes {actual} of {} positive (target {expected:.1}; nearest reachable counts {} and {})",
                    histogram.positive,
                    below.map_or("none".into(), |c| c.to_string()),
                    above.map_or("none".into(), |c| c.to_string())
                ),
            )
        }
        Calibration::NoDistractors { .. } => (false, "no positive scores".into()),
    };
    outcome(
        "calibration anchor",
        in_band && calibrated,
        format!(
            "flagged-region median score {median:.4} over {} primitives (band [{lo:.4}, {hi:.4}]); {detail}",
            flagged.len()
        ),
    )
}

fn end_to_end(b: &Benchmark, seeds: &[u64]) -> Outcome {
    let mut ok = b.secs < 15.0 * 60.0;
    let mut parts = Vec::new();
    for &seed in seeds {
        let v = arm_result(b, seed, Arm::Vanilla);
        let c = arm_result(b, seed, Arm::Combined);
        let gain = c.eval.psnr - v.eval.psnr;
        let seed_ok = gain >= 0.5 && c.removal.distractor_removal_rate >= 0.8 && c.removal.static_retention >= 0.99;
        ok &= seed_ok;
        parts.push(format!(
            "seed {seed}: {gain:+.2} dB, removal {:.3}, retention {:.4}",
            c.removal.distractor_removal_rate, c.removal.static_retention
        ));
    }
    outcome(
        "end-to-end A/B",
        ok,
        format!("{}; all arms {:.0}s", parts.join("; "), b.secs),
    )
}

fn ablation(b: &Benchmark, seeds: &[u64]) -> Outcome {
    let mean = |arm: Arm| seeds.iter().map(|&s| arm_result(b, s, arm).eval.psnr).sum::<f64>() / seeds.len() as f64;
    let (v, r, p, c) = (mean(Arm::Vanilla), mean(Arm::RegOnly), mean(Arm::PruneOnly), mean(Arm::Combined));
    outcome(
        "ablation ordering",
        r > v && p > v && c >= r && c >= p,
        format!("mean PSNR vanilla {v:.3}, reg-only {r:.3}, prune-only {p:.3}, combined {c:.3}"),
    )
}

fn bookkeeping_and_determinism(b: &Benchmark) -> Outcome {
    let mut violations = Vec::new();
    let mut ops = 0;
    for seed in 0..100 {
        let run = interleave(5_000 + seed);
        ops += run.ops;
        violations.extend(run.violations.into_iter().map(|v| format!("interleaving {seed}, {v}")));
    }
    let first = arm_result(b, 0, Arm::Combined);
    let config = TrainConfig {
        seed: 0,
        ..TrainConfig::default()
    };
    let again = run_arm(&b.datasets[0], &config, Arm::Combined, &OracleScorer::default()).unwrap();
    let same_report = again.outcome.report.without_timing() == first.outcome.report.without_timing();
    let same_scene = again.outcome.checkpoint.to_text() == first.outcome.checkpoint.to_text();
    let detail = format!(
        "100 interleavings ({ops} operations), {} violations{}; rerun identical report {same_report}, identical checkpoint {same_scene}",
        violations.len(),
        violations.first().map(|v| format!(" (first: {v})")).unwrap_or_default()
    );
    outcome("structural bookkeeping and determinism", violations.is_empty() && same_report && same_scene, detail)
}

fn main() -> ExitCode {
    if std::env::args().any(|a| a == "--list") {
        // test harness discovery probe
        return ExitCode::SUCCESS;
    }
    let seeds = [0, 1, 2];
    let mut results = vec![gradient_correctness(), accumulation_oracle(), pruning_predicate()];
    let bench = run_benchmark(&seeds);
    println!("{}", summary_table(&bench.results));
    results.push(calibration_anchor(&bench));
    results.push(end_to_end(&bench, &seeds));
    results.push(ablation(&bench, &seeds));
    results.push(bookkeeping_and_determinism(&bench));

    for r in &results {
        println!("{} {}: {}", if r.passed { "PASS" } else { "FAIL" }, r.name, r.detail);
    }
    let failed = results.iter().filter(|r| !r.passed).count();
    println!("{} of {} criteria passed", results.len() - failed, results.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
