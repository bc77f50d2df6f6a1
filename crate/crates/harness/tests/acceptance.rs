//! Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any
//! criterion fails. Tolerances are fixed here, not read from config.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use anyhow::{ensure, Result};
use glnn_core::channel::{ChannelSimulator, Phase, ScenarioConfig};
use glnn_core::glnn::{GlnnConfig, GlnnRunner};
use glnn_lab::checks::{cee_suite, gradient_suite, liquid_suite, power_suite, wmmse_suite, SuiteReport};
use glnn_lab::experiments::{run_se_vs_cee, run_se_vs_power, run_timing};
use glnn_lab::results::strip_timing_columns;
use glnn_lab::{run, write_outputs, Algorithm, ExperimentKind, LabConfig, RunOptions};

const GRADIENT_BUDGET: Duration = Duration::from_secs(10);
const TOY_BUDGET: Duration = Duration::from_secs(60);
const TOY_MIN_RATIO: f64 = 0.98;
const SE_MIN_RATIO: f64 = 0.95;
const CEE_ROBUST_REL: f64 = 0.05;
const TIMING_MAX_RATIO: f64 = 0.25;

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Result<Outcome> {
    Ok(Outcome { passed, detail: detail.into() })
}

fn suite(r: SuiteReport) -> Result<Outcome> {
    let mut detail = format!("{} in {:.2}s", r.detail, r.elapsed.as_secs_f64());
    if let Some(f) = r.failures.first() {
        detail.push_str(&format!("; {} failures, first: {f}", r.failures.len()));
    }
    outcome(r.passed, detail)
}

fn criterion_1() -> Result<Outcome> {
    let r = gradient_suite(20, None);
    let within_budget = r.elapsed < GRADIENT_BUDGET;
    let passed = r.passed && within_budget;
    let mut o = suite(r)?;
    o.passed = passed;
    if !within_budget {
        o.detail.push_str("; over the 10 s budget");
    }
    Ok(o)
}

fn criterion_6() -> Result<Outcome> {
    let start = Instant::now();
    let mut scenario = ScenarioConfig::with_dims(2, 1, 1);
    scenario.phase_table = vec![Phase { speed: 0.0, slots: 200 }];
    let sim = ChannelSimulator::new(scenario)?;
    let samples = (0..200).map(|s| sim.sample(s, None)).collect::<glnn_core::Result<Vec<_>>>()?;
    let cfg = GlnnConfig {
        warmup_samples: 0,
        ..GlnnConfig::default()
    };
    let mut runner = GlnnRunner::new(cfg.clone(), 1, 1, 1)?;
    let records = runner.run_online(&samples)?;
    let h = &samples[199].h_true;
    let gain: f64 = (0..h.cols()).map(|j| h.get(0, j).norm_sqr()).sum();
    let mrt = (1.0 + cfg.power_mw * gain / cfg.noise_mw).log2();
    let last = records.last().expect("200 records").r_true;
    let ratio = last / mrt;
    let elapsed = start.elapsed();
    outcome(
        ratio >= TOY_MIN_RATIO && elapsed < TOY_BUDGET,
        format!(
            "rate after 200 samples {last:.6} vs MRT {mrt:.6}, ratio {ratio:.5} (need >= {TOY_MIN_RATIO}) in {:.2}s",
            elapsed.as_secs_f64()
        ),
    )
}

struct PerfectCsi {
    glnn: f64,
    wmmse: f64,
}

fn criterion_7(perfect: &mut Option<PerfectCsi>) -> Result<Outcome> {
    let start = Instant::now();
    let mut cfg = LabConfig::default();
    cfg.experiment.power_sweep_dbm = vec![10.0];
    let out = run_se_vs_power(&cfg, &RunOptions::default())?;
    let g = out.summary(Algorithm::Glnn, 10.0).expect("glnn cell");
    let w = out.summary(Algorithm::Wmmse, 10.0).expect("wmmse cell");
    ensure!(g.samples == 500 && w.samples == 500, "evaluation counts {} / {}", g.samples, w.samples);
    *perfect = Some(PerfectCsi { glnn: g.mean_rate, wmmse: w.mean_rate });
    let ratio = g.mean_rate / w.mean_rate;
    outcome(
        ratio >= SE_MIN_RATIO,
        format!(
            "GLNN {:.4} / WMMSE {:.4} = {ratio:.4} (need >= {SE_MIN_RATIO}) over 500 samples after 500 warm-up, {:.0}s",
            g.mean_rate,
            w.mean_rate,
            start.elapsed().as_secs_f64()
        ),
    )
}

fn criterion_8(perfect: &Option<PerfectCsi>) -> Result<Outcome> {
    let Some(perfect) = perfect else {
        return outcome(false, "perfect-CSI reference unavailable (criterion 7 errored)");
    };
    let start = Instant::now();
    let mut cfg = LabConfig::default();
    cfg.experiment.cee_sweep_db = vec![-20.0, 0.0];
    let out = run_se_vs_cee(&cfg, &RunOptions::default())?;
    let mean = |a, c| out.mean(a, c).expect("cell present");
    let (g0, w0) = (mean(Algorithm::Glnn, 0.0), mean(Algorithm::Wmmse, 0.0));
    let (g20, w20) = (mean(Algorithm::Glnn, -20.0), mean(Algorithm::Wmmse, -20.0));
    let dg = (g20 - perfect.glnn).abs() / perfect.glnn;
    let dw = (w20 - perfect.wmmse).abs() / perfect.wmmse;
    let high_cee = g0 >= w0;
    let low_cee = dg <= CEE_ROBUST_REL && dw <= CEE_ROBUST_REL;
    outcome(
        high_cee && low_cee,
        format!(
            "0 dB: GLNN {g0:.4} vs WMMSE {w0:.4} (ratio {:.4}, need >= 1) [{}]; -20 dB: GLNN {g20:.4} ({:.2}% off perfect), \
             WMMSE {w20:.4} ({:.2}% off perfect), need <= 5% [{}]; {:.0}s",
            g0 / w0,
            if high_cee { "ok" } else { "not met" },
            100.0 * dg,
            100.0 * dw,
            if low_cee { "ok" } else { "not met" },
            start.elapsed().as_secs_f64()
        ),
    )
}

fn criterion_9() -> Result<Outcome> {
    let cfg = LabConfig::default();
    let out = run_timing(&cfg, &RunOptions::default())?;
    let mut ratios = Vec::new();
    for &m in &cfg.experiment.timing_antennas {
        let g = out.summary(Algorithm::Glnn, m as f64).expect("glnn cell");
        let w = out.summary(Algorithm::Wmmse, m as f64).expect("wmmse cell");
        ensure!(g.samples >= 50 && w.samples >= 50, "fewer than 50 timed samples at M = {m}");
        ratios.push((m, g.median_wall_time_us / w.median_wall_time_us));
    }
    let monotone = ratios.windows(2).all(|w| w[1].1 < w[0].1);
    let last = ratios.last().expect("non-empty sweep").1;
    let listed: Vec<String> = ratios.iter().map(|(m, r)| format!("M={m}: {r:.4}")).collect();
    outcome(
        monotone && last < TIMING_MAX_RATIO,
        format!(
            "median time ratio GLNN/WMMSE {} (monotone decreasing: {monotone}, need < {TIMING_MAX_RATIO} at M=160)",
            listed.join(", ")
        ),
    )
}

fn small_config() -> LabConfig {
    let mut cfg = LabConfig::parse(
        "[scenario]\nphase_table = 6:50\n[glnn]\nwarmup_samples = 20\n[experiment]\neval_samples = 15\n\
         power_sweep_dbm = 0, 10\ncee_sweep_db = -10, 0\ndynamic_phases = 6:20, 15:15, 30:10\n\
         timing_antennas = 8, 16\ntiming_samples = 4\ntiming_warmup = 1\nrestarts = 2\n",
    )
    .expect("valid config");
    cfg.scenario.seed = 7;
    cfg
}

fn criterion_10() -> Result<Outcome> {
    let cfg = small_config();
    let mut checked = Vec::new();
    let mut diffs = Vec::new();
    for kind in [ExperimentKind::SeVsPower, ExperimentKind::SeVsCee, ExperimentKind::Dynamic, ExperimentKind::Timing] {
        let dirs = [tempfile::tempdir()?, tempfile::tempdir()?];
        for (dir, parallel) in dirs.iter().zip([1, 2]) {
            let opts = RunOptions { parallel };
            write_outputs(dir.path(), &cfg, &opts, &run(kind, &cfg, &opts)?)?;
        }
        let mut files = vec!["results.csv", "summary.csv"];
        if kind == ExperimentKind::Dynamic {
            files.push("smoothed.csv");
        }
        for f in files {
            let a = std::fs::read_to_string(dirs[0].path().join(f))?;
            let b = std::fs::read_to_string(dirs[1].path().join(f))?;
            if strip_timing_columns(&a) != strip_timing_columns(&b) {
                diffs.push(format!("{kind}/{f}"));
            }
            checked.push(format!("{kind}/{f}"));
        }
    }
    outcome(
        diffs.is_empty(),
        format!(
            "{} CSVs compared across two runs (1 and 2 workers), timing columns excluded; differing: {}",
            checked.len(),
            if diffs.is_empty() { "none".to_string() } else { diffs.join(", ") }
        ),
    )
}

fn main() -> ExitCode {
    let mut perfect = None;
    let criteria: Vec<(u32, &str, Box<dyn FnOnce(&mut Option<PerfectCsi>) -> Result<Outcome>>)> = vec![
        (1, "gradient oracle", Box::new(|_| criterion_1())),
        (2, "power exactness", Box::new(|_| suite(power_suite(1000)))),
        (3, "CEE exactness", Box::new(|_| suite(cee_suite(100)))),
        (4, "liquid-cell identities", Box::new(|_| suite(liquid_suite(100)))),
        (5, "WMMSE ascent and MRT", Box::new(|_| suite(wmmse_suite(100)))),
        (6, "single-user GLNN optimality", Box::new(|_| criterion_6())),
        (7, "comparative SE at 10 dBm", Box::new(criterion_7)),
        (8, "robustness to estimation error", Box::new(|p| criterion_8(p))),
        (9, "timing ratio against M", Box::new(|_| criterion_9())),
        (10, "determinism", Box::new(|_| criterion_10())),
    ];
    let mut failed = 0;
    for (id, name, check) in criteria {
        let o = check(&mut perfect).unwrap_or_else(|e| Outcome {
            passed: false,
            detail: format!("error: {e:#}"),
        });
        if !o.passed {
            failed += 1;
        }
        println!("criterion {id:>2} [{}] {name}: {}", if o.passed { "PASS" } else { "FAIL" }, o.detail);
    }
    println!("{} of 10 criteria passed", 10 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
