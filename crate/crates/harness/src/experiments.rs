//! The four evaluations: SE against transmit power, SE against estimation
//! error, a three-phase mobility run, and per-sample timing against `M`.
//!
//! Work is split into independent cells (algorithm × sweep value ×
//! repetition), each owning its channel simulator and optimizer. Rows are
//! sorted before anything is written, so the worker count never changes the
//! output.

use std::path::Path;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use glnn_core::channel::{ChannelSample, ChannelSimulator, ScenarioConfig};
use glnn_core::glnn::{GlnnConfig, GlnnRunner, SlotRecord};
use glnn_core::metrics::{dbm_to_mw, sum_se};
use glnn_core::wmmse::wmmse_solve;
use rayon::prelude::*;

use crate::plot::{Chart, Series};
use crate::results::{self, sort_rows, ResultRow, SummaryRow, SCHEMA_VERSION};
use crate::settings::{Algorithm, ExperimentKind, LabConfig};

#[derive(Clone, Debug)]
pub struct RunOptions {
    /// Worker threads for independent cells. Timing cells always run alone.
    pub parallel: usize,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self { parallel: 1 }
    }
}

/// Smoothed dynamic-run series point.
#[derive(Clone, Debug, PartialEq)]
pub struct SmoothedPoint {
    pub algorithm: Algorithm,
    pub slot: usize,
    pub phase: usize,
    pub speed: f64,
    pub raw: f64,
    pub smoothed: f64,
}

#[derive(Clone, Debug)]
pub struct ExperimentOutput {
    pub kind: ExperimentKind,
    pub rows: Vec<ResultRow>,
    pub summary: Vec<SummaryRow>,
    pub smoothed: Vec<SmoothedPoint>,
    /// Free-form run notes (λ search outcome, WMMSE iteration statistics).
    pub notes: Vec<String>,
}

impl ExperimentOutput {
    pub fn mean(&self, algorithm: Algorithm, sweep_value: f64) -> Option<f64> {
        self.summary(algorithm, sweep_value).map(|s| s.mean_rate)
    }

    pub fn summary(&self, algorithm: Algorithm, sweep_value: f64) -> Option<&SummaryRow> {
        self.summary
            .iter()
            .find(|s| s.algorithm == algorithm && s.sweep_value == sweep_value)
    }
}

#[derive(Clone, Copy, Debug)]
struct Cell {
    algorithm: Algorithm,
    sweep_value: f64,
    rep: usize,
}

#[derive(Default)]
struct CellOutput {
    rows: Vec<ResultRow>,
    notes: Vec<String>,
}

fn cell_seed(cfg: &LabConfig, rep: usize) -> u64 {
    cfg.seed().wrapping_add(rep as u64)
}

fn scenario_for(cfg: &LabConfig, rep: usize) -> ScenarioConfig {
    let mut s = cfg.scenario.clone();
    s.seed = cell_seed(cfg, rep);
    s
}

fn draw_samples(sim: &ChannelSimulator, slots: std::ops::Range<usize>, cee_db: Option<f64>) -> Result<Vec<ChannelSample>> {
    slots.map(|s| sim.sample(s, cee_db).map_err(Into::into)).collect()
}

fn perfect(samples: &[ChannelSample]) -> Vec<ChannelSample> {
    samples
        .iter()
        .map(|s| ChannelSample {
            h_est: s.h_true.clone(),
            cee_target_db: None,
            ..s.clone()
        })
        .collect()
}

fn check_length(kind: ExperimentKind, scenario: &ScenarioConfig, needed: usize) -> Result<()> {
    let have = scenario.total_slots();
    if have < needed {
        bail!(
            "{kind}: [scenario] key `phase_table` covers {have} slots but the run needs {needed} \
             ([glnn] warmup_samples + [experiment] eval_samples)"
        );
    }
    Ok(())
}

struct CellContext<'a> {
    kind: ExperimentKind,
    cfg: &'a LabConfig,
    cell: Cell,
    seed: u64,
}

impl CellContext<'_> {
    fn row(&self, sample: usize, warmup: bool) -> ResultRow {
        ResultRow {
            experiment: self.kind,
            algorithm: self.cell.algorithm,
            sweep_value: self.cell.sweep_value,
            seed: self.seed,
            sample,
            warmup,
            rate: None,
            per_user: Vec::new(),
            iterations: None,
            wall_time_us: None,
        }
    }

    fn glnn_records(&self, glnn: &GlnnConfig, users: usize, samples: &[ChannelSample], out: &mut CellOutput) -> Result<Vec<SlotRecord>> {
        let rows = samples.first().map(|s| s.h_true.rows()).unwrap_or(0);
        let mut glnn = glnn.clone();
        let exp = &self.cfg.experiment;
        if exp.lambda_search && glnn.warmup_samples > 0 {
            let warm = &samples[..glnn.warmup_samples.min(samples.len())];
            let mut best = (f64::NEG_INFINITY, glnn.lambda);
            let mut scores = Vec::new();
            for &lambda in &exp.lambda_grid {
                let mut trial = glnn.clone();
                trial.lambda = lambda;
                let mut runner = GlnnRunner::new(trial, rows, users, self.seed)?;
                let recs = runner.run_online(warm)?;
                let tail = &recs[recs.len() / 2..];
                let score = tail.iter().map(|r| r.r_est).sum::<f64>() / tail.len().max(1) as f64;
                scores.push(format!("{lambda}:{score:.4}"));
                if score > best.0 {
                    best = (score, lambda);
                }
            }
            out.notes.push(format!(
                "{} sweep {} seed {}: lambda search chose {} (warm-up tail mean R_est {})",
                self.kind,
                self.cell.sweep_value,
                self.seed,
                best.1,
                scores.join(", ")
            ));
            glnn.lambda = best.1;
        }
        let mut runner = GlnnRunner::new(glnn, rows, users, self.seed)?;
        let recs = runner.run_online(samples)?;
        for e in runner.events() {
            out.notes.push(format!("{} sweep {} seed {}: {e}", self.kind, self.cell.sweep_value, self.seed));
        }
        Ok(recs)
    }

    fn glnn_rows(&self, glnn: &GlnnConfig, users: usize, samples: &[ChannelSample], out: &mut CellOutput) -> Result<()> {
        let recs = self.glnn_records(glnn, users, samples, out)?;
        for r in recs {
            let mut row = self.row(r.slot, r.warmup);
            row.rate = Some(r.r_true);
            row.per_user = r.per_user;
            row.iterations = Some(glnn.inner_iters);
            row.wall_time_us = Some(r.wall_time_us);
            out.rows.push(row);
        }
        Ok(())
    }

    fn upper_bound_rows(&self, glnn: &GlnnConfig, users: usize, samples: &[ChannelSample], out: &mut CellOutput) -> Result<()> {
        let samples = perfect(samples);
        let rows = samples.first().map(|s| s.h_true.rows()).unwrap_or(0);
        let mut best: Vec<Option<SlotRecord>> = vec![None; samples.len()];
        let mut total_time = vec![0.0; samples.len()];
        for r in 0..self.cfg.experiment.restarts {
            let seed = self.seed.wrapping_add(0x5eed_0000).wrapping_add(r as u64);
            let mut runner = GlnnRunner::new(glnn.clone(), rows, users, seed)?;
            for (i, rec) in runner.run_online(&samples)?.into_iter().enumerate() {
                total_time[i] += rec.wall_time_us;
                if best[i].as_ref().is_none_or(|b| rec.r_true > b.r_true) {
                    best[i] = Some(rec);
                }
            }
        }
        for (rec, t) in best.into_iter().zip(total_time) {
            let rec = rec.expect("at least one restart");
            let mut row = self.row(rec.slot, rec.warmup);
            row.rate = Some(rec.r_true);
            row.per_user = rec.per_user;
            row.iterations = Some(glnn.inner_iters * self.cfg.experiment.restarts);
            row.wall_time_us = Some(t);
            out.rows.push(row);
        }
        Ok(())
    }

    fn wmmse_rows(&self, power: f64, samples: &[ChannelSample], warmup: usize, out: &mut CellOutput) -> Result<()> {
        let users = self.cfg.scenario.users;
        let weights = vec![1.0; users];
        let noise = self.cfg.glnn.noise_mw;
        let (mut outer, mut bisect, mut capped) = (0usize, 0usize, 0usize);
        for (i, s) in samples.iter().enumerate() {
            let start = Instant::now();
            let sol = wmmse_solve(&s.h_est, power, noise, &weights, &self.cfg.wmmse)?;
            let elapsed = start.elapsed().as_secs_f64() * 1e6;
            let report = sum_se(&s.h_true, &sol.w, &weights, noise)?;
            outer += sol.outer_iters;
            bisect += sol.bisection_iters;
            capped += usize::from(sol.warning);
            let mut row = self.row(s.slot, i < warmup);
            row.rate = Some(report.total);
            row.per_user = report.per_user;
            row.iterations = Some(sol.outer_iters);
            row.wall_time_us = Some(elapsed);
            out.rows.push(row);
        }
        let n = samples.len().max(1) as f64;
        out.notes.push(format!(
            "{} sweep {} seed {}: wmmse mean outer iterations {:.2}, mean bisection steps {:.1}, bisection caps hit {capped}",
            self.kind,
            self.cell.sweep_value,
            self.seed,
            outer as f64 / n,
            bisect as f64 / n
        ));
        Ok(())
    }
}

fn run_cells<F>(cells: &[Cell], parallel: usize, f: F) -> Result<Vec<CellOutput>>
where
    F: Fn(&Cell) -> Result<CellOutput> + Sync,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(parallel.max(1))
        .build()
        .context("building worker pool")?;
    pool.install(|| cells.par_iter().map(&f).collect())
}

fn build_cells(cfg: &LabConfig, sweep: &[f64], with_upper_bound: bool) -> Vec<Cell> {
    let mut algs = cfg.experiment.algorithms.clone();
    if with_upper_bound && cfg.experiment.restarts > 0 {
        algs.push(Algorithm::UpperBound);
    }
    let mut cells = Vec::new();
    for rep in 0..cfg.experiment.repetitions {
        for &algorithm in &algs {
            for &sweep_value in sweep {
                cells.push(Cell { algorithm, sweep_value, rep });
            }
        }
    }
    cells
}

fn collect(kind: ExperimentKind, outputs: Vec<CellOutput>) -> ExperimentOutput {
    let mut rows = Vec::new();
    let mut notes = Vec::new();
    for o in outputs {
        rows.extend(o.rows);
        notes.extend(o.notes);
    }
    sort_rows(&mut rows);
    let summary = results::summarize(&rows);
    ExperimentOutput {
        kind,
        rows,
        summary,
        smoothed: Vec::new(),
        notes,
    }
}

/// Sweeps P; GLNN adapts through warm-up then evaluation, WMMSE solves the
/// evaluation samples. Perfect CSI.
pub fn run_se_vs_power(cfg: &LabConfig, opts: &RunOptions) -> Result<ExperimentOutput> {
    run_static(ExperimentKind::SeVsPower, cfg, opts, &cfg.experiment.power_sweep_dbm)
}

/// Sweeps the estimation error at fixed power; rates are scored on the true
/// channel.
pub fn run_se_vs_cee(cfg: &LabConfig, opts: &RunOptions) -> Result<ExperimentOutput> {
    run_static(ExperimentKind::SeVsCee, cfg, opts, &cfg.experiment.cee_sweep_db)
}

fn run_static(kind: ExperimentKind, cfg: &LabConfig, opts: &RunOptions, sweep: &[f64]) -> Result<ExperimentOutput> {
    let warm = cfg.glnn.warmup_samples;
    let needed = warm + cfg.experiment.eval_samples;
    check_length(kind, &cfg.scenario, needed)?;
    let cells = build_cells(cfg, sweep, true);
    let outputs = run_cells(&cells, opts.parallel, |cell| {
        let (power_dbm, cee) = match kind {
            ExperimentKind::SeVsPower => (cell.sweep_value, None),
            _ => (cfg.experiment.cee_power_dbm, Some(cell.sweep_value)),
        };
        let seed = cell_seed(cfg, cell.rep);
        let sim = ChannelSimulator::new(scenario_for(cfg, cell.rep))?;
        let ctx = CellContext { kind, cfg, cell: *cell, seed };
        let mut glnn = cfg.glnn.clone();
        glnn.power_mw = dbm_to_mw(power_dbm);
        let mut out = CellOutput::default();
        log::info!("{kind}: {} at {} (seed {seed})", cell.algorithm, cell.sweep_value);
        match cell.algorithm {
            Algorithm::Glnn => ctx.glnn_rows(&glnn, cfg.scenario.users, &draw_samples(&sim, 0..needed, cee)?, &mut out)?,
            Algorithm::UpperBound => {
                ctx.upper_bound_rows(&glnn, cfg.scenario.users, &draw_samples(&sim, 0..needed, cee)?, &mut out)?
            }
            Algorithm::Wmmse => ctx.wmmse_rows(glnn.power_mw, &draw_samples(&sim, warm..needed, cee)?, 0, &mut out)?,
            Algorithm::PhaseBoundary => unreachable!("not a runnable cell"),
        }
        Ok(out)
    })?;
    Ok(collect(kind, outputs))
}

/// Trailing moving average restarted at every phase start.
pub fn smooth_per_phase(values: &[f64], phase_of: &[usize], window: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(values.len());
    let mut start = 0;
    for i in 0..values.len() {
        if i > 0 && phase_of[i] != phase_of[i - 1] {
            start = i;
        }
        let lo = start.max((i + 1).saturating_sub(window));
        let seg = &values[lo..=i];
        out.push(seg.iter().sum::<f64>() / seg.len() as f64);
    }
    out
}

/// Three-phase mobility run at fixed estimation error, no warm-up exclusion.
pub fn run_dynamic(cfg: &LabConfig, opts: &RunOptions) -> Result<ExperimentOutput> {
    let kind = ExperimentKind::Dynamic;
    let exp = &cfg.experiment;
    let mut scenario = cfg.scenario.clone();
    scenario.phase_table = exp.dynamic_phases.clone();
    let total = scenario.total_slots();
    let mut glnn = cfg.glnn.clone();
    glnn.warmup_samples = 0;
    let cee = exp.dynamic_cee_db;
    let cells = build_cells(cfg, &[cee], true);
    let outputs = run_cells(&cells, opts.parallel, |cell| {
        let seed = cell_seed(cfg, cell.rep);
        let mut sc = scenario.clone();
        sc.seed = seed;
        let sim = ChannelSimulator::new(sc)?;
        let ctx = CellContext { kind, cfg, cell: *cell, seed };
        let samples = draw_samples(&sim, 0..total, Some(cee))?;
        let mut out = CellOutput::default();
        log::info!("{kind}: {} (seed {seed}, {total} slots)", cell.algorithm);
        match cell.algorithm {
            Algorithm::Glnn => ctx.glnn_rows(&glnn, cfg.scenario.users, &samples, &mut out)?,
            Algorithm::UpperBound => ctx.upper_bound_rows(&glnn, cfg.scenario.users, &samples, &mut out)?,
            Algorithm::Wmmse => ctx.wmmse_rows(glnn.power_mw, &samples, 0, &mut out)?,
            Algorithm::PhaseBoundary => unreachable!("not a runnable cell"),
        }
        Ok(out)
    })?;
    let mut output = collect(kind, outputs);

    let phase_of: Vec<usize> = (0..total).map(|s| scenario.phase_of(s).expect("slot inside table")).collect();
    let speed_of = |slot: usize| exp.dynamic_phases[phase_of[slot.min(total - 1)]].speed;
    output.summary = results::summarize_by(&output.rows, |r| speed_of(r.sample));

    for rep in 0..exp.repetitions {
        let mut boundary = 0;
        for w in exp.dynamic_phases.windows(2) {
            boundary += w[0].slots;
            output.rows.push(ResultRow {
                experiment: kind,
                algorithm: Algorithm::PhaseBoundary,
                sweep_value: w[1].speed,
                seed: cell_seed(cfg, rep),
                sample: boundary,
                warmup: false,
                rate: None,
                per_user: Vec::new(),
                iterations: None,
                wall_time_us: None,
            });
        }
    }
    sort_rows(&mut output.rows);

    let mut algs: Vec<Algorithm> = output.summary.iter().map(|s| s.algorithm).collect();
    algs.dedup();
    for alg in algs {
        let mut raw = vec![0.0; total];
        let mut count = vec![0usize; total];
        for r in output.rows.iter().filter(|r| r.algorithm == alg) {
            if let Some(rate) = r.rate {
                raw[r.sample] += rate;
                count[r.sample] += 1;
            }
        }
        for (v, c) in raw.iter_mut().zip(&count) {
            *v /= (*c).max(1) as f64;
        }
        let smoothed = smooth_per_phase(&raw, &phase_of, exp.smoothing_window);
        for slot in 0..total {
            output.smoothed.push(SmoothedPoint {
                algorithm: alg,
                slot,
                phase: phase_of[slot],
                speed: speed_of(slot),
                raw: raw[slot],
                smoothed: smoothed[slot],
            });
        }
    }
    Ok(output)
}

/// Median per-sample optimization time against the number of BS antennas.
pub fn run_timing(cfg: &LabConfig, _opts: &RunOptions) -> Result<ExperimentOutput> {
    let kind = ExperimentKind::Timing;
    let exp = &cfg.experiment;
    let n = exp.timing_warmup + exp.timing_samples;
    check_length(kind, &cfg.scenario, n)?;
    let sweep: Vec<f64> = exp.timing_antennas.iter().map(|&m| m as f64).collect();
    let cells = build_cells(cfg, &sweep, false);
    let outputs = run_cells(&cells, 1, |cell| {
        let seed = cell_seed(cfg, cell.rep);
        let mut sc = scenario_for(cfg, cell.rep);
        sc.tx_antennas = cell.sweep_value as usize;
        let sim = ChannelSimulator::new(sc)?;
        let samples = draw_samples(&sim, 0..n, None)?;
        let ctx = CellContext { kind, cfg, cell: *cell, seed };
        let mut out = CellOutput::default();
        log::info!("{kind}: {} at M = {}", cell.algorithm, cell.sweep_value);
        match cell.algorithm {
            Algorithm::Glnn => {
                let mut glnn = cfg.glnn.clone();
                glnn.warmup_samples = exp.timing_warmup;
                ctx.glnn_rows(&glnn, cfg.scenario.users, &samples, &mut out)?
            }
            Algorithm::Wmmse => ctx.wmmse_rows(cfg.glnn.power_mw, &samples, exp.timing_warmup, &mut out)?,
            Algorithm::UpperBound | Algorithm::PhaseBoundary => unreachable!("not a timing cell"),
        }
        Ok(out)
    })?;
    Ok(collect(kind, outputs))
}

pub fn run(kind: ExperimentKind, cfg: &LabConfig, opts: &RunOptions) -> Result<ExperimentOutput> {
    cfg.experiment.validate()?;
    match kind {
        ExperimentKind::SeVsPower => run_se_vs_power(cfg, opts),
        ExperimentKind::SeVsCee => run_se_vs_cee(cfg, opts),
        ExperimentKind::Dynamic => run_dynamic(cfg, opts),
        ExperimentKind::Timing => run_timing(cfg, opts),
        ExperimentKind::Selftest => bail!("selftest has no experiment output; use selftest::run_selftest"),
    }
}

/// `hostname (os/arch, N threads)`.
pub fn host_id() -> String {
    let name = std::fs::read_to_string("/etc/hostname")
        .ok()
        .map(|s| s.trim().to_string())
        .filter(|s| !s.is_empty())
        .or_else(|| std::env::var("HOSTNAME").ok())
        .unwrap_or_else(|| "unknown".into());
    let threads = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1);
    format!("{name} ({}/{}, {threads} threads)", std::env::consts::OS, std::env::consts::ARCH)
}

/// Pairs of (x, mean R) per algorithm taken from the summary.
fn summary_series(summary: &[SummaryRow], y: impl Fn(&SummaryRow) -> f64) -> Vec<Series> {
    let mut out: Vec<Series> = Vec::new();
    for s in summary {
        match out.iter_mut().find(|x| x.label == s.algorithm.name()) {
            Some(series) => series.points.push((s.sweep_value, y(s))),
            None => out.push(Series {
                label: s.algorithm.name().into(),
                points: vec![(s.sweep_value, y(s))],
            }),
        }
    }
    out
}

fn charts(output: &ExperimentOutput, cfg: &LabConfig) -> Vec<(String, Chart)> {
    let se = |title: &str, x: &str| Chart {
        title: title.into(),
        x_label: x.into(),
        y_label: "mean sum SE (bit/s/Hz)".into(),
        series: summary_series(&output.summary, |s| s.mean_rate),
        ..Chart::default()
    };
    match output.kind {
        ExperimentKind::SeVsPower => vec![("plot_se_vs_power.svg".into(), se("SE vs transmit power", "P (dBm)"))],
        ExperimentKind::SeVsCee => vec![(
            "plot_se_vs_cee.svg".into(),
            se(&format!("SE vs CEE at P = {} dBm", cfg.experiment.cee_power_dbm), "CEE (dB)"),
        )],
        ExperimentKind::Dynamic => {
            let mut series: Vec<Series> = Vec::new();
            for p in &output.smoothed {
                match series.iter_mut().find(|s| s.label == p.algorithm.name()) {
                    Some(s) => s.points.push((p.slot as f64, p.smoothed)),
                    None => series.push(Series {
                        label: p.algorithm.name().into(),
                        points: vec![(p.slot as f64, p.smoothed)],
                    }),
                }
            }
            let mut markers = Vec::new();
            let mut at = 0;
            for w in cfg.experiment.dynamic_phases.windows(2) {
                at += w[0].slots;
                markers.push((at as f64, format!("{} m/s", w[1].speed)));
            }
            vec![(
                "plot_dynamic.svg".into(),
                Chart {
                    title: format!("Dynamic scenario, CEE {} dB (moving average {})", cfg.experiment.dynamic_cee_db, cfg.experiment.smoothing_window),
                    x_label: "slot".into(),
                    y_label: "sum SE (bit/s/Hz)".into(),
                    series,
                    markers,
                    log_y: false,
                },
            )]
        }
        ExperimentKind::Timing => vec![(
            "plot_timing.svg".into(),
            Chart {
                title: "Median optimization time per sample".into(),
                x_label: "BS antennas M".into(),
                y_label: "time (µs, log scale)".into(),
                series: summary_series(&output.summary, |s| s.median_wall_time_us),
                markers: Vec::new(),
                log_y: true,
            },
        )],
        ExperimentKind::Selftest => Vec::new(),
    }
}

fn write_file(dir: &Path, name: &str, bytes: &[u8]) -> Result<()> {
    let path = dir.join(name);
    std::fs::write(&path, bytes).with_context(|| format!("writing {}", path.display()))
}

/// Writes `results.csv`, `summary.csv`, plots, `run_meta.txt` and, for the
/// dynamic run, `smoothed.csv`.
pub fn write_outputs(dir: &Path, cfg: &LabConfig, opts: &RunOptions, output: &ExperimentOutput) -> Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let host = host_id();
    let mut comments = vec![format!("experiment: {}", output.kind), format!("seed: {}", cfg.seed())];
    if output.kind == ExperimentKind::Timing {
        comments.push(format!("host: {host}"));
    }
    let mut buf = Vec::new();
    results::write_results(&mut buf, &output.rows, &comments)?;
    write_file(dir, "results.csv", &buf)?;

    let mut buf = Vec::new();
    results::write_summary(&mut buf, &output.summary)?;
    write_file(dir, "summary.csv", &buf)?;

    if output.kind == ExperimentKind::Dynamic {
        let mut s = format!(
            "# schema: {SCHEMA_VERSION}\n# smoothing: trailing moving average, window {}, restarted at each phase boundary\n",
            cfg.experiment.smoothing_window
        );
        let mut at = 0;
        for w in cfg.experiment.dynamic_phases.windows(2) {
            at += w[0].slots;
            s.push_str(&format!("# phase_boundary: slot {at}, speed {} m/s\n", w[1].speed));
        }
        s.push_str("algorithm,slot,phase,speed_mps,R,R_smoothed\n");
        for p in &output.smoothed {
            s.push_str(&format!("{},{},{},{},{},{}\n", p.algorithm, p.slot, p.phase, p.speed, p.raw, p.smoothed));
        }
        write_file(dir, "smoothed.csv", s.as_bytes())?;
    }

    for (name, chart) in charts(output, cfg) {
        write_file(dir, &name, chart.to_svg().as_bytes())?;
    }

    let mut meta = String::new();
    meta.push_str(&format!("# schema: {SCHEMA_VERSION}\n"));
    meta.push_str(&format!("# experiment: {}\n", output.kind));
    meta.push_str(&format!("# glnn-lab {} / glnn-core {}\n", env!("CARGO_PKG_VERSION"), glnn_core::VERSION));
    meta.push_str(&format!("# host: {host}\n"));
    meta.push_str(&format!("# parallel: {}\n", opts.parallel));
    if output.kind == ExperimentKind::Dynamic {
        meta.push_str(&format!(
            "# smoothing: trailing moving average, window {}, restarted at each phase boundary\n",
            cfg.experiment.smoothing_window
        ));
    }
    for n in &output.notes {
        meta.push_str(&format!("# note: {n}\n"));
    }
    meta.push('\n');
    meta.push_str(&cfg.to_text());
    write_file(dir, "run_meta.txt", meta.as_bytes())?;
    Ok(())
}
