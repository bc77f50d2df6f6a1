//! Online gradient-fed liquid-network precoder.
//!
//! The runner keeps a base matrix `X` (N×K) and emits `W = c·ĤᴴX` scaled to
//! the power budget, so every precoder lies in the row space of the
//! estimated channel. Per channel sample it repeats `N_e` times:
//!
//! 1. `G = ∂L/∂X` through the power projection and rates on `Ĥ`;
//! 2. `ΔX = stack([Re G | Im G])`, reassembled as complex;
//! 3. `X ← X + ΔX`, then one Adam step on the stack using `∂L/∂θ` taken
//!    through the updated `X`. `G` is a constant input to this second pass.
//!
//! `X`, the stack's hidden states and Adam moments persist across samples.

use std::io::Write;
use std::path::Path;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::channel::ChannelSample;
use crate::checkpoint::TensorFile;
use crate::error::{dim_err, Error, Result};
use crate::kvconfig::Section;
use crate::liquid::{LiquidStack, DEFAULT_COMMAND_NEURONS};
use crate::metrics::{dbm_to_mw, loss, loss_graph, sum_se, sum_se_graph, user_blocks, LossParams, RateNodes, RateReport};
use crate::tensor::{ComplexMatrix, Graph, VarId};

/// Optimizer settings. Powers are in mW.
#[derive(Clone, Debug, PartialEq)]
pub struct GlnnConfig {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub lambda: f64,
    /// Inner iterations per sample (N_e).
    pub inner_iters: usize,
    /// Leading samples flagged as warm-up (N_r).
    pub warmup_samples: usize,
    pub power_mw: f64,
    pub noise_mw: f64,
    pub command_neurons: usize,
    pub t_elapsed: f64,
    /// Rescale gradient features to this RMS before the stack; zero feeds
    /// them raw. Raw gradients of full-gain channels are large enough to
    /// saturate the first layer.
    pub feature_rms: f64,
    /// After every update rescale `X` to `‖X‖_F = base_scale·√K`; zero
    /// disables. `W` does not depend on the scale of `X`, so this only pins
    /// the free radial direction, which otherwise drifts outward.
    pub base_scale: f64,
}

impl Default for GlnnConfig {
    fn default() -> Self {
        Self {
            alpha: 0.01,
            beta: 0.3,
            gamma: 0.7,
            lambda: 2.5,
            inner_iters: 3,
            warmup_samples: 500,
            power_mw: dbm_to_mw(10.0),
            noise_mw: dbm_to_mw(0.0),
            command_neurons: DEFAULT_COMMAND_NEURONS,
            t_elapsed: 1.0,
            feature_rms: 1.0,
            base_scale: 0.0,
        }
    }
}

impl GlnnConfig {
    pub fn loss_params(&self) -> LossParams {
        LossParams {
            beta: self.beta,
            gamma: self.gamma,
            lambda: self.lambda,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.loss_params().validate()?;
        let fail = |m: &str| Err(Error::Config(m.into()));
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return fail("alpha must be positive");
        }
        if self.inner_iters == 0 {
            return fail("inner_iters must be >= 1");
        }
        if !(self.power_mw > 0.0 && self.power_mw.is_finite()) {
            return fail("power must be positive");
        }
        if !(self.noise_mw > 0.0 && self.noise_mw.is_finite()) {
            return fail("noise power must be positive");
        }
        if self.command_neurons == 0 {
            return fail("command_neurons must be >= 1");
        }
        if !(self.t_elapsed > 0.0 && self.t_elapsed.is_finite()) {
            return fail("t_elapsed must be positive");
        }
        if !(self.feature_rms >= 0.0 && self.feature_rms.is_finite()) {
            return fail("feature_rms must be >= 0");
        }
        if !(self.base_scale >= 0.0 && self.base_scale.is_finite()) {
            return fail("base_scale must be >= 0");
        }
        Ok(())
    }

    /// Reads `[glnn]` keys; powers are given in dBm.
    pub fn apply_section(&mut self, mut s: Section) -> Result<()> {
        if let Some(v) = s.take("alpha")? {
            self.alpha = v;
        }
        if let Some(v) = s.take("beta")? {
            self.beta = v;
        }
        if let Some(v) = s.take("gamma")? {
            self.gamma = v;
        }
        if let Some(v) = s.take("lambda")? {
            self.lambda = v;
        }
        if let Some(v) = s.take("inner_iters")? {
            self.inner_iters = v;
        }
        if let Some(v) = s.take("warmup_samples")? {
            self.warmup_samples = v;
        }
        if let Some(v) = s.take::<f64>("power_dbm")? {
            self.power_mw = dbm_to_mw(v);
        }
        if let Some(v) = s.take::<f64>("noise_dbm")? {
            self.noise_mw = dbm_to_mw(v);
        }
        if let Some(v) = s.take("command_neurons")? {
            self.command_neurons = v;
        }
        if let Some(v) = s.take("t_elapsed")? {
            self.t_elapsed = v;
        }
        if let Some(v) = s.take("feature_rms")? {
            self.feature_rms = v;
        }
        if let Some(v) = s.take("base_scale")? {
            self.base_scale = v;
        }
        s.finish()?;
        self.validate()
    }

    pub fn to_kv_lines(&self) -> Vec<String> {
        vec![
            format!("alpha = {}", self.alpha),
            format!("beta = {}", self.beta),
            format!("gamma = {}", self.gamma),
            format!("lambda = {}", self.lambda),
            format!("inner_iters = {}", self.inner_iters),
            format!("warmup_samples = {}", self.warmup_samples),
            format!("power_dbm = {}", 10.0 * self.power_mw.log10()),
            format!("noise_dbm = {}", 10.0 * self.noise_mw.log10()),
            format!("command_neurons = {}", self.command_neurons),
            format!("t_elapsed = {}", self.t_elapsed),
            format!("feature_rms = {}", self.feature_rms),
            format!("base_scale = {}", self.base_scale),
        ]
    }
}

/// `√(P/‖ĤᴴX‖²)·ĤᴴX`.
pub fn power_normalize(h: &ComplexMatrix, x: &ComplexMatrix, power: f64) -> Result<ComplexMatrix> {
    if h.rows() != x.rows() {
        return Err(dim_err("power normalize", format!("H is {:?}, X is {:?}", h.shape(), x.shape())));
    }
    let y = h.hermitian().matmul(x)?;
    let tr = y.frobenius_norm_sq();
    if !(tr > 0.0) || !tr.is_finite() {
        return Err(Error::Degenerate(format!("ĤᴴX has squared norm {tr}")));
    }
    Ok(y.scale((power / tr).sqrt()))
}

/// Channel constants recorded on a graph.
#[derive(Clone, Debug)]
pub struct ChannelNodes {
    /// Ĥᴴ (M×N).
    pub h_herm: VarId,
    /// Per-user row blocks of Ĥ.
    pub blocks: Vec<VarId>,
}

pub fn record_channel(g: &mut Graph, h: &ComplexMatrix, users: usize) -> Result<ChannelNodes> {
    let blocks = user_blocks(h, users)?.into_iter().map(|b| g.constant(b)).collect();
    Ok(ChannelNodes {
        h_herm: g.constant(h.hermitian()),
        blocks,
    })
}

/// Graph nodes from `X` to the loss.
#[derive(Clone, Debug)]
pub struct ObjectiveNodes {
    pub w: VarId,
    pub rates: RateNodes,
    pub loss: VarId,
}

/// Records `W = √(P/‖ĤᴴX‖²)·ĤᴴX`, the rates of `W` on `Ĥ` and the loss.
pub fn objective_graph(g: &mut Graph, ch: &ChannelNodes, x: VarId, cfg: &GlnnConfig, weights: &[f64]) -> Result<ObjectiveNodes> {
    let y = g.matmul(ch.h_herm, x)?;
    let tr = g.frobenius_norm_sq(y)?;
    if !(g.value(tr).scalar_value() > 0.0) {
        return Err(Error::Degenerate("ĤᴴX vanished".into()));
    }
    let inv = g.inverse_hpd(tr)?;
    let ratio = g.scale(inv, cfg.power_mw)?;
    let c = g.sqrt(ratio)?;
    let w = g.scale_by(c, y)?;
    let rates = sum_se_graph(g, &ch.blocks, w, weights, cfg.noise_mw)?;
    let loss = loss_graph(g, &rates, &cfg.loss_params())?;
    Ok(ObjectiveNodes { w, rates, loss })
}

/// Loss value and `∂L/∂X` at `x`.
pub fn loss_and_gradient(h: &ComplexMatrix, x: &ComplexMatrix, cfg: &GlnnConfig) -> Result<(f64, ComplexMatrix)> {
    let users = x.cols();
    let mut g = Graph::new();
    let ch = record_channel(&mut g, h, users)?;
    let xv = g.var(x.clone());
    let obj = objective_graph(&mut g, &ch, xv, cfg, &vec![1.0; users])?;
    let mut grads = g.backward(obj.loss)?;
    let grad = grads
        .take(xv)
        .ok_or_else(|| Error::Graph("X missing from gradient map".into()))?;
    Ok((g.value(obj.loss).scalar_value(), grad))
}

/// Result of one sample.
#[derive(Clone, Debug)]
pub struct StepOutcome {
    pub w: ComplexMatrix,
    /// Rates of `w` on the true channel.
    pub report: RateReport,
    /// Rates of `w` on the estimate the optimizer saw.
    pub report_est: RateReport,
    /// Loss on the estimate.
    pub loss: f64,
    /// Divergence events raised during this sample.
    pub events: Vec<String>,
}

/// One row of an online trajectory.
#[derive(Clone, Debug, PartialEq)]
pub struct SlotRecord {
    pub slot: usize,
    pub warmup: bool,
    pub r_true: f64,
    pub r_est: f64,
    pub loss: f64,
    pub per_user: Vec<f64>,
    pub wall_time_us: f64,
}

/// Stateful online optimizer for one scenario.
#[derive(Clone, Debug)]
pub struct GlnnRunner {
    cfg: GlnnConfig,
    rows: usize,
    users: usize,
    weights: Vec<f64>,
    x: ComplexMatrix,
    stack: LiquidStack,
    samples_seen: usize,
    rng: ChaCha8Rng,
    events: Vec<String>,
}

impl GlnnRunner {
    /// Fresh runner for `rows` receive antennas in total and `users` users.
    pub fn new(cfg: GlnnConfig, rows: usize, users: usize, seed: u64) -> Result<Self> {
        cfg.validate()?;
        if rows == 0 || users == 0 {
            return Err(Error::Config("runner needs at least one row and one user".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut stack = LiquidStack::new(2 * users, cfg.command_neurons, rows, cfg.alpha, &mut rng);
        stack.t_elapsed = cfg.t_elapsed;
        let x = random_base(rows, users, &mut rng);
        Ok(Self {
            cfg,
            rows,
            users,
            weights: vec![1.0; users],
            x,
            stack,
            samples_seen: 0,
            rng,
            events: Vec::new(),
        })
    }

    pub fn config(&self) -> &GlnnConfig {
        &self.cfg
    }

    pub fn x(&self) -> &ComplexMatrix {
        &self.x
    }

    pub fn stack(&self) -> &LiquidStack {
        &self.stack
    }

    pub fn stack_mut(&mut self) -> &mut LiquidStack {
        &mut self.stack
    }

    pub fn samples_seen(&self) -> usize {
        self.samples_seen
    }

    /// Divergence events logged so far.
    pub fn events(&self) -> &[String] {
        &self.events
    }

    /// Redraws `X` and zeroes hidden states; parameters and Adam are kept.
    pub fn reset(&mut self) {
        self.x = random_base(self.rows, self.users, &mut self.rng);
        self.stack.reset_state(self.rows);
    }

    fn features(&self, grad: &ComplexMatrix) -> ComplexMatrix {
        let f = grad.split_real_imag();
        if self.cfg.feature_rms == 0.0 {
            return f;
        }
        let rms = (f.frobenius_norm_sq() / f.len() as f64).sqrt();
        if rms > 0.0 {
            f.scale(self.cfg.feature_rms / rms)
        } else {
            f
        }
    }

    /// One inner iteration: feed `∂L/∂X`, update `X`, step Adam.
    fn inner_step(&mut self, h_est: &ComplexMatrix) -> Result<()> {
        let (_, grad) = loss_and_gradient(h_est, &self.x, &self.cfg)?;
        if !grad.is_finite() {
            return Err(Error::Divergence("non-finite gradient with respect to X".into()));
        }
        let feats = self.features(&grad);

        let mut g = Graph::new();
        let input = g.constant(feats);
        let nodes = self.stack.forward_graph(&mut g, input, true)?;
        let dx = g.join_real_imag(nodes.output)?;
        let x_prev = g.constant(self.x.clone());
        let x_next = g.add(x_prev, dx)?;
        let ch = record_channel(&mut g, h_est, self.users)?;
        let obj = objective_graph(&mut g, &ch, x_next, &self.cfg, &self.weights)?;
        let loss = g.value(obj.loss).scalar_value();
        let x_new = g.value(x_next).clone();
        if !x_new.is_finite() || !loss.is_finite() {
            return Err(Error::Divergence(format!("non-finite X or loss ({loss})")));
        }
        let grads = g.backward(obj.loss)?;
        let theta_grads = self.stack.collect_grads(&grads, &nodes)?;
        self.stack.apply_grads(&theta_grads)?;
        self.stack.commit_state(&g, &nodes);
        self.x = if self.cfg.base_scale > 0.0 {
            rescale_base(&x_new, self.cfg.base_scale * (self.users as f64).sqrt())?
        } else {
            x_new
        };
        Ok(())
    }

    /// Processes one channel sample and returns the emitted precoder.
    pub fn step_sample(&mut self, sample: &ChannelSample) -> Result<StepOutcome> {
        let n = sample.h_est.rows();
        if n != self.rows || sample.h_true.shape() != sample.h_est.shape() {
            return Err(dim_err(
                "step sample",
                format!("runner has {} rows, sample is {:?}/{:?}", self.rows, sample.h_true.shape(), sample.h_est.shape()),
            ));
        }
        let mut events = Vec::new();
        for _ in 0..self.cfg.inner_iters {
            match self.inner_step(&sample.h_est) {
                Ok(()) => {}
                Err(e @ (Error::Divergence(_) | Error::Degenerate(_) | Error::GradientExplosion { .. } | Error::Singular { .. })) => {
                    let msg = format!("slot {}: {e}; X re-initialized", sample.slot);
                    log::warn!("{msg}");
                    events.push(msg);
                    self.reset();
                    break;
                }
                Err(e) => return Err(e),
            }
        }
        let w = loop {
            match power_normalize(&sample.h_est, &self.x, self.cfg.power_mw) {
                Ok(w) => break w,
                Err(Error::Degenerate(m)) => {
                    events.push(format!("slot {}: {m}; X re-initialized", sample.slot));
                    self.reset();
                }
                Err(e) => return Err(e),
            }
        };
        let report = sum_se(&sample.h_true, &w, &self.weights, self.cfg.noise_mw)?;
        let report_est = sum_se(&sample.h_est, &w, &self.weights, self.cfg.noise_mw)?;
        let loss = loss(&report_est, &self.cfg.loss_params());
        self.samples_seen += 1;
        self.events.extend(events.iter().cloned());
        Ok(StepOutcome {
            w,
            report,
            report_est,
            loss,
            events,
        })
    }

    /// Steps through `samples` in order, timing each step.
    pub fn run_online(&mut self, samples: &[ChannelSample]) -> Result<Vec<SlotRecord>> {
        samples
            .iter()
            .map(|s| {
                let warmup = self.samples_seen < self.cfg.warmup_samples;
                let start = Instant::now();
                let out = self.step_sample(s)?;
                let wall_time_us = start.elapsed().as_secs_f64() * 1e6;
                Ok(SlotRecord {
                    slot: s.slot,
                    warmup,
                    r_true: out.report.total,
                    r_est: out.report_est.total,
                    loss: out.loss,
                    per_user: out.report.per_user,
                    wall_time_us,
                })
            })
            .collect()
    }

    /// Serializes `X`, stack parameters, hidden states and Adam moments.
    pub fn to_tensor_file(&self) -> TensorFile {
        let mut f = TensorFile::default();
        f.push("x", self.x.clone());
        f.push("samples_seen", ComplexMatrix::scalar(self.samples_seen as f64));
        f.push("adam.step", ComplexMatrix::scalar(self.stack.adam.step as f64));
        let names = self.stack.param_names();
        for (k, (name, t)) in names.iter().zip(self.stack.params()).enumerate() {
            f.push(format!("param.{name}"), t.clone());
            f.push(format!("adam.m.{name}"), self.stack.adam.m[k].clone());
            f.push(format!("adam.v.{name}"), self.stack.adam.v[k].clone());
        }
        for (k, h) in self.stack.state.hidden.iter().enumerate() {
            f.push(format!("state.{k}"), h.clone());
        }
        f
    }

    /// Restores a runner built with the same dimensions and config.
    pub fn load_tensor_file(&mut self, f: &TensorFile) -> Result<()> {
        let x = f.get_shaped("x", self.x.shape())?;
        let seen = f.get_shaped("samples_seen", (1, 1))?.scalar_value();
        let step = f.get_shaped("adam.step", (1, 1))?.scalar_value();
        let names = self.stack.param_names();
        let mut stack = self.stack.clone();
        {
            let shapes: Vec<(usize, usize)> = stack.params().iter().map(|t| t.shape()).collect();
            let mut params: Vec<&mut ComplexMatrix> = stack.layers.iter_mut().flat_map(|l| l.tensors_mut()).collect();
            for (k, name) in names.iter().enumerate() {
                *params[k] = f.get_shaped(&format!("param.{name}"), shapes[k])?;
                stack.adam.m[k] = f.get_shaped(&format!("adam.m.{name}"), shapes[k])?;
                stack.adam.v[k] = f.get_shaped(&format!("adam.v.{name}"), shapes[k])?;
            }
        }
        for k in 0..stack.state.hidden.len() {
            let shape = stack.state.hidden[k].shape();
            stack.state.hidden[k] = f.get_shaped(&format!("state.{k}"), shape)?;
        }
        stack.adam.step = step as u64;
        self.stack = stack;
        self.x = x;
        self.samples_seen = seen as usize;
        Ok(())
    }

    pub fn save_checkpoint(&self, path: &Path) -> Result<()> {
        self.to_tensor_file().save(path)
    }

    pub fn load_checkpoint(&mut self, path: &Path) -> Result<()> {
        self.load_tensor_file(&TensorFile::load(path)?)
    }
}

fn rescale_base(x: &ComplexMatrix, target: f64) -> Result<ComplexMatrix> {
    let norm = x.frobenius_norm();
    if !(norm > 0.0) {
        return Err(Error::Degenerate("base matrix vanished".into()));
    }
    Ok(x.scale(target / norm))
}

/// Entries drawn from CN(0, 1/N).
fn random_base(rows: usize, users: usize, rng: &mut ChaCha8Rng) -> ComplexMatrix {
    let normal = Normal::new(0.0, (0.5 / rows as f64).sqrt()).expect("finite std");
    let re = (0..rows * users).map(|_| normal.sample(rng)).collect();
    let im = (0..rows * users).map(|_| normal.sample(rng)).collect();
    ComplexMatrix::new(rows, users, re, im).expect("sized")
}

/// Writes `slot,warmup_flag,R_true,R_est,loss,rate_0..,wall_time_us`.
pub fn write_trajectory_csv<W: Write>(out: &mut W, records: &[SlotRecord]) -> Result<()> {
    let users = records.first().map(|r| r.per_user.len()).unwrap_or(0);
    write!(out, "slot,warmup_flag,R_true,R_est,loss")?;
    for k in 0..users {
        write!(out, ",rate_{k}")?;
    }
    writeln!(out, ",wall_time_us")?;
    for r in records {
        write!(out, "{},{},{},{},{}", r.slot, u8::from(r.warmup), r.r_true, r.r_est, r.loss)?;
        for v in &r.per_user {
            write!(out, ",{v}")?;
        }
        writeln!(out, ",{:.3}", r.wall_time_us)?;
    }
    Ok(())
}

/// Mean of `R_true` over non-warm-up records.
pub fn evaluation_mean(records: &[SlotRecord]) -> Option<f64> {
    let eval: Vec<f64> = records.iter().filter(|r| !r.warmup).map(|r| r.r_true).collect();
    if eval.is_empty() {
        None
    } else {
        Some(eval.iter().sum::<f64>() / eval.len() as f64)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{ChannelSimulator, ScenarioConfig};
    use crate::liquid::LiquidLayerParams;
    use crate::tensor::gradcheck::{compare, Leaf, GRAD_REL_TOL};
    use num_complex::Complex64;
    use rand::Rng;

    fn random_complex(rng: &mut ChaCha8Rng, r: usize, c: usize) -> ComplexMatrix {
        ComplexMatrix::from_fn(r, c, |_, _| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
    }

    fn static_sample(h: ComplexMatrix) -> ChannelSample {
        ChannelSample {
            slot: 0,
            h_true: h.clone(),
            h_est: h,
            cee_target_db: None,
        }
    }

    #[test]
    fn identity_example() {
        let w = power_normalize(&ComplexMatrix::identity(2), &ComplexMatrix::identity(2), 4.0).unwrap();
        assert!(w.max_abs_diff(&ComplexMatrix::identity(2).scale(2f64.sqrt())) < 1e-15);
    }

    #[test]
    fn power_is_exact_and_scale_free() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let h = random_complex(&mut rng, 4, 8);
            let x = random_complex(&mut rng, 4, 2);
            let p = rng.random_range(0.1..20.0);
            let w = power_normalize(&h, &x, p).unwrap();
            let tr = w.frobenius_norm_sq();
            assert!((tr - p).abs() <= 1e-9 * p);
            let w2 = power_normalize(&h, &x.scale(7.5), p).unwrap();
            assert!(w.max_abs_diff(&w2) < 1e-12);
        }
        let zero = power_normalize(&ComplexMatrix::zeros(2, 3), &ComplexMatrix::identity(2), 1.0);
        assert!(matches!(zero, Err(Error::Degenerate(_))));
    }

    #[test]
    fn objective_gradient_matches_finite_differences() {
        // M = 8, K = 2 users with 2 antennas each.
        let cfg = GlnnConfig::default();
        for seed in 0..5 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let h = random_complex(&mut rng, 4, 8);
            let x = random_complex(&mut rng, 4, 2);
            let cmp = compare(
                &[Leaf::complex(x)],
                &ComplexMatrix::scalar(1.0),
                |g, ids| {
                    let ch = record_channel(g, &h, 2)?;
                    Ok(objective_graph(g, &ch, ids[0], &cfg, &[1.0, 1.0])?.loss)
                },
                None,
            )
            .unwrap();
            assert!(cmp.rel_err < GRAD_REL_TOL, "seed {seed}: {cmp:?}");
        }
    }

    #[test]
    fn graph_precoder_matches_direct() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let h = random_complex(&mut rng, 4, 8);
        let x = random_complex(&mut rng, 4, 2);
        let cfg = GlnnConfig::default();
        let mut g = Graph::new();
        let ch = record_channel(&mut g, &h, 2).unwrap();
        let xv = g.var(x.clone());
        let obj = objective_graph(&mut g, &ch, xv, &cfg, &[1.0, 1.0]).unwrap();
        let w = power_normalize(&h, &x, cfg.power_mw).unwrap();
        assert!(g.value(obj.w).max_abs_diff(&w) < 1e-12);
        let direct = loss(&sum_se(&h, &w, &[1.0, 1.0], cfg.noise_mw).unwrap(), &cfg.loss_params());
        assert!((g.value(obj.loss).scalar_value() - direct).abs() < 1e-10);
    }

    #[test]
    fn initial_base_is_deterministic_with_unit_column_energy() {
        let cfg = GlnnConfig::default();
        let a = GlnnRunner::new(cfg.clone(), 8, 4, 11).unwrap();
        let b = GlnnRunner::new(cfg.clone(), 8, 4, 11).unwrap();
        assert_eq!(a.x(), b.x());
        assert!(a.stack().state.hidden.iter().all(|h| h.frobenius_norm_sq() == 0.0));
        let mean: f64 = (0..100)
            .map(|s| GlnnRunner::new(cfg.clone(), 8, 4, s).unwrap().x().frobenius_norm_sq())
            .sum::<f64>()
            / 100.0;
        assert!((mean - 4.0).abs() < 0.4, "{mean}");
    }

    #[test]
    fn zero_stack_is_inert() {
        let cfg = GlnnConfig { inner_iters: 3, ..Default::default() };
        let mut runner = GlnnRunner::new(cfg.clone(), 4, 2, 5).unwrap();
        let zeros = vec![
            LiquidLayerParams::zeros(4, 4),
            LiquidLayerParams::zeros(cfg.command_neurons, 4),
            LiquidLayerParams::zeros(4, cfg.command_neurons),
        ];
        // Zero stack with a learning rate so small Adam cannot move it.
        *runner.stack_mut() = LiquidStack::from_layers(zeros, 4, 1e-300);
        let x0 = runner.x().clone();
        let h = random_complex(&mut ChaCha8Rng::seed_from_u64(1), 4, 8);
        let out = runner.step_sample(&static_sample(h.clone())).unwrap();
        let w0 = power_normalize(&h, &x0, cfg.power_mw).unwrap();
        assert!(out.w.max_abs_diff(&w0) < 1e-12);
        assert!(out.report.total.is_finite());
    }

    #[test]
    fn emitted_precoders_lie_in_channel_row_space() {
        let sim = ChannelSimulator::new(ScenarioConfig::with_dims(16, 2, 2)).unwrap();
        let mut runner = GlnnRunner::new(GlnnConfig::default(), 4, 2, 2).unwrap();
        for slot in 0..5 {
            let s = sim.sample(slot, Some(-10.0)).unwrap();
            let out = runner.step_sample(&s).unwrap();
            assert!((out.w.frobenius_norm_sq() - runner.config().power_mw).abs() <= 1e-9 * runner.config().power_mw);
            // Least-squares coefficients through the normal equations.
            let hh = s.h_est.hermitian();
            let gram = s.h_est.matmul(&hh).unwrap();
            let coef = gram.inverse_hpd().unwrap().matmul(&s.h_est).unwrap().matmul(&out.w).unwrap();
            let resid = out.w.sub(&hh.matmul(&coef).unwrap()).unwrap();
            assert!(resid.frobenius_norm() / out.w.frobenius_norm() < 1e-8);
        }
    }

    #[test]
    fn trajectories_are_reproducible_and_flag_warmup() {
        let sim = ChannelSimulator::new(ScenarioConfig::with_dims(16, 2, 2)).unwrap();
        let samples: Vec<_> = (0..6).map(|t| sim.sample(t, None).unwrap()).collect();
        let cfg = GlnnConfig { warmup_samples: 4, ..Default::default() };
        let run = || {
            let mut r = GlnnRunner::new(cfg.clone(), 4, 2, 8).unwrap();
            r.run_online(&samples).unwrap()
        };
        let (a, b) = (run(), run());
        assert_eq!(a.len(), 6);
        for (x, y) in a.iter().zip(&b) {
            assert_eq!((x.r_true, x.r_est, x.loss, &x.per_user), (y.r_true, y.r_est, y.loss, &y.per_user));
        }
        assert_eq!(a.iter().filter(|r| r.warmup).count(), 4);
        let manual = (a[4].r_true + a[5].r_true) / 2.0;
        assert_eq!(evaluation_mean(&a), Some(manual));
        assert!(GlnnRunner::new(cfg, 4, 2, 8).unwrap().run_online(&[]).unwrap().is_empty());
    }

    #[test]
    fn checkpoint_resumes_bit_exactly() {
        let sim = ChannelSimulator::new(ScenarioConfig::with_dims(16, 2, 2)).unwrap();
        let samples: Vec<_> = (0..4).map(|t| sim.sample(t, None).unwrap()).collect();
        let cfg = GlnnConfig::default();
        let mut full = GlnnRunner::new(cfg.clone(), 4, 2, 1).unwrap();
        let reference = full.run_online(&samples).unwrap();

        let mut first = GlnnRunner::new(cfg.clone(), 4, 2, 1).unwrap();
        first.run_online(&samples[..2]).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ckpt.csv");
        first.save_checkpoint(&path).unwrap();
        let mut resumed = GlnnRunner::new(cfg, 4, 2, 99).unwrap();
        resumed.load_checkpoint(&path).unwrap();
        let rest = resumed.run_online(&samples[2..]).unwrap();
        assert_eq!(rest[0].r_true, reference[2].r_true);
        assert_eq!(rest[1].loss, reference[3].loss);
        assert_eq!(resumed.samples_seen(), 4);
    }

    #[test]
    fn divergence_reinitializes_instead_of_failing() {
        let mut runner = GlnnRunner::new(GlnnConfig::default(), 4, 2, 3).unwrap();
        runner.x = ComplexMatrix::zeros(4, 2);
        let h = random_complex(&mut ChaCha8Rng::seed_from_u64(2), 4, 8);
        let out = runner.step_sample(&static_sample(h)).unwrap();
        assert!(!out.events.is_empty());
        assert!(runner.x().is_finite() && runner.x().frobenius_norm_sq() > 0.0);
        assert!((out.w.frobenius_norm_sq() - runner.config().power_mw).abs() < 1e-9 * runner.config().power_mw);
    }

    #[test]
    fn config_rejects_invalid_values_and_unknown_keys() {
        let mut cfg = GlnnConfig::default();
        assert!(cfg.apply_section(Section::from_pairs("glnn", [("inner_iters", "0")])).is_err());
        let mut cfg = GlnnConfig::default();
        assert!(cfg.apply_section(Section::from_pairs("glnn", [("alpah", "0.1")])).is_err());
        let mut cfg = GlnnConfig::default();
        cfg.apply_section(Section::from_pairs("glnn", [("power_dbm", "0"), ("lambda", "2.0")])).unwrap();
        assert!((cfg.power_mw - 1.0).abs() < 1e-15);
        assert_eq!(cfg.lambda, 2.0);
    }
}
