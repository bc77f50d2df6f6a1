//! Invariant suites shared by `selftest` and the acceptance run.
//!
//! Each suite enumerates every failing case instead of stopping at the
//! first one. Reference values are computed here with plain loops, not with
//! the library routines under test.

use std::time::{Duration, Instant};

use glnn_core::channel::inject_cee;
use glnn_core::glnn::{objective_graph, power_normalize, record_channel, GlnnConfig};
use glnn_core::liquid::{cell_forward, LiquidLayerParams};
use glnn_core::metrics::measure_cee;
use glnn_core::tensor::gradcheck::{check_op_instances, compare, Leaf, GRAD_REL_TOL};
use glnn_core::tensor::OpKind;
use glnn_core::wmmse::{wmmse_solve, WmmseConfig};
use glnn_core::ComplexMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const POWER_REL_TOL: f64 = 1e-9;
pub const CEE_TOL_DB: f64 = 1e-9;
pub const CELL_TOL: f64 = 1e-12;
pub const ASCENT_SLACK: f64 = 1e-6;
pub const MRT_TOL: f64 = 1e-6;

#[derive(Clone, Debug)]
pub struct SuiteReport {
    pub name: &'static str,
    pub passed: bool,
    /// One-line summary of what was checked and the worst observed value.
    pub detail: String,
    pub failures: Vec<String>,
    pub elapsed: Duration,
}

impl SuiteReport {
    fn finish(name: &'static str, start: Instant, detail: String, failures: Vec<String>) -> Self {
        Self {
            name,
            passed: failures.is_empty(),
            detail,
            failures,
            elapsed: start.elapsed(),
        }
    }
}

fn gaussian(rng: &mut ChaCha8Rng, r: usize, c: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(r, c, |_, _| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
}

fn real(rng: &mut ChaCha8Rng, r: usize, c: usize, scale: f64) -> ComplexMatrix {
    ComplexMatrix::from_fn(r, c, |_, _| Complex64::new(scale * rng.random_range(-1.0..1.0), 0.0))
}

fn energy(m: &ComplexMatrix) -> f64 {
    let mut s = 0.0;
    for i in 0..m.rows() {
        for j in 0..m.cols() {
            s += m.get(i, j).norm_sqr();
        }
    }
    s
}

/// Every op on `instances` seeded cases, then the full `X → L` objective at
/// M = 8, N = 4, K = 2. `fault` corrupts one op's adjoint.
pub fn gradient_suite(instances: u64, fault: Option<OpKind>) -> SuiteReport {
    let start = Instant::now();
    let mut failures = Vec::new();
    let mut worst = 0.0f64;
    for kind in OpKind::ALL {
        match check_op_instances(kind, instances, fault) {
            Ok(err) => {
                worst = worst.max(err);
                if !(err < GRAD_REL_TOL) {
                    failures.push(format!("op `{}`: relative error {err:.3e}", kind.name()));
                }
            }
            Err(e) => failures.push(format!("op `{}`: {e}", kind.name())),
        }
    }
    let cfg = GlnnConfig::default();
    for seed in 0..instances {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
        let h = gaussian(&mut rng, 4, 8);
        let x = gaussian(&mut rng, 4, 2);
        let res = compare(
            &[Leaf::complex(x)],
            &ComplexMatrix::scalar(1.0),
            |g, ids| {
                let ch = record_channel(g, &h, 2)?;
                Ok(objective_graph(g, &ch, ids[0], &cfg, &[1.0, 1.0])?.loss)
            },
            fault,
        );
        match res {
            Ok(c) => {
                worst = worst.max(c.rel_err);
                if !(c.rel_err < GRAD_REL_TOL) {
                    failures.push(format!("objective X→L seed {seed}: relative error {:.3e}", c.rel_err));
                }
            }
            Err(e) => failures.push(format!("objective X→L seed {seed}: {e}")),
        }
    }
    let detail = format!(
        "{} ops + objective, {instances} instances each, worst rel err {worst:.2e} (tol {GRAD_REL_TOL:e})",
        OpKind::ALL.len()
    );
    SuiteReport::finish("gradients", start, detail, failures)
}

/// `Tr(WWᴴ) = P` for random channels, bases and powers.
pub fn power_suite(calls: usize) -> SuiteReport {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0x9047);
    let mut failures = Vec::new();
    let mut worst = 0.0f64;
    for i in 0..calls {
        let n = rng.random_range(1..=8usize);
        let m = rng.random_range(n..=16usize);
        let k = rng.random_range(1..=n);
        let h = gaussian(&mut rng, n, m);
        let x = gaussian(&mut rng, n, k).scale(10f64.powf(rng.random_range(-3.0..3.0)));
        let p = 10f64.powf(rng.random_range(-2.0..2.0));
        match power_normalize(&h, &x, p) {
            Ok(w) => {
                let rel = (energy(&w) - p).abs() / p;
                worst = worst.max(rel);
                if !(rel <= POWER_REL_TOL) {
                    failures.push(format!("call {i} ({n}x{m}, K={k}, P={p:.4}): relative power error {rel:.3e}"));
                }
            }
            Err(e) => failures.push(format!("call {i}: {e}")),
        }
    }
    let detail = format!("{calls} calls, worst |Tr(WWᴴ)−P|/P {worst:.2e} (tol {POWER_REL_TOL:e})");
    SuiteReport::finish("power", start, detail, failures)
}

/// Injected estimation error measures exactly at the target.
pub fn cee_suite(seeds: u64) -> SuiteReport {
    let start = Instant::now();
    let mut failures = Vec::new();
    let mut worst = 0.0f64;
    for target in [-20.0, -10.0, 0.0] {
        for seed in 0..seeds {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let h = gaussian(&mut rng, 8, 16);
            let res = inject_cee(&h, target, &mut rng).and_then(|est| {
                let measured = measure_cee(&h, &est)?;
                let diff = est.sub(&h)?;
                Ok((measured, 10.0 * (energy(&diff) / energy(&h)).log10()))
            });
            match res {
                Ok((measured, direct)) => {
                    let err = (measured - target).abs().max((direct - target).abs());
                    worst = worst.max(err);
                    if !(err <= CEE_TOL_DB) {
                        failures.push(format!("target {target} dB seed {seed}: measured {measured} dB"));
                    }
                }
                Err(e) => failures.push(format!("target {target} dB seed {seed}: {e}")),
            }
        }
    }
    let detail = format!("3 targets x {seeds} seeds, worst error {worst:.2e} dB (tol {CEE_TOL_DB:e})");
    SuiteReport::finish("cee", start, detail, failures)
}

/// `tanh(z·Wᵀ + b)` by explicit loops.
fn head(z: &ComplexMatrix, w: &ComplexMatrix, b: &ComplexMatrix) -> Vec<Vec<f64>> {
    (0..z.rows())
        .map(|i| {
            (0..w.rows())
                .map(|j| {
                    let mut s = b.get(0, j).re;
                    for c in 0..z.cols() {
                        s += w.get(j, c).re * z.get(i, c).re;
                    }
                    s.tanh()
                })
                .collect()
        })
        .collect()
}

fn max_dev(out: &ComplexMatrix, expected: &[Vec<f64>]) -> f64 {
    let mut worst = 0.0f64;
    for (i, row) in expected.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            worst = worst.max((out.get(i, j).re - v).abs());
        }
    }
    worst
}

/// Zero f-head gives the even mix, equal g/h heads collapse onto that head,
/// and a saturated f-head leaves only the h head.
pub fn liquid_suite(shapes: usize) -> SuiteReport {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0x11c);
    let mut failures = Vec::new();
    let mut worst = 0.0f64;
    for case in 0..shapes {
        let b = rng.random_range(1..=6usize);
        let d = rng.random_range(1..=8usize);
        let c = rng.random_range(1..=6usize);
        let t = rng.random_range(0.1..3.0);
        let mut p = LiquidLayerParams::init(d, c, &mut rng);
        p.g_bias = real(&mut rng, 1, d, 0.5);
        p.h_bias = real(&mut rng, 1, d, 0.5);
        let prev = real(&mut rng, b, d, 1.0);
        let input = real(&mut rng, b, c, 2.0);
        let z = ComplexMatrix::concat_cols(&[prev.clone(), input.clone()]).expect("same rows");

        let mut zero_f = p.clone();
        zero_f.f_weight = ComplexMatrix::zeros(d, d + c);
        zero_f.f_bias = ComplexMatrix::zeros(1, d);
        let gv = head(&z, &p.g_weight, &p.g_bias);
        let hv = head(&z, &p.h_weight, &p.h_bias);
        let mix: Vec<Vec<f64>> = gv
            .iter()
            .zip(&hv)
            .map(|(g, h)| g.iter().zip(h).map(|(a, b)| 0.5 * (a + b)).collect())
            .collect();

        let mut same = p.clone();
        same.h_weight = same.g_weight.clone();
        same.h_bias = same.g_bias.clone();

        let mut saturated = p.clone();
        saturated.f_weight = ComplexMatrix::zeros(d, d + c);
        saturated.f_bias = ComplexMatrix::from_real(1, d, vec![80.0 / t; d]).expect("sized");

        for (name, params, expected) in [("zero-f mix", &zero_f, &mix), ("g≡h collapse", &same, &gv), ("h-limit", &saturated, &hv)] {
            match cell_forward(params, &prev, &input, t) {
                Ok(out) => {
                    let dev = max_dev(&out, expected);
                    worst = worst.max(dev);
                    if !(dev <= CELL_TOL) {
                        failures.push(format!("{name} case {case} (batch {b}, D={d}, C={c}): deviation {dev:.3e}"));
                    }
                }
                Err(e) => failures.push(format!("{name} case {case}: {e}")),
            }
        }
    }
    let detail = format!("3 identities x {shapes} random shapes, worst deviation {worst:.2e} (tol {CELL_TOL:e})");
    SuiteReport::finish("liquid-cell", start, detail, failures)
}

/// Monotone ascent at M = 16, K = 4, N_k = 2 and the single-user MRT rate.
pub fn wmmse_suite(instances: usize) -> SuiteReport {
    let start = Instant::now();
    let cfg = WmmseConfig::default();
    let mut failures = Vec::new();
    let mut worst_drop = 0.0f64;
    for i in 0..instances {
        let mut rng = ChaCha8Rng::seed_from_u64(0x3e5e + i as u64);
        let h = gaussian(&mut rng, 8, 16);
        let power = 10f64.powf(rng.random_range(-1.0..2.0));
        match wmmse_solve(&h, power, 1.0, &[1.0; 4], &cfg) {
            Ok(sol) => {
                for (step, w) in sol.trajectory.windows(2).enumerate() {
                    let drop = w[0] - w[1];
                    worst_drop = worst_drop.max(drop);
                    if drop > ASCENT_SLACK {
                        failures.push(format!("instance {i}: rate fell by {drop:.3e} at outer iteration {}", step + 1));
                    }
                }
            }
            Err(e) => failures.push(format!("instance {i}: {e}")),
        }
    }
    let mut worst_mrt = 0.0f64;
    for i in 0..20u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(0x3a7 + i);
        let m = rng.random_range(1..=16usize);
        let h = gaussian(&mut rng, 1, m);
        let (power, noise) = (10f64.powf(rng.random_range(-1.0..2.0)), rng.random_range(0.1..2.0));
        let closed = (1.0 + power * energy(&h) / noise).log2();
        match wmmse_solve(&h, power, noise, &[1.0], &cfg) {
            Ok(sol) => {
                let err = (sol.sum_rate() - closed).abs();
                worst_mrt = worst_mrt.max(err);
                if !(err <= MRT_TOL) {
                    failures.push(format!("single user M={m}: rate {} vs MRT {closed}", sol.sum_rate()));
                }
            }
            Err(e) => failures.push(format!("single user M={m}: {e}")),
        }
    }
    let detail = format!(
        "{instances} ascents, largest drop {worst_drop:.2e} (slack {ASCENT_SLACK:e}); 20 MRT cases, worst error {worst_mrt:.2e}"
    );
    SuiteReport::finish("wmmse", start, detail, failures)
}

pub fn all_suites(fault: Option<OpKind>) -> Vec<SuiteReport> {
    vec![
        gradient_suite(20, fault),
        power_suite(1000),
        cee_suite(100),
        liquid_suite(100),
        wmmse_suite(100),
    ]
}
