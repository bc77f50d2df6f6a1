//! Seeded geometric mmWave channels for users moving on straight lines.
//!
//! Each user sees one line-of-sight path plus `paths_per_user − 1` scattered
//! paths through half-wavelength uniform linear arrays at both ends:
//!
//! ```text
//! H_k = √(M·N_k) · Σ_l β_l · a_r(φ_l^r) · a_t(φ_l^t)ᴴ,   Σ_l E|β_l|² = 1
//! ```
//!
//! The line-of-sight angles follow the user's position. Scattered paths
//! keep their complex gains and drift in angle proportionally to the
//! distance travelled. The model is narrowband and ignores carrier phase
//! rotation, so the channel change between slots grows smoothly with speed.
//!
//! Randomness is keyed by `(seed, stream, user/slot)` through a counter-style
//! seed derivation, so any slot can be generated on its own.

use std::f64::consts::PI;
use std::io::Write;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::kvconfig::{parse_pairs, Section};
use crate::tensor::ComplexMatrix;

/// A stretch of slots during which every user moves at `speed` m/s.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Phase {
    pub speed: f64,
    pub slots: usize,
}

/// Scenario geometry and array sizes.
///
/// Defaults: 64 BS antennas, 4 users with 2 antennas each, 28 GHz, 1 ms
/// slots, 3 paths per user, Rician factor 10 dB, scattered-path drift
/// 0.02 rad per metre travelled, users spread over ±50° at 40–85 m moving
/// tangentially, one 1000-slot phase at 6 m/s.
#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioConfig {
    pub tx_antennas: usize,
    pub users: usize,
    pub rx_antennas: usize,
    /// Carrier frequency in Hz. Recorded with results; the narrowband model
    /// has no frequency dependence.
    pub carrier_hz: f64,
    pub slot_duration: f64,
    pub paths_per_user: usize,
    /// Line-of-sight to scattered power ratio in dB; `inf` removes scattering.
    pub rician_factor_db: f64,
    pub scatter_drift_rad_per_m: f64,
    pub bs_position: [f64; 2],
    pub user_start_positions: Vec<[f64; 2]>,
    /// Direction of travel per user in radians. Empty means tangential
    /// motion around the base station, alternating direction per user.
    pub user_headings: Vec<f64>,
    pub phase_table: Vec<Phase>,
    pub seed: u64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self::with_dims(64, 4, 2)
    }
}

impl ScenarioConfig {
    /// Default geometry for the given array sizes.
    pub fn with_dims(tx_antennas: usize, users: usize, rx_antennas: usize) -> Self {
        let user_start_positions = (0..users)
            .map(|k| {
                let frac = if users == 1 { 0.5 } else { k as f64 / (users - 1) as f64 };
                let angle = (-50.0 + 100.0 * frac).to_radians();
                let dist = 40.0 + 15.0 * k as f64;
                [dist * angle.cos(), dist * angle.sin()]
            })
            .collect();
        Self {
            tx_antennas,
            users,
            rx_antennas,
            carrier_hz: 28e9,
            slot_duration: 1e-3,
            paths_per_user: 3,
            rician_factor_db: 10.0,
            scatter_drift_rad_per_m: 0.02,
            bs_position: [0.0, 0.0],
            user_start_positions,
            user_headings: Vec::new(),
            phase_table: vec![Phase { speed: 6.0, slots: 1000 }],
            seed: 1,
        }
    }

    pub fn total_rx(&self) -> usize {
        self.users * self.rx_antennas
    }

    pub fn total_slots(&self) -> usize {
        self.phase_table.iter().map(|p| p.slots).sum()
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Config(m));
        if self.users == 0 || self.rx_antennas == 0 || self.tx_antennas == 0 {
            return fail("antenna and user counts must be >= 1".into());
        }
        if self.tx_antennas < self.total_rx() {
            return fail(format!(
                "tx_antennas ({}) must be >= users * rx_antennas ({})",
                self.tx_antennas,
                self.total_rx()
            ));
        }
        if self.paths_per_user == 0 {
            return fail("paths_per_user must be >= 1".into());
        }
        if self.user_start_positions.len() != self.users {
            return fail(format!(
                "{} start positions for {} users",
                self.user_start_positions.len(),
                self.users
            ));
        }
        if !self.user_headings.is_empty() && self.user_headings.len() != self.users {
            return fail(format!("{} headings for {} users", self.user_headings.len(), self.users));
        }
        if self.phase_table.is_empty() {
            return fail("phase_table must contain at least one phase".into());
        }
        for p in &self.phase_table {
            if p.slots == 0 || !(p.speed >= 0.0) {
                return fail(format!("invalid phase {:?}: slots >= 1 and speed >= 0 required", p));
            }
        }
        if !(self.slot_duration > 0.0) || !(self.carrier_hz > 0.0) {
            return fail("slot_duration and carrier_hz must be positive".into());
        }
        if self.rician_factor_db.is_nan() || !self.scatter_drift_rad_per_m.is_finite() {
            return fail("rician_factor_db and scatter_drift_rad_per_m must be numbers".into());
        }
        Ok(())
    }

    /// Overrides fields from a config section; unknown keys are errors.
    pub fn apply_section(&mut self, mut s: Section) -> Result<()> {
        let bad = |key: &str, item: String| Error::Config(format!("[scenario] key `{key}`: cannot parse `{item}`"));
        let mut dims_changed = false;
        if let Some(v) = s.take("tx_antennas")? {
            self.tx_antennas = v;
        }
        if let Some(v) = s.take("users")? {
            self.users = v;
            dims_changed = true;
        }
        if let Some(v) = s.take("rx_antennas")? {
            self.rx_antennas = v;
        }
        if dims_changed {
            self.user_start_positions = ScenarioConfig::with_dims(self.tx_antennas, self.users, self.rx_antennas).user_start_positions;
        }
        if let Some(v) = s.take("carrier_hz")? {
            self.carrier_hz = v;
        }
        if let Some(v) = s.take("slot_duration_s")? {
            self.slot_duration = v;
        }
        if let Some(v) = s.take("paths_per_user")? {
            self.paths_per_user = v;
        }
        if let Some(v) = s.take("rician_factor_db")? {
            self.rician_factor_db = v;
        }
        if let Some(v) = s.take("scatter_drift_rad_per_m")? {
            self.scatter_drift_rad_per_m = v;
        }
        if let Some(v) = s.take_str("bs_position") {
            let p = parse_pairs::<f64, f64>(&v).map_err(|e| bad("bs_position", e))?;
            if p.len() != 1 {
                return Err(bad("bs_position", v));
            }
            self.bs_position = [p[0].0, p[0].1];
        }
        if let Some(v) = s.take_str("user_start_positions") {
            let p = parse_pairs::<f64, f64>(&v).map_err(|e| bad("user_start_positions", e))?;
            self.user_start_positions = p.into_iter().map(|(x, y)| [x, y]).collect();
        }
        if let Some(v) = s.take_list::<f64>("user_headings_deg")? {
            self.user_headings = v.into_iter().map(f64::to_radians).collect();
        }
        if let Some(v) = s.take_str("phase_table") {
            let p = parse_pairs::<f64, usize>(&v).map_err(|e| bad("phase_table", e))?;
            self.phase_table = p.into_iter().map(|(speed, slots)| Phase { speed, slots }).collect();
        }
        if let Some(v) = s.take("seed")? {
            self.seed = v;
        }
        s.finish()?;
        self.validate()
    }

    /// Resolved `key = value` lines, in the format [`apply_section`](Self::apply_section) reads.
    pub fn to_kv_lines(&self) -> Vec<String> {
        let pairs = |v: &[[f64; 2]]| v.iter().map(|p| format!("{}:{}", p[0], p[1])).collect::<Vec<_>>().join(", ");
        let mut lines = vec![
            format!("tx_antennas = {}", self.tx_antennas),
            format!("users = {}", self.users),
            format!("rx_antennas = {}", self.rx_antennas),
            format!("carrier_hz = {}", self.carrier_hz),
            format!("slot_duration_s = {}", self.slot_duration),
            format!("paths_per_user = {}", self.paths_per_user),
            format!("rician_factor_db = {}", self.rician_factor_db),
            format!("scatter_drift_rad_per_m = {}", self.scatter_drift_rad_per_m),
            format!("bs_position = {}", pairs(&[self.bs_position])),
            format!("user_start_positions = {}", pairs(&self.user_start_positions)),
        ];
        if !self.user_headings.is_empty() {
            let h: Vec<String> = self.user_headings.iter().map(|r| r.to_degrees().to_string()).collect();
            lines.push(format!("user_headings_deg = {}", h.join(", ")));
        }
        let phases: Vec<String> = self.phase_table.iter().map(|p| format!("{}:{}", p.speed, p.slots)).collect();
        lines.push(format!("phase_table = {}", phases.join(", ")));
        lines.push(format!("seed = {}", self.seed));
        lines
    }

    fn heading(&self, k: usize) -> f64 {
        if let Some(&h) = self.user_headings.get(k) {
            return h;
        }
        let p = self.user_start_positions[k];
        let radial = (p[1] - self.bs_position[1]).atan2(p[0] - self.bs_position[0]);
        if k % 2 == 0 {
            radial + PI / 2.0
        } else {
            radial - PI / 2.0
        }
    }

    /// Distance covered by every user before `slot` starts.
    pub fn distance_travelled(&self, slot: usize) -> f64 {
        let mut left = slot;
        let mut dist = 0.0;
        for p in &self.phase_table {
            let n = left.min(p.slots);
            dist += p.speed * self.slot_duration * n as f64;
            left -= n;
            if left == 0 {
                break;
            }
        }
        dist
    }

    /// Index of the phase containing `slot`.
    pub fn phase_of(&self, slot: usize) -> Option<usize> {
        let mut end = 0;
        for (i, p) in self.phase_table.iter().enumerate() {
            end += p.slots;
            if slot < end {
                return Some(i);
            }
        }
        None
    }

    pub fn user_position(&self, k: usize, slot: usize) -> [f64; 2] {
        let s = self.distance_travelled(slot);
        let h = self.heading(k);
        let p = self.user_start_positions[k];
        [p[0] + s * h.cos(), p[1] + s * h.sin()]
    }
}

/// True channel, the estimate the optimizers see, and the slot index.
#[derive(Clone, Debug)]
pub struct ChannelSample {
    pub slot: usize,
    pub h_true: ComplexMatrix,
    pub h_est: ComplexMatrix,
    /// CEE target in dB, `None` for perfect CSI.
    pub cee_target_db: Option<f64>,
}

/// `exp(iπ·m·sin θ)/√n` for `m = 0..n`.
pub fn steering_vector(antennas: usize, angle: f64) -> ComplexMatrix {
    let norm = 1.0 / (antennas as f64).sqrt();
    let s = angle.sin();
    ComplexMatrix::from_fn(antennas, 1, |m, _| Complex64::from_polar(norm, PI * m as f64 * s))
}

const STREAM_PATHS: u64 = 1;
const STREAM_CEE: u64 = 2;

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Generator keyed by `(seed, stream, a, b)`.
pub fn keyed_rng(seed: u64, stream: u64, a: u64, b: u64) -> ChaCha8Rng {
    let k = splitmix(splitmix(splitmix(splitmix(seed) ^ stream) ^ a) ^ b);
    ChaCha8Rng::seed_from_u64(k)
}

fn complex_gaussian<R: Rng>(rng: &mut R, variance: f64) -> Complex64 {
    let s = (variance / 2.0).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re * s, im * s)
}

#[derive(Clone, Debug)]
struct ScatterPath {
    gain: Complex64,
    aod: f64,
    aoa: f64,
    drift_sign_t: f64,
    drift_sign_r: f64,
}

/// Channel generator for one scenario.
#[derive(Clone, Debug)]
pub struct ChannelSimulator {
    cfg: ScenarioConfig,
    los_gain: Vec<Complex64>,
    scatter: Vec<Vec<ScatterPath>>,
}

impl ChannelSimulator {
    pub fn new(cfg: ScenarioConfig) -> Result<Self> {
        cfg.validate()?;
        let kappa = 10f64.powf(cfg.rician_factor_db / 10.0);
        let scatter_paths = cfg.paths_per_user - 1;
        let (los_power, scatter_power) = if scatter_paths == 0 || kappa.is_infinite() {
            (1.0, 0.0)
        } else {
            (kappa / (kappa + 1.0), 1.0 / (kappa + 1.0) / scatter_paths as f64)
        };
        let mut los_gain = Vec::with_capacity(cfg.users);
        let mut scatter = Vec::with_capacity(cfg.users);
        for k in 0..cfg.users {
            let mut rng = keyed_rng(cfg.seed, STREAM_PATHS, k as u64, 0);
            let phase: f64 = rng.random_range(0.0..2.0 * PI);
            los_gain.push(Complex64::from_polar(los_power.sqrt(), phase));
            let paths = (0..scatter_paths)
                .map(|_| ScatterPath {
                    gain: complex_gaussian(&mut rng, scatter_power),
                    aod: rng.random_range(-PI / 3.0..PI / 3.0),
                    aoa: rng.random_range(-PI / 2.0..PI / 2.0),
                    drift_sign_t: if rng.random::<bool>() { 1.0 } else { -1.0 },
                    drift_sign_r: if rng.random::<bool>() { 1.0 } else { -1.0 },
                })
                .collect();
            scatter.push(paths);
        }
        Ok(Self { cfg, los_gain, scatter })
    }

    pub fn config(&self) -> &ScenarioConfig {
        &self.cfg
    }

    /// Channel block of user `k` (N_k×M) at `slot`.
    pub fn user_channel(&self, k: usize, slot: usize) -> ComplexMatrix {
        let cfg = &self.cfg;
        let (m, nk) = (cfg.tx_antennas, cfg.rx_antennas);
        let pos = cfg.user_position(k, slot);
        let (dx, dy) = (pos[0] - cfg.bs_position[0], pos[1] - cfg.bs_position[1]);
        let aod = dy.atan2(dx);
        let aoa = (-dy).atan2(-dx) - cfg.heading(k);
        let travelled = cfg.distance_travelled(slot);
        let scale = ((m * nk) as f64).sqrt();

        let mut h = ComplexMatrix::zeros(nk, m);
        let mut add_path = |gain: Complex64, aoa: f64, aod: f64| {
            let ar = steering_vector(nk, aoa);
            let at = steering_vector(m, aod);
            for i in 0..nk {
                let a = ar.get(i, 0) * gain * scale;
                for j in 0..m {
                    let v = h.get(i, j) + a * at.get(j, 0).conj();
                    h.set(i, j, v);
                }
            }
        };
        add_path(self.los_gain[k], aoa, aod);
        for p in &self.scatter[k] {
            let shift = cfg.scatter_drift_rad_per_m * travelled;
            add_path(p.gain, p.aoa + p.drift_sign_r * shift, p.aod + p.drift_sign_t * shift);
        }
        h
    }

    /// Full N×M true channel at `slot`, users' rows stacked in order.
    pub fn true_channel(&self, slot: usize) -> Result<ComplexMatrix> {
        let total = self.cfg.total_slots();
        if slot >= total {
            return Err(Error::Contract(format!("slot {slot} beyond scenario length {total}")));
        }
        let blocks: Vec<ComplexMatrix> = (0..self.cfg.users).map(|k| self.user_channel(k, slot)).collect();
        ComplexMatrix::concat_rows(&blocks)
    }

    /// Channel sample at `slot`, with an estimate at exactly `cee_db` if given.
    pub fn sample(&self, slot: usize, cee_db: Option<f64>) -> Result<ChannelSample> {
        let h_true = self.true_channel(slot)?;
        let h_est = match cee_db {
            None => h_true.clone(),
            Some(db) => {
                let mut rng = keyed_rng(self.cfg.seed, STREAM_CEE, slot as u64, 0);
                inject_cee(&h_true, db, &mut rng)?
            }
        };
        Ok(ChannelSample {
            slot,
            h_true,
            h_est,
            cee_target_db: cee_db,
        })
    }
}

/// Adds white complex Gaussian error scaled so that `‖Ĥ−H‖²/‖H‖²` equals
/// `10^(target_db/10)` exactly for this draw.
pub fn inject_cee<R: Rng>(h: &ComplexMatrix, target_db: f64, rng: &mut R) -> Result<ComplexMatrix> {
    let h_norm = h.frobenius_norm();
    if h_norm == 0.0 {
        return Err(Error::Degenerate("cannot inject estimation error into a zero channel".into()));
    }
    if target_db == f64::NEG_INFINITY {
        return Ok(h.clone());
    }
    if !target_db.is_finite() {
        return Err(Error::Contract(format!("CEE target must be finite or -inf, got {target_db}")));
    }
    let g = ComplexMatrix::from_fn(h.rows(), h.cols(), |_, _| complex_gaussian(rng, 1.0));
    let g_norm = g.frobenius_norm();
    if g_norm == 0.0 {
        return Err(Error::Degenerate("error draw has zero norm".into()));
    }
    let scale = 10f64.powf(target_db / 20.0) * h_norm / g_norm;
    let mut out = h.clone();
    out.axpy(scale, &g)?;
    Ok(out)
}

/// Writes `slot,row,col,re_true,im_true,re_est,im_est` rows.
pub fn write_channel_csv<W: Write>(out: &mut W, samples: &[ChannelSample]) -> Result<()> {
    writeln!(out, "slot,row,col,re_true,im_true,re_est,im_est")?;
    for s in samples {
        for i in 0..s.h_true.rows() {
            for j in 0..s.h_true.cols() {
                let t = s.h_true.get(i, j);
                let e = s.h_est.get(i, j);
                writeln!(out, "{},{},{},{},{},{},{}", s.slot, i, j, t.re, t.im, e.re, e.im)?;
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::measure_cee;

    #[test]
    fn steering_examples() {
        let a = steering_vector(4, 0.0);
        for i in 0..4 {
            assert!((a.get(i, 0) - Complex64::new(0.5, 0.0)).norm() < 1e-15);
        }
        let b = steering_vector(2, PI / 2.0);
        let r = 1.0 / 2f64.sqrt();
        assert!((b.get(0, 0) - Complex64::new(r, 0.0)).norm() < 1e-15);
        assert!((b.get(1, 0) - Complex64::new(-r, 0.0)).norm() < 1e-15);
        for (n, t) in [(1, 0.3), (7, -1.2), (64, 0.77)] {
            assert!((steering_vector(n, t).frobenius_norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn single_los_path_is_rank_one() {
        let mut cfg = ScenarioConfig::with_dims(16, 3, 2);
        cfg.paths_per_user = 1;
        let sim = ChannelSimulator::new(cfg).unwrap();
        for k in 0..3 {
            let h = sim.user_channel(k, 5);
            // 2×M rank one: rows are parallel.
            let r0 = h.row_block(0, 1).unwrap();
            let r1 = h.row_block(1, 1).unwrap();
            let cross = r0.matmul(&r1.hermitian()).unwrap().get(0, 0).norm();
            assert!((cross - r0.frobenius_norm() * r1.frobenius_norm()).abs() < 1e-9);
        }
        let mut cfg = ScenarioConfig::with_dims(16, 2, 2);
        cfg.rician_factor_db = f64::INFINITY;
        let sim = ChannelSimulator::new(cfg).unwrap();
        let h = sim.user_channel(0, 0);
        let r0 = h.row_block(0, 1).unwrap();
        let r1 = h.row_block(1, 1).unwrap();
        let cross = r0.matmul(&r1.hermitian()).unwrap().get(0, 0).norm();
        assert!((cross - r0.frobenius_norm() * r1.frobenius_norm()).abs() < 1e-9);
    }

    #[test]
    fn deterministic_and_slot_isolated() {
        let sim = ChannelSimulator::new(ScenarioConfig::default()).unwrap();
        let a = sim.sample(123, Some(-10.0)).unwrap();
        let sim2 = ChannelSimulator::new(ScenarioConfig::default()).unwrap();
        let b = sim2.sample(123, Some(-10.0)).unwrap();
        assert_eq!(a.h_true, b.h_true);
        assert_eq!(a.h_est, b.h_est);
    }

    #[test]
    fn static_geometry_gives_constant_channel() {
        let mut cfg = ScenarioConfig::default();
        cfg.phase_table = vec![Phase { speed: 0.0, slots: 20 }];
        cfg.scatter_drift_rad_per_m = 0.0;
        let sim = ChannelSimulator::new(cfg).unwrap();
        let h0 = sim.true_channel(0).unwrap();
        for t in 1..20 {
            assert_eq!(sim.true_channel(t).unwrap(), h0);
        }
    }

    #[test]
    fn cee_is_exact() {
        let sim = ChannelSimulator::new(ScenarioConfig::with_dims(16, 2, 2)).unwrap();
        let h = sim.true_channel(0).unwrap();
        for target in [-20.0, -15.0, -10.0, -5.0, 0.0] {
            let mut rng = keyed_rng(7, 0, target as i64 as u64, 0);
            let est = inject_cee(&h, target, &mut rng).unwrap();
            assert!((measure_cee(&h, &est).unwrap() - target).abs() < 1e-9);
        }
        let mut rng = keyed_rng(0, 0, 0, 0);
        assert_eq!(inject_cee(&h, f64::NEG_INFINITY, &mut rng).unwrap(), h);
        let est = inject_cee(&h, 0.0, &mut rng).unwrap();
        let rel = (est.sub(&h).unwrap().frobenius_norm() - h.frobenius_norm()).abs() / h.frobenius_norm();
        assert!(rel < 1e-12);
        assert!(matches!(
            inject_cee(&ComplexMatrix::zeros(2, 2), -10.0, &mut rng),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn rows_grouped_per_user() {
        let sim = ChannelSimulator::new(ScenarioConfig::with_dims(16, 3, 2)).unwrap();
        let h = sim.true_channel(4).unwrap();
        for k in 0..3 {
            assert_eq!(h.row_block(2 * k, 2).unwrap(), sim.user_channel(k, 4));
        }
    }

    #[test]
    fn invalid_configs_rejected() {
        let mut cfg = ScenarioConfig::with_dims(4, 4, 2);
        assert!(cfg.validate().is_err());
        cfg = ScenarioConfig::default();
        cfg.phase_table = vec![Phase { speed: 3.0, slots: 0 }];
        assert!(cfg.validate().is_err());
        cfg.phase_table = vec![Phase { speed: -1.0, slots: 4 }];
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn slot_beyond_scenario_is_error() {
        let sim = ChannelSimulator::new(ScenarioConfig::default()).unwrap();
        assert!(sim.sample(1000, None).is_err());
        assert!(sim.sample(999, None).is_ok());
    }

    #[test]
    fn config_section_round_trip() {
        let mut cfg = ScenarioConfig::default();
        cfg.phase_table = vec![Phase { speed: 6.0, slots: 700 }, Phase { speed: 15.0, slots: 600 }];
        cfg.user_headings = vec![0.5, 1.0, -0.25, 2.0];
        let lines = cfg.to_kv_lines().join("\n");
        let mut kv = crate::kvconfig::KvConfig::parse(&lines).unwrap();
        let mut back = ScenarioConfig::default();
        back.apply_section(kv.take_section("")).unwrap();
        assert_eq!(back.phase_table, cfg.phase_table);
        assert_eq!(back.user_start_positions, cfg.user_start_positions);
        for (a, b) in back.user_headings.iter().zip(&cfg.user_headings) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn channel_csv_layout() {
        let sim = ChannelSimulator::new(ScenarioConfig::with_dims(4, 1, 2)).unwrap();
        let s = sim.sample(0, Some(-10.0)).unwrap();
        let mut buf = Vec::new();
        write_channel_csv(&mut buf, &[s]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 1 + 2 * 4);
        assert!(text.starts_with("slot,row,col,re_true,im_true,re_est,im_est\n0,0,0,"));
    }
}
