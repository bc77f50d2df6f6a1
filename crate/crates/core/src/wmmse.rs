//! WMMSE baseline with one stream per user.
//!
//! Alternates MMSE receivers `u_k`, MSE weights `v_k = 1/e_k` and
//! regularized precoders `w_k = (A + μI)⁻¹ α_k v_k H_kᴴ u_k` with
//! `A = Σ_j α_j v_j H_jᴴ u_j u_jᴴ H_j`. The multiplier `μ` is found by
//! bisection on the transmit power; `A` is diagonalized once per outer
//! iteration so each probe of `power(μ)` is a sum over eigenvalues.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{dim_err, Error, Result};
use crate::kvconfig::Section;
use crate::metrics::{sum_se, user_blocks};
use crate::tensor::ComplexMatrix;

#[derive(Clone, Debug, PartialEq)]
pub struct WmmseConfig {
    pub max_outer_iters: usize,
    pub max_bisection_iters: usize,
    /// Stop when the relative sum-rate change falls below this.
    pub convergence_tol: f64,
    /// Relative power residual accepted by the bisection.
    pub bisection_tol: f64,
}

impl Default for WmmseConfig {
    fn default() -> Self {
        Self {
            max_outer_iters: 100,
            max_bisection_iters: 60,
            convergence_tol: 1e-5,
            bisection_tol: 1e-8,
        }
    }
}

impl WmmseConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_outer_iters == 0 || self.max_bisection_iters == 0 {
            return Err(Error::Config("WMMSE iteration caps must be >= 1".into()));
        }
        if !(self.convergence_tol > 0.0 && self.bisection_tol > 0.0) {
            return Err(Error::Config("WMMSE tolerances must be positive".into()));
        }
        Ok(())
    }

    pub fn apply_section(&mut self, mut s: Section) -> Result<()> {
        if let Some(v) = s.take("max_outer_iters")? {
            self.max_outer_iters = v;
        }
        if let Some(v) = s.take("max_bisection_iters")? {
            self.max_bisection_iters = v;
        }
        if let Some(v) = s.take("convergence_tol")? {
            self.convergence_tol = v;
        }
        if let Some(v) = s.take("bisection_tol")? {
            self.bisection_tol = v;
        }
        s.finish()?;
        self.validate()
    }

    pub fn to_kv_lines(&self) -> Vec<String> {
        vec![
            format!("max_outer_iters = {}", self.max_outer_iters),
            format!("max_bisection_iters = {}", self.max_bisection_iters),
            format!("convergence_tol = {}", self.convergence_tol),
            format!("bisection_tol = {}", self.bisection_tol),
        ]
    }
}

#[derive(Clone, Debug)]
pub struct WmmseSolution {
    pub w: ComplexMatrix,
    /// Weighted sum rate of the initial point and after each outer iteration.
    pub trajectory: Vec<f64>,
    pub outer_iters: usize,
    /// Total bisection steps over all outer iterations.
    pub bisection_iters: usize,
    /// Set when a bisection hit its iteration cap.
    pub warning: bool,
}

impl WmmseSolution {
    pub fn sum_rate(&self) -> f64 {
        *self.trajectory.last().expect("trajectory holds the initial point")
    }
}

/// Outcome of [`bisect_mu`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MuSearch {
    pub mu: f64,
    pub iters: usize,
    pub warning: bool,
}

const MAX_DOUBLINGS: usize = 2000;

/// Finds `μ ≥ 0` with `power(μ) ≤ target` and relative residual at most `tol`.
///
/// `power` must be continuous and decreasing. Returns `μ = 0` when
/// `power(0) ≤ target`. The returned `μ` is always on the feasible side.
pub fn bisect_mu(power: impl Fn(f64) -> f64, target: f64, max_iters: usize, tol: f64) -> MuSearch {
    if power(0.0) <= target {
        return MuSearch { mu: 0.0, iters: 0, warning: false };
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    let mut doublings = 0;
    while power(hi) > target {
        lo = hi;
        hi *= 2.0;
        doublings += 1;
        if doublings > MAX_DOUBLINGS {
            return MuSearch { mu: hi, iters: 0, warning: true };
        }
    }
    let mut iters = 0;
    while (target - power(hi)) / target > tol {
        if iters == max_iters {
            return MuSearch { mu: hi, iters, warning: true };
        }
        let mid = 0.5 * (lo + hi);
        if power(mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
        iters += 1;
    }
    MuSearch { mu: hi, iters, warning: false }
}

fn to_na(m: &ComplexMatrix) -> DMatrix<Complex64> {
    DMatrix::from_fn(m.rows(), m.cols(), |i, j| m.get(i, j))
}

fn from_na(m: &DMatrix<Complex64>) -> ComplexMatrix {
    ComplexMatrix::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

/// Dominant-eigenmode matched filter per user, scaled to total power `power`.
fn matched_filter(blocks: &[DMatrix<Complex64>], power: f64) -> Result<DMatrix<Complex64>> {
    let m = blocks[0].ncols();
    let mut w = DMatrix::zeros(m, blocks.len());
    for (k, hk) in blocks.iter().enumerate() {
        let gram = hk * hk.adjoint();
        let eig = SymmetricEigen::new(gram);
        let top = eig.eigenvalues.imax();
        let v = eig.eigenvectors.column(top);
        w.set_column(k, &(hk.adjoint() * v));
    }
    let norm_sq = w.norm_squared();
    if !(norm_sq > 0.0) {
        return Err(Error::Degenerate("matched filter vanished: zero channel".into()));
    }
    Ok(w * Complex64::from((power / norm_sq).sqrt()))
}

/// Solves the weighted sum-rate problem for `h` (N×M, users' rows grouped).
pub fn wmmse_solve(h: &ComplexMatrix, power: f64, noise: f64, weights: &[f64], cfg: &WmmseConfig) -> Result<WmmseSolution> {
    cfg.validate()?;
    if !(noise > 0.0 && noise.is_finite()) {
        return Err(Error::Contract(format!("noise power must be positive, got {noise}")));
    }
    if !(power > 0.0 && power.is_finite()) {
        return Err(Error::Contract(format!("power must be positive, got {power}")));
    }
    let users = weights.len();
    if users == 0 || h.rows() % users != 0 {
        return Err(dim_err("wmmse", format!("{} rows for {users} users", h.rows())));
    }
    let blocks: Vec<DMatrix<Complex64>> = user_blocks(h, users)?.iter().map(to_na).collect();
    let m = h.cols();
    let n_k = h.rows() / users;
    let rate = |w: &DMatrix<Complex64>| sum_se(h, &from_na(w), weights, noise).map(|r| r.total);

    let mut w = matched_filter(&blocks, power)?;
    let mut trajectory = vec![rate(&w)?];
    let mut bisection_iters = 0;
    let mut warning = false;
    let mut outer = 0;
    let eye = DMatrix::<Complex64>::identity(n_k, n_k) * Complex64::from(noise);

    while outer < cfg.max_outer_iters {
        outer += 1;
        // Receivers and weights; columns of g are H_kᴴ u_k.
        let mut g = DMatrix::<Complex64>::zeros(m, users);
        let mut coef = vec![0.0; users];
        for (k, hk) in blocks.iter().enumerate() {
            let t = hk * &w;
            let cov = &t * t.adjoint() + &eye;
            let chol = cov
                .cholesky()
                .ok_or_else(|| Error::Contract("receive covariance not positive definite".into()))?;
            let t_kk = t.column(k).into_owned();
            let u = chol.solve(&t_kk);
            let e = 1.0 - (u.adjoint() * &t_kk)[(0, 0)].re;
            let v = 1.0 / e.max(f64::MIN_POSITIVE);
            coef[k] = weights[k] * v;
            g.set_column(k, &(hk.adjoint() * u));
        }
        // A = G·diag(α v)·Gᴴ, B = G·diag(α v).
        let mut b = g.clone();
        for k in 0..users {
            let mut col = b.column_mut(k);
            col *= Complex64::from(coef[k]);
        }
        let a = &b * g.adjoint();
        let a = (&a + a.adjoint()) * Complex64::from(0.5);
        let eig = SymmetricEigen::new(a);
        let c = eig.eigenvectors.adjoint() * &b;
        let lam_max = eig.eigenvalues.iter().cloned().fold(0.0, f64::max);
        let cutoff = lam_max * 1e-12 * m as f64;
        let mode_energy: Vec<(f64, f64)> = (0..m)
            .filter(|&i| eig.eigenvalues[i] > cutoff)
            .map(|i| (eig.eigenvalues[i], c.row(i).norm_squared()))
            .collect();
        let power_at = |mu: f64| mode_energy.iter().map(|(l, e)| e / ((l + mu) * (l + mu))).sum::<f64>();
        let search = bisect_mu(power_at, power, cfg.max_bisection_iters, cfg.bisection_tol);
        bisection_iters += search.iters;
        warning |= search.warning;

        let mut scaled = DMatrix::<Complex64>::zeros(m, users);
        for i in 0..m {
            let l = eig.eigenvalues[i];
            if l > cutoff {
                let s = Complex64::from(1.0 / (l + search.mu));
                for k in 0..users {
                    scaled[(i, k)] = c[(i, k)] * s;
                }
            }
        }
        w = &eig.eigenvectors * scaled;
        if search.mu > 0.0 {
            // The bisection stops on the feasible side; close the residual.
            let norm_sq = w.norm_squared();
            if norm_sq > 0.0 {
                w *= Complex64::from((power / norm_sq).sqrt());
            }
        }

        let r = rate(&w)?;
        let prev = *trajectory.last().expect("non-empty");
        trajectory.push(r);
        if (r - prev).abs() <= cfg.convergence_tol * prev.abs().max(1e-12) {
            break;
        }
    }

    Ok(WmmseSolution {
        w: from_na(&w),
        trajectory,
        outer_iters: outer,
        bisection_iters,
        warning,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_channel(rng: &mut ChaCha8Rng, n: usize, m: usize) -> ComplexMatrix {
        ComplexMatrix::from_fn(n, m, |_, _| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
    }

    #[test]
    fn synthetic_power_map_inverts_to_one() {
        let p = 3.0;
        let s = bisect_mu(|mu| p * 4.0 / ((1.0 + mu) * (1.0 + mu)), p, 60, 1e-10);
        assert!((s.mu - 1.0).abs() < 1e-9, "{s:?}");
        assert!(!s.warning);
    }

    #[test]
    fn slack_branch_returns_zero() {
        let s = bisect_mu(|mu| 1.0 / (1.0 + mu), 2.0, 60, 1e-8);
        assert_eq!(s.mu, 0.0);
    }

    #[test]
    fn cap_sets_warning_and_stays_feasible() {
        let s = bisect_mu(|mu| 10.0 / (1.0 + mu), 1.0, 2, 1e-12);
        assert!(s.warning);
        assert!(10.0 / (1.0 + s.mu) <= 1.0 && s.mu >= 0.0);
    }

    #[test]
    fn scalar_channel_closed_form() {
        let h = ComplexMatrix::new(1, 1, vec![0.6], vec![-0.8]).unwrap();
        let sol = wmmse_solve(&h, 2.0, 0.5, &[1.0], &WmmseConfig::default()).unwrap();
        let expect = (1.0 + 2.0 * 1.0 / 0.5f64).log2();
        assert!((sol.sum_rate() - expect).abs() < 1e-9);
        assert!((sol.w.frobenius_norm_sq() - 2.0).abs() < 1e-12);
        assert!(sol.outer_iters <= 2);
    }

    #[test]
    fn single_user_matches_mrt() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..10 {
            let h = random_channel(&mut rng, 1, 6);
            let (p, s2) = (rng.random_range(0.5..5.0), rng.random_range(0.1..2.0));
            let sol = wmmse_solve(&h, p, s2, &[1.0], &WmmseConfig::default()).unwrap();
            let mrt = (1.0 + p * h.frobenius_norm_sq() / s2).log2();
            assert!((sol.sum_rate() - mrt).abs() < 1e-6);
        }
    }

    #[test]
    fn ascent_is_monotone_and_feasible() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..20 {
            let h = random_channel(&mut rng, 8, 16);
            let sol = wmmse_solve(&h, 10.0, 1.0, &[1.0; 4], &WmmseConfig::default()).unwrap();
            for pair in sol.trajectory.windows(2) {
                assert!(pair[1] >= pair[0] - 1e-6, "{:?}", sol.trajectory);
            }
            assert!(sol.w.frobenius_norm_sq() <= 10.0 * (1.0 + 1e-9));
        }
    }

    #[test]
    fn vanishing_snr_stays_feasible() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let h = random_channel(&mut rng, 4, 8);
        let noise = 1e6 * 1.0 * h.frobenius_norm_sq();
        let sol = wmmse_solve(&h, 1.0, noise, &[1.0, 1.0], &WmmseConfig::default()).unwrap();
        assert!(sol.sum_rate() < 1e-5);
        assert!(sol.w.frobenius_norm_sq() <= 1.0 + 1e-9);
    }

    #[test]
    fn converged_point_is_fixed() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let h = random_channel(&mut rng, 8, 16);
        let cfg = WmmseConfig::default();
        let sol = wmmse_solve(&h, 10.0, 1.0, &[1.0; 4], &cfg).unwrap();
        assert!(sol.outer_iters < cfg.max_outer_iters);
        let more = WmmseConfig {
            max_outer_iters: sol.outer_iters + 1,
            convergence_tol: 1e-300,
            ..cfg.clone()
        };
        let longer = wmmse_solve(&h, 10.0, 1.0, &[1.0; 4], &more).unwrap();
        let extra = longer.trajectory[sol.trajectory.len()] - sol.sum_rate();
        assert!(extra.abs() < cfg.convergence_tol * sol.sum_rate());
    }

    #[test]
    fn rejects_bad_inputs() {
        let h = ComplexMatrix::identity(2);
        let cfg = WmmseConfig::default();
        assert!(wmmse_solve(&h, 1.0, 0.0, &[1.0, 1.0], &cfg).is_err());
        assert!(wmmse_solve(&h, 1.0, 1.0, &[1.0, 1.0, 1.0], &cfg).is_err());
        assert!(WmmseConfig { max_outer_iters: 0, ..cfg }.validate().is_err());
    }
}
