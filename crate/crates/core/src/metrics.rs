//! Achievable rates, spectral efficiency, the training loss and CEE.
//!
//! Every rate is computed as `log₂det(S_all + σ²I) − log₂det(S_int + σ²I)`
//! where `S_all` sums the received covariance of all streams at a user and
//! `S_int` drops the user's own stream. The graph builders mirror the plain
//! evaluations operation for operation, so both produce identical values.

use std::f64::consts::LN_2;

use crate::error::{dim_err, Error, Result};
use crate::tensor::{population_variance, ComplexMatrix, Graph, VarId};

/// Converts a power in dBm to milliwatts.
pub fn dbm_to_mw(dbm: f64) -> f64 {
    10f64.powf(dbm / 10.0)
}

/// Per-user rates and their weighted sum, in bits/s/Hz.
#[derive(Clone, Debug, PartialEq)]
pub struct RateReport {
    pub per_user: Vec<f64>,
    pub total: f64,
    pub weights: Vec<f64>,
}

/// Weights of the fairness penalty and the incentive term.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LossParams {
    /// Penalty rate on the variance of per-user rates.
    pub beta: f64,
    /// Incentive rate.
    pub gamma: f64,
    /// Per-user rate threshold of the incentive term.
    pub lambda: f64,
}

impl LossParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.beta >= 0.0 && self.gamma >= 0.0 && self.lambda > 0.0) {
            return Err(Error::Config(format!(
                "loss params need beta, gamma >= 0 and lambda > 0 (got {:?})",
                self
            )));
        }
        Ok(())
    }
}

impl Default for LossParams {
    fn default() -> Self {
        Self { beta: 0.3, gamma: 0.7, lambda: 2.5 }
    }
}

fn check_noise(noise: f64) -> Result<()> {
    if noise > 0.0 && noise.is_finite() {
        Ok(())
    } else {
        Err(Error::Contract(format!("noise power must be positive, got {noise}")))
    }
}

fn selector(k: usize, users: usize) -> ComplexMatrix {
    let mut e = ComplexMatrix::zeros(users, 1);
    e.re_mut()[k] = 1.0;
    e
}

/// Rate of user `k` given its channel block `h_k` (N_k×M) and precoder `w` (M×K).
pub fn user_rate(h_k: &ComplexMatrix, w: &ComplexMatrix, k: usize, noise: f64) -> Result<f64> {
    check_noise(noise)?;
    if k >= w.cols() {
        return Err(dim_err("user rate", format!("user {k} of {}", w.cols())));
    }
    let t = h_k.matmul(w)?;
    let shift = ComplexMatrix::identity(h_k.rows()).scale(noise);
    let s_all = t.matmul(&t.hermitian())?.add(&shift)?;
    let t_k = t.matmul(&selector(k, w.cols()))?;
    let s_int = s_all.sub(&t_k.matmul(&t_k.hermitian())?)?;
    let rate = (s_all.logdet_hpd()? - s_int.logdet_hpd()?) / LN_2;
    // Tiny negative values from rounding are clamped.
    Ok(rate.max(0.0))
}

/// Splits `h` into `users` contiguous row blocks.
pub fn user_blocks(h: &ComplexMatrix, users: usize) -> Result<Vec<ComplexMatrix>> {
    if users == 0 || h.rows() % users != 0 {
        return Err(dim_err(
            "user blocks",
            format!("{} rows cannot be split among {users} users", h.rows()),
        ));
    }
    let n_k = h.rows() / users;
    (0..users).map(|k| h.row_block(k * n_k, n_k)).collect()
}

/// Weighted sum rate of all users. `h` is N×M with users' rows grouped
/// contiguously; the user count is `w.cols()`.
pub fn sum_se(h: &ComplexMatrix, w: &ComplexMatrix, weights: &[f64], noise: f64) -> Result<RateReport> {
    let users = w.cols();
    if weights.len() != users {
        return Err(dim_err("sum SE", format!("{} weights for {users} users", weights.len())));
    }
    let blocks = user_blocks(h, users)?;
    let per_user = blocks
        .iter()
        .enumerate()
        .map(|(k, hk)| user_rate(hk, w, k, noise))
        .collect::<Result<Vec<_>>>()?;
    let total = per_user.iter().zip(weights).map(|(r, a)| r * a).sum();
    Ok(RateReport {
        per_user,
        total,
        weights: weights.to_vec(),
    })
}

/// `−R + β·Var(R_k) + γ·ReLU(λK − R)` with the population variance.
pub fn loss(report: &RateReport, p: &LossParams) -> f64 {
    let k = report.per_user.len() as f64;
    let var = population_variance(&report.per_user);
    let incentive = (p.lambda * k - report.total).max(0.0);
    -report.total + p.beta * var + p.gamma * incentive
}

/// `10·log₁₀(‖Ĥ−H‖²/‖H‖²)`; `−∞` when the estimate is exact.
pub fn measure_cee(h_true: &ComplexMatrix, h_est: &ComplexMatrix) -> Result<f64> {
    let denom = h_true.frobenius_norm_sq();
    if denom == 0.0 {
        return Err(Error::Degenerate("true channel has zero norm".into()));
    }
    let num = h_est.sub(h_true)?.frobenius_norm_sq();
    if num == 0.0 {
        return Ok(f64::NEG_INFINITY);
    }
    Ok(10.0 * (num / denom).log10())
}

/// Graph nodes of a rate evaluation.
#[derive(Clone, Debug)]
pub struct RateNodes {
    /// 1×K real row of per-user rates.
    pub per_user: VarId,
    /// Weighted sum rate, 1×1.
    pub total: VarId,
}

/// Records the rate of user `k`; `h_k` is usually a constant node.
pub fn user_rate_graph(g: &mut Graph, h_k: VarId, w: VarId, k: usize, noise: f64) -> Result<VarId> {
    check_noise(noise)?;
    let users = g.value(w).cols();
    if k >= users {
        return Err(dim_err("user rate", format!("user {k} of {users}")));
    }
    let n_k = g.value(h_k).rows();
    let t = g.matmul(h_k, w)?;
    let th = g.hermitian(t)?;
    let tt = g.matmul(t, th)?;
    let shift = g.constant(ComplexMatrix::identity(n_k).scale(noise));
    let s_all = g.add(tt, shift)?;
    let sel = g.constant(selector(k, users));
    let t_k = g.matmul(t, sel)?;
    let t_kh = g.hermitian(t_k)?;
    let own = g.matmul(t_k, t_kh)?;
    let s_int = g.sub(s_all, own)?;
    let ld_all = g.logdet_hpd(s_all)?;
    let ld_int = g.logdet_hpd(s_int)?;
    let nats = g.sub(ld_all, ld_int)?;
    g.scale(nats, 1.0 / LN_2)
}

/// Records all user rates and the weighted total.
pub fn sum_se_graph(g: &mut Graph, h_blocks: &[VarId], w: VarId, weights: &[f64], noise: f64) -> Result<RateNodes> {
    let users = g.value(w).cols();
    if h_blocks.len() != users || weights.len() != users {
        return Err(dim_err(
            "sum SE",
            format!("{} blocks, {} weights, {users} users", h_blocks.len(), weights.len()),
        ));
    }
    let rates = h_blocks
        .iter()
        .enumerate()
        .map(|(k, &hk)| user_rate_graph(g, hk, w, k, noise))
        .collect::<Result<Vec<_>>>()?;
    let per_user = g.concat_cols(&rates)?;
    let alpha = g.constant(ComplexMatrix::from_real(users, 1, weights.to_vec())?);
    let total = g.matmul(per_user, alpha)?;
    Ok(RateNodes { per_user, total })
}

/// Records the training loss on top of [`sum_se_graph`] nodes.
pub fn loss_graph(g: &mut Graph, rates: &RateNodes, p: &LossParams) -> Result<VarId> {
    let users = g.value(rates.per_user).cols() as f64;
    let var = g.variance(rates.per_user)?;
    let threshold = g.constant(ComplexMatrix::scalar(p.lambda * users));
    let gap = g.sub(threshold, rates.total)?;
    let incentive = g.relu(gap)?;
    let neg_rate = g.scale(rates.total, -1.0)?;
    let penalty = g.scale(var, p.beta)?;
    let bonus = g.scale(incentive, p.gamma)?;
    let partial = g.add(neg_rate, penalty)?;
    g.add(partial, bonus)
}
