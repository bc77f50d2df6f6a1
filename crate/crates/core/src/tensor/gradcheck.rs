//! Central finite-difference checks for the adjoint rules of [`Graph`].
//!
//! Each check compares directional derivatives: autodiff gives
//! `Re⟨G, E⟩` for a direction `E`, finite differences give
//! `(f(x + hE) − f(x − hE)) / 2h`. The scalar `f` is `Re⟨C, Y⟩` for a fixed
//! random cotangent `C`, evaluated on plain values, so the check of one op
//! never relies on the adjoint of another.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::graph::{Graph, Op, OpKind, VarId};
use super::matrix::ComplexMatrix;
use crate::error::Result;

pub const FD_STEP: f64 = 1e-5;
pub const GRAD_REL_TOL: f64 = 1e-4;

/// How a leaf may be perturbed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Domain {
    Complex,
    Real,
    /// Hermitian matrix; perturbed along Hermitian basis directions only.
    Hermitian,
}

#[derive(Clone, Debug)]
pub struct Leaf {
    pub value: ComplexMatrix,
    pub domain: Domain,
}

impl Leaf {
    pub fn complex(value: ComplexMatrix) -> Self {
        Self { value, domain: Domain::Complex }
    }
    pub fn real(value: ComplexMatrix) -> Self {
        Self { value, domain: Domain::Real }
    }
    pub fn hermitian(value: ComplexMatrix) -> Self {
        Self { value, domain: Domain::Hermitian }
    }

    fn directions(&self) -> Vec<ComplexMatrix> {
        let (r, c) = self.value.shape();
        let unit = |i: usize, j: usize, z: Complex64| {
            let mut e = ComplexMatrix::zeros(r, c);
            e.set(i, j, z);
            e
        };
        let mut dirs = Vec::new();
        match self.domain {
            Domain::Complex | Domain::Real => {
                for i in 0..r {
                    for j in 0..c {
                        dirs.push(unit(i, j, Complex64::new(1.0, 0.0)));
                        if self.domain == Domain::Complex {
                            dirs.push(unit(i, j, Complex64::new(0.0, 1.0)));
                        }
                    }
                }
            }
            Domain::Hermitian => {
                for i in 0..r {
                    dirs.push(unit(i, i, Complex64::new(1.0, 0.0)));
                    for j in (i + 1)..c {
                        for z in [Complex64::new(1.0, 0.0), Complex64::new(0.0, 1.0)] {
                            let mut e = unit(i, j, z);
                            e.set(j, i, z.conj());
                            dirs.push(e);
                        }
                    }
                }
            }
        }
        dirs
    }
}

/// Outcome of one gradient comparison.
#[derive(Clone, Debug)]
pub struct Comparison {
    pub rel_err: f64,
    pub autodiff_norm: f64,
    pub fd_norm: f64,
}

/// `Re⟨a, b⟩ = Σ a_re b_re + a_im b_im`.
pub fn real_inner(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    a.re().iter().zip(b.re()).map(|(x, y)| x * y).sum::<f64>()
        + a.im().iter().zip(b.im()).map(|(x, y)| x * y).sum::<f64>()
}

/// Compares the vector-Jacobian product of `build` against central finite
/// differences of `Re⟨cotangent, output⟩`.
pub fn compare<F>(leaves: &[Leaf], cotangent: &ComplexMatrix, build: F, fault: Option<OpKind>) -> Result<Comparison>
where
    F: Fn(&mut Graph, &[VarId]) -> Result<VarId>,
{
    let mut g = Graph::new().with_adjoint_fault(fault);
    let ids: Vec<VarId> = leaves
        .iter()
        .map(|l| match l.domain {
            Domain::Real => g.param(l.value.clone()),
            _ => g.var(l.value.clone()),
        })
        .collect();
    let out = build(&mut g, &ids)?;
    let grads = g.vjp(out, cotangent.clone())?;

    let eval = |values: &[ComplexMatrix]| -> Result<f64> {
        let mut g = Graph::new();
        let ids: Vec<VarId> = values.iter().map(|v| g.constant(v.clone())).collect();
        let out = build(&mut g, &ids)?;
        Ok(real_inner(cotangent, g.value(out)))
    };

    let base: Vec<ComplexMatrix> = leaves.iter().map(|l| l.value.clone()).collect();
    let mut ad = Vec::new();
    let mut fd = Vec::new();
    for (k, leaf) in leaves.iter().enumerate() {
        let zero = ComplexMatrix::zeros(leaf.value.rows(), leaf.value.cols());
        let grad = grads.get(ids[k]).unwrap_or(&zero);
        for dir in leaf.directions() {
            ad.push(real_inner(grad, &dir));
            let mut plus = base.clone();
            plus[k].axpy(FD_STEP, &dir)?;
            let mut minus = base.clone();
            minus[k].axpy(-FD_STEP, &dir)?;
            fd.push((eval(&plus)? - eval(&minus)?) / (2.0 * FD_STEP));
        }
    }
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let diff: Vec<f64> = ad.iter().zip(&fd).map(|(a, b)| a - b).collect();
    let (an, fnorm) = (norm(&ad), norm(&fd));
    Ok(Comparison {
        rel_err: norm(&diff) / an.max(fnorm).max(1e-6),
        autodiff_norm: an,
        fd_norm: fnorm,
    })
}

fn gaussian_matrix(rng: &mut ChaCha8Rng, r: usize, c: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(r, c, |_, _| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
}

fn real_matrix(rng: &mut ChaCha8Rng, r: usize, c: usize, lo: f64, hi: f64) -> ComplexMatrix {
    ComplexMatrix::from_fn(r, c, |_, _| Complex64::new(rng.random_range(lo..hi), 0.0))
}

fn hpd_matrix(rng: &mut ChaCha8Rng, n: usize) -> ComplexMatrix {
    let b = gaussian_matrix(rng, n, n);
    b.hermitian()
        .matmul(&b)
        .and_then(|a| a.add(&ComplexMatrix::identity(n)))
        .expect("square shapes")
}

/// Gradient check for a single op kind on one random instance (dimensions ≤ 6).
pub fn check_op(kind: OpKind, seed: u64, fault: Option<OpKind>) -> Result<Comparison> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    let mut dim = || rng.random_range(1..=6usize);
    let (r, c, k) = (dim(), dim(), dim());
    let n = r.max(2);
    let rng = &mut rng;

    let unary = |op: Op| move |g: &mut Graph, ids: &[VarId]| g.record(op, &[ids[0]]);
    let binary = |op: Op| move |g: &mut Graph, ids: &[VarId]| g.record(op, &[ids[0], ids[1]]);

    let (leaves, out_shape): (Vec<Leaf>, (usize, usize)) = match kind {
        OpKind::Add | OpKind::Subtract | OpKind::Hadamard => (
            vec![Leaf::complex(gaussian_matrix(rng, r, c)), Leaf::complex(gaussian_matrix(rng, r, c))],
            (r, c),
        ),
        OpKind::Scale | OpKind::SplitRealImag | OpKind::Hermitian | OpKind::FrobeniusNormSq => {
            let shape = match kind {
                OpKind::SplitRealImag => (r, 2 * c),
                OpKind::Hermitian => (c, r),
                OpKind::FrobeniusNormSq => (1, 1),
                _ => (r, c),
            };
            (vec![Leaf::complex(gaussian_matrix(rng, r, c))], shape)
        }
        OpKind::ScaleBy => (
            vec![
                Leaf::real(real_matrix(rng, 1, 1, 0.2, 2.0)),
                Leaf::complex(gaussian_matrix(rng, r, c)),
            ],
            (r, c),
        ),
        OpKind::MatMul => (
            vec![Leaf::complex(gaussian_matrix(rng, r, k)), Leaf::complex(gaussian_matrix(rng, k, c))],
            (r, c),
        ),
        OpKind::TraceReal => (vec![Leaf::complex(gaussian_matrix(rng, n, n))], (1, 1)),
        OpKind::InverseHpd => (vec![Leaf::hermitian(hpd_matrix(rng, n))], (n, n)),
        OpKind::LogdetHpd => (vec![Leaf::hermitian(hpd_matrix(rng, n))], (1, 1)),
        OpKind::Log2 | OpKind::Sqrt => (vec![Leaf::real(real_matrix(rng, r, c, 0.3, 3.0))], (r, c)),
        OpKind::Relu => {
            let mut m = real_matrix(rng, r, c, 0.1, 2.0);
            for (idx, v) in m.re_mut().iter_mut().enumerate() {
                if idx % 2 == 1 {
                    *v = -*v;
                }
            }
            (vec![Leaf::real(m)], (r, c))
        }
        OpKind::Sigmoid | OpKind::Tanh => (vec![Leaf::real(real_matrix(rng, r, c, -2.0, 2.0))], (r, c)),
        OpKind::Variance => (vec![Leaf::real(real_matrix(rng, 1, n, -2.0, 2.0))], (1, 1)),
        OpKind::ConcatCols => (
            vec![
                Leaf::complex(gaussian_matrix(rng, r, c)),
                Leaf::complex(gaussian_matrix(rng, r, k)),
            ],
            (r, c + k),
        ),
        OpKind::JoinRealImag => (vec![Leaf::real(real_matrix(rng, r, 2 * c, -1.0, 1.0))], (r, c)),
        OpKind::Affine => (
            vec![
                Leaf::real(real_matrix(rng, r, c, -1.0, 1.0)),
                Leaf::real(real_matrix(rng, k, c, -1.0, 1.0)),
                Leaf::real(real_matrix(rng, 1, k, -1.0, 1.0)),
            ],
            (r, k),
        ),
    };
    let cotangent = gaussian_matrix(rng, out_shape.0, out_shape.1);
    match kind {
        OpKind::Add => compare(&leaves, &cotangent, binary(Op::Add), fault),
        OpKind::Subtract => compare(&leaves, &cotangent, binary(Op::Subtract), fault),
        OpKind::Hadamard => compare(&leaves, &cotangent, binary(Op::Hadamard), fault),
        OpKind::MatMul => compare(&leaves, &cotangent, binary(Op::MatMul), fault),
        OpKind::ScaleBy => compare(&leaves, &cotangent, binary(Op::ScaleBy), fault),
        OpKind::Scale => compare(&leaves, &cotangent, unary(Op::Scale(-1.7)), fault),
        OpKind::Hermitian => compare(&leaves, &cotangent, unary(Op::Hermitian), fault),
        OpKind::TraceReal => compare(&leaves, &cotangent, unary(Op::TraceReal), fault),
        OpKind::FrobeniusNormSq => compare(&leaves, &cotangent, unary(Op::FrobeniusNormSq), fault),
        OpKind::InverseHpd => compare(&leaves, &cotangent, unary(Op::InverseHpd), fault),
        OpKind::LogdetHpd => compare(&leaves, &cotangent, unary(Op::LogdetHpd), fault),
        OpKind::Log2 => compare(&leaves, &cotangent, unary(Op::Log2), fault),
        OpKind::Relu => compare(&leaves, &cotangent, unary(Op::Relu), fault),
        OpKind::Sigmoid => compare(&leaves, &cotangent, unary(Op::Sigmoid), fault),
        OpKind::Tanh => compare(&leaves, &cotangent, unary(Op::Tanh), fault),
        OpKind::Variance => compare(&leaves, &cotangent, unary(Op::Variance), fault),
        OpKind::Sqrt => compare(&leaves, &cotangent, unary(Op::Sqrt), fault),
        OpKind::SplitRealImag => compare(&leaves, &cotangent, unary(Op::SplitRealImag), fault),
        OpKind::JoinRealImag => compare(&leaves, &cotangent, unary(Op::JoinRealImag), fault),
        OpKind::ConcatCols => compare(
            &leaves,
            &cotangent,
            |g: &mut Graph, ids: &[VarId]| g.concat_cols(ids),
            fault,
        ),
        OpKind::Affine => compare(
            &leaves,
            &cotangent,
            |g: &mut Graph, ids: &[VarId]| g.affine(ids[0], ids[1], ids[2]),
            fault,
        ),
    }
}

/// Worst relative error over `instances` seeded instances of `kind`.
pub fn check_op_instances(kind: OpKind, instances: u64, fault: Option<OpKind>) -> Result<f64> {
    let mut worst = 0.0f64;
    for seed in 0..instances {
        worst = worst.max(check_op(kind, seed, fault)?.rel_err);
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_op_passes_on_twenty_instances() {
        for kind in OpKind::ALL {
            let worst = check_op_instances(kind, 20, None).unwrap();
            assert!(worst < GRAD_REL_TOL, "{}: {worst:.3e}", kind.name());
        }
    }

    #[test]
    fn corrupted_adjoint_is_detected() {
        for kind in [OpKind::MatMul, OpKind::LogdetHpd, OpKind::Affine] {
            let worst = check_op_instances(kind, 3, Some(kind)).unwrap();
            assert!(worst > 0.1, "{} fault went unnoticed", kind.name());
            // Other ops are untouched by the fault.
            assert!(check_op_instances(OpKind::Tanh, 3, Some(kind)).unwrap() < GRAD_REL_TOL);
        }
    }
}
