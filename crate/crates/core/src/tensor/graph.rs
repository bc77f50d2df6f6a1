//! Tape-based reverse-mode differentiation over complex matrices.
//!
//! A [`Graph`] records every operation together with its forward value.
//! Nodes are appended in evaluation order so the tape is always
//! topologically sorted. [`Graph::backward`] walks it in reverse from a real
//! scalar root and returns, for every trainable leaf, the paired-real
//! gradient `∂L/∂Re + i·∂L/∂Im`.
//!
//! Under that convention the adjoint rules are the usual holomorphic ones
//! applied to `2·∂L/∂conj(·)`, e.g. `Y = AB` gives `G_A = G_Y Bᴴ` and
//! `G_B = Aᴴ G_Y`. Graphs are cheap and meant to be rebuilt every step.

use std::collections::HashMap;
use std::f64::consts::LN_2;

use super::matrix::ComplexMatrix;
use crate::error::{dim_err, Error, Result};

/// Handle to a node in a [`Graph`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VarId(usize);

impl VarId {
    pub fn index(self) -> usize {
        self.0
    }
}

/// Recorded operation. Parameterised variants carry their constants.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Op {
    Add,
    Subtract,
    /// Multiply by a fixed real constant.
    Scale(f64),
    /// Multiply a matrix (second input) by a real 1×1 node (first input).
    ScaleBy,
    Hadamard,
    MatMul,
    Hermitian,
    TraceReal,
    FrobeniusNormSq,
    InverseHpd,
    LogdetHpd,
    Log2,
    Relu,
    Sigmoid,
    Tanh,
    Variance,
    Sqrt,
    ConcatCols,
    SplitRealImag,
    JoinRealImag,
    /// `input · weightᵀ + bias`, inputs ordered (input, weight, bias).
    Affine,
}

/// Parameter-free discriminant of [`Op`], used for diagnostics and fault injection.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum OpKind {
    Add,
    Subtract,
    Scale,
    ScaleBy,
    Hadamard,
    MatMul,
    Hermitian,
    TraceReal,
    FrobeniusNormSq,
    InverseHpd,
    LogdetHpd,
    Log2,
    Relu,
    Sigmoid,
    Tanh,
    Variance,
    Sqrt,
    ConcatCols,
    SplitRealImag,
    JoinRealImag,
    Affine,
}

impl OpKind {
    pub const ALL: [OpKind; 21] = [
        OpKind::Add,
        OpKind::Subtract,
        OpKind::Scale,
        OpKind::ScaleBy,
        OpKind::Hadamard,
        OpKind::MatMul,
        OpKind::Hermitian,
        OpKind::TraceReal,
        OpKind::FrobeniusNormSq,
        OpKind::InverseHpd,
        OpKind::LogdetHpd,
        OpKind::Log2,
        OpKind::Relu,
        OpKind::Sigmoid,
        OpKind::Tanh,
        OpKind::Variance,
        OpKind::Sqrt,
        OpKind::ConcatCols,
        OpKind::SplitRealImag,
        OpKind::JoinRealImag,
        OpKind::Affine,
    ];

    pub fn name(self) -> &'static str {
        match self {
            OpKind::Add => "add",
            OpKind::Subtract => "subtract",
            OpKind::Scale => "scalar-scale",
            OpKind::ScaleBy => "scale-by-node",
            OpKind::Hadamard => "hadamard",
            OpKind::MatMul => "matmul",
            OpKind::Hermitian => "hermitian-transpose",
            OpKind::TraceReal => "trace-real",
            OpKind::FrobeniusNormSq => "frobenius-norm-squared",
            OpKind::InverseHpd => "inverse-hpd",
            OpKind::LogdetHpd => "logdet-hpd",
            OpKind::Log2 => "log2",
            OpKind::Relu => "relu",
            OpKind::Sigmoid => "sigmoid",
            OpKind::Tanh => "tanh",
            OpKind::Variance => "variance",
            OpKind::Sqrt => "sqrt",
            OpKind::ConcatCols => "concat-columns",
            OpKind::SplitRealImag => "split-real-imag",
            OpKind::JoinRealImag => "join-real-imag",
            OpKind::Affine => "affine",
        }
    }

    pub fn from_name(name: &str) -> Option<OpKind> {
        OpKind::ALL.iter().copied().find(|k| k.name() == name)
    }
}

impl Op {
    pub fn kind(&self) -> OpKind {
        match self {
            Op::Add => OpKind::Add,
            Op::Subtract => OpKind::Subtract,
            Op::Scale(_) => OpKind::Scale,
            Op::ScaleBy => OpKind::ScaleBy,
            Op::Hadamard => OpKind::Hadamard,
            Op::MatMul => OpKind::MatMul,
            Op::Hermitian => OpKind::Hermitian,
            Op::TraceReal => OpKind::TraceReal,
            Op::FrobeniusNormSq => OpKind::FrobeniusNormSq,
            Op::InverseHpd => OpKind::InverseHpd,
            Op::LogdetHpd => OpKind::LogdetHpd,
            Op::Log2 => OpKind::Log2,
            Op::Relu => OpKind::Relu,
            Op::Sigmoid => OpKind::Sigmoid,
            Op::Tanh => OpKind::Tanh,
            Op::Variance => OpKind::Variance,
            Op::Sqrt => OpKind::Sqrt,
            Op::ConcatCols => OpKind::ConcatCols,
            Op::SplitRealImag => OpKind::SplitRealImag,
            Op::JoinRealImag => OpKind::JoinRealImag,
            Op::Affine => OpKind::Affine,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum LeafRole {
    /// Trainable, complex-valued.
    Complex,
    /// Trainable, restricted to real values; the returned gradient has a zero
    /// imaginary plane.
    Real,
    /// Constant input; no gradient is produced.
    Input,
}

#[derive(Debug)]
enum NodeKind {
    Leaf(LeafRole),
    Op(Op, Vec<VarId>),
}

#[derive(Debug)]
struct Node {
    kind: NodeKind,
    value: ComplexMatrix,
    requires_grad: bool,
}

/// Dynamic computation graph. Confined to a single thread.
#[derive(Debug, Default)]
pub struct Graph {
    nodes: Vec<Node>,
    fault: Option<OpKind>,
}

/// Gradients of a scalar root keyed by trainable leaf.
#[derive(Debug, Default)]
pub struct Gradients {
    map: HashMap<VarId, ComplexMatrix>,
}

impl Gradients {
    pub fn get(&self, id: VarId) -> Option<&ComplexMatrix> {
        self.map.get(&id)
    }

    pub fn take(&mut self, id: VarId) -> Option<ComplexMatrix> {
        self.map.remove(&id)
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }
}

fn require_real(op: &'static str, m: &ComplexMatrix) -> Result<()> {
    if m.is_real() {
        Ok(())
    } else {
        Err(Error::Contract(format!("{op} expects a real-valued input")))
    }
}

fn require_scalar(op: &'static str, m: &ComplexMatrix) -> Result<()> {
    if m.shape() == (1, 1) {
        Ok(())
    } else {
        Err(dim_err(op, format!("expected 1x1, got {}x{}", m.rows(), m.cols())))
    }
}

fn arity(op: &'static str, inputs: &[VarId], n: usize) -> Result<()> {
    if inputs.len() == n {
        Ok(())
    } else {
        Err(Error::Graph(format!("{op} takes {n} inputs, got {}", inputs.len())))
    }
}

impl Graph {
    pub fn new() -> Self {
        Self::default()
    }

    /// Test fixture: corrupts the adjoint of every node of `kind` by a factor 1.5.
    #[doc(hidden)]
    pub fn with_adjoint_fault(mut self, kind: Option<OpKind>) -> Self {
        self.fault = kind;
        self
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push_leaf(&mut self, value: ComplexMatrix, role: LeafRole) -> VarId {
        let id = VarId(self.nodes.len());
        self.nodes.push(Node {
            kind: NodeKind::Leaf(role),
            value,
            requires_grad: role != LeafRole::Input,
        });
        id
    }

    /// Trainable complex leaf.
    pub fn var(&mut self, value: ComplexMatrix) -> VarId {
        self.push_leaf(value, LeafRole::Complex)
    }

    /// Trainable real leaf. Any imaginary part of `value` is discarded.
    pub fn param(&mut self, value: ComplexMatrix) -> VarId {
        let value = if value.is_real() { value } else { value.real_part() };
        self.push_leaf(value, LeafRole::Real)
    }

    /// Constant input.
    pub fn constant(&mut self, value: ComplexMatrix) -> VarId {
        self.push_leaf(value, LeafRole::Input)
    }

    pub fn value(&self, id: VarId) -> &ComplexMatrix {
        &self.nodes[id.0].value
    }

    fn node(&self, id: VarId) -> Result<&Node> {
        self.nodes
            .get(id.0)
            .ok_or_else(|| Error::Graph(format!("unknown node {}", id.0)))
    }

    /// Appends `op` applied to `inputs`, evaluating it eagerly.
    pub fn record(&mut self, op: Op, inputs: &[VarId]) -> Result<VarId> {
        for &i in inputs {
            self.node(i)?;
        }
        let v = |k: usize| &self.nodes[inputs[k].0].value;
        let value = match op {
            Op::Add => {
                arity("add", inputs, 2)?;
                v(0).add(v(1))?
            }
            Op::Subtract => {
                arity("subtract", inputs, 2)?;
                v(0).sub(v(1))?
            }
            Op::Scale(s) => {
                arity("scalar-scale", inputs, 1)?;
                v(0).scale(s)
            }
            Op::ScaleBy => {
                arity("scale-by-node", inputs, 2)?;
                require_scalar("scale-by-node", v(0))?;
                require_real("scale-by-node", v(0))?;
                v(1).scale(v(0).scalar_value())
            }
            Op::Hadamard => {
                arity("hadamard", inputs, 2)?;
                v(0).hadamard(v(1))?
            }
            Op::MatMul => {
                arity("matmul", inputs, 2)?;
                v(0).matmul(v(1))?
            }
            Op::Hermitian => {
                arity("hermitian-transpose", inputs, 1)?;
                v(0).hermitian()
            }
            Op::TraceReal => {
                arity("trace-real", inputs, 1)?;
                ComplexMatrix::scalar(v(0).trace_real()?)
            }
            Op::FrobeniusNormSq => {
                arity("frobenius-norm-squared", inputs, 1)?;
                ComplexMatrix::scalar(v(0).frobenius_norm_sq())
            }
            Op::InverseHpd => {
                arity("inverse-hpd", inputs, 1)?;
                v(0).inverse_hpd()?
            }
            Op::LogdetHpd => {
                arity("logdet-hpd", inputs, 1)?;
                ComplexMatrix::scalar(v(0).logdet_hpd()?)
            }
            Op::Log2 => {
                arity("log2", inputs, 1)?;
                require_real("log2", v(0))?;
                v(0).map_real(f64::log2)
            }
            Op::Relu => {
                arity("relu", inputs, 1)?;
                require_real("relu", v(0))?;
                v(0).map_real(|x| x.max(0.0))
            }
            Op::Sigmoid => {
                arity("sigmoid", inputs, 1)?;
                require_real("sigmoid", v(0))?;
                v(0).map_real(sigmoid)
            }
            Op::Tanh => {
                arity("tanh", inputs, 1)?;
                require_real("tanh", v(0))?;
                v(0).map_real(f64::tanh)
            }
            Op::Variance => {
                arity("variance", inputs, 1)?;
                let x = v(0);
                require_real("variance", x)?;
                if x.rows() != 1 && x.cols() != 1 {
                    return Err(dim_err("variance", format!("expected a vector, got {}x{}", x.rows(), x.cols())));
                }
                ComplexMatrix::scalar(population_variance(x.re()))
            }
            Op::Sqrt => {
                arity("sqrt", inputs, 1)?;
                require_real("sqrt", v(0))?;
                v(0).map_real(f64::sqrt)
            }
            Op::ConcatCols => {
                if inputs.is_empty() {
                    return Err(Error::Graph("concat-columns needs at least one input".into()));
                }
                let parts: Vec<ComplexMatrix> = inputs.iter().map(|i| self.nodes[i.0].value.clone()).collect();
                ComplexMatrix::concat_cols(&parts)?
            }
            Op::SplitRealImag => {
                arity("split-real-imag", inputs, 1)?;
                v(0).split_real_imag()
            }
            Op::JoinRealImag => {
                arity("join-real-imag", inputs, 1)?;
                require_real("join-real-imag", v(0))?;
                v(0).join_real_imag()?
            }
            Op::Affine => {
                arity("affine", inputs, 3)?;
                let (x, w, b) = (v(0), v(1), v(2));
                require_real("affine", x)?;
                require_real("affine", w)?;
                require_real("affine", b)?;
                if x.cols() != w.cols() || b.shape() != (1, w.rows()) {
                    return Err(dim_err(
                        "affine",
                        format!(
                            "input {}x{}, weight {}x{}, bias {}x{}",
                            x.rows(),
                            x.cols(),
                            w.rows(),
                            w.cols(),
                            b.rows(),
                            b.cols()
                        ),
                    ));
                }
                affine_forward(x, w, b)
            }
        };
        let requires_grad = inputs.iter().any(|i| self.nodes[i.0].requires_grad);
        let id = VarId(self.nodes.len());
        self.nodes.push(Node {
            kind: NodeKind::Op(op, inputs.to_vec()),
            value,
            requires_grad,
        });
        Ok(id)
    }

    pub fn add(&mut self, a: VarId, b: VarId) -> Result<VarId> {
        self.record(Op::Add, &[a, b])
    }
    pub fn sub(&mut self, a: VarId, b: VarId) -> Result<VarId> {
        self.record(Op::Subtract, &[a, b])
    }
    pub fn scale(&mut self, a: VarId, s: f64) -> Result<VarId> {
        self.record(Op::Scale(s), &[a])
    }
    pub fn scale_by(&mut self, scalar: VarId, x: VarId) -> Result<VarId> {
        self.record(Op::ScaleBy, &[scalar, x])
    }
    pub fn hadamard(&mut self, a: VarId, b: VarId) -> Result<VarId> {
        self.record(Op::Hadamard, &[a, b])
    }
    pub fn matmul(&mut self, a: VarId, b: VarId) -> Result<VarId> {
        self.record(Op::MatMul, &[a, b])
    }
    pub fn hermitian(&mut self, a: VarId) -> Result<VarId> {
        self.record(Op::Hermitian, &[a])
    }
    pub fn trace_real(&mut self, a: VarId) -> Result<VarId> {
        self.record(Op::TraceReal, &[a])
    }
    pub fn frobenius_norm_sq(&mut self, a: VarId) -> Result<VarId> {
        self.record(Op::FrobeniusNormSq, &[a])
    }
    pub fn inverse_hpd(&mut self, a: VarId) -> Result<VarId> {
        self.record(Op::InverseHpd, &[a])
    }
    pub fn logdet_hpd(&mut self, a: VarId) -> Result<VarId> {
        self.record(Op::LogdetHpd, &[a])
    }
    pub fn log2(&mut self, a: VarId) -> Result<VarId> {
        self.record(Op::Log2, &[a])
    }
    pub fn relu(&mut self, a: VarId) -> Result<VarId> {
        self.record(Op::Relu, &[a])
    }
    pub fn sigmoid(&mut self, a: VarId) -> Result<VarId> {
        self.record(Op::Sigmoid, &[a])
    }
    pub fn tanh(&mut self, a: VarId) -> Result<VarId> {
        self.record(Op::Tanh, &[a])
    }
    pub fn variance(&mut self, a: VarId) -> Result<VarId> {
        self.record(Op::Variance, &[a])
    }
    pub fn sqrt(&mut self, a: VarId) -> Result<VarId> {
        self.record(Op::Sqrt, &[a])
    }
    pub fn concat_cols(&mut self, parts: &[VarId]) -> Result<VarId> {
        self.record(Op::ConcatCols, parts)
    }
    pub fn split_real_imag(&mut self, a: VarId) -> Result<VarId> {
        self.record(Op::SplitRealImag, &[a])
    }
    pub fn join_real_imag(&mut self, a: VarId) -> Result<VarId> {
        self.record(Op::JoinRealImag, &[a])
    }
    pub fn affine(&mut self, input: VarId, weight: VarId, bias: VarId) -> Result<VarId> {
        self.record(Op::Affine, &[input, weight, bias])
    }

    /// Reverse sweep from a real scalar `root`.
    pub fn backward(&self, root: VarId) -> Result<Gradients> {
        let rv = &self.node(root)?.value;
        if rv.shape() != (1, 1) {
            return Err(Error::Contract(format!(
                "backward root must be a scalar, got {}x{}",
                rv.rows(),
                rv.cols()
            )));
        }
        if !rv.is_real() {
            return Err(Error::Contract("backward root is complex-valued".into()));
        }
        self.vjp(root, ComplexMatrix::scalar(1.0))
    }

    /// Vector-Jacobian product: gradients of `Re⟨cotangent, output⟩` with
    /// respect to every trainable leaf.
    pub fn vjp(&self, output: VarId, cotangent: ComplexMatrix) -> Result<Gradients> {
        let ov = &self.node(output)?.value;
        if ov.shape() != cotangent.shape() {
            return Err(dim_err(
                "vjp",
                format!(
                    "cotangent {}x{} for output {}x{}",
                    cotangent.rows(),
                    cotangent.cols(),
                    ov.rows(),
                    ov.cols()
                ),
            ));
        }
        let root = output;
        let mut adj: Vec<Option<ComplexMatrix>> = (0..=root.0).map(|_| None).collect();
        adj[root.0] = Some(cotangent);
        let mut grads = Gradients::default();

        for idx in (0..=root.0).rev() {
            let Some(g) = adj[idx].take() else { continue };
            let node = &self.nodes[idx];
            if !node.requires_grad {
                continue;
            }
            let (op, inputs) = match &node.kind {
                NodeKind::Leaf(LeafRole::Input) => continue,
                NodeKind::Leaf(LeafRole::Complex) => {
                    grads.map.insert(VarId(idx), g);
                    continue;
                }
                NodeKind::Leaf(LeafRole::Real) => {
                    grads.map.insert(VarId(idx), g.real_part());
                    continue;
                }
                NodeKind::Op(op, inputs) => (op, inputs),
            };
            let contributions = self.adjoint(*op, inputs, &node.value, &g)?;
            let factor = if self.fault == Some(op.kind()) { 1.5 } else { 1.0 };
            for (input, contrib) in inputs.iter().zip(contributions) {
                let Some(mut contrib) = contrib else { continue };
                if !self.nodes[input.0].requires_grad {
                    continue;
                }
                if factor != 1.0 {
                    contrib = contrib.scale(factor);
                }
                match &mut adj[input.0] {
                    Some(acc) => acc.add_assign(&contrib)?,
                    slot @ None => *slot = Some(contrib),
                }
            }
        }
        Ok(grads)
    }

    /// Per-input adjoint contributions for one node. `None` marks inputs that
    /// do not need a gradient.
    fn adjoint(
        &self,
        op: Op,
        inputs: &[VarId],
        out: &ComplexMatrix,
        g: &ComplexMatrix,
    ) -> Result<Vec<Option<ComplexMatrix>>> {
        let val = |k: usize| &self.nodes[inputs[k].0].value;
        let need = |k: usize| self.nodes[inputs[k].0].requires_grad;
        let g_re = g.re()[0];
        let res = match op {
            Op::Add => vec![Some(g.clone()), Some(g.clone())],
            Op::Subtract => vec![Some(g.clone()), Some(g.scale(-1.0))],
            Op::Scale(s) => vec![Some(g.scale(s))],
            Op::ScaleBy => {
                let x = val(1);
                let ds: f64 = g.re().iter().zip(x.re()).map(|(a, b)| a * b).sum::<f64>()
                    + g.im().iter().zip(x.im()).map(|(a, b)| a * b).sum::<f64>();
                vec![
                    Some(ComplexMatrix::scalar(ds)),
                    Some(g.scale(val(0).scalar_value())),
                ]
            }
            Op::Hadamard => vec![
                need(0).then(|| g.hadamard(&val(1).conj())).transpose()?,
                need(1).then(|| g.hadamard(&val(0).conj())).transpose()?,
            ],
            Op::MatMul => vec![
                need(0).then(|| g.matmul(&val(1).hermitian())).transpose()?,
                need(1).then(|| val(0).hermitian().matmul(g)).transpose()?,
            ],
            Op::Hermitian => vec![Some(g.hermitian())],
            Op::TraceReal => {
                let n = val(0).rows();
                vec![Some(ComplexMatrix::identity(n).scale(g_re))]
            }
            Op::FrobeniusNormSq => vec![Some(val(0).scale(2.0 * g_re))],
            Op::InverseHpd => {
                let yh = out.hermitian();
                vec![Some(yh.matmul(g)?.matmul(&yh)?.scale(-1.0))]
            }
            Op::LogdetHpd => {
                let inv = val(0).inverse_hpd()?;
                vec![Some(inv.hermitian().scale(g_re))]
            }
            Op::Log2 => {
                let x = val(0);
                vec![Some(elementwise(g, x, |gr, xv| gr / (xv * LN_2)))]
            }
            Op::Relu => {
                let x = val(0);
                vec![Some(elementwise(g, x, |gr, xv| if xv > 0.0 { gr } else { 0.0 }))]
            }
            Op::Sigmoid => vec![Some(elementwise(g, out, |gr, y| gr * y * (1.0 - y)))],
            Op::Tanh => vec![Some(elementwise(g, out, |gr, y| gr * (1.0 - y * y)))],
            Op::Sqrt => vec![Some(elementwise(g, out, |gr, y| gr / (2.0 * y)))],
            Op::Variance => {
                let x = val(0);
                let n = x.len() as f64;
                let mean = x.re().iter().sum::<f64>() / n;
                vec![Some(x.map_real(|v| g_re * 2.0 / n * (v - mean)))]
            }
            Op::ConcatCols => {
                let mut offset = 0;
                let mut parts = Vec::with_capacity(inputs.len());
                for k in 0..inputs.len() {
                    let c = val(k).cols();
                    parts.push(Some(g.col_block(offset, c)?));
                    offset += c;
                }
                parts
            }
            Op::SplitRealImag => {
                let c = val(0).cols();
                let re = g.col_block(0, c)?;
                let im = g.col_block(c, c)?;
                let joined = ComplexMatrix::concat_cols(&[re.real_part(), im.real_part()])?;
                vec![Some(joined.join_real_imag()?)]
            }
            Op::JoinRealImag => {
                let re = g.real_part();
                let im = ComplexMatrix::from_real(g.rows(), g.cols(), g.im().to_vec())?;
                vec![Some(ComplexMatrix::concat_cols(&[re, im])?)]
            }
            Op::Affine => {
                let gr = g.real_part();
                let (x, w) = (val(0), val(1));
                let gx = need(0).then(|| gr.matmul(w)).transpose()?;
                let gw = need(1).then(|| gr.transpose().matmul(x)).transpose()?;
                let gb = need(2).then(|| {
                    let (r, c) = gr.shape();
                    let mut sums = vec![0.0; c];
                    for i in 0..r {
                        for (j, s) in sums.iter_mut().enumerate() {
                            *s += gr.re()[i * c + j];
                        }
                    }
                    ComplexMatrix::from_real(1, c, sums)
                });
                vec![gx, gw, gb.transpose()?]
            }
        };
        Ok(res)
    }
}

fn elementwise(g: &ComplexMatrix, x: &ComplexMatrix, f: impl Fn(f64, f64) -> f64) -> ComplexMatrix {
    let data = g.re().iter().zip(x.re()).map(|(&gr, &xv)| f(gr, xv)).collect();
    ComplexMatrix::from_real(g.rows(), g.cols(), data).expect("shape preserved")
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `(1/n) Σ (x_i - mean)²`.
pub fn population_variance(x: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n
}

fn affine_forward(x: &ComplexMatrix, w: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    let (batch, feat) = x.shape();
    let d = w.rows();
    let mut out = vec![0.0; batch * d];
    for i in 0..batch {
        let xr = &x.re()[i * feat..(i + 1) * feat];
        for j in 0..d {
            let wr = &w.re()[j * feat..(j + 1) * feat];
            out[i * d + j] = b.re()[j] + xr.iter().zip(wr).map(|(a, c)| a * c).sum::<f64>();
        }
    }
    ComplexMatrix::from_real(batch, d, out).expect("shape computed")
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    fn cm(rows: usize, cols: usize, seed: u64) -> ComplexMatrix {
        let mut s = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        let mut next = move || {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((s >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
        };
        ComplexMatrix::from_fn(rows, cols, |_, _| Complex64::new(next(), next()))
    }

    #[test]
    fn record_add_and_matmul_shapes() {
        let mut g = Graph::new();
        let a = g.constant(cm(2, 2, 1));
        let b = g.constant(cm(2, 2, 2));
        let s = g.add(a, b).unwrap();
        assert_eq!(g.value(s), &g.value(a).add(g.value(b)).unwrap());

        let a = g.constant(cm(2, 3, 3));
        let b = g.constant(cm(3, 1, 4));
        let p = g.matmul(a, b).unwrap();
        assert_eq!(g.value(p).shape(), (2, 1));
        let c = g.constant(cm(2, 1, 5));
        assert!(matches!(g.matmul(a, c), Err(Error::Dimension { .. })));
    }

    #[test]
    fn unknown_node_is_integrity_error() {
        let mut g = Graph::new();
        let a = g.constant(cm(1, 1, 1));
        let mut other = Graph::new();
        for _ in 0..5 {
            other.constant(cm(1, 1, 1));
        }
        let foreign = VarId(4);
        assert!(matches!(g.add(a, foreign), Err(Error::Graph(_))));
    }

    #[test]
    fn frobenius_gradient_is_twice_x() {
        let x0 = cm(3, 2, 9);
        let mut g = Graph::new();
        let x = g.var(x0.clone());
        let l = g.frobenius_norm_sq(x).unwrap();
        let grads = g.backward(l).unwrap();
        assert!(grads.get(x).unwrap().max_abs_diff(&x0.scale(2.0)) < 1e-15);
    }

    #[test]
    fn trace_gradient_is_identity() {
        let a0 = ComplexMatrix::from_real(2, 2, vec![3.0, 0.0, 0.0, -1.5]).unwrap();
        let mut g = Graph::new();
        let a = g.param(a0);
        let l = g.trace_real(a).unwrap();
        let grads = g.backward(l).unwrap();
        assert_eq!(grads.get(a).unwrap(), &ComplexMatrix::identity(2));
    }

    #[test]
    fn complex_root_rejected() {
        let mut g = Graph::new();
        let a = g.var(ComplexMatrix::from_fn(1, 1, |_, _| Complex64::new(1.0, 2.0)));
        let b = g.scale(a, 2.0).unwrap();
        assert!(matches!(g.backward(b), Err(Error::Contract(_))));
        let m = g.var(cm(2, 2, 3));
        assert!(matches!(g.backward(m), Err(Error::Contract(_))));
    }

    #[test]
    fn real_leaf_gradient_has_zero_imag() {
        let mut g = Graph::new();
        let w = g.param(ComplexMatrix::from_real(1, 2, vec![0.3, -0.2]).unwrap());
        let c = g.constant(cm(2, 1, 4));
        let y = g.matmul(w, c).unwrap();
        let s = g.frobenius_norm_sq(y).unwrap();
        let grads = g.backward(s).unwrap();
        assert!(grads.get(w).unwrap().is_real());
    }

    #[test]
    fn constants_receive_no_gradient() {
        let mut g = Graph::new();
        let c = g.constant(cm(2, 2, 1));
        let x = g.var(cm(2, 2, 2));
        let p = g.matmul(c, x).unwrap();
        let l = g.frobenius_norm_sq(p).unwrap();
        let grads = g.backward(l).unwrap();
        assert!(grads.get(c).is_none());
        assert!(grads.get(x).is_some());
    }

    #[test]
    fn matmul_with_own_hermitian_is_hermitian() {
        for seed in 0..10 {
            let a = cm(4, 3, seed);
            let p = a.matmul(&a.hermitian()).unwrap();
            assert!(p.hermitian_asymmetry() < 1e-12);
        }
    }
}
