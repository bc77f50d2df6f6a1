//! Closed-form continuous-time liquid cells and the three-layer stack.
//!
//! One cell maps its previous hidden state `p` and input `I` to
//!
//! ```text
//! z    = [p | I]
//! gate = σ(−f(z)·t)
//! p'   = gate ⊙ tanh(g(z)) + (1 − gate) ⊙ tanh(h(z))
//! ```
//!
//! where `f`, `g`, `h` are single affine heads. The stack chains three cells
//! (interneurons → command → motor); each keeps one hidden row per batch
//! row and feeds its output forward to the next layer.

use rand::Rng;

use crate::error::{dim_err, Error, Result};
use crate::tensor::{ComplexMatrix, Graph, Gradients, VarId};

/// Neurons in the command layer when not configured otherwise.
pub const DEFAULT_COMMAND_NEURONS: usize = 30;

/// Weights of the three heads of one layer. All tensors are real.
#[derive(Clone, Debug, PartialEq)]
pub struct LiquidLayerParams {
    pub neurons: usize,
    pub inputs: usize,
    pub f_weight: ComplexMatrix,
    pub f_bias: ComplexMatrix,
    pub g_weight: ComplexMatrix,
    pub g_bias: ComplexMatrix,
    pub h_weight: ComplexMatrix,
    pub h_bias: ComplexMatrix,
}

const HEAD_TENSORS: [&str; 6] = ["f.weight", "f.bias", "g.weight", "g.bias", "h.weight", "h.bias"];

impl LiquidLayerParams {
    /// Glorot-uniform weights over fan-in `D + C` and fan-out `D`; zero
    /// biases except the f-head bias, which starts at one.
    pub fn init<R: Rng>(neurons: usize, inputs: usize, rng: &mut R) -> Self {
        let bound = glorot_bound(neurons, inputs);
        let mut weight = || {
            let data = (0..neurons * (neurons + inputs))
                .map(|_| rng.random_range(-bound..=bound))
                .collect();
            ComplexMatrix::from_real(neurons, neurons + inputs, data).expect("sized")
        };
        let f_weight = weight();
        let g_weight = weight();
        let h_weight = weight();
        Self {
            neurons,
            inputs,
            f_weight,
            f_bias: ComplexMatrix::from_real(1, neurons, vec![1.0; neurons]).expect("sized"),
            g_weight,
            g_bias: ComplexMatrix::zeros(1, neurons),
            h_weight,
            h_bias: ComplexMatrix::zeros(1, neurons),
        }
    }

    pub fn zeros(neurons: usize, inputs: usize) -> Self {
        let w = ComplexMatrix::zeros(neurons, neurons + inputs);
        let b = ComplexMatrix::zeros(1, neurons);
        Self {
            neurons,
            inputs,
            f_weight: w.clone(),
            f_bias: b.clone(),
            g_weight: w.clone(),
            g_bias: b.clone(),
            h_weight: w,
            h_bias: b,
        }
    }

    pub fn tensors(&self) -> [&ComplexMatrix; 6] {
        [&self.f_weight, &self.f_bias, &self.g_weight, &self.g_bias, &self.h_weight, &self.h_bias]
    }

    pub fn tensors_mut(&mut self) -> [&mut ComplexMatrix; 6] {
        [
            &mut self.f_weight,
            &mut self.f_bias,
            &mut self.g_weight,
            &mut self.g_bias,
            &mut self.h_weight,
            &mut self.h_bias,
        ]
    }

    pub fn validate(&self) -> Result<()> {
        let (d, c) = (self.neurons, self.inputs);
        for (name, t) in HEAD_TENSORS.iter().zip(self.tensors()) {
            let want = if name.ends_with("weight") { (d, d + c) } else { (1, d) };
            if t.shape() != want {
                return Err(dim_err("liquid layer", format!("{name} is {:?}, expected {:?}", t.shape(), want)));
            }
            if !t.is_finite() {
                return Err(Error::Contract(format!("{name} has non-finite entries")));
            }
        }
        Ok(())
    }
}

pub fn glorot_bound(neurons: usize, inputs: usize) -> f64 {
    (6.0 / (2 * neurons + inputs) as f64).sqrt()
}

/// Graph handles of one layer's parameters.
#[derive(Clone, Copy, Debug)]
pub struct LayerIds {
    pub f_weight: VarId,
    pub f_bias: VarId,
    pub g_weight: VarId,
    pub g_bias: VarId,
    pub h_weight: VarId,
    pub h_bias: VarId,
}

impl LayerIds {
    /// Registers the layer as trainable leaves (`trainable`) or constants.
    pub fn register(g: &mut Graph, p: &LiquidLayerParams, trainable: bool) -> Self {
        let mut leaf = |m: &ComplexMatrix| if trainable { g.param(m.clone()) } else { g.constant(m.clone()) };
        Self {
            f_weight: leaf(&p.f_weight),
            f_bias: leaf(&p.f_bias),
            g_weight: leaf(&p.g_weight),
            g_bias: leaf(&p.g_bias),
            h_weight: leaf(&p.h_weight),
            h_bias: leaf(&p.h_bias),
        }
    }

    pub fn ids(&self) -> [VarId; 6] {
        [self.f_weight, self.f_bias, self.g_weight, self.g_bias, self.h_weight, self.h_bias]
    }
}

/// Records one cell evaluation and returns the new hidden state node.
pub fn cell_graph(g: &mut Graph, layer: &LayerIds, p_prev: VarId, input: VarId, t_elapsed: f64) -> Result<VarId> {
    let z = g.concat_cols(&[p_prev, input])?;
    let f = g.affine(z, layer.f_weight, layer.f_bias)?;
    let g_pre = g.affine(z, layer.g_weight, layer.g_bias)?;
    let h_pre = g.affine(z, layer.h_weight, layer.h_bias)?;
    let g_out = g.tanh(g_pre)?;
    let h_out = g.tanh(h_pre)?;
    let decay = g.scale(f, -t_elapsed)?;
    let gate = g.sigmoid(decay)?;
    let spread = g.sub(g_out, h_out)?;
    let mixed = g.hadamard(gate, spread)?;
    g.add(h_out, mixed)
}

/// Plain evaluation of one cell.
pub fn cell_forward(
    params: &LiquidLayerParams,
    p_prev: &ComplexMatrix,
    input: &ComplexMatrix,
    t_elapsed: f64,
) -> Result<ComplexMatrix> {
    if !(t_elapsed > 0.0) {
        return Err(Error::Contract(format!("t_elapsed must be positive, got {t_elapsed}")));
    }
    if p_prev.cols() != params.neurons || input.cols() != params.inputs || p_prev.rows() != input.rows() {
        return Err(dim_err(
            "cell forward",
            format!(
                "state {:?} and input {:?} for a layer of {} neurons with {} inputs",
                p_prev.shape(),
                input.shape(),
                params.neurons,
                params.inputs
            ),
        ));
    }
    let mut g = Graph::new();
    let ids = LayerIds::register(&mut g, params, false);
    let p = g.constant(p_prev.clone());
    let i = g.constant(input.clone());
    let out = cell_graph(&mut g, &ids, p, i, t_elapsed)?;
    Ok(g.value(out).clone())
}

/// Adam moments for a flat list of tensors.
#[derive(Clone, Debug, PartialEq)]
pub struct AdamState {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub step: u64,
    pub m: Vec<ComplexMatrix>,
    pub v: Vec<ComplexMatrix>,
}

impl AdamState {
    pub fn new(lr: f64, shapes: impl IntoIterator<Item = (usize, usize)>) -> Self {
        let zeros: Vec<ComplexMatrix> = shapes.into_iter().map(|(r, c)| ComplexMatrix::zeros(r, c)).collect();
        Self {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            step: 0,
            m: zeros.clone(),
            v: zeros,
        }
    }

    pub fn reset(&mut self) {
        self.step = 0;
        for t in self.m.iter_mut().chain(self.v.iter_mut()) {
            *t = ComplexMatrix::zeros(t.rows(), t.cols());
        }
    }

    /// One minimisation step. Real and imaginary planes are treated as
    /// independent real parameters. Nothing is updated if any gradient
    /// entry is non-finite.
    pub fn update(&mut self, params: &mut [&mut ComplexMatrix], grads: &[&ComplexMatrix], names: &[String]) -> Result<()> {
        if params.len() != self.m.len() || grads.len() != self.m.len() {
            return Err(dim_err(
                "adam",
                format!("{} params, {} grads, {} moments", params.len(), grads.len(), self.m.len()),
            ));
        }
        for (k, (p, g)) in params.iter().zip(grads).enumerate() {
            if p.shape() != g.shape() || p.shape() != self.m[k].shape() {
                return Err(dim_err("adam", format!("tensor {k}: param {:?}, grad {:?}", p.shape(), g.shape())));
            }
            if !g.is_finite() {
                let name = names.get(k).cloned().unwrap_or_else(|| format!("#{k}"));
                return Err(Error::GradientExplosion { name });
            }
        }
        self.step += 1;
        let (b1, b2) = (self.beta1, self.beta2);
        let c1 = 1.0 - b1.powi(self.step as i32);
        let c2 = 1.0 - b2.powi(self.step as i32);
        for (k, p) in params.iter_mut().enumerate() {
            let g = grads[k];
            adam_plane(p.re_mut(), g.re(), self.m[k].re_mut(), self.v[k].re_mut(), b1, b2, c1, c2, self.lr, self.eps);
            adam_plane(p.im_mut(), g.im(), self.m[k].im_mut(), self.v[k].im_mut(), b1, b2, c1, c2, self.lr, self.eps);
        }
        Ok(())
    }
}

#[allow(clippy::too_many_arguments)]
fn adam_plane(p: &mut [f64], g: &[f64], m: &mut [f64], v: &mut [f64], b1: f64, b2: f64, c1: f64, c2: f64, lr: f64, eps: f64) {
    for i in 0..p.len() {
        m[i] = b1 * m[i] + (1.0 - b1) * g[i];
        v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
        let m_hat = m[i] / c1;
        let v_hat = v[i] / c2;
        p[i] -= lr * m_hat / (v_hat.sqrt() + eps);
    }
}

/// Layer names in stack order.
pub const LAYER_NAMES: [&str; 3] = ["interneurons", "command", "motor"];

/// Hidden state of each layer, one row per batch row.
#[derive(Clone, Debug, PartialEq)]
pub struct LiquidStackState {
    pub hidden: Vec<ComplexMatrix>,
}

impl LiquidStackState {
    pub fn zeros(batch: usize, layer_sizes: &[usize]) -> Self {
        Self {
            hidden: layer_sizes.iter().map(|&d| ComplexMatrix::zeros(batch, d)).collect(),
        }
    }

    pub fn batch(&self) -> usize {
        self.hidden.first().map(|h| h.rows()).unwrap_or(0)
    }
}

/// Nodes produced by [`LiquidStack::forward_graph`].
#[derive(Clone, Debug)]
pub struct StackNodes {
    pub layers: Vec<LayerIds>,
    /// Output of each layer (its new hidden state).
    pub hidden: Vec<VarId>,
    pub output: VarId,
}

/// Interneurons (2K) → command → motor (2K), with persistent state and Adam.
#[derive(Clone, Debug)]
pub struct LiquidStack {
    pub layers: Vec<LiquidLayerParams>,
    pub state: LiquidStackState,
    pub adam: AdamState,
    pub t_elapsed: f64,
}

impl LiquidStack {
    /// Stack for `features`-wide inputs (2K) and a batch of `batch` rows.
    pub fn new<R: Rng>(features: usize, command_neurons: usize, batch: usize, lr: f64, rng: &mut R) -> Self {
        let layers = vec![
            LiquidLayerParams::init(features, features, rng),
            LiquidLayerParams::init(command_neurons, features, rng),
            LiquidLayerParams::init(features, command_neurons, rng),
        ];
        Self::from_layers(layers, batch, lr)
    }

    pub fn from_layers(layers: Vec<LiquidLayerParams>, batch: usize, lr: f64) -> Self {
        let sizes: Vec<usize> = layers.iter().map(|l| l.neurons).collect();
        let shapes: Vec<(usize, usize)> = layers.iter().flat_map(|l| l.tensors().map(|t| t.shape())).collect();
        Self {
            state: LiquidStackState::zeros(batch, &sizes),
            adam: AdamState::new(lr, shapes),
            layers,
            t_elapsed: 1.0,
        }
    }

    pub fn features(&self) -> usize {
        self.layers[0].inputs
    }

    pub fn layer_sizes(&self) -> Vec<usize> {
        self.layers.iter().map(|l| l.neurons).collect()
    }

    /// Zeroes all hidden states and resizes them to `batch` rows.
    pub fn reset_state(&mut self, batch: usize) {
        self.state = LiquidStackState::zeros(batch, &self.layer_sizes());
    }

    /// Flat tensor names, e.g. `command.g.weight`.
    pub fn param_names(&self) -> Vec<String> {
        LAYER_NAMES
            .iter()
            .take(self.layers.len())
            .flat_map(|l| HEAD_TENSORS.iter().map(move |t| format!("{l}.{t}")))
            .collect()
    }

    pub fn params(&self) -> Vec<&ComplexMatrix> {
        self.layers.iter().flat_map(|l| l.tensors()).collect()
    }

    fn check_input(&self, input: &ComplexMatrix) -> Result<()> {
        if input.cols() != self.features() {
            return Err(dim_err(
                "stack forward",
                format!("{} input features, stack expects {}", input.cols(), self.features()),
            ));
        }
        if input.rows() != self.state.batch() {
            return Err(Error::StateShape {
                expected: self.state.batch(),
                got: input.rows(),
            });
        }
        Ok(())
    }

    /// Records the stack on `g` with the current hidden states as constants.
    pub fn forward_graph(&self, g: &mut Graph, input: VarId, trainable: bool) -> Result<StackNodes> {
        self.check_input(g.value(input))?;
        let mut layers = Vec::with_capacity(self.layers.len());
        let mut hidden = Vec::with_capacity(self.layers.len());
        let mut x = input;
        for (params, prev) in self.layers.iter().zip(&self.state.hidden) {
            let ids = LayerIds::register(g, params, trainable);
            let p = g.constant(prev.clone());
            x = cell_graph(g, &ids, p, x, self.t_elapsed)?;
            layers.push(ids);
            hidden.push(x);
        }
        Ok(StackNodes { layers, hidden, output: x })
    }

    /// Forward pass that leaves the hidden states untouched.
    pub fn forward_pure(&self, input: &ComplexMatrix) -> Result<ComplexMatrix> {
        let mut g = Graph::new();
        let i = g.constant(input.clone());
        let nodes = self.forward_graph(&mut g, i, false)?;
        Ok(g.value(nodes.output).clone())
    }

    /// Forward pass that stores each layer's output as its new hidden state.
    pub fn forward(&mut self, input: &ComplexMatrix) -> Result<ComplexMatrix> {
        let mut g = Graph::new();
        let i = g.constant(input.clone());
        let nodes = self.forward_graph(&mut g, i, false)?;
        self.commit_state(&g, &nodes);
        Ok(g.value(nodes.output).clone())
    }

    /// Copies hidden-state values out of a recorded forward pass.
    pub fn commit_state(&mut self, g: &Graph, nodes: &StackNodes) {
        for (slot, id) in self.state.hidden.iter_mut().zip(&nodes.hidden) {
            *slot = g.value(*id).clone();
        }
    }

    /// Gradients for every parameter, in [`params`](Self::params) order.
    pub fn collect_grads(&self, grads: &Gradients, nodes: &StackNodes) -> Result<Vec<ComplexMatrix>> {
        nodes
            .layers
            .iter()
            .flat_map(|l| l.ids())
            .map(|id| {
                grads
                    .get(id)
                    .cloned()
                    .ok_or_else(|| Error::Graph("parameter missing from gradient map".into()))
            })
            .collect()
    }

    /// Adam step on all parameters.
    pub fn apply_grads(&mut self, grads: &[ComplexMatrix]) -> Result<()> {
        let names = self.param_names();
        let mut params: Vec<&mut ComplexMatrix> = self.layers.iter_mut().flat_map(|l| l.tensors_mut()).collect();
        let grad_refs: Vec<&ComplexMatrix> = grads.iter().collect();
        self.adam.update(&mut params, &grad_refs, &names)
    }
}
