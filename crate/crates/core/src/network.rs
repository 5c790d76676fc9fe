//! The feedforward approximator (φ, ψ, θ, q)(x, t; Ξ).
//!
//! One shared network with two inputs and four outputs: tanh hidden layers,
//! linear output layer. Parameters live in a single flat array, per layer
//! weights first (row-major by output neuron) then biases, so the tuple
//! Ξ = {W, b} has a fixed storage order shared by the optimizer, the tape,
//! and checkpoints.

use core::fmt;

use alloc::vec;
use alloc::vec::Vec;

use crate::jet::{affine_neuron, Jet2};
use crate::sampling::SplitMix64;
use crate::tape::{NodeId, Tape};

/// Layer sizes, inputs first. The network always has 2 inputs (x, t) and
/// 4 outputs (φ, ψ, θ, q).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LayerSpec {
    sizes: Vec<usize>,
}

/// Five hidden layers with 100 neurons each.
pub const DEFAULT_LAYERS: [usize; 7] = [2, 100, 100, 100, 100, 100, 4];

impl Default for LayerSpec {
    fn default() -> Self {
        LayerSpec {
            sizes: DEFAULT_LAYERS.to_vec(),
        }
    }
}

impl LayerSpec {
    pub fn new(sizes: Vec<usize>) -> Result<Self, NetworkError> {
        let ok = sizes.len() >= 2
            && sizes.first() == Some(&2)
            && sizes.last() == Some(&4)
            && sizes.iter().all(|&n| n >= 1);
        if ok {
            Ok(LayerSpec { sizes })
        } else {
            Err(NetworkError::BadLayerSpec { sizes })
        }
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    /// Σ (nᵢ·nᵢ₊₁ + nᵢ₊₁) over consecutive layer pairs.
    pub fn param_count(&self) -> usize {
        self.sizes
            .windows(2)
            .map(|w| w[0] * w[1] + w[1])
            .sum()
    }

    /// Widest layer, used to size scratch buffers.
    pub fn max_width(&self) -> usize {
        self.sizes.iter().copied().max().unwrap_or(0)
    }

    /// Flat-array layout of each affine map: weights at `weights`, row-major
    /// `[n_out][n_in]`, biases at `biases`.
    pub fn layouts(&self) -> impl Iterator<Item = LayerLayout> + '_ {
        let mut offset = 0;
        self.sizes.windows(2).map(move |w| {
            let (n_in, n_out) = (w[0], w[1]);
            let layout = LayerLayout {
                n_in,
                n_out,
                weights: offset,
                biases: offset + n_in * n_out,
            };
            offset += n_in * n_out + n_out;
            layout
        })
    }
}

#[derive(Clone, Copy, Debug)]
pub struct LayerLayout {
    pub n_in: usize,
    pub n_out: usize,
    pub weights: usize,
    pub biases: usize,
}

/// The parameter tuple Ξ: layer sizes plus one flat value array.
#[derive(Clone, Debug, PartialEq)]
pub struct NetworkParams {
    spec: LayerSpec,
    flat: Vec<f64>,
}

impl NetworkParams {
    /// Wrap an existing flat array; the length must match the spec.
    pub fn new(spec: LayerSpec, flat: Vec<f64>) -> Result<Self, NetworkError> {
        let expected = spec.param_count();
        if flat.len() != expected {
            return Err(NetworkError::ParamLength {
                expected,
                got: flat.len(),
            });
        }
        Ok(NetworkParams { spec, flat })
    }

    pub fn spec(&self) -> &LayerSpec {
        &self.spec
    }

    pub fn flat(&self) -> &[f64] {
        &self.flat
    }

    pub fn flat_mut(&mut self) -> &mut [f64] {
        &mut self.flat
    }

    pub fn into_flat(self) -> Vec<f64> {
        self.flat
    }
}

/// Glorot-uniform weights (bound √(6/(fan_in+fan_out))), zero biases,
/// deterministic per seed: one SplitMix64 stream drawn layer by layer in
/// storage order.
pub fn init_params(spec: &LayerSpec, seed: u64) -> NetworkParams {
    let mut flat = vec![0.0; spec.param_count()];
    let mut rng = SplitMix64::new(seed);
    for layout in spec.layouts() {
        let bound = libm::sqrt(6.0 / (layout.n_in + layout.n_out) as f64);
        for w in &mut flat[layout.weights..layout.weights + layout.n_in * layout.n_out] {
            *w = (2.0 * rng.next_open01() - 1.0) * bound;
        }
        // biases stay zero
    }
    NetworkParams {
        spec: spec.clone(),
        flat,
    }
}

/// The four fields at a point, each with every partial the residuals need.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct FieldEval {
    pub phi: Jet2,
    pub psi: Jet2,
    pub theta: Jet2,
    pub q: Jet2,
}

impl FieldEval {
    pub fn fields(&self) -> [Jet2; 4] {
        [self.phi, self.psi, self.theta, self.q]
    }

    pub fn values(&self) -> [f64; 4] {
        [self.phi.val, self.psi.val, self.theta.val, self.q.val]
    }

    pub fn is_finite(&self) -> bool {
        self.phi.is_finite() && self.psi.is_finite() && self.theta.is_finite() && self.q.is_finite()
    }
}

/// Evaluate the network and all jet components at (x, t).
///
/// Pure in (parameters, x, t); independent of any batch context.
pub fn forward(params: &NetworkParams, x: f64, t: f64) -> FieldEval {
    let flat = params.flat();
    let (xj, tj) = crate::jet::seed_inputs(x, t);
    let mut cur = vec![xj, tj];
    let mut next: Vec<Jet2> = Vec::with_capacity(params.spec().max_width());

    let n_layers = params.spec().sizes().len() - 1;
    for (l, layout) in params.spec().layouts().enumerate() {
        next.clear();
        for j in 0..layout.n_out {
            let row = &flat[layout.weights + j * layout.n_in..layout.weights + (j + 1) * layout.n_in];
            let mut out = affine_neuron(row, flat[layout.biases + j], &cur);
            if l + 1 < n_layers {
                out = out.tanh();
            }
            next.push(out);
        }
        core::mem::swap(&mut cur, &mut next);
    }
    debug_assert_eq!(cur.len(), 4);
    FieldEval {
        phi: cur[0],
        psi: cur[1],
        theta: cur[2],
        q: cur[3],
    }
}

/// Value-only forward pass. Bit-identical to the value lane of [`forward`]
/// (same kernel iteration order); used for dense grid evaluation and the
/// finite-difference oracles.
pub fn forward_values(params: &NetworkParams, x: f64, t: f64) -> [f64; 4] {
    let flat = params.flat();
    let mut cur = vec![x, t];
    let mut next: Vec<f64> = Vec::with_capacity(params.spec().max_width());

    let n_layers = params.spec().sizes().len() - 1;
    for (l, layout) in params.spec().layouts().enumerate() {
        next.clear();
        for j in 0..layout.n_out {
            let row = &flat[layout.weights + j * layout.n_in..layout.weights + (j + 1) * layout.n_in];
            let mut acc = flat[layout.biases + j];
            for (w, u) in row.iter().zip(&cur) {
                acc += *u * *w;
            }
            if l + 1 < n_layers {
                acc = libm::tanh(acc);
            }
            next.push(acc);
        }
        core::mem::swap(&mut cur, &mut next);
    }
    [cur[0], cur[1], cur[2], cur[3]]
}

/// Field output nodes of a taped forward pass.
#[derive(Clone, Copy, Debug)]
pub struct FieldNodes {
    pub phi: NodeId,
    pub psi: NodeId,
    pub theta: NodeId,
    pub q: NodeId,
}

impl FieldNodes {
    pub fn fields(&self) -> [NodeId; 4] {
        [self.phi, self.psi, self.theta, self.q]
    }
}

/// Record a forward pass on `tape` (which must have been opened over
/// `params.flat()`); node values are bit-identical to [`forward`].
///
/// Each layer records its affine rows first and then their activations, so
/// every layer's outputs form one contiguous node run for the next layer.
pub fn forward_on_tape(tape: &mut Tape<'_>, params: &NetworkParams, x: f64, t: f64) -> FieldNodes {
    let (x_node, _t_node) = tape.seed_inputs(x, t);
    let mut first = x_node;
    let n_layers = params.spec().sizes().len() - 1;
    let mut out_first = x_node;
    for (l, layout) in params.spec().layouts().enumerate() {
        let mut affine_first = None;
        for j in 0..layout.n_out {
            let id = tape.affine_row(
                first,
                layout.n_in,
                layout.weights + j * layout.n_in,
                layout.biases + j,
            );
            affine_first.get_or_insert(id);
        }
        let affine_first = affine_first.expect("positive layer width");
        if l + 1 < n_layers {
            let mut tanh_first = None;
            for j in 0..layout.n_out {
                let id = tape.tanh(affine_first.offset(j));
                tanh_first.get_or_insert(id);
            }
            first = tanh_first.expect("positive layer width");
        } else {
            out_first = affine_first;
        }
    }
    FieldNodes {
        phi: out_first,
        psi: out_first.offset(1),
        theta: out_first.offset(2),
        q: out_first.offset(3),
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum NetworkError {
    /// Sizes must start at 2, end at 4, and be positive throughout.
    BadLayerSpec { sizes: Vec<usize> },
    ParamLength { expected: usize, got: usize },
}

impl fmt::Display for NetworkError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NetworkError::BadLayerSpec { sizes } => {
                write!(f, "invalid layer sizes {sizes:?}: need [2, ..., 4] with positive widths")
            }
            NetworkError::ParamLength { expected, got } => {
                write!(f, "flat parameter array has length {got}, spec needs {expected}")
            }
        }
    }
}

impl core::error::Error for NetworkError {}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn default_spec_parameter_count() {
        // 2·100+100 + 4·(100·100+100) + 100·4+4
        assert_eq!(LayerSpec::default().param_count(), 41104);
    }

    #[test]
    fn minimal_spec_parameter_count() {
        let spec = LayerSpec::new(vec![2, 4]).unwrap();
        assert_eq!(spec.param_count(), 12);
    }

    #[test]
    fn init_is_deterministic_per_seed() {
        let spec = LayerSpec::new(vec![2, 8, 4]).unwrap();
        let a = init_params(&spec, 42);
        let b = init_params(&spec, 42);
        assert_eq!(a.flat(), b.flat());
        let c = init_params(&spec, 43);
        assert_ne!(a.flat(), c.flat());
    }

    #[test]
    fn glorot_bounds_and_zero_biases() {
        let spec = LayerSpec::new(vec![2, 8, 4]).unwrap();
        let p = init_params(&spec, 7);
        for layout in spec.layouts() {
            let bound = libm::sqrt(6.0 / (layout.n_in + layout.n_out) as f64);
            for &w in &p.flat()[layout.weights..layout.weights + layout.n_in * layout.n_out] {
                assert!(w.abs() < bound);
            }
            for &b in &p.flat()[layout.biases..layout.biases + layout.n_out] {
                assert_eq!(b, 0.0);
            }
        }
    }

    #[test]
    fn zero_weights_give_constant_outputs() {
        let spec = LayerSpec::new(vec![2, 3, 4]).unwrap();
        let mut flat = vec![0.0; spec.param_count()];
        // output biases are the last four entries
        let n = flat.len();
        flat[n - 4..].copy_from_slice(&[1.0, 2.0, 3.0, 4.0]);
        let p = NetworkParams::new(spec, flat).unwrap();
        let f = forward(&p, 0.3, 0.9);
        assert_eq!(f.values(), [1.0, 2.0, 3.0, 4.0]);
        for jet in f.fields() {
            assert_eq!(jet.dx, 0.0);
            assert_eq!(jet.dt, 0.0);
            assert_eq!(jet.dxx, 0.0);
            assert_eq!(jet.dtt, 0.0);
            assert_eq!(jet.dxt, 0.0);
        }
    }

    #[test]
    fn forward_is_pure_and_batch_independent() {
        let spec = LayerSpec::new(vec![2, 6, 4]).unwrap();
        let p = init_params(&spec, 11);
        let lone = forward(&p, 0.4, 0.6);
        let batch: Vec<FieldEval> = [(0.1, 0.2), (0.4, 0.6), (0.9, 0.9)]
            .iter()
            .map(|&(x, t)| forward(&p, x, t))
            .collect();
        assert_eq!(lone, batch[1]);
    }

    #[test]
    fn forward_values_matches_jet_value_lane() {
        let spec = LayerSpec::new(vec![2, 10, 7, 4]).unwrap();
        let p = init_params(&spec, 5);
        for &(x, t) in &[(0.0, 0.0), (0.25, 0.75), (1.0, 40.0), (0.918, 3.3)] {
            let jets = forward(&p, x, t);
            let vals = forward_values(&p, x, t);
            assert_eq!(jets.values(), vals);
        }
    }

    #[test]
    fn taped_forward_matches_direct_forward() {
        let spec = LayerSpec::new(vec![2, 9, 5, 4]).unwrap();
        let p = init_params(&spec, 21);
        let mut tape = Tape::new(p.flat());
        let nodes = forward_on_tape(&mut tape, &p, 0.37, 2.5);
        let direct = forward(&p, 0.37, 2.5);
        assert_eq!(tape.value(nodes.phi), direct.phi);
        assert_eq!(tape.value(nodes.psi), direct.psi);
        assert_eq!(tape.value(nodes.theta), direct.theta);
        assert_eq!(tape.value(nodes.q), direct.q);
    }

    #[test]
    fn bad_specs_rejected() {
        assert!(LayerSpec::new(vec![2]).is_err());
        assert!(LayerSpec::new(vec![3, 4]).is_err());
        assert!(LayerSpec::new(vec![2, 5]).is_err());
        assert!(LayerSpec::new(vec![2, 0, 4]).is_err());
        let spec = LayerSpec::new(vec![2, 4]).unwrap();
        assert!(NetworkParams::new(spec, vec![0.0; 11]).is_err());
    }
}
