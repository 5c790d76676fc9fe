//! Reverse-mode tape over jet operations.
//!
//! Recording evaluates each primitive eagerly (so node values are available
//! immediately) and stores the operation with its operand indices. A reverse
//! sweep then propagates six-component adjoints — one per jet component —
//! visiting nodes in exact reverse recording order, and accumulates the
//! gradient of any recorded scalar with respect to the parameter array the
//! tape was opened with.
//!
//! Affine layers are first-class nodes: one node per output neuron,
//! referencing a contiguous run of input nodes and a (weights, bias) slot
//! range in the parameter array. This keeps tapes at a few nodes per neuron
//! instead of a few nodes per weight.

use core::fmt;

use alloc::vec;
use alloc::vec::Vec;

use crate::jet::{self, affine_neuron, Comp, Jet2};

/// Index of a node on a [`Tape`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct NodeId(u32);

impl NodeId {
    fn idx(self) -> usize {
        self.0 as usize
    }

    /// Id `k` places later on the same tape. Valid only inside a contiguous
    /// run the caller recorded itself.
    pub(crate) fn offset(self, k: usize) -> NodeId {
        NodeId(self.0 + k as u32)
    }
}

#[derive(Clone, Copy, Debug)]
enum Op {
    /// Seeded input or constant; no dependencies.
    Leaf,
    Add(NodeId, NodeId),
    Sub(NodeId, NodeId),
    Mul(NodeId, NodeId),
    Scale(NodeId, f64),
    AddConst(NodeId, f64),
    Tanh(NodeId),
    Exp(NodeId),
    Recip(NodeId),
    /// Scalar-valued jet holding one component of `0`: (comp, 0, 0, 0, 0, 0).
    Extract(NodeId, Comp),
    /// Output neuron: params[bias] + Σ_k params[weights + k] · node(first + k).
    /// Input nodes must be contiguous.
    Affine {
        first: NodeId,
        n_inputs: u32,
        weights: u32,
        bias: u32,
    },
}

/// Operation referencing a node this tape does not hold.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct NodeOutOfRange {
    pub node: u32,
    pub len: usize,
}

impl fmt::Display for NodeOutOfRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "node {} not on tape of length {}", self.node, self.len)
    }
}

impl core::error::Error for NodeOutOfRange {}

/// Ordered record of primitive jet operations over a borrowed parameter array.
pub struct Tape<'p> {
    params: &'p [f64],
    ops: Vec<Op>,
    vals: Vec<Jet2>,
}

impl<'p> Tape<'p> {
    pub fn new(params: &'p [f64]) -> Self {
        Tape {
            params,
            ops: Vec::new(),
            vals: Vec::new(),
        }
    }

    /// Drop all nodes, keeping allocations for reuse.
    pub fn clear(&mut self) {
        self.ops.clear();
        self.vals.clear();
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    pub fn n_params(&self) -> usize {
        self.params.len()
    }

    /// Jet recorded at `n`.
    pub fn value(&self, n: NodeId) -> Jet2 {
        self.vals[n.idx()]
    }

    fn push(&mut self, op: Op, val: Jet2) -> NodeId {
        let id = NodeId(self.ops.len() as u32);
        self.ops.push(op);
        self.vals.push(val);
        id
    }

    pub fn leaf(&mut self, j: Jet2) -> NodeId {
        self.push(Op::Leaf, j)
    }

    pub fn constant(&mut self, c: f64) -> NodeId {
        self.push(Op::Leaf, Jet2::constant(c))
    }

    /// Seed both input jets for a point; returns (x node, t node), contiguous.
    pub fn seed_inputs(&mut self, x: f64, t: f64) -> (NodeId, NodeId) {
        let (xj, tj) = jet::seed_inputs(x, t);
        (self.leaf(xj), self.leaf(tj))
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> NodeId {
        let v = self.vals[a.idx()] + self.vals[b.idx()];
        self.push(Op::Add(a, b), v)
    }

    pub fn sub(&mut self, a: NodeId, b: NodeId) -> NodeId {
        let v = self.vals[a.idx()] - self.vals[b.idx()];
        self.push(Op::Sub(a, b), v)
    }

    pub fn mul(&mut self, a: NodeId, b: NodeId) -> NodeId {
        let v = self.vals[a.idx()] * self.vals[b.idx()];
        self.push(Op::Mul(a, b), v)
    }

    pub fn scale(&mut self, a: NodeId, k: f64) -> NodeId {
        let v = self.vals[a.idx()] * k;
        self.push(Op::Scale(a, k), v)
    }

    pub fn add_const(&mut self, a: NodeId, c: f64) -> NodeId {
        let mut v = self.vals[a.idx()];
        v.val += c;
        self.push(Op::AddConst(a, c), v)
    }

    pub fn tanh(&mut self, a: NodeId) -> NodeId {
        let v = self.vals[a.idx()].tanh();
        self.push(Op::Tanh(a), v)
    }

    pub fn exp(&mut self, a: NodeId) -> NodeId {
        let v = self.vals[a.idx()].exp();
        self.push(Op::Exp(a), v)
    }

    pub fn recip(&mut self, a: NodeId) -> NodeId {
        let v = self.vals[a.idx()].recip();
        self.push(Op::Recip(a), v)
    }

    /// New scalar node carrying one component of `a` as its value.
    pub fn extract(&mut self, a: NodeId, c: Comp) -> NodeId {
        let v = Jet2::constant(self.vals[a.idx()].component(c));
        self.push(Op::Extract(a, c), v)
    }

    /// One affine output over the contiguous input nodes
    /// `first .. first + n_inputs`, with the weight row at
    /// `params[weights .. weights + n_inputs]` and bias at `params[bias]`.
    pub fn affine_row(&mut self, first: NodeId, n_inputs: usize, weights: usize, bias: usize) -> NodeId {
        let lo = first.idx();
        let hi = lo + n_inputs;
        debug_assert!(hi <= self.vals.len());
        let v = affine_neuron(
            &self.params[weights..weights + n_inputs],
            self.params[bias],
            &self.vals[lo..hi],
        );
        self.push(
            Op::Affine {
                first,
                n_inputs: n_inputs as u32,
                weights: weights as u32,
                bias: bias as u32,
            },
            v,
        )
    }

    /// Recompute every node value from the recorded operations. Used to check
    /// the record/replay invariant; the result is bit-identical to `vals`.
    pub fn replay(&self) -> Vec<Jet2> {
        let mut out: Vec<Jet2> = Vec::with_capacity(self.ops.len());
        for (i, op) in self.ops.iter().enumerate() {
            let v = match *op {
                Op::Leaf => self.vals[i],
                Op::Add(a, b) => out[a.idx()] + out[b.idx()],
                Op::Sub(a, b) => out[a.idx()] - out[b.idx()],
                Op::Mul(a, b) => out[a.idx()] * out[b.idx()],
                Op::Scale(a, k) => out[a.idx()] * k,
                Op::AddConst(a, c) => {
                    let mut v = out[a.idx()];
                    v.val += c;
                    v
                }
                Op::Tanh(a) => out[a.idx()].tanh(),
                Op::Exp(a) => out[a.idx()].exp(),
                Op::Recip(a) => out[a.idx()].recip(),
                Op::Extract(a, c) => Jet2::constant(out[a.idx()].component(c)),
                Op::Affine {
                    first,
                    n_inputs,
                    weights,
                    bias,
                } => {
                    let lo = first.idx();
                    let hi = lo + n_inputs as usize;
                    affine_neuron(
                        &self.params[weights as usize..weights as usize + n_inputs as usize],
                        self.params[bias as usize],
                        &out[lo..hi],
                    )
                }
            };
            out.push(v);
        }
        out
    }

    /// Gradient of the scalar recorded at `loss` (its value component) with
    /// respect to every parameter entry, in parameter storage order.
    pub fn param_gradient(&self, loss: NodeId) -> Result<Vec<f64>, NodeOutOfRange> {
        let mut grad = vec![0.0; self.params.len()];
        let mut adj = Vec::new();
        self.backward_into(&[(loss, 1.0)], &mut adj, &mut grad)?;
        Ok(grad)
    }

    /// Reverse sweep with explicit seeds: each `(node, w)` adds `w` to the
    /// value-adjoint of `node` before the sweep, and gradients accumulate
    /// into `grad` (length = parameter count). `adj` is caller-provided
    /// scratch so batch loops can reuse the allocation.
    pub fn backward_into(
        &self,
        seeds: &[(NodeId, f64)],
        adj: &mut Vec<Jet2>,
        grad: &mut [f64],
    ) -> Result<(), NodeOutOfRange> {
        debug_assert_eq!(grad.len(), self.params.len());
        adj.clear();
        adj.resize(self.ops.len(), Jet2::ZERO);
        for &(node, w) in seeds {
            if node.idx() >= self.ops.len() {
                return Err(NodeOutOfRange {
                    node: node.0,
                    len: self.ops.len(),
                });
            }
            adj[node.idx()].val += w;
        }

        // Exact reverse recording order; accumulation order is deterministic.
        for i in (0..self.ops.len()).rev() {
            let g = adj[i];
            match self.ops[i] {
                Op::Leaf => {}
                Op::Add(a, b) => {
                    adj[a.idx()] = adj[a.idx()] + g;
                    adj[b.idx()] = adj[b.idx()] + g;
                }
                Op::Sub(a, b) => {
                    adj[a.idx()] = adj[a.idx()] + g;
                    adj[b.idx()] = adj[b.idx()] - g;
                }
                Op::Mul(a, b) => {
                    let u = self.vals[a.idx()];
                    let v = self.vals[b.idx()];
                    accumulate_mul(&mut adj[a.idx()], g, v);
                    accumulate_mul(&mut adj[b.idx()], g, u);
                }
                Op::Scale(a, k) => {
                    adj[a.idx()] = adj[a.idx()] + g * k;
                }
                Op::AddConst(a, _) => {
                    adj[a.idx()] = adj[a.idx()] + g;
                }
                Op::Tanh(a) => {
                    let (d1, d2, d3) = jet::tanh_coeffs(self.vals[i].val);
                    accumulate_unary(&mut adj[a.idx()], g, self.vals[a.idx()], d1, d2, d3);
                }
                Op::Exp(a) => {
                    let y = self.vals[i].val;
                    accumulate_unary(&mut adj[a.idx()], g, self.vals[a.idx()], y, y, y);
                }
                Op::Recip(a) => {
                    let (d1, d2, d3) = jet::recip_coeffs(self.vals[i].val);
                    accumulate_unary(&mut adj[a.idx()], g, self.vals[a.idx()], d1, d2, d3);
                }
                Op::Extract(a, c) => {
                    *adj[a.idx()].component_mut(c) += g.val;
                }
                Op::Affine {
                    first,
                    n_inputs,
                    weights,
                    bias,
                } => {
                    let lo = first.idx();
                    let n = n_inputs as usize;
                    let w0 = weights as usize;
                    // input nodes precede node i, so adj[lo..lo+n] is
                    // disjoint from the copy of adj[i] taken above
                    let ws = &self.params[w0..w0 + n];
                    let us = &self.vals[lo..lo + n];
                    let adj_in = &mut adj[lo..lo + n];
                    let grad_w = &mut grad[w0..w0 + n];
                    for k in 0..n {
                        adj_in[k] = adj_in[k] + g * ws[k];
                        grad_w[k] += dot6(g, us[k]);
                    }
                    grad[bias as usize] += g.val;
                }
            }
        }
        Ok(())
    }
}

fn dot6(a: Jet2, b: Jet2) -> f64 {
    a.val * b.val + a.dx * b.dx + a.dt * b.dt + a.dxx * b.dxx + a.dtt * b.dtt + a.dxt * b.dxt
}

/// Adjoint of one factor of a jet product: the output components of u·v are
/// bilinear, so the u-adjoint is the contraction of the output adjoint `g`
/// with the other factor `v`.
fn accumulate_mul(dst: &mut Jet2, g: Jet2, v: Jet2) {
    dst.val += dot6(g, v);
    dst.dx += g.dx * v.val + 2.0 * g.dxx * v.dx + g.dxt * v.dt;
    dst.dt += g.dt * v.val + 2.0 * g.dtt * v.dt + g.dxt * v.dx;
    dst.dxx += g.dxx * v.val;
    dst.dtt += g.dtt * v.val;
    dst.dxt += g.dxt * v.val;
}

/// Adjoint through a unary chain-rule node with elementary derivatives
/// (d1, d2, d3) at the input value; `u` is the recorded input jet.
fn accumulate_unary(dst: &mut Jet2, g: Jet2, u: Jet2, d1: f64, d2: f64, d3: f64) {
    dst.val += g.val * d1
        + d2 * (g.dx * u.dx + g.dt * u.dt)
        + g.dxx * (d2 * u.dxx + d3 * u.dx * u.dx)
        + g.dtt * (d2 * u.dtt + d3 * u.dt * u.dt)
        + g.dxt * (d2 * u.dxt + d3 * u.dx * u.dt);
    dst.dx += g.dx * d1 + 2.0 * g.dxx * d2 * u.dx + g.dxt * d2 * u.dt;
    dst.dt += g.dt * d1 + 2.0 * g.dtt * d2 * u.dt + g.dxt * d2 * u.dx;
    dst.dxx += g.dxx * d1;
    dst.dtt += g.dtt * d1;
    dst.dxt += g.dxt * d1;
}
