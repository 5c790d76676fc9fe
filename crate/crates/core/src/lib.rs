//! Physics-informed neural-network solver and diagnostics for the 1-D
//! thermoelastic Timoshenko beam with second sound.
//!
//! The crate trains a small feedforward network to satisfy the four coupled
//! PDE residuals of the beam system together with boundary and initial
//! conditions, then evaluates the discrete energy of the learned solution and
//! classifies its decay rate (exponential / polynomial / logarithmic) against
//! the stability number χ.
//!
//! Layout:
//!
//! * [`jet`] — second-order forward-mode jets over the inputs (x, t);
//! * [`tape`] — reverse-mode tape over jet operations, yielding parameter
//!   gradients of any recorded scalar;
//! * [`network`] — the feedforward approximator (φ, ψ, θ, q)(x, t; Ξ);
//! * [`physics`] — residuals, source terms, exact solution, boundary and
//!   initial specifications, stability number;
//! * [`sampling`] — deterministic collocation sets and uniform grids;
//! * [`training`] — loss assembly, Adam, and the epoch loop;
//! * [`diagnostics`] — discrete energy, decay-rate regression, error norms.
//!
//! The crate is `no_std`-compatible (with `alloc`); transcendental functions
//! always go through `libm` so results are identical across feature sets and
//! platforms. The optional `parallel` feature adds a rayon-chunked gradient
//! path; the sequential path remains the determinism reference.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod diagnostics;
pub mod jet;
pub mod network;
pub mod physics;
pub mod sampling;
pub mod tape;
pub mod training;

pub use jet::{seed_inputs, Comp, Jet2};
pub use network::{FieldEval, LayerSpec, NetworkParams};
pub use physics::{
    stability_number, BoundaryKind, BoundarySpec, DampingKind, InitialData, PhysicalParams,
};
pub use sampling::{sample_collocation, uniform_grid, CollocationSet, EvalGrid, SplitMix64};
pub use tape::{NodeId, Tape};
pub use training::{train, LossAggregation, LossBreakdown, TrainConfig, TrainOutcome};
