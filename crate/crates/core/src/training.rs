//! Loss assembly, the Adam optimizer, and the epoch loop.
//!
//! The training loss is the unweighted sum of eight mean-squared components:
//! four PDE residuals over interior points, one boundary term per endpoint
//! over shared boundary times, and initial value/velocity terms over initial
//! positions.
//!
//! Gradients come from per-point tapes whose contributions are reduced in
//! ascending point order; that sequential path is the determinism contract.
//! With the `parallel` feature and `TrainConfig::parallel` set, points are
//! processed in fixed-size chunks reduced in ascending chunk order — still
//! reproducible run to run, but its roundoff differs from the sequential
//! path in the last ulps, so it is excluded from bit-exact comparisons.

use core::fmt;

use alloc::boxed::Box;
use alloc::vec;
use alloc::vec::Vec;

use crate::jet::Jet2;
use crate::network::{forward, forward_on_tape, init_params, FieldEval, NetworkParams};
use crate::physics::{
    boundary_terms_expr, initial_terms_expr, pde_residuals_expr, source_terms, BoundarySpec,
    InitialData, PhysicalParams, PhysicsError, ScalarExpr, TapeExpr, ValueExpr,
};
use crate::sampling::{sample_collocation, CollocationSet, SamplingError};
use crate::tape::{NodeId, Tape};

pub const DEFAULT_LEARNING_RATE: f64 = 0.0005;
pub const DEFAULT_EPOCHS: usize = 10_000;
pub const DEFAULT_COLLOCATION: usize = 3000;

/// How per-condition deviations enter a boundary/initial mean-squared term.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LossAggregation {
    /// Square each deviation and sum the squares (default; no cancellation).
    PerCondition,
    /// Sum the deviations into one residual, then square — the literal
    /// summed-residual form, kept for comparison runs.
    SummedConditions,
}

/// Total loss plus the eight mean-squared components, in order: four PDE
/// terms, boundary x=0, boundary x=1, initial values, initial velocities.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LossBreakdown {
    pub total: f64,
    pub mse: [f64; 8],
}

impl LossBreakdown {
    pub fn is_finite(&self) -> bool {
        self.total.is_finite() && self.mse.iter().all(|m| m.is_finite())
    }

    pub fn pde_total(&self) -> f64 {
        self.mse[0] + self.mse[1] + self.mse[2] + self.mse[3]
    }

    pub fn boundary_total(&self) -> f64 {
        self.mse[4] + self.mse[5]
    }

    pub fn initial_total(&self) -> f64 {
        self.mse[6] + self.mse[7]
    }
}

/// Everything a training run needs; `collocation` is the per-category sample
/// count (interior points, boundary times, and initial positions each get
/// this many draws).
#[derive(Clone, Debug)]
pub struct TrainConfig {
    pub epochs: usize,
    pub collocation: usize,
    pub seed: u64,
    pub layers: crate::network::LayerSpec,
    pub physics: PhysicalParams,
    pub boundary: BoundarySpec,
    pub initial: InitialData,
    pub with_sources: bool,
    pub aggregation: LossAggregation,
    pub learning_rate: f64,
    pub log_every: usize,
    pub parallel: bool,
}

impl TrainConfig {
    pub fn new(physics: PhysicalParams, boundary: BoundarySpec) -> Self {
        TrainConfig {
            epochs: DEFAULT_EPOCHS,
            collocation: DEFAULT_COLLOCATION,
            seed: 0,
            layers: crate::network::LayerSpec::default(),
            physics,
            boundary,
            initial: InitialData::default(),
            with_sources: false,
            aggregation: LossAggregation::PerCondition,
            learning_rate: DEFAULT_LEARNING_RATE,
            log_every: 10,
            parallel: false,
        }
    }

    fn validate(&self) -> Result<(), TrainError> {
        if self.epochs == 0 {
            return Err(TrainError::InvalidConfig("epochs must be at least 1"));
        }
        if self.log_every == 0 {
            return Err(TrainError::InvalidConfig("log_every must be at least 1"));
        }
        if self.learning_rate.is_nan() || self.learning_rate <= 0.0 {
            return Err(TrainError::InvalidConfig("learning rate must be positive"));
        }
        self.physics.validate().map_err(TrainError::Physics)
    }
}

#[derive(Clone, Copy, Debug)]
enum Point {
    Interior { x: f64, t: f64 },
    Boundary { t: f64 },
    Initial { x: f64 },
}

/// Collocation set flattened into one deterministic point order (interior,
/// then boundary, then initial) with the per-category normalizers.
pub struct PreparedBatch {
    points: Vec<Point>,
    inv: [f64; 3],
}

impl PreparedBatch {
    pub fn new(batch: &CollocationSet) -> Self {
        let mut points = Vec::with_capacity(
            batch.interior.len() + batch.boundary_times.len() + batch.initial_xs.len(),
        );
        points.extend(batch.interior.iter().map(|&(x, t)| Point::Interior { x, t }));
        points.extend(batch.boundary_times.iter().map(|&t| Point::Boundary { t }));
        points.extend(batch.initial_xs.iter().map(|&x| Point::Initial { x }));
        PreparedBatch {
            points,
            inv: [
                1.0 / batch.interior.len() as f64,
                1.0 / batch.boundary_times.len() as f64,
                1.0 / batch.initial_xs.len() as f64,
            ],
        }
    }
}

/// Normalizer of mean-squared component `slot`.
fn slot_weight(slot: usize, inv: [f64; 3]) -> f64 {
    match slot {
        0..=3 => inv[0],
        4 | 5 => inv[1],
        _ => inv[2],
    }
}

/// Emit squared terms under the chosen aggregation. Single source of the
/// operation order for both the direct and taped paths.
fn emit_squares<E: ScalarExpr>(
    e: &mut E,
    terms: &[E::S],
    agg: LossAggregation,
    mut sink: impl FnMut(&mut E, E::S),
) {
    match agg {
        LossAggregation::PerCondition => {
            for &t in terms {
                let sq = e.mul(t, t);
                sink(e, sq);
            }
        }
        LossAggregation::SummedConditions => {
            let mut s = terms[0];
            for &t in &terms[1..] {
                s = e.add(s, t);
            }
            let sq = e.mul(s, s);
            sink(e, sq);
        }
    }
}

fn boundary_data(spec: &BoundarySpec, t: f64) -> ([f64; 3], [f64; 3]) {
    (
        [
            spec.data_x0[0].eval(t),
            spec.data_x0[1].eval(t),
            spec.data_x0[2].eval(t),
        ],
        [
            spec.data_x1[0].eval(t),
            spec.data_x1[1].eval(t),
            spec.data_x1[2].eval(t),
        ],
    )
}

/// Record one point's squared terms on the tape; each emitted pair is
/// (mean-squared slot, square node), in a fixed emission order.
fn tape_point(
    tape: &mut Tape<'_>,
    params: &NetworkParams,
    cfg: &TrainConfig,
    point: Point,
    squares: &mut Vec<(usize, NodeId)>,
) {
    match point {
        Point::Interior { x, t } => {
            let nodes = forward_on_tape(tape, params, x, t);
            let src = if cfg.with_sources {
                Some(source_terms(x, t))
            } else {
                None
            };
            let mut e = TapeExpr { tape };
            let rs = pde_residuals_expr(
                &mut e,
                nodes.phi,
                nodes.psi,
                nodes.theta,
                nodes.q,
                &cfg.physics,
                src,
            );
            for (k, &r) in rs.iter().enumerate() {
                emit_squares(&mut e, &[r], LossAggregation::PerCondition, |_, sq| {
                    squares.push((k, sq));
                });
            }
        }
        Point::Boundary { t } => {
            let n0 = forward_on_tape(tape, params, 0.0, t);
            let n1 = forward_on_tape(tape, params, 1.0, t);
            let (g0, g1) = boundary_data(&cfg.boundary, t);
            let mut e = TapeExpr { tape };
            let t0 = boundary_terms_expr(&mut e, n0.phi, n0.psi, n0.q, cfg.boundary.kind, g0);
            emit_squares(&mut e, &t0, cfg.aggregation, |_, sq| squares.push((4, sq)));
            let t1 = boundary_terms_expr(&mut e, n1.phi, n1.psi, n1.q, cfg.boundary.kind, g1);
            emit_squares(&mut e, &t1, cfg.aggregation, |_, sq| squares.push((5, sq)));
        }
        Point::Initial { x } => {
            let nodes = forward_on_tape(tape, params, x, 0.0);
            let mut e = TapeExpr { tape };
            let (values, velocities) = initial_terms_expr(
                &mut e,
                nodes.phi,
                nodes.psi,
                nodes.theta,
                nodes.q,
                cfg.initial.value_data(x),
                cfg.initial.velocity_data(x),
            );
            emit_squares(&mut e, &values, cfg.aggregation, |_, sq| squares.push((6, sq)));
            emit_squares(&mut e, &velocities, cfg.aggregation, |_, sq| squares.push((7, sq)));
        }
    }
}

/// Direct (tapeless) counterpart of [`tape_point`]; performs the identical
/// f64 operation sequence on the value lane.
fn value_point(
    eval: &mut impl FnMut(f64, f64) -> FieldEval,
    cfg: &TrainConfig,
    point: Point,
    sums: &mut [f64; 8],
) {
    let mut e = ValueExpr;
    match point {
        Point::Interior { x, t } => {
            let f = eval(x, t);
            let src = if cfg.with_sources {
                Some(source_terms(x, t))
            } else {
                None
            };
            let rs = pde_residuals_expr(&mut e, f.phi, f.psi, f.theta, f.q, &cfg.physics, src);
            for (k, &r) in rs.iter().enumerate() {
                emit_squares(&mut e, &[r], LossAggregation::PerCondition, |_, sq| {
                    sums[k] += sq;
                });
            }
        }
        Point::Boundary { t } => {
            let f0 = eval(0.0, t);
            let f1 = eval(1.0, t);
            let (g0, g1) = boundary_data(&cfg.boundary, t);
            let t0 = boundary_terms_expr(&mut e, f0.phi, f0.psi, f0.q, cfg.boundary.kind, g0);
            emit_squares(&mut e, &t0, cfg.aggregation, |_, sq| sums[4] += sq);
            let t1 = boundary_terms_expr(&mut e, f1.phi, f1.psi, f1.q, cfg.boundary.kind, g1);
            emit_squares(&mut e, &t1, cfg.aggregation, |_, sq| sums[5] += sq);
        }
        Point::Initial { x } => {
            let f = eval(x, 0.0);
            let (values, velocities) = initial_terms_expr(
                &mut e,
                f.phi,
                f.psi,
                f.theta,
                f.q,
                cfg.initial.value_data(x),
                cfg.initial.velocity_data(x),
            );
            emit_squares(&mut e, &values, cfg.aggregation, |_, sq| sums[6] += sq);
            emit_squares(&mut e, &velocities, cfg.aggregation, |_, sq| sums[7] += sq);
        }
    }
}

fn breakdown_from_sums(sums: [f64; 8], inv: [f64; 3]) -> LossBreakdown {
    let mut mse = [0.0; 8];
    for (k, m) in mse.iter_mut().enumerate() {
        *m = sums[k] * slot_weight(k, inv);
    }
    let total = mse.iter().sum();
    LossBreakdown { total, mse }
}

/// Loss of an arbitrary field evaluator over the batch — used to score the
/// network, the exact solution, or any oracle with identical arithmetic.
pub fn compute_loss_with(
    mut eval: impl FnMut(f64, f64) -> FieldEval,
    batch: &CollocationSet,
    cfg: &TrainConfig,
) -> LossBreakdown {
    let prep = PreparedBatch::new(batch);
    let mut sums = [0.0; 8];
    for &point in &prep.points {
        value_point(&mut eval, cfg, point, &mut sums);
    }
    breakdown_from_sums(sums, prep.inv)
}

/// Loss of the network on the batch.
pub fn compute_loss(
    params: &NetworkParams,
    batch: &CollocationSet,
    cfg: &TrainConfig,
) -> LossBreakdown {
    compute_loss_with(|x, t| forward(params, x, t), batch, cfg)
}

/// Loss plus its gradient with respect to every parameter entry.
pub fn loss_and_gradient(
    params: &NetworkParams,
    batch: &CollocationSet,
    cfg: &TrainConfig,
) -> (LossBreakdown, Vec<f64>) {
    let prep = PreparedBatch::new(batch);
    loss_and_gradient_prepared(params, &prep, cfg)
}

/// As [`loss_and_gradient`], reusing a prepared batch across epochs.
pub fn loss_and_gradient_prepared(
    params: &NetworkParams,
    prep: &PreparedBatch,
    cfg: &TrainConfig,
) -> (LossBreakdown, Vec<f64>) {
    #[cfg(feature = "parallel")]
    if cfg.parallel {
        return loss_and_gradient_chunked(params, prep, cfg);
    }

    let flat = params.flat();
    let mut grad = vec![0.0; flat.len()];
    let mut sums = [0.0; 8];
    let mut tape = Tape::new(flat);
    let mut adj: Vec<Jet2> = Vec::new();
    let mut squares: Vec<(usize, NodeId)> = Vec::new();
    let mut seeds: Vec<(NodeId, f64)> = Vec::new();
    for &point in &prep.points {
        tape.clear();
        squares.clear();
        seeds.clear();
        tape_point(&mut tape, params, cfg, point, &mut squares);
        for &(k, sq) in &squares {
            sums[k] += tape.value(sq).val;
            seeds.push((sq, slot_weight(k, prep.inv)));
        }
        tape.backward_into(&seeds, &mut adj, &mut grad)
            .expect("seeds recorded on this tape");
    }
    (breakdown_from_sums(sums, prep.inv), grad)
}

/// Fixed chunk length for the parallel reduction; results depend on this
/// constant but not on the worker count.
#[cfg(feature = "parallel")]
const PARALLEL_CHUNK: usize = 128;

#[cfg(feature = "parallel")]
fn loss_and_gradient_chunked(
    params: &NetworkParams,
    prep: &PreparedBatch,
    cfg: &TrainConfig,
) -> (LossBreakdown, Vec<f64>) {
    use rayon::prelude::*;

    let flat = params.flat();
    let partials: Vec<([f64; 8], Vec<f64>)> = prep
        .points
        .par_chunks(PARALLEL_CHUNK)
        .map(|chunk| {
            let mut grad = vec![0.0; flat.len()];
            let mut sums = [0.0; 8];
            let mut tape = Tape::new(flat);
            let mut adj: Vec<Jet2> = Vec::new();
            let mut squares: Vec<(usize, NodeId)> = Vec::new();
            let mut seeds: Vec<(NodeId, f64)> = Vec::new();
            for &point in chunk {
                tape.clear();
                squares.clear();
                seeds.clear();
                tape_point(&mut tape, params, cfg, point, &mut squares);
                for &(k, sq) in &squares {
                    sums[k] += tape.value(sq).val;
                    seeds.push((sq, slot_weight(k, prep.inv)));
                }
                tape.backward_into(&seeds, &mut adj, &mut grad)
                    .expect("seeds recorded on this tape");
            }
            (sums, grad)
        })
        .collect();

    let mut grad = vec![0.0; flat.len()];
    let mut sums = [0.0; 8];
    for (part_sums, part_grad) in partials {
        for k in 0..8 {
            sums[k] += part_sums[k];
        }
        for (g, p) in grad.iter_mut().zip(part_grad) {
            *g += p;
        }
    }
    (breakdown_from_sums(sums, prep.inv), grad)
}

/// Record the full batch loss on one tape; returns the breakdown and the
/// total-loss node, whose `param_gradient` is the gradient of the total.
/// Tape size grows with batch size; intended for small-network checks.
pub fn record_loss<'p>(
    tape: &mut Tape<'p>,
    params: &NetworkParams,
    batch: &CollocationSet,
    cfg: &TrainConfig,
) -> (LossBreakdown, NodeId) {
    let prep = PreparedBatch::new(batch);
    let mut acc: [Option<NodeId>; 8] = [None; 8];
    let mut squares: Vec<(usize, NodeId)> = Vec::new();
    for &point in &prep.points {
        squares.clear();
        tape_point(tape, params, cfg, point, &mut squares);
        for &(k, sq) in &squares {
            acc[k] = Some(match acc[k] {
                None => sq,
                Some(a) => tape.add(a, sq),
            });
        }
    }
    let mut mse = [0.0; 8];
    let mut total: Option<NodeId> = None;
    for (k, a) in acc.into_iter().enumerate() {
        let sum_node = a.expect("batch covers every loss component");
        let mse_node = tape.scale(sum_node, slot_weight(k, prep.inv));
        mse[k] = tape.value(mse_node).val;
        total = Some(match total {
            None => mse_node,
            Some(t) => tape.add(t, mse_node),
        });
    }
    let total_node = total.expect("eight components recorded");
    (
        LossBreakdown {
            total: tape.value(total_node).val,
            mse,
        },
        total_node,
    )
}

/// First and second moment accumulators of the Adam optimizer with the
/// standard bias correction; β₁ = 0.9, β₂ = 0.999, ε = 1e-8.
#[derive(Clone, Debug)]
pub struct AdamState {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    step: u64,
    beta1_pow: f64,
    beta2_pow: f64,
}

impl AdamState {
    pub fn new(n_params: usize, lr: f64) -> Self {
        AdamState {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            m: vec![0.0; n_params],
            v: vec![0.0; n_params],
            step: 0,
            beta1_pow: 1.0,
            beta2_pow: 1.0,
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AdamError {
    ShapeMismatch { params: usize, grads: usize },
    NonFiniteGradient { index: usize },
}

impl fmt::Display for AdamError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AdamError::ShapeMismatch { params, grads } => {
                write!(f, "gradient length {grads} does not match {params} parameters")
            }
            AdamError::NonFiniteGradient { index } => {
                write!(f, "non-finite gradient entry at index {index}")
            }
        }
    }
}

impl core::error::Error for AdamError {}

/// One bias-corrected Adam update in place. The bias-correction powers β₁ᵗ,
/// β₂ᵗ are maintained as running products.
pub fn adam_step(
    state: &mut AdamState,
    params: &mut [f64],
    grads: &[f64],
) -> Result<(), AdamError> {
    if params.len() != grads.len() || params.len() != state.m.len() {
        return Err(AdamError::ShapeMismatch {
            params: params.len(),
            grads: grads.len(),
        });
    }
    if let Some(index) = grads.iter().position(|g| !g.is_finite()) {
        return Err(AdamError::NonFiniteGradient { index });
    }
    state.step += 1;
    state.beta1_pow *= state.beta1;
    state.beta2_pow *= state.beta2;
    let bc1 = 1.0 - state.beta1_pow;
    let bc2 = 1.0 - state.beta2_pow;
    for i in 0..params.len() {
        let g = grads[i];
        state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * g;
        state.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * g * g;
        let m_hat = state.m[i] / bc1;
        let v_hat = state.v[i] / bc2;
        params[i] -= state.lr * m_hat / (libm::sqrt(v_hat) + state.epsilon);
    }
    Ok(())
}

/// One logged epoch: the loss at the parameters *before* that epoch's update.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HistoryRow {
    pub epoch: usize,
    pub loss: LossBreakdown,
}

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    pub params: NetworkParams,
    pub history: Vec<HistoryRow>,
}

#[derive(Debug)]
pub enum TrainError {
    InvalidConfig(&'static str),
    Physics(PhysicsError),
    Sampling(SamplingError),
    /// Loss or gradient went non-finite; carries the last finite state.
    NonFinite {
        epoch: usize,
        what: &'static str,
        last_good: Box<TrainOutcome>,
    },
}

impl fmt::Display for TrainError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TrainError::InvalidConfig(msg) => write!(f, "invalid training config: {msg}"),
            TrainError::Physics(e) => write!(f, "invalid physical parameters: {e}"),
            TrainError::Sampling(e) => write!(f, "sampling failed: {e}"),
            TrainError::NonFinite { epoch, what, .. } => {
                write!(
                    f,
                    "{what} became non-finite at epoch {epoch}; aborting with last good state"
                )
            }
        }
    }
}

impl core::error::Error for TrainError {}

impl From<SamplingError> for TrainError {
    fn from(e: SamplingError) -> Self {
        TrainError::Sampling(e)
    }
}

/// Full-batch Adam on a collocation set drawn once up front: the sampling
/// stream uses `cfg.seed`, parameter init uses `cfg.seed + 1`. One epoch is
/// one gradient step. History rows are logged every `log_every` epochs and
/// always at the final epoch.
pub fn train(cfg: &TrainConfig) -> Result<TrainOutcome, TrainError> {
    cfg.validate()?;
    let batch = sample_collocation(cfg.collocation, cfg.physics.horizon, cfg.seed)?;
    train_on(cfg, &batch)
}

/// As [`train`] but over a caller-supplied collocation set.
pub fn train_on(cfg: &TrainConfig, batch: &CollocationSet) -> Result<TrainOutcome, TrainError> {
    train_observed(cfg, batch, |_, _| {})
}

/// As [`train_on`] with a per-epoch observer (progress reporting); the
/// observer sees every epoch's loss regardless of the logging cadence.
pub fn train_observed(
    cfg: &TrainConfig,
    batch: &CollocationSet,
    mut observe: impl FnMut(usize, &LossBreakdown),
) -> Result<TrainOutcome, TrainError> {
    cfg.validate()?;
    let prep = PreparedBatch::new(batch);
    let mut params = init_params(&cfg.layers, cfg.seed.wrapping_add(1));
    let mut adam = AdamState::new(params.flat().len(), cfg.learning_rate);
    let mut history: Vec<HistoryRow> = Vec::new();
    let mut last_good = params.clone();

    for epoch in 0..cfg.epochs {
        let (loss, grad) = loss_and_gradient_prepared(&params, &prep, cfg);
        if !loss.is_finite() {
            return Err(TrainError::NonFinite {
                epoch,
                what: "loss",
                last_good: Box::new(TrainOutcome {
                    params: last_good,
                    history,
                }),
            });
        }
        last_good = params.clone();
        observe(epoch, &loss);
        if epoch % cfg.log_every == 0 || epoch + 1 == cfg.epochs {
            history.push(HistoryRow { epoch, loss });
        }
        if adam_step(&mut adam, params.flat_mut(), &grad).is_err() {
            return Err(TrainError::NonFinite {
                epoch,
                what: "gradient",
                last_good: Box::new(TrainOutcome {
                    params: last_good,
                    history,
                }),
            });
        }
    }
    Ok(TrainOutcome { params, history })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::LayerSpec;
    use crate::physics::{exact_solution, BoundaryKind};
    use alloc::vec;

    fn manufactured_cfg() -> TrainConfig {
        let mut cfg = TrainConfig::new(
            PhysicalParams::unit(),
            BoundarySpec::homogeneous(BoundaryKind::DirichletAll),
        );
        cfg.with_sources = true;
        cfg
    }

    #[test]
    fn exact_solution_oracle_has_vanishing_loss() {
        let mut cfg = manufactured_cfg();
        cfg.collocation = 200;
        let batch = sample_collocation(cfg.collocation, 1.0, 3).unwrap();
        let loss = compute_loss_with(exact_solution, &batch, &cfg);
        assert!(loss.total <= 1e-20, "total = {}", loss.total);
    }

    #[test]
    fn zero_network_initial_value_loss() {
        // MSE for initial values = 4 · mean (4x(1-x))² ≈ 4 · 8/15 on a dense sample
        let mut cfg = manufactured_cfg();
        cfg.collocation = 100_000;
        cfg.layers = LayerSpec::new(vec![2, 4]).unwrap();
        let batch = sample_collocation(cfg.collocation, 1.0, 12).unwrap();
        let params =
            NetworkParams::new(cfg.layers.clone(), vec![0.0; cfg.layers.param_count()]).unwrap();
        let loss = compute_loss(&params, &batch, &cfg);
        assert!(
            (loss.mse[6] - 4.0 * 8.0 / 15.0).abs() < 0.02,
            "mse_ic_val = {}",
            loss.mse[6]
        );
    }

    #[test]
    fn summed_aggregation_squares_the_deviation_sum() {
        // zero network, default data: four identical initial deviations sum
        // to -4·4x(1-x), so the summed form gives 16·mean((4x(1-x))²)
        let mut cfg = manufactured_cfg();
        cfg.collocation = 100_000;
        cfg.aggregation = LossAggregation::SummedConditions;
        cfg.layers = LayerSpec::new(vec![2, 4]).unwrap();
        let batch = sample_collocation(cfg.collocation, 1.0, 12).unwrap();
        let params =
            NetworkParams::new(cfg.layers.clone(), vec![0.0; cfg.layers.param_count()]).unwrap();
        let loss = compute_loss(&params, &batch, &cfg);
        assert!(
            (loss.mse[6] - 16.0 * 8.0 / 15.0).abs() < 0.05,
            "mse_ic_val = {}",
            loss.mse[6]
        );
    }

    #[test]
    fn total_is_exact_sum_of_components() {
        let mut cfg = manufactured_cfg();
        cfg.collocation = 37;
        cfg.layers = LayerSpec::new(vec![2, 6, 4]).unwrap();
        let batch = sample_collocation(cfg.collocation, 1.0, 4).unwrap();
        let params = init_params(&cfg.layers, 9);
        let loss = compute_loss(&params, &batch, &cfg);
        assert_eq!(loss.total, loss.mse.iter().sum::<f64>());
        for m in loss.mse {
            assert!(m >= 0.0);
        }
    }

    #[test]
    fn direct_and_taped_losses_are_bit_identical() {
        for agg in [LossAggregation::PerCondition, LossAggregation::SummedConditions] {
            let mut cfg = manufactured_cfg();
            cfg.collocation = 23;
            cfg.aggregation = agg;
            cfg.layers = LayerSpec::new(vec![2, 7, 5, 4]).unwrap();
            let batch = sample_collocation(cfg.collocation, 1.0, 8).unwrap();
            let params = init_params(&cfg.layers, 2);

            let direct = compute_loss(&params, &batch, &cfg);
            let (grad_view, _grad) = loss_and_gradient(&params, &batch, &cfg);
            assert_eq!(direct, grad_view);

            let mut tape = Tape::new(params.flat());
            let (recorded, _node) = record_loss(&mut tape, &params, &batch, &cfg);
            assert_eq!(direct, recorded);
        }
    }

    #[test]
    fn per_point_and_single_tape_gradients_agree() {
        let mut cfg = manufactured_cfg();
        cfg.collocation = 11;
        cfg.layers = LayerSpec::new(vec![2, 5, 4]).unwrap();
        let batch = sample_collocation(cfg.collocation, 1.0, 6).unwrap();
        let params = init_params(&cfg.layers, 3);

        let (_, grad_points) = loss_and_gradient(&params, &batch, &cfg);
        let mut tape = Tape::new(params.flat());
        let (_, total) = record_loss(&mut tape, &params, &batch, &cfg);
        let grad_tape = tape.param_gradient(total).unwrap();
        for (a, b) in grad_points.iter().zip(&grad_tape) {
            let tol = 1e-9 * a.abs().max(1.0);
            assert!((a - b).abs() <= tol, "{a} vs {b}");
        }
    }

    #[test]
    fn adam_zero_gradient_is_identity() {
        let mut state = AdamState::new(3, 0.0005);
        let mut params = [1.0, -2.0, 0.5];
        adam_step(&mut state, &mut params, &[0.0; 3]).unwrap();
        assert_eq!(params, [1.0, -2.0, 0.5]);
    }

    #[test]
    fn adam_first_step_magnitude() {
        // bias-corrected first step: lr / (1 + ε)
        let mut state = AdamState::new(1, 0.0005);
        let mut params = [2.0];
        adam_step(&mut state, &mut params, &[1.0]).unwrap();
        assert!((2.0 - params[0] - 0.0005).abs() < 1e-7);
        assert!(params[0] < 2.0);
    }

    #[test]
    fn adam_constant_gradient_fixed_point() {
        let mut state = AdamState::new(1, 0.0005);
        let mut params = [0.0];
        let mut delta = 0.0;
        for _ in 0..400 {
            let before = params[0];
            adam_step(&mut state, &mut params, &[2.0]).unwrap();
            delta = before - params[0];
        }
        assert!((delta - 0.0005).abs() < 1e-10, "delta = {delta}");
    }

    #[test]
    fn adam_rejects_bad_input() {
        let mut state = AdamState::new(2, 0.0005);
        let mut params = [0.0, 0.0];
        assert_eq!(
            adam_step(&mut state, &mut params, &[1.0]),
            Err(AdamError::ShapeMismatch { params: 2, grads: 1 })
        );
        assert_eq!(
            adam_step(&mut state, &mut params, &[1.0, f64::NAN]),
            Err(AdamError::NonFiniteGradient { index: 1 })
        );
    }

    fn tiny_cfg(epochs: usize) -> TrainConfig {
        let mut cfg = manufactured_cfg();
        cfg.epochs = epochs;
        cfg.collocation = 16;
        cfg.layers = LayerSpec::new(vec![2, 8, 4]).unwrap();
        cfg.log_every = 1;
        cfg.seed = 5;
        cfg
    }

    #[test]
    fn single_epoch_logs_once_and_moves_parameters() {
        let cfg = tiny_cfg(1);
        let out = train(&cfg).unwrap();
        assert_eq!(out.history.len(), 1);
        assert_eq!(out.history[0].epoch, 0);
        let fresh = init_params(&cfg.layers, cfg.seed.wrapping_add(1));
        assert_ne!(out.params.flat(), fresh.flat());
    }

    #[test]
    fn training_is_deterministic() {
        let cfg = tiny_cfg(20);
        let a = train(&cfg).unwrap();
        let b = train(&cfg).unwrap();
        assert_eq!(a.params.flat(), b.params.flat());
        assert_eq!(a.history, b.history);
    }

    #[test]
    fn loss_trends_down_on_tiny_manufactured_run() {
        let cfg = tiny_cfg(300);
        let out = train(&cfg).unwrap();
        let totals: Vec<f64> = out.history.iter().map(|r| r.loss.total).collect();
        let head = median(&totals[..30]);
        let tail = median(&totals[totals.len() - 30..]);
        assert!(tail < head, "head {head} vs tail {tail}");
    }

    fn median(xs: &[f64]) -> f64 {
        let mut v: Vec<f64> = xs.to_vec();
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
        v[v.len() / 2]
    }

    #[test]
    fn invalid_configs_rejected() {
        let mut cfg = tiny_cfg(1);
        cfg.epochs = 0;
        assert!(train(&cfg).is_err());
        let mut cfg = tiny_cfg(1);
        cfg.physics.k = -1.0;
        assert!(train(&cfg).is_err());
    }

    #[test]
    fn diverging_run_aborts_with_last_good_state() {
        // an absurd learning rate overflows the jets within one step
        let mut cfg = tiny_cfg(5);
        cfg.learning_rate = 1e200;
        match train(&cfg) {
            Err(TrainError::NonFinite {
                epoch, last_good, ..
            }) => {
                assert!(epoch >= 1);
                assert!(last_good.params.flat().iter().all(|p| p.is_finite()));
                assert!(!last_good.history.is_empty());
            }
            other => panic!("expected non-finite abort, got {other:?}"),
        }
    }
}
