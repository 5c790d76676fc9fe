//! Discrete energy of a field grid, decay-rate regression/classification,
//! and error metrics against a reference solution.
//!
//! The energy estimator is the literal forward-difference / right-endpoint
//! rectangle form: for each time index i < N_t,
//!
//! 𝓔ᵢ = 1/(2N_x) Σ_{j=0}^{N_x−1} [ ρ₁|Δ_t φ|² + ρ₂|Δ_t ψ|² + b|Δ_x ψ|²
//!        + k|Δ_x φ + ψ(x_{j+1}, t_i)|² + ρ₃θ² + τq² ]
//!
//! with Δ_t the forward difference at x_{j+1} and Δ_x the forward difference
//! over [x_j, x_{j+1}]; point terms sit at x_{j+1} (a staggering quirk kept
//! as stated), and the final time node has no energy entry.

use core::fmt;

use alloc::vec::Vec;

use crate::physics::PhysicalParams;
use crate::sampling::EvalGrid;

/// Field values (no derivatives) on an inclusive uniform grid, row-major by
/// time: entry `i·(N_x+1) + j` is the value at (x_j, t_i).
#[derive(Clone, Debug, PartialEq)]
pub struct FieldGrid {
    n_x: usize,
    n_t: usize,
    pub phi: Vec<f64>,
    pub psi: Vec<f64>,
    pub theta: Vec<f64>,
    pub q: Vec<f64>,
}

impl FieldGrid {
    /// Evaluate `eval(x, t) -> [φ, ψ, θ, q]` at every grid node.
    pub fn from_fn(grid: &EvalGrid, mut eval: impl FnMut(f64, f64) -> [f64; 4]) -> Self {
        let (n_x, n_t) = (grid.nx(), grid.nt());
        let n = (n_x + 1) * (n_t + 1);
        let mut out = FieldGrid {
            n_x,
            n_t,
            phi: Vec::with_capacity(n),
            psi: Vec::with_capacity(n),
            theta: Vec::with_capacity(n),
            q: Vec::with_capacity(n),
        };
        for &t in &grid.ts {
            for &x in &grid.xs {
                let v = eval(x, t);
                out.phi.push(v[0]);
                out.psi.push(v[1]);
                out.theta.push(v[2]);
                out.q.push(v[3]);
            }
        }
        out
    }

    pub fn n_x(&self) -> usize {
        self.n_x
    }

    pub fn n_t(&self) -> usize {
        self.n_t
    }

    fn idx(&self, i_t: usize, j_x: usize) -> usize {
        i_t * (self.n_x + 1) + j_x
    }

    /// The four field planes in (φ, ψ, θ, q) order.
    pub fn fields(&self) -> [&[f64]; 4] {
        [&self.phi, &self.psi, &self.theta, &self.q]
    }

    fn same_shape(&self, other: &FieldGrid) -> bool {
        self.n_x == other.n_x && self.n_t == other.n_t
    }
}

/// Time-indexed discrete energies 𝓔₀ … 𝓔_{N_t − 1}.
#[derive(Clone, Debug, PartialEq)]
pub struct EnergySeries {
    pub ts: Vec<f64>,
    pub energies: Vec<f64>,
}

/// Energy estimator over the grid; uses field values only, with derivatives
/// finite-differenced exactly as indexed in the estimator.
pub fn discrete_energy(
    grid: &EvalGrid,
    fields: &FieldGrid,
    p: &PhysicalParams,
) -> Result<EnergySeries, DiagnosticsError> {
    if fields.n_x != grid.nx() || fields.n_t != grid.nt() {
        return Err(DiagnosticsError::ShapeMismatch);
    }
    let n_x = fields.n_x;
    let n_t = fields.n_t;
    let mut ts = Vec::with_capacity(n_t);
    let mut energies = Vec::with_capacity(n_t);
    for i in 0..n_t {
        let ht = grid.ts[i + 1] - grid.ts[i];
        let mut sum = 0.0;
        for j in 0..n_x {
            let hx = grid.xs[j + 1] - grid.xs[j];
            let phi_t =
                (fields.phi[fields.idx(i + 1, j + 1)] - fields.phi[fields.idx(i, j + 1)]) / ht;
            let psi_t =
                (fields.psi[fields.idx(i + 1, j + 1)] - fields.psi[fields.idx(i, j + 1)]) / ht;
            let psi_x = (fields.psi[fields.idx(i, j + 1)] - fields.psi[fields.idx(i, j)]) / hx;
            let phi_x = (fields.phi[fields.idx(i, j + 1)] - fields.phi[fields.idx(i, j)]) / hx;
            let shear = phi_x + fields.psi[fields.idx(i, j + 1)];
            let theta = fields.theta[fields.idx(i, j + 1)];
            let q = fields.q[fields.idx(i, j + 1)];
            sum += p.rho1 * phi_t * phi_t
                + p.rho2 * psi_t * psi_t
                + p.b * psi_x * psi_x
                + p.k * shear * shear
                + p.rho3 * theta * theta
                + p.tau * q * q;
        }
        ts.push(grid.ts[i]);
        energies.push(sum / (2.0 * n_x as f64));
    }
    Ok(EnergySeries { ts, energies })
}

/// Decay law fitted to the energy tail.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DecayModel {
    /// ln E ~ a·t + b
    Exponential,
    /// ln E ~ a·ln t + b
    Polynomial,
    /// ln E ~ a·ln ln t + b
    Logarithmic,
}

impl DecayModel {
    pub const ALL: [DecayModel; 3] = [
        DecayModel::Exponential,
        DecayModel::Polynomial,
        DecayModel::Logarithmic,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            DecayModel::Exponential => "exponential",
            DecayModel::Polynomial => "polynomial",
            DecayModel::Logarithmic => "logarithmic",
        }
    }

    /// Fit abscissa for time `t`, or `None` where it is undefined.
    fn abscissa(&self, t: f64) -> Option<f64> {
        match self {
            DecayModel::Exponential => Some(t),
            DecayModel::Polynomial => (t > 0.0).then(|| libm::log(t)),
            DecayModel::Logarithmic => (t > 1.0).then(|| libm::log(libm::log(t))),
        }
    }
}

/// Least-squares line through (abscissa(t), ln E) on the tail, plus the
/// limiting-energy estimate (mean of the final 10% of samples).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DecayFit {
    pub model: DecayModel,
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub e_inf: f64,
    /// Tail points that entered the regression.
    pub used: usize,
    /// Tail points dropped for nonpositive energy or undefined abscissa.
    pub excluded: usize,
}

/// Ordinary least squares of ln E against the model abscissa over
/// t > t_cut. Nonpositive energies and undefined abscissas are excluded;
/// fewer than 3 usable points is an error.
pub fn fit_decay(
    series: &EnergySeries,
    model: DecayModel,
    t_cut: f64,
) -> Result<DecayFit, DiagnosticsError> {
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut excluded = 0usize;
    for (&t, &energy) in series.ts.iter().zip(&series.energies) {
        if t <= t_cut {
            continue;
        }
        match (model.abscissa(t), energy > 0.0) {
            (Some(x), true) => {
                xs.push(x);
                ys.push(libm::log(energy));
            }
            _ => excluded += 1,
        }
    }
    let n = xs.len();
    if n < 3 {
        return Err(DiagnosticsError::TooFewPoints { usable: n });
    }
    let nf = n as f64;
    let x_mean = xs.iter().sum::<f64>() / nf;
    let y_mean = ys.iter().sum::<f64>() / nf;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (x, y) in xs.iter().zip(&ys) {
        sxx += (x - x_mean) * (x - x_mean);
        sxy += (x - x_mean) * (y - y_mean);
    }
    if sxx == 0.0 {
        return Err(DiagnosticsError::DegenerateAbscissa);
    }
    let slope = sxy / sxx;
    let intercept = y_mean - slope * x_mean;
    let mut ss_res = 0.0;
    let mut ss_tot = 0.0;
    for (x, y) in xs.iter().zip(&ys) {
        let r = y - (slope * x + intercept);
        ss_res += r * r;
        ss_tot += (y - y_mean) * (y - y_mean);
    }
    let r_squared = if ss_tot == 0.0 {
        1.0
    } else {
        (1.0 - ss_res / ss_tot).clamp(0.0, 1.0)
    };
    Ok(DecayFit {
        model,
        slope,
        intercept,
        r_squared,
        e_inf: tail_mean(&series.energies),
        used: n,
        excluded,
    })
}

/// Mean of the final 10% of entries (at least one).
fn tail_mean(energies: &[f64]) -> f64 {
    let k = energies.len().div_ceil(10);
    let tail = &energies[energies.len() - k..];
    tail.iter().sum::<f64>() / tail.len() as f64
}

/// All three fits on the tail plus the winner by R²; ties break toward
/// exponential, then polynomial.
#[derive(Clone, Debug, PartialEq)]
pub struct DecayClassification {
    pub best: DecayModel,
    pub fits: [Option<DecayFit>; 3],
}

impl DecayClassification {
    pub fn fit(&self, model: DecayModel) -> Option<&DecayFit> {
        let i = DecayModel::ALL.iter().position(|m| *m == model)?;
        self.fits[i].as_ref()
    }

    pub fn best_fit(&self) -> &DecayFit {
        self.fit(self.best).expect("best model has a fit")
    }
}

pub fn classify_decay(
    series: &EnergySeries,
    t_cut: f64,
) -> Result<DecayClassification, DiagnosticsError> {
    let mut fits: [Option<DecayFit>; 3] = [None, None, None];
    let mut first_err = None;
    for (i, model) in DecayModel::ALL.into_iter().enumerate() {
        match fit_decay(series, model, t_cut) {
            Ok(fit) => fits[i] = Some(fit),
            Err(e) => first_err = first_err.or(Some(e)),
        }
    }
    let mut best: Option<(DecayModel, f64)> = None;
    for (i, model) in DecayModel::ALL.into_iter().enumerate() {
        if let Some(fit) = &fits[i] {
            // strict comparison in declaration order implements the tie-break
            if best.is_none_or(|(_, r)| fit.r_squared > r) {
                best = Some((model, fit.r_squared));
            }
        }
    }
    match best {
        Some((model, _)) => Ok(DecayClassification { best: model, fits }),
        None => Err(first_err.expect("at least one model was attempted")),
    }
}

/// ℛ = ‖pred − exact‖₂ / ‖exact‖₂ over all entries.
pub fn relative_error(pred: &[f64], exact: &[f64]) -> Result<f64, DiagnosticsError> {
    if pred.len() != exact.len() {
        return Err(DiagnosticsError::ShapeMismatch);
    }
    let mut num = 0.0;
    let mut den = 0.0;
    for (p, e) in pred.iter().zip(exact) {
        num += (p - e) * (p - e);
        den += e * e;
    }
    if den == 0.0 {
        return Err(DiagnosticsError::ZeroNormReference);
    }
    Ok(libm::sqrt(num) / libm::sqrt(den))
}

/// For each time node, the discrete 2-norm over x of the per-field
/// difference, in (φ, ψ, θ, q) order. Covers all N_t + 1 time nodes.
pub fn l2_error_series(
    pred: &FieldGrid,
    exact: &FieldGrid,
) -> Result<Vec<[f64; 4]>, DiagnosticsError> {
    if !pred.same_shape(exact) {
        return Err(DiagnosticsError::ShapeMismatch);
    }
    let mut out = Vec::with_capacity(pred.n_t + 1);
    let preds = pred.fields();
    let exacts = exact.fields();
    for i in 0..=pred.n_t {
        let mut row = [0.0; 4];
        for f in 0..4 {
            let mut sum = 0.0;
            for j in 0..=pred.n_x {
                let d = preds[f][pred.idx(i, j)] - exacts[f][pred.idx(i, j)];
                sum += d * d;
            }
            row[f] = libm::sqrt(sum);
        }
        out.push(row);
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DiagnosticsError {
    ShapeMismatch,
    ZeroNormReference,
    TooFewPoints { usable: usize },
    DegenerateAbscissa,
}

impl fmt::Display for DiagnosticsError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DiagnosticsError::ShapeMismatch => write!(f, "grid shapes do not match"),
            DiagnosticsError::ZeroNormReference => {
                write!(f, "reference field has zero norm")
            }
            DiagnosticsError::TooFewPoints { usable } => {
                write!(f, "regression needs at least 3 usable points, found {usable}")
            }
            DiagnosticsError::DegenerateAbscissa => {
                write!(f, "regression abscissa has zero variance")
            }
        }
    }
}

impl core::error::Error for DiagnosticsError {}
