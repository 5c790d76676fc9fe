//! Second-order forward-mode jets over the two network inputs (x, t).
//!
//! A [`Jet2`] bundles a value with the five partials {∂x, ∂t, ∂xx, ∂tt, ∂xt}
//! and propagates all six components through arithmetic by the first- and
//! second-order chain rules. The PDE residuals need exactly this derivative
//! set, so a fixed-size jet is cheap and exact — no graphs, no truncation
//! error.
//!
//! Supported primitives: add, sub, neg, scale, multiply, affine, tanh, exp,
//! reciprocal. The last two exist only for the singular damping term.

use core::fmt;
use core::ops::{Add, Mul, Neg, Sub};

use alloc::vec::Vec;

/// Value plus the five input partials propagated through the network.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Jet2 {
    pub val: f64,
    pub dx: f64,
    pub dt: f64,
    pub dxx: f64,
    pub dtt: f64,
    pub dxt: f64,
}

/// Selector for one of the six jet components.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Comp {
    Val,
    Dx,
    Dt,
    Dxx,
    Dtt,
    Dxt,
}

impl Jet2 {
    pub const ZERO: Jet2 = Jet2 {
        val: 0.0,
        dx: 0.0,
        dt: 0.0,
        dxx: 0.0,
        dtt: 0.0,
        dxt: 0.0,
    };

    /// A constant: value only, no dependence on (x, t).
    pub const fn constant(val: f64) -> Self {
        Jet2 { val, ..Jet2::ZERO }
    }

    /// The x input: value x, ∂x = 1, everything else 0.
    pub const fn seed_x(x: f64) -> Self {
        Jet2 {
            val: x,
            dx: 1.0,
            ..Jet2::ZERO
        }
    }

    /// The t input: value t, ∂t = 1, everything else 0.
    pub const fn seed_t(t: f64) -> Self {
        Jet2 {
            val: t,
            dt: 1.0,
            ..Jet2::ZERO
        }
    }

    pub fn component(&self, c: Comp) -> f64 {
        match c {
            Comp::Val => self.val,
            Comp::Dx => self.dx,
            Comp::Dt => self.dt,
            Comp::Dxx => self.dxx,
            Comp::Dtt => self.dtt,
            Comp::Dxt => self.dxt,
        }
    }

    pub(crate) fn component_mut(&mut self, c: Comp) -> &mut f64 {
        match c {
            Comp::Val => &mut self.val,
            Comp::Dx => &mut self.dx,
            Comp::Dt => &mut self.dt,
            Comp::Dxx => &mut self.dxx,
            Comp::Dtt => &mut self.dtt,
            Comp::Dxt => &mut self.dxt,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.val.is_finite()
            && self.dx.is_finite()
            && self.dt.is_finite()
            && self.dxx.is_finite()
            && self.dtt.is_finite()
            && self.dxt.is_finite()
    }

    /// tanh with first/second-order chain rule: with y = tanh(u), the local
    /// derivatives are y' = 1 − y² and y'' = −2y(1 − y²).
    pub fn tanh(self) -> Self {
        let y = libm::tanh(self.val);
        let (d1, d2, _) = tanh_coeffs(y);
        unary(self, y, d1, d2)
    }

    pub fn exp(self) -> Self {
        let y = libm::exp(self.val);
        unary(self, y, y, y)
    }

    /// 1/u; local derivatives −1/u² and 2/u³.
    pub fn recip(self) -> Self {
        let y = 1.0 / self.val;
        let (d1, d2, _) = recip_coeffs(y);
        unary(self, y, d1, d2)
    }
}

/// Seed the pair of input jets for a point (x, t).
pub fn seed_inputs(x: f64, t: f64) -> (Jet2, Jet2) {
    (Jet2::seed_x(x), Jet2::seed_t(t))
}

/// Chain rule for a scalar function with value `y` and local derivatives
/// `d1` = f'(u.val), `d2` = f''(u.val):
///
/// out.dxx = d1·u.dxx + d2·u.dx², out.dxt = d1·u.dxt + d2·u.dx·u.dt, etc.
#[inline]
pub(crate) fn unary(u: Jet2, y: f64, d1: f64, d2: f64) -> Jet2 {
    Jet2 {
        val: y,
        dx: d1 * u.dx,
        dt: d1 * u.dt,
        dxx: d1 * u.dxx + d2 * u.dx * u.dx,
        dtt: d1 * u.dtt + d2 * u.dt * u.dt,
        dxt: d1 * u.dxt + d2 * u.dx * u.dt,
    }
}

/// First three derivatives of tanh expressed through y = tanh(v):
/// (1 − y², −2y(1 − y²), −2(1 − y²)(1 − 3y²)).
pub(crate) fn tanh_coeffs(y: f64) -> (f64, f64, f64) {
    let s = 1.0 - y * y;
    (s, -2.0 * y * s, -2.0 * s * (1.0 - 3.0 * y * y))
}

/// First three derivatives of 1/v through y = 1/v: (−y², 2y³, −6y⁴).
pub(crate) fn recip_coeffs(y: f64) -> (f64, f64, f64) {
    let y2 = y * y;
    (-y2, 2.0 * y2 * y, -6.0 * y2 * y2)
}

impl Add for Jet2 {
    type Output = Jet2;
    #[inline]
    fn add(self, rhs: Jet2) -> Jet2 {
        Jet2 {
            val: self.val + rhs.val,
            dx: self.dx + rhs.dx,
            dt: self.dt + rhs.dt,
            dxx: self.dxx + rhs.dxx,
            dtt: self.dtt + rhs.dtt,
            dxt: self.dxt + rhs.dxt,
        }
    }
}

impl Sub for Jet2 {
    type Output = Jet2;
    #[inline]
    fn sub(self, rhs: Jet2) -> Jet2 {
        Jet2 {
            val: self.val - rhs.val,
            dx: self.dx - rhs.dx,
            dt: self.dt - rhs.dt,
            dxx: self.dxx - rhs.dxx,
            dtt: self.dtt - rhs.dtt,
            dxt: self.dxt - rhs.dxt,
        }
    }
}

impl Neg for Jet2 {
    type Output = Jet2;
    #[inline]
    fn neg(self) -> Jet2 {
        Jet2 {
            val: -self.val,
            dx: -self.dx,
            dt: -self.dt,
            dxx: -self.dxx,
            dtt: -self.dtt,
            dxt: -self.dxt,
        }
    }
}

/// Second-order product rule, e.g.
/// (uv)_xx = u_xx v + 2 u_x v_x + u v_xx and
/// (uv)_xt = u_xt v + u_x v_t + u_t v_x + u v_xt.
impl Mul for Jet2 {
    type Output = Jet2;
    #[inline]
    fn mul(self, rhs: Jet2) -> Jet2 {
        let (u, v) = (self, rhs);
        Jet2 {
            val: u.val * v.val,
            dx: u.dx * v.val + u.val * v.dx,
            dt: u.dt * v.val + u.val * v.dt,
            dxx: u.dxx * v.val + 2.0 * u.dx * v.dx + u.val * v.dxx,
            dtt: u.dtt * v.val + 2.0 * u.dt * v.dt + u.val * v.dtt,
            dxt: u.dxt * v.val + u.dx * v.dt + u.dt * v.dx + u.val * v.dxt,
        }
    }
}

impl Mul<f64> for Jet2 {
    type Output = Jet2;
    #[inline]
    fn mul(self, k: f64) -> Jet2 {
        Jet2 {
            val: self.val * k,
            dx: self.dx * k,
            dt: self.dt * k,
            dxx: self.dxx * k,
            dtt: self.dtt * k,
            dxt: self.dxt * k,
        }
    }
}

/// One output neuron of an affine map: bias + Σ w_k · input_k, the same
/// linear combination applied to every jet component (bias enters the value
/// only). Shared by the direct and taped network paths so the two stay
/// bit-identical.
#[inline]
pub(crate) fn affine_neuron(w_row: &[f64], bias: f64, inputs: &[Jet2]) -> Jet2 {
    debug_assert_eq!(w_row.len(), inputs.len());
    let mut acc = Jet2::constant(bias);
    for (w, u) in w_row.iter().zip(inputs) {
        acc = acc + *u * *w;
    }
    acc
}

/// Affine layer on jets: `weights` is row-major with one row of length
/// `inputs.len()` per output (so `weights.len() == biases.len() * inputs.len()`).
pub fn affine(
    weights: &[f64],
    biases: &[f64],
    inputs: &[Jet2],
) -> Result<Vec<Jet2>, DimensionMismatch> {
    let (n_out, n_in) = (biases.len(), inputs.len());
    if weights.len() != n_out * n_in {
        return Err(DimensionMismatch {
            n_out,
            n_in,
            weights: weights.len(),
        });
    }
    Ok(biases
        .iter()
        .enumerate()
        .map(|(j, &b)| affine_neuron(&weights[j * n_in..(j + 1) * n_in], b, inputs))
        .collect())
}

/// Weight count does not match the output × input shape.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DimensionMismatch {
    pub n_out: usize,
    pub n_in: usize,
    pub weights: usize,
}

impl fmt::Display for DimensionMismatch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "affine shape mismatch: {} weights for {} outputs x {} inputs",
            self.weights, self.n_out, self.n_in
        )
    }
}

impl core::error::Error for DimensionMismatch {}

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_jet_eq(a: Jet2, b: Jet2) {
        assert_eq!(a.val, b.val, "val");
        assert_eq!(a.dx, b.dx, "dx");
        assert_eq!(a.dt, b.dt, "dt");
        assert_eq!(a.dxx, b.dxx, "dxx");
        assert_eq!(a.dtt, b.dtt, "dtt");
        assert_eq!(a.dxt, b.dxt, "dxt");
    }

    fn jet(val: f64, dx: f64, dt: f64, dxx: f64, dtt: f64, dxt: f64) -> Jet2 {
        Jet2 {
            val,
            dx,
            dt,
            dxx,
            dtt,
            dxt,
        }
    }

    #[test]
    fn seeding() {
        let (x, t) = seed_inputs(0.5, 2.0);
        assert_jet_eq(x, jet(0.5, 1.0, 0.0, 0.0, 0.0, 0.0));
        assert_jet_eq(t, jet(2.0, 0.0, 1.0, 0.0, 0.0, 0.0));

        let (x, t) = seed_inputs(0.0, 0.0);
        assert_jet_eq(x, jet(0.0, 1.0, 0.0, 0.0, 0.0, 0.0));
        assert_jet_eq(t, jet(0.0, 0.0, 1.0, 0.0, 0.0, 0.0));

        let (x, t) = seed_inputs(1.0, 40.0);
        assert_jet_eq(x, jet(1.0, 1.0, 0.0, 0.0, 0.0, 0.0));
        assert_jet_eq(t, jet(40.0, 0.0, 1.0, 0.0, 0.0, 0.0));
    }

    #[test]
    fn mul_x_squared() {
        // d²(x²)/dx² = 2
        let u = Jet2::seed_x(3.0);
        assert_jet_eq(u * u, jet(9.0, 6.0, 0.0, 2.0, 0.0, 0.0));
    }

    #[test]
    fn mul_x_times_t() {
        // d²(xt)/dxdt = 1
        let u = Jet2::seed_x(2.0);
        let v = Jet2::seed_t(5.0);
        assert_jet_eq(u * v, jet(10.0, 5.0, 2.0, 0.0, 0.0, 1.0));
    }

    #[test]
    fn mul_by_zero_jet() {
        let v = jet(1.3, -0.2, 4.0, 0.7, -1.1, 2.2);
        assert_jet_eq(Jet2::ZERO * v, Jet2::ZERO);
        assert_jet_eq(v * Jet2::ZERO, Jet2::ZERO);
    }

    #[test]
    fn tanh_at_zero() {
        // tanh(0) = 0, sech²(0) = 1, tanh''(0) = 0
        let u = Jet2::seed_x(0.0);
        assert_jet_eq(u.tanh(), jet(0.0, 1.0, 0.0, 0.0, 0.0, 0.0));
    }

    #[test]
    fn tanh_chain_first_order() {
        // d/dx tanh at 0.5 with inner slope 2: 2·sech²(0.5) ≈ 1.57290
        let u = jet(0.5, 2.0, 0.0, 0.0, 0.0, 0.0);
        let out = u.tanh();
        assert!((out.dx - 1.5728954659318548).abs() < 1e-10, "dx = {}", out.dx);
    }

    #[test]
    fn tanh_saturates() {
        let u = Jet2::seed_x(20.0);
        let out = u.tanh();
        assert!((out.val - 1.0).abs() < 1e-12);
        for c in [out.dx, out.dt, out.dxx, out.dtt, out.dxt] {
            assert!(c.abs() < 1e-12);
        }
    }

    #[test]
    fn affine_identity_and_constant() {
        let u = [jet(1.0, 1.0, 0.0, 0.0, 0.0, 0.0), jet(4.0, 0.0, 1.0, 0.0, 0.0, 0.0)];

        let id = affine(&[1.0, 0.0, 0.0, 1.0], &[0.0, 0.0], &u).unwrap();
        assert_jet_eq(id[0], u[0]);
        assert_jet_eq(id[1], u[1]);

        let consts = affine(&[0.0, 0.0], &[7.5], &u).unwrap();
        assert_jet_eq(consts[0], Jet2::constant(7.5));
    }

    #[test]
    fn affine_1x2_example() {
        // W = [2, -1], b = 3 on the seeded jets at (1, 4)
        let u = [Jet2::seed_x(1.0), Jet2::seed_t(4.0)];
        let out = affine(&[2.0, -1.0], &[3.0], &u).unwrap();
        assert_jet_eq(out[0], jet(1.0, 2.0, -1.0, 0.0, 0.0, 0.0));
    }

    #[test]
    fn affine_shape_error() {
        let u = [Jet2::seed_x(1.0)];
        assert!(affine(&[1.0, 2.0, 3.0], &[0.0, 0.0], &u).is_err());
    }

    #[test]
    fn exp_and_recip_rules() {
        // exp: value e, all chain coefficients equal the value
        let u = jet(1.0, 2.0, 0.0, 0.0, 0.0, 0.0);
        let e = u.exp();
        let ev = libm::exp(1.0);
        assert!((e.val - ev).abs() < 1e-15);
        assert!((e.dx - 2.0 * ev).abs() < 1e-14);
        // (e^u)_xx = e^u (u_xx + u_x²) = 4e here
        assert!((e.dxx - 4.0 * ev).abs() < 1e-14);

        // recip of x at 2: 1/2, d = -1/4, dxx = 2/8
        let r = Jet2::seed_x(2.0).recip();
        assert!((r.val - 0.5).abs() < 1e-15);
        assert!((r.dx + 0.25).abs() < 1e-15);
        assert!((r.dxx - 0.25).abs() < 1e-15);
    }
}
