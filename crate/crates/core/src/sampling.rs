//! Deterministic collocation sets and uniform evaluation grids.
//!
//! All randomness flows through [`SplitMix64`], a fully specified 64-bit
//! generator (Steele, Lea & Flood's mixing constants, the same stream as
//! Java's `SplittableRandom`). Integer state plus an exact scale into the
//! open unit interval makes every sampled set reproducible bit-for-bit on
//! any platform; no external RNG crate is involved.

use core::fmt;

use alloc::vec::Vec;

/// SplitMix64: `state += 0x9E3779B97F4A7C15`, then two xor-shift-multiply
/// mixing rounds per output.
#[derive(Clone, Debug)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64 { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform draw from the open interval (0, 1): the top 53 bits shifted to
    /// the midpoint of each 2⁻⁵³ cell, so 0 and 1 are unreachable.
    pub fn next_open01(&mut self) -> f64 {
        ((self.next_u64() >> 11) as f64 + 0.5) * (1.0 / 9_007_199_254_740_992.0)
    }
}

/// Training point sets: interior (x, t) pairs, boundary times shared by both
/// endpoints, and initial-condition x samples.
#[derive(Clone, Debug, PartialEq)]
pub struct CollocationSet {
    pub interior: Vec<(f64, f64)>,
    pub boundary_times: Vec<f64>,
    pub initial_xs: Vec<f64>,
    pub seed: u64,
}

/// I.i.d. uniform draws from (0,1) × (0,T): `n` interior points, then `n`
/// boundary times, then `n` initial positions, in that documented order.
/// Identical seeds give identical sets.
pub fn sample_collocation(n: usize, horizon: f64, seed: u64) -> Result<CollocationSet, SamplingError> {
    if n == 0 {
        return Err(SamplingError::EmptySample);
    }
    if !horizon.is_finite() || horizon <= 0.0 {
        return Err(SamplingError::BadHorizon { horizon });
    }
    let mut rng = SplitMix64::new(seed);
    let interior = (0..n)
        .map(|_| {
            let x = rng.next_open01();
            let t = rng.next_open01() * horizon;
            (x, t)
        })
        .collect();
    let boundary_times = (0..n).map(|_| rng.next_open01() * horizon).collect();
    let initial_xs = (0..n).map(|_| rng.next_open01()).collect();
    Ok(CollocationSet {
        interior,
        boundary_times,
        initial_xs,
        seed,
    })
}

/// Inclusive uniform grid nodes on `[0,1] × [0,T]`.
#[derive(Clone, Debug, PartialEq)]
pub struct EvalGrid {
    pub xs: Vec<f64>,
    pub ts: Vec<f64>,
}

impl EvalGrid {
    /// Number of spatial cells (nodes minus one).
    pub fn nx(&self) -> usize {
        self.xs.len() - 1
    }

    pub fn nt(&self) -> usize {
        self.ts.len() - 1
    }

    pub fn horizon(&self) -> f64 {
        *self.ts.last().expect("grid has nodes")
    }
}

/// N_x + 1 nodes j/N_x on [0, 1] and N_t + 1 nodes i·T/N_t on [0, T].
pub fn uniform_grid(n_x: usize, n_t: usize, horizon: f64) -> Result<EvalGrid, SamplingError> {
    if n_x < 2 || n_t < 2 {
        return Err(SamplingError::DegenerateGrid { n_x, n_t });
    }
    if !horizon.is_finite() || horizon <= 0.0 {
        return Err(SamplingError::BadHorizon { horizon });
    }
    let xs = (0..=n_x).map(|j| j as f64 / n_x as f64).collect();
    let ts = (0..=n_t)
        .map(|i| i as f64 / n_t as f64 * horizon)
        .collect();
    Ok(EvalGrid { xs, ts })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SamplingError {
    EmptySample,
    BadHorizon { horizon: f64 },
    DegenerateGrid { n_x: usize, n_t: usize },
}

impl fmt::Display for SamplingError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SamplingError::EmptySample => write!(f, "collocation size must be at least 1"),
            SamplingError::BadHorizon { horizon } => {
                write!(f, "time horizon must be finite and positive, got {horizon}")
            }
            SamplingError::DegenerateGrid { n_x, n_t } => {
                write!(f, "grid needs N_x, N_t >= 2, got ({n_x}, {n_t})")
            }
        }
    }
}

impl core::error::Error for SamplingError {}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_seeds_identical_sets() {
        let a = sample_collocation(3000, 40.0, 7).unwrap();
        let b = sample_collocation(3000, 40.0, 7).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn points_stay_strictly_inside() {
        let s = sample_collocation(5000, 2.5, 123).unwrap();
        for &(x, t) in &s.interior {
            assert!(x > 0.0 && x < 1.0);
            assert!(t > 0.0 && t < 2.5);
        }
        for &t in &s.boundary_times {
            assert!(t > 0.0 && t < 2.5);
        }
        for &x in &s.initial_xs {
            assert!(x > 0.0 && x < 1.0);
        }
    }

    #[test]
    fn interior_x_mean_near_half() {
        let s = sample_collocation(100_000, 1.0, 99).unwrap();
        let mean: f64 = s.interior.iter().map(|&(x, _)| x).sum::<f64>() / 100_000.0;
        assert!((mean - 0.5).abs() < 0.01, "mean = {mean}");
    }

    #[test]
    fn empty_sample_rejected() {
        assert_eq!(sample_collocation(0, 1.0, 0).unwrap_err(), SamplingError::EmptySample);
        assert!(sample_collocation(10, 0.0, 0).is_err());
        assert!(sample_collocation(10, f64::NAN, 0).is_err());
    }

    #[test]
    fn grid_examples() {
        let g = uniform_grid(2, 2, 1.0).unwrap();
        assert_eq!(g.xs, [0.0, 0.5, 1.0]);
        assert_eq!(g.ts, [0.0, 0.5, 1.0]);

        let g = uniform_grid(4, 2, 30.0).unwrap();
        assert_eq!(g.ts, [0.0, 15.0, 30.0]);
        assert_eq!(g.xs, [0.0, 0.25, 0.5, 0.75, 1.0]);
    }

    #[test]
    fn grid_spacing_is_uniform_to_one_ulp() {
        let g = uniform_grid(7, 11, 3.0).unwrap();
        let hx = 1.0 / 7.0;
        for w in g.xs.windows(2) {
            let diff = (w[1] - w[0] - hx).abs();
            assert!(diff <= f64::EPSILON, "spacing off by {diff}");
        }
    }

    #[test]
    fn degenerate_grid_rejected() {
        assert!(uniform_grid(1, 5, 1.0).is_err());
        assert!(uniform_grid(5, 0, 1.0).is_err());
    }
}
