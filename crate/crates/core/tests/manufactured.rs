//! Manufactured-solution checks: residual identity and the discrete energy
//! against the closed-form energy integral.
//!
//! Oracle for the energy: at t = 0 the exact fields give
//! ∫(4x(1−x))² = 8/15 (four quadratic terms), ∫(4(1−2x))² = 16/3, and
//! ∫(4(1−x−x²))² = 88/15 — together E(0) = ½(4·8/15 + 16/3 + 88/15) = 20/3,
//! evaluated term by term by hand.

use timopinn_core::diagnostics::{discrete_energy, FieldGrid};
use timopinn_core::physics::{exact_solution, pde_residuals, source_terms, PhysicalParams};
use timopinn_core::sampling::{uniform_grid, SplitMix64};

const E0_EXACT: f64 = 20.0 / 3.0;

#[test]
fn residual_identity_on_random_cloud() {
    let p = PhysicalParams::unit();
    let mut rng = SplitMix64::new(2718);
    for _ in 0..100 {
        let x = rng.next_open01();
        let t = rng.next_open01();
        let r = pde_residuals(&exact_solution(x, t), &p, Some(source_terms(x, t)));
        for ri in r {
            assert!(ri.abs() <= 1e-12, "residual {ri} at ({x}, {t})");
        }
    }
}

fn energy_at_t0(n: usize) -> f64 {
    let grid = uniform_grid(n, n, 0.01).unwrap();
    let fields = FieldGrid::from_fn(&grid, |x, t| exact_solution(x, t).values());
    let series = discrete_energy(&grid, &fields, &PhysicalParams::unit()).unwrap();
    series.energies[0]
}

#[test]
fn discrete_energy_matches_analytic_integral() {
    let e0 = energy_at_t0(2000);
    let rel = (e0 - E0_EXACT).abs() / E0_EXACT;
    assert!(rel <= 0.02, "E0 = {e0}, relative error {rel}");
}

#[test]
fn discrete_energy_converges_at_first_order() {
    let errs: Vec<f64> = [500, 1000, 2000]
        .iter()
        .map(|&n| (energy_at_t0(n) - E0_EXACT).abs())
        .collect();
    for w in errs.windows(2) {
        let ratio = w[0] / w[1];
        assert!(
            (1.7..=2.3).contains(&ratio),
            "halving error ratio {ratio} outside 2 ± 0.3"
        );
    }
}
