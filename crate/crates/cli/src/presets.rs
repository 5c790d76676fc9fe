//! Named experiment presets.
//!
//! `manufactured` is the source-term problem with a closed-form solution;
//! `case1`/`case2` probe the undamped system on the two sides of the
//! stability number χ (case2's parameters make χ = 0 exactly); the damped
//! variants keep case2's constants and switch the damping law.

use timopinn_core::physics::{BoundaryKind, DampingKind, PhysicalParams};

#[derive(Clone, Debug)]
pub struct Preset {
    pub name: &'static str,
    pub description: &'static str,
    pub physics: PhysicalParams,
    pub boundary: BoundaryKind,
    pub sources: bool,
    pub epochs: usize,
}

fn case2_constants(mu: f64, damping: DampingKind, horizon: f64) -> PhysicalParams {
    PhysicalParams {
        rho1: 2.0,
        rho2: 2.0,
        rho3: 1.0,
        b: 1.0,
        k: 2.0,
        delta: (2.0f64 / 3.0).sqrt(),
        beta: 1.0,
        tau: 3.0,
        mu,
        damping,
        horizon,
    }
}

fn case1_constants() -> PhysicalParams {
    PhysicalParams {
        rho1: 1.0,
        rho2: 2.0,
        rho3: 1.0,
        b: 1.0,
        k: 1.0,
        delta: 1.0,
        beta: 1.0,
        tau: 1.0,
        mu: 0.0,
        damping: DampingKind::None,
        horizon: 40.0,
    }
}

pub fn all() -> Vec<Preset> {
    vec![
        Preset {
            name: "manufactured",
            description: "unit constants, linear damping, source terms with a closed-form solution; T = 1",
            physics: PhysicalParams::unit(),
            boundary: BoundaryKind::DirichletAll,
            sources: true,
            epochs: 10_000,
        },
        Preset {
            name: "case1",
            description: "undamped, chi != 0 (polynomial decay regime); T = 40",
            physics: case1_constants(),
            boundary: BoundaryKind::DirichletAll,
            sources: false,
            epochs: 8_000,
        },
        Preset {
            name: "case2",
            description: "undamped, chi = 0 exactly (exponential decay regime); T = 30",
            physics: case2_constants(0.0, DampingKind::None, 30.0),
            boundary: BoundaryKind::DirichletAll,
            sources: false,
            epochs: 8_000,
        },
        Preset {
            name: "linear-damped",
            description: "case2 constants with linear damping mu*psi_t; T = 30",
            physics: case2_constants(1.0, DampingKind::Linear, 30.0),
            boundary: BoundaryKind::DirichletAll,
            sources: false,
            epochs: 8_000,
        },
        Preset {
            name: "quadratic-damped",
            description: "case2 constants with quadratic damping mu*(psi_t)^2; T = 30",
            physics: case2_constants(1.0, DampingKind::Quadratic, 30.0),
            boundary: BoundaryKind::DirichletAll,
            sources: false,
            epochs: 8_000,
        },
        Preset {
            name: "singular-damped",
            description: "case2 constants with (mu/psi_t)*exp(-1/psi_t^2) damping; T = 30",
            physics: case2_constants(1.0, DampingKind::SingularExp, 30.0),
            boundary: BoundaryKind::DirichletAll,
            sources: false,
            epochs: 8_000,
        },
    ]
}

pub fn lookup(name: &str) -> Option<Preset> {
    all().into_iter().find(|p| p.name == name)
}

pub fn names() -> Vec<&'static str> {
    all().iter().map(|p| p.name).collect()
}
