//! Experiment presets, configuration resolution, run orchestration, and
//! artifact persistence for the Timoshenko-beam PINN solver.

pub mod artifacts;
pub mod checkpoint;
pub mod config;
pub mod presets;
pub mod runner;
