//! Configuration resolution: defaults ← preset ← JSON config file ← CLI
//! flags, collapsed into one concrete document that is written verbatim to
//! `manifest.json`. Every numeric in the manifest is the value actually
//! used, including derived ones (χ, parameter count, per-stream seeds).

use std::env;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use timopinn_core::network::LayerSpec;
use timopinn_core::physics::{
    stability_number, BoundaryKind, BoundarySpec, DampingKind, InitialData, PhysicalParams,
    Polynomial,
};
use timopinn_core::sampling::{uniform_grid, EvalGrid};
use timopinn_core::training::{
    LossAggregation, TrainConfig, DEFAULT_COLLOCATION, DEFAULT_EPOCHS, DEFAULT_LEARNING_RATE,
};

use crate::presets;

/// Environment variable overriding the output directory (CLI flag still
/// wins over it).
pub const OUTPUT_DIR_ENV: &str = "TIMO_PINN_OUT";

const DEFAULT_GRID: usize = 500;

/// On-disk configuration; every field optional, overlaying the preset (or
/// built-in defaults).
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ConfigFile {
    pub preset: Option<String>,
    pub epochs: Option<usize>,
    pub collocation: Option<usize>,
    pub seed: Option<u64>,
    pub layers: Option<Vec<usize>>,
    pub learning_rate: Option<f64>,
    pub physics: Option<PhysicsOverlay>,
    pub boundary_kind: Option<String>,
    pub initial: Option<InitialOverlay>,
    pub sources: Option<bool>,
    pub aggregation: Option<String>,
    pub grid_nx: Option<usize>,
    pub grid_nt: Option<usize>,
    pub t_cut: Option<f64>,
    pub log_every: Option<usize>,
    pub parallel: Option<bool>,
    pub output_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PhysicsOverlay {
    pub rho1: Option<f64>,
    pub rho2: Option<f64>,
    pub rho3: Option<f64>,
    pub b: Option<f64>,
    pub k: Option<f64>,
    pub delta: Option<f64>,
    pub beta: Option<f64>,
    pub tau: Option<f64>,
    pub mu: Option<f64>,
    pub damping: Option<String>,
    pub horizon: Option<f64>,
}

/// Initial profiles as ascending polynomial coefficients;
/// `theta0_offset` adds a constant to θ₀ after any coefficient override.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InitialOverlay {
    pub phi0: Option<Vec<f64>>,
    pub phi1: Option<Vec<f64>>,
    pub psi0: Option<Vec<f64>>,
    pub psi1: Option<Vec<f64>>,
    pub theta0: Option<Vec<f64>>,
    pub q0: Option<Vec<f64>>,
    pub theta0_offset: Option<f64>,
}

/// CLI flag overrides (last in precedence chain).
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub preset: Option<String>,
    pub epochs: Option<usize>,
    pub collocation: Option<usize>,
    pub seed: Option<u64>,
    pub learning_rate: Option<f64>,
    pub grid_nx: Option<usize>,
    pub grid_nt: Option<usize>,
    pub out: Option<PathBuf>,
    pub theta0_offset: Option<f64>,
    pub t_cut: Option<f64>,
    pub log_every: Option<usize>,
    pub parallel: Option<bool>,
}

#[derive(Debug, Clone, Serialize)]
pub struct PhysicsResolved {
    pub rho1: f64,
    pub rho2: f64,
    pub rho3: f64,
    pub b: f64,
    pub k: f64,
    pub delta: f64,
    pub beta: f64,
    pub tau: f64,
    pub mu: f64,
    pub damping: String,
    pub horizon: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct InitialResolved {
    pub phi0: Vec<f64>,
    pub phi1: Vec<f64>,
    pub psi0: Vec<f64>,
    pub psi1: Vec<f64>,
    pub theta0: Vec<f64>,
    pub q0: Vec<f64>,
}

/// The fully resolved run description; serialized as the manifest.
#[derive(Debug, Clone, Serialize)]
pub struct ResolvedConfig {
    pub preset: Option<String>,
    pub epochs: usize,
    pub collocation: usize,
    pub seed: u64,
    pub sampling_seed: u64,
    pub init_seed: u64,
    pub layers: Vec<usize>,
    pub learning_rate: f64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_epsilon: f64,
    pub physics: PhysicsResolved,
    pub boundary_kind: String,
    pub initial: InitialResolved,
    pub sources: bool,
    pub aggregation: String,
    pub grid_nx: usize,
    pub grid_nt: usize,
    pub t_cut: f64,
    pub log_every: usize,
    pub parallel: bool,
    pub output_dir: PathBuf,
    pub chi: f64,
    pub param_count: usize,
    pub has_exact_solution: bool,
}

fn damping_from_str(s: &str) -> Result<DampingKind> {
    Ok(match s {
        "none" => DampingKind::None,
        "linear" => DampingKind::Linear,
        "quadratic" => DampingKind::Quadratic,
        "singular-exp" => DampingKind::SingularExp,
        other => bail!("unknown damping kind {other:?}; expected none | linear | quadratic | singular-exp"),
    })
}

fn boundary_from_str(s: &str) -> Result<BoundaryKind> {
    Ok(match s {
        "dirichlet-all" => BoundaryKind::DirichletAll,
        "mixed" => BoundaryKind::Mixed,
        other => bail!("unknown boundary kind {other:?}; expected dirichlet-all | mixed"),
    })
}

fn boundary_name(kind: BoundaryKind) -> &'static str {
    match kind {
        BoundaryKind::DirichletAll => "dirichlet-all",
        BoundaryKind::Mixed => "mixed",
    }
}

fn aggregation_from_str(s: &str) -> Result<LossAggregation> {
    Ok(match s {
        "per-condition" => LossAggregation::PerCondition,
        "summed" => LossAggregation::SummedConditions,
        other => bail!("unknown aggregation {other:?}; expected per-condition | summed"),
    })
}

pub fn load_config_file(path: &Path) -> Result<ConfigFile> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("cannot read config file {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("cannot parse {}", path.display()))
}

/// The exact solution applies only to the unit-parameter system with
/// linear damping μ = 1 and source terms enabled.
fn exact_solution_applies(p: &PhysicalParams, sources: bool) -> bool {
    sources
        && p.damping == DampingKind::Linear
        && [p.rho1, p.rho2, p.rho3, p.b, p.k, p.delta, p.beta, p.tau, p.mu]
            .iter()
            .all(|&v| v == 1.0)
}

/// Resolve the precedence chain into a concrete run description.
pub fn resolve(file: Option<&ConfigFile>, over: &Overrides) -> Result<ResolvedConfig> {
    let preset_name = over
        .preset
        .clone()
        .or_else(|| file.and_then(|f| f.preset.clone()));
    let preset = match &preset_name {
        Some(name) => Some(presets::lookup(name).ok_or_else(|| {
            anyhow::anyhow!(
                "unknown preset {name:?}; valid presets: {}",
                presets::names().join(", ")
            )
        })?),
        None => None,
    };

    // base values: built-in defaults, then the preset
    let mut physics = preset
        .as_ref()
        .map(|p| p.physics.clone())
        .unwrap_or_else(PhysicalParams::unit);
    let mut boundary_kind = preset.as_ref().map(|p| p.boundary).unwrap_or(BoundaryKind::DirichletAll);
    let mut sources = preset.as_ref().map(|p| p.sources).unwrap_or(false);
    let mut epochs = preset.as_ref().map(|p| p.epochs).unwrap_or(DEFAULT_EPOCHS);
    let mut collocation = DEFAULT_COLLOCATION;
    let mut seed = 0u64;
    let mut layers: Vec<usize> = timopinn_core::network::DEFAULT_LAYERS.to_vec();
    let mut learning_rate = DEFAULT_LEARNING_RATE;
    let mut initial = InitialData::default();
    let mut aggregation = LossAggregation::PerCondition;
    let mut grid_nx = DEFAULT_GRID;
    let mut grid_nt = DEFAULT_GRID;
    let mut t_cut: Option<f64> = None;
    let mut log_every = 10usize;
    let mut parallel = false;
    let mut output_dir: Option<PathBuf> = None;

    // config-file overlay
    if let Some(f) = file {
        if let Some(v) = f.epochs {
            epochs = v;
        }
        if let Some(v) = f.collocation {
            collocation = v;
        }
        if let Some(v) = f.seed {
            seed = v;
        }
        if let Some(v) = &f.layers {
            layers = v.clone();
        }
        if let Some(v) = f.learning_rate {
            learning_rate = v;
        }
        if let Some(p) = &f.physics {
            if let Some(v) = p.rho1 {
                physics.rho1 = v;
            }
            if let Some(v) = p.rho2 {
                physics.rho2 = v;
            }
            if let Some(v) = p.rho3 {
                physics.rho3 = v;
            }
            if let Some(v) = p.b {
                physics.b = v;
            }
            if let Some(v) = p.k {
                physics.k = v;
            }
            if let Some(v) = p.delta {
                physics.delta = v;
            }
            if let Some(v) = p.beta {
                physics.beta = v;
            }
            if let Some(v) = p.tau {
                physics.tau = v;
            }
            if let Some(v) = p.mu {
                physics.mu = v;
            }
            if let Some(v) = &p.damping {
                physics.damping = damping_from_str(v)?;
            }
            if let Some(v) = p.horizon {
                physics.horizon = v;
            }
        }
        if let Some(v) = &f.boundary_kind {
            boundary_kind = boundary_from_str(v)?;
        }
        if let Some(i) = &f.initial {
            if let Some(v) = &i.phi0 {
                initial.phi0 = Polynomial::new(v.clone());
            }
            if let Some(v) = &i.phi1 {
                initial.phi1 = Polynomial::new(v.clone());
            }
            if let Some(v) = &i.psi0 {
                initial.psi0 = Polynomial::new(v.clone());
            }
            if let Some(v) = &i.psi1 {
                initial.psi1 = Polynomial::new(v.clone());
            }
            if let Some(v) = &i.theta0 {
                initial.theta0 = Polynomial::new(v.clone());
            }
            if let Some(v) = &i.q0 {
                initial.q0 = Polynomial::new(v.clone());
            }
            if let Some(c) = i.theta0_offset {
                initial.theta0 = offset_polynomial(&initial.theta0, c);
            }
        }
        if let Some(v) = f.sources {
            sources = v;
        }
        if let Some(v) = &f.aggregation {
            aggregation = aggregation_from_str(v)?;
        }
        if let Some(v) = f.grid_nx {
            grid_nx = v;
        }
        if let Some(v) = f.grid_nt {
            grid_nt = v;
        }
        if let Some(v) = f.t_cut {
            t_cut = Some(v);
        }
        if let Some(v) = f.log_every {
            log_every = v;
        }
        if let Some(v) = f.parallel {
            parallel = v;
        }
        if let Some(v) = &f.output_dir {
            output_dir = Some(v.clone());
        }
    }

    // CLI flag overlay
    if let Some(v) = over.epochs {
        epochs = v;
    }
    if let Some(v) = over.collocation {
        collocation = v;
    }
    if let Some(v) = over.seed {
        seed = v;
    }
    if let Some(v) = over.learning_rate {
        learning_rate = v;
    }
    if let Some(v) = over.grid_nx {
        grid_nx = v;
    }
    if let Some(v) = over.grid_nt {
        grid_nt = v;
    }
    if let Some(c) = over.theta0_offset {
        initial.theta0 = offset_polynomial(&initial.theta0, c);
    }
    if let Some(v) = over.t_cut {
        t_cut = Some(v);
    }
    if let Some(v) = over.log_every {
        log_every = v;
    }
    if let Some(v) = over.parallel {
        parallel = v;
    }

    // output dir: flag > env > file > default
    let output_dir = over
        .out
        .clone()
        .or_else(|| env::var_os(OUTPUT_DIR_ENV).map(PathBuf::from))
        .or(output_dir)
        .unwrap_or_else(|| {
            PathBuf::from("runs").join(preset_name.as_deref().unwrap_or("default"))
        });

    // validation
    physics
        .validate()
        .map_err(|e| anyhow::anyhow!("invalid physical parameters: {e}"))?;
    let layer_spec = LayerSpec::new(layers.clone())
        .map_err(|e| anyhow::anyhow!("invalid layer sizes: {e}"))?;
    if epochs == 0 {
        bail!("epochs must be at least 1");
    }
    if collocation == 0 {
        bail!("collocation size must be at least 1");
    }
    if grid_nx < 2 || grid_nt < 2 {
        bail!("grid sizes must be at least 2");
    }
    if log_every == 0 {
        bail!("log_every must be at least 1");
    }
    let t_cut = t_cut.unwrap_or(0.2 * physics.horizon);

    Ok(ResolvedConfig {
        preset: preset_name,
        epochs,
        collocation,
        seed,
        sampling_seed: seed,
        init_seed: seed.wrapping_add(1),
        layers,
        learning_rate,
        adam_beta1: 0.9,
        adam_beta2: 0.999,
        adam_epsilon: 1e-8,
        physics: PhysicsResolved {
            rho1: physics.rho1,
            rho2: physics.rho2,
            rho3: physics.rho3,
            b: physics.b,
            k: physics.k,
            delta: physics.delta,
            beta: physics.beta,
            tau: physics.tau,
            mu: physics.mu,
            damping: physics.damping.name().to_string(),
            horizon: physics.horizon,
        },
        boundary_kind: boundary_name(boundary_kind).to_string(),
        initial: InitialResolved {
            phi0: initial.phi0.coeffs().to_vec(),
            phi1: initial.phi1.coeffs().to_vec(),
            psi0: initial.psi0.coeffs().to_vec(),
            psi1: initial.psi1.coeffs().to_vec(),
            theta0: initial.theta0.coeffs().to_vec(),
            q0: initial.q0.coeffs().to_vec(),
        },
        sources,
        aggregation: match aggregation {
            LossAggregation::PerCondition => "per-condition".to_string(),
            LossAggregation::SummedConditions => "summed".to_string(),
        },
        grid_nx,
        grid_nt,
        t_cut,
        log_every,
        parallel,
        output_dir,
        chi: stability_number(&physics),
        param_count: layer_spec.param_count(),
        has_exact_solution: exact_solution_applies(&physics, sources),
    })
}

fn offset_polynomial(p: &Polynomial, c: f64) -> Polynomial {
    let mut coeffs = p.coeffs().to_vec();
    if coeffs.is_empty() {
        coeffs.push(c);
    } else {
        coeffs[0] += c;
    }
    Polynomial::new(coeffs)
}

impl ResolvedConfig {
    pub fn physical_params(&self) -> PhysicalParams {
        PhysicalParams {
            rho1: self.physics.rho1,
            rho2: self.physics.rho2,
            rho3: self.physics.rho3,
            b: self.physics.b,
            k: self.physics.k,
            delta: self.physics.delta,
            beta: self.physics.beta,
            tau: self.physics.tau,
            mu: self.physics.mu,
            damping: damping_from_str(&self.physics.damping).expect("resolved damping is valid"),
            horizon: self.physics.horizon,
        }
    }

    pub fn boundary_spec(&self) -> BoundarySpec {
        BoundarySpec::homogeneous(
            boundary_from_str(&self.boundary_kind).expect("resolved boundary kind is valid"),
        )
    }

    pub fn initial_data(&self) -> InitialData {
        InitialData {
            phi0: Polynomial::new(self.initial.phi0.clone()),
            phi1: Polynomial::new(self.initial.phi1.clone()),
            psi0: Polynomial::new(self.initial.psi0.clone()),
            psi1: Polynomial::new(self.initial.psi1.clone()),
            theta0: Polynomial::new(self.initial.theta0.clone()),
            q0: Polynomial::new(self.initial.q0.clone()),
        }
    }

    pub fn layer_spec(&self) -> LayerSpec {
        LayerSpec::new(self.layers.clone()).expect("resolved layers are valid")
    }

    pub fn train_config(&self) -> TrainConfig {
        let mut cfg = TrainConfig::new(self.physical_params(), self.boundary_spec());
        cfg.epochs = self.epochs;
        cfg.collocation = self.collocation;
        cfg.seed = self.seed;
        cfg.layers = self.layer_spec();
        cfg.initial = self.initial_data();
        cfg.with_sources = self.sources;
        cfg.aggregation = aggregation_from_str(&self.aggregation).expect("resolved aggregation");
        cfg.learning_rate = self.learning_rate;
        cfg.log_every = self.log_every;
        cfg.parallel = self.parallel;
        cfg
    }

    pub fn eval_grid(&self) -> Result<EvalGrid> {
        uniform_grid(self.grid_nx, self.grid_nt, self.physics.horizon)
            .map_err(|e| anyhow::anyhow!("cannot build evaluation grid: {e}"))
    }
}
