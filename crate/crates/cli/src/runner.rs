//! Run orchestration: train, evaluate the diagnostic grid, and persist
//! artifacts; `analyze` repeats the diagnostics for an existing checkpoint
//! without retraining.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};

use timopinn_core::diagnostics::{
    classify_decay, discrete_energy, l2_error_series, relative_error, FieldGrid,
};
use timopinn_core::network::{forward_values, NetworkParams};
use timopinn_core::physics::exact_solution;
use timopinn_core::sampling::sample_collocation;
use timopinn_core::training::{train_observed, TrainError};

use crate::artifacts;
use crate::checkpoint::{self, Checkpoint};
use crate::config::ResolvedConfig;

#[derive(Debug, Clone)]
pub struct RunPaths {
    pub dir: PathBuf,
    pub checkpoint: PathBuf,
    pub loss_history: PathBuf,
    pub energy: PathBuf,
    pub fits: PathBuf,
    pub manifest: PathBuf,
    pub errors: Option<PathBuf>,
}

/// Train per the resolved config and write every artifact. On a non-finite
/// abort the last good checkpoint and partial history are still written
/// before the error surfaces.
pub fn run(resolved: &ResolvedConfig) -> Result<RunPaths> {
    fs::create_dir_all(&resolved.output_dir).with_context(|| {
        format!("cannot create output directory {}", resolved.output_dir.display())
    })?;
    let dir = resolved.output_dir.clone();
    let cfg = resolved.train_config();
    let batch = sample_collocation(cfg.collocation, resolved.physics.horizon, cfg.seed)
        .map_err(|e| anyhow::anyhow!("sampling failed: {e}"))?;

    let report_every = (resolved.epochs / 20).max(1);
    let outcome = match train_observed(&cfg, &batch, |epoch, loss| {
        if epoch % report_every == 0 {
            eprintln!(
                "epoch {epoch:>6}/{}: total {:.6e} (pde {:.3e}, bc {:.3e}, ic {:.3e})",
                resolved.epochs,
                loss.total,
                loss.pde_total(),
                loss.boundary_total(),
                loss.initial_total()
            );
        }
    }) {
        Ok(out) => out,
        Err(TrainError::NonFinite {
            epoch,
            what,
            last_good,
        }) => {
            let ck_path = dir.join("checkpoint.json");
            checkpoint::save(
                &ck_path,
                &Checkpoint::from_params(&last_good.params, resolved.seed, epoch),
            )?;
            artifacts::write_loss_history(&dir.join("loss_history.csv"), &last_good.history)?;
            bail!(
                "{what} became non-finite at epoch {epoch}; \
                 last good checkpoint written to {}",
                ck_path.display()
            );
        }
        Err(e) => return Err(anyhow::anyhow!("training failed: {e}")),
    };

    let paths = RunPaths {
        checkpoint: dir.join("checkpoint.json"),
        loss_history: dir.join("loss_history.csv"),
        energy: dir.join("energy.csv"),
        fits: dir.join("fits.json"),
        manifest: dir.join("manifest.json"),
        errors: resolved.has_exact_solution.then(|| dir.join("errors.csv")),
        dir,
    };

    checkpoint::save(
        &paths.checkpoint,
        &Checkpoint::from_params(&outcome.params, resolved.seed, resolved.epochs),
    )?;
    artifacts::write_loss_history(&paths.loss_history, &outcome.history)?;
    write_diagnostics(&outcome.params, resolved, &paths)?;
    artifacts::write_manifest(&paths.manifest, resolved)?;
    Ok(paths)
}

/// Re-run the diagnostic stage (grid evaluation, energy, fits, errors) for
/// an existing checkpoint. No retraining, no manifest.
pub fn analyze(checkpoint_path: &Path, resolved: &ResolvedConfig) -> Result<RunPaths> {
    let ck = checkpoint::load(checkpoint_path)?;
    if ck.layer_sizes != resolved.layers {
        bail!(
            "checkpoint architecture {:?} does not match configured layers {:?}",
            ck.layer_sizes,
            resolved.layers
        );
    }
    let params = ck.params()?;
    fs::create_dir_all(&resolved.output_dir).with_context(|| {
        format!("cannot create output directory {}", resolved.output_dir.display())
    })?;
    let dir = resolved.output_dir.clone();
    let paths = RunPaths {
        checkpoint: checkpoint_path.to_path_buf(),
        loss_history: dir.join("loss_history.csv"),
        energy: dir.join("energy.csv"),
        fits: dir.join("fits.json"),
        manifest: dir.join("manifest.json"),
        errors: resolved.has_exact_solution.then(|| dir.join("errors.csv")),
        dir,
    };
    write_diagnostics(&params, resolved, &paths)?;
    Ok(paths)
}

fn write_diagnostics(
    params: &NetworkParams,
    resolved: &ResolvedConfig,
    paths: &RunPaths,
) -> Result<()> {
    let grid = resolved.eval_grid()?;
    let fields = FieldGrid::from_fn(&grid, |x, t| forward_values(params, x, t));
    let physics = resolved.physical_params();

    let series = discrete_energy(&grid, &fields, &physics)
        .map_err(|e| anyhow::anyhow!("energy evaluation failed: {e}"))?;
    artifacts::write_energy(&paths.energy, &series)?;

    let classification = classify_decay(&series, resolved.t_cut)
        .map_err(|e| anyhow::anyhow!("decay classification failed: {e}"))?;
    artifacts::write_fits(&paths.fits, &classification, resolved.t_cut)?;

    if let Some(errors_path) = &paths.errors {
        let exact = FieldGrid::from_fn(&grid, |x, t| exact_solution(x, t).values());
        let l2 = l2_error_series(&fields, &exact)
            .map_err(|e| anyhow::anyhow!("error series failed: {e}"))?;
        let mut rel = [0.0; 4];
        for (i, (pred, reference)) in fields.fields().iter().zip(exact.fields().iter()).enumerate()
        {
            rel[i] = relative_error(pred, reference)
                .map_err(|e| anyhow::anyhow!("relative error failed: {e}"))?;
        }
        artifacts::write_errors(errors_path, &grid.ts, &l2, rel)?;
    }
    Ok(())
}
