//! Artifact writers. CSV numerics use 17-significant-digit scientific
//! notation so files are reproducible bit-for-bit across runs.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use anyhow::{Context, Result};
use serde_json::json;

use timopinn_core::diagnostics::{DecayClassification, DecayModel, EnergySeries};
use timopinn_core::training::HistoryRow;

use crate::config::ResolvedConfig;

fn writer(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).with_context(|| {
        format!("cannot create {}", path.display())
    })?))
}

pub fn write_loss_history(path: &Path, history: &[HistoryRow]) -> Result<()> {
    let mut w = writer(path)?;
    writeln!(
        w,
        "epoch,total,mse_pde1,mse_pde2,mse_pde3,mse_pde4,mse_bc0,mse_bc1,mse_ic_val,mse_ic_vel"
    )?;
    for row in history {
        write!(w, "{},{:.16e}", row.epoch, row.loss.total)?;
        for m in row.loss.mse {
            write!(w, ",{m:.16e}")?;
        }
        writeln!(w)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_energy(path: &Path, series: &EnergySeries) -> Result<()> {
    let mut w = writer(path)?;
    writeln!(w, "t,E")?;
    for (t, e) in series.ts.iter().zip(&series.energies) {
        writeln!(w, "{t:.16e},{e:.16e}")?;
    }
    w.flush()?;
    Ok(())
}

/// Per-time 2-norm errors per field, closed by a summary row of per-field
/// relative errors (first column holds the literal `relative`).
pub fn write_errors(path: &Path, ts: &[f64], l2: &[[f64; 4]], relative: [f64; 4]) -> Result<()> {
    let mut w = writer(path)?;
    writeln!(w, "t,l2_phi,l2_psi,l2_theta,l2_q")?;
    for (t, row) in ts.iter().zip(l2) {
        write!(w, "{t:.16e}")?;
        for v in row {
            write!(w, ",{v:.16e}")?;
        }
        writeln!(w)?;
    }
    write!(w, "relative")?;
    for v in relative {
        write!(w, ",{v:.16e}")?;
    }
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

pub fn write_fits(path: &Path, classification: &DecayClassification, t_cut: f64) -> Result<()> {
    let model_json = |m: DecayModel| {
        classification.fit(m).map(|f| {
            json!({
                "slope": f.slope,
                "intercept": f.intercept,
                "r_squared": f.r_squared,
                "points_used": f.used,
                "points_excluded": f.excluded,
            })
        })
    };
    let doc = json!({
        "t_cut": t_cut,
        "best": classification.best.name(),
        "e_inf": classification.best_fit().e_inf,
        "models": {
            "exponential": model_json(DecayModel::Exponential),
            "polynomial": model_json(DecayModel::Polynomial),
            "logarithmic": model_json(DecayModel::Logarithmic),
        },
    });
    let mut w = writer(path)?;
    serde_json::to_writer_pretty(&mut w, &doc)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

pub fn write_manifest(path: &Path, resolved: &ResolvedConfig) -> Result<()> {
    let mut w = writer(path)?;
    serde_json::to_writer_pretty(&mut w, resolved)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}
