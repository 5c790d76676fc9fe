//! Checkpoint persistence: layer sizes, the flat parameter array (row-major
//! weights then biases per layer), the run seed, and the epoch count.
//! Numbers are written as 17-significant-digit decimals, which restores
//! every f64 bit-for-bit on load.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use anyhow::{Context, Result};
use serde::Deserialize;

use timopinn_core::network::{LayerSpec, NetworkParams};

#[derive(Debug, Clone, Deserialize)]
pub struct Checkpoint {
    pub layer_sizes: Vec<usize>,
    pub flat_params: Vec<f64>,
    pub seed: u64,
    pub epoch: usize,
}

impl Checkpoint {
    pub fn from_params(params: &NetworkParams, seed: u64, epoch: usize) -> Self {
        Checkpoint {
            layer_sizes: params.spec().sizes().to_vec(),
            flat_params: params.flat().to_vec(),
            seed,
            epoch,
        }
    }

    pub fn params(&self) -> Result<NetworkParams> {
        let spec = LayerSpec::new(self.layer_sizes.clone())
            .map_err(|e| anyhow::anyhow!("checkpoint layer sizes invalid: {e}"))?;
        NetworkParams::new(spec, self.flat_params.clone())
            .map_err(|e| anyhow::anyhow!("checkpoint parameters invalid: {e}"))
    }
}

pub fn save(path: &Path, ck: &Checkpoint) -> Result<()> {
    let file = File::create(path)
        .with_context(|| format!("cannot create checkpoint {}", path.display()))?;
    let mut w = BufWriter::new(file);
    writeln!(w, "{{")?;
    writeln!(w, "  \"layer_sizes\": {:?},", ck.layer_sizes)?;
    write!(w, "  \"flat_params\": [")?;
    for (i, p) in ck.flat_params.iter().enumerate() {
        if i > 0 {
            write!(w, ", ")?;
        }
        write!(w, "{p:.16e}")?;
    }
    writeln!(w, "],")?;
    writeln!(w, "  \"seed\": {},", ck.seed)?;
    writeln!(w, "  \"epoch\": {}", ck.epoch)?;
    writeln!(w, "}}")?;
    w.flush()?;
    Ok(())
}

pub fn load(path: &Path) -> Result<Checkpoint> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("cannot read checkpoint {}", path.display()))?;
    serde_json::from_str(&text)
        .with_context(|| format!("cannot parse checkpoint {}", path.display()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use timopinn_core::network::init_params;

    #[test]
    fn roundtrip_is_bit_exact() {
        let spec = LayerSpec::new(vec![2, 9, 4]).unwrap();
        let params = init_params(&spec, 77);
        let ck = Checkpoint::from_params(&params, 77, 123);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("checkpoint.json");
        save(&path, &ck).unwrap();
        let loaded = load(&path).unwrap();
        assert_eq!(loaded.layer_sizes, ck.layer_sizes);
        assert_eq!(loaded.seed, 77);
        assert_eq!(loaded.epoch, 123);
        assert_eq!(loaded.flat_params, ck.flat_params);
        assert_eq!(loaded.params().unwrap().flat(), params.flat());
    }
}
