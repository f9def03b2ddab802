//! Binary checkpoints: magic, config hash, parameter count, then the flat
//! parameter vector as little-endian `f64`.

use std::fs;
use std::io::Write;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::models::{Model, ModelConfig};

const MAGIC: &[u8; 8] = b"QPQCCKPT";
const HEADER: usize = 8 + 32 + 8;

pub fn config_hash(config: &ModelConfig) -> [u8; 32] {
    Sha256::digest(format!("{config:?}").as_bytes()).into()
}

pub fn save_checkpoint(model: &Model, path: &Path) -> Result<()> {
    let mut bytes = Vec::with_capacity(HEADER + 8 * model.params.len());
    bytes.extend_from_slice(MAGIC);
    bytes.extend_from_slice(&config_hash(&model.config));
    bytes.extend_from_slice(&(model.params.len() as u64).to_le_bytes());
    for p in &model.params {
        bytes.extend_from_slice(&p.to_le_bytes());
    }
    let tmp = path.with_extension("tmp");
    let mut f = fs::File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
    f.write_all(&bytes).map_err(|e| Error::io(&tmp, e))?;
    f.sync_all().map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

/// Loads parameters into `model`, refusing files written for another config.
pub fn load_checkpoint(model: &mut Model, path: &Path) -> Result<()> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let bad = |msg: &str| Error::ingestion(path.display().to_string(), msg.to_string());
    if bytes.len() < HEADER || &bytes[..8] != MAGIC {
        return Err(bad("not a checkpoint file"));
    }
    if bytes[8..40] != config_hash(&model.config) {
        return Err(bad("checkpoint was written for a different model configuration"));
    }
    let count = u64::from_le_bytes(bytes[40..48].try_into().unwrap()) as usize;
    if count != model.param_count() || bytes.len() != HEADER + 8 * count {
        return Err(bad("parameter count does not match the model"));
    }
    model.params = bytes[HEADER..]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok(())
}
