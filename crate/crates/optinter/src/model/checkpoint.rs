use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::arch::{ArchitectureDecision, Method};
use super::config::ModelConfig;
use super::network::{DataDims, Mode, OptInterModel};
use super::ModelError;

// Layout: magic, format version, length-prefixed JSON header (config, dims
// with schema hash, mode, array directory), then one length-prefixed
// little-endian f64 array per parameter block in directory order.
const CKPT_MAGIC: &[u8; 8] = b"OPTINTER";
const CKPT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct ArrayEntry {
    name: String,
    rows: usize,
    cols: usize,
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum ModeRepr {
    Relaxed,
    /// Method names in canonical pair order.
    Fixed(Vec<String>),
}

#[derive(Serialize, Deserialize)]
struct CheckpointHeader {
    config: ModelConfig,
    dims: DataDims,
    mode: ModeRepr,
    arrays: Vec<ArrayEntry>,
}

pub fn save_checkpoint(model: &OptInterModel, path: &Path) -> Result<(), ModelError> {
    let mode = match model.mode() {
        Mode::Relaxed => ModeRepr::Relaxed,
        Mode::Fixed(decision) => {
            ModeRepr::Fixed(decision.methods().iter().map(|m| m.name().to_string()).collect())
        }
    };
    let params = model.named_parameters();
    let arrays = params
        .iter()
        .map(|(name, p)| ArrayEntry {
            name: name.clone(),
            rows: p.value.rows(),
            cols: p.value.cols(),
        })
        .collect();
    let header = CheckpointHeader {
        config: model.config().clone(),
        dims: model.dims().clone(),
        mode,
        arrays,
    };
    let header_bytes = serde_json::to_vec(&header)?;

    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    out.write_all(CKPT_MAGIC)?;
    out.write_all(&CKPT_VERSION.to_le_bytes())?;
    out.write_all(&(header_bytes.len() as u64).to_le_bytes())?;
    out.write_all(&header_bytes)?;
    for (_, p) in &params {
        out.write_all(&(p.value.len() as u64).to_le_bytes())?;
        for v in p.value.data() {
            out.write_all(&v.to_le_bytes())?;
        }
    }
    out.flush()?;
    Ok(())
}

/// Rebuilds the model and restores every parameter block bit-exactly.
/// When `expected_schema_hash` is given, a mismatch is a hard error.
pub fn load_checkpoint(
    path: &Path,
    expected_schema_hash: Option<&str>,
) -> Result<OptInterModel, ModelError> {
    let mut input = std::io::BufReader::new(std::fs::File::open(path)?);
    let mut magic = [0u8; 8];
    input.read_exact(&mut magic)?;
    if &magic != CKPT_MAGIC {
        return Err(ModelError::Checkpoint(format!("{}: not a checkpoint file", path.display())));
    }
    let mut word = [0u8; 4];
    input.read_exact(&mut word)?;
    let version = u32::from_le_bytes(word);
    if version != CKPT_VERSION {
        return Err(ModelError::Checkpoint(format!("unsupported checkpoint version {version}")));
    }
    let mut len8 = [0u8; 8];
    input.read_exact(&mut len8)?;
    let header_len = u64::from_le_bytes(len8) as usize;
    let mut header_bytes = vec![0u8; header_len];
    input.read_exact(&mut header_bytes)?;
    let header: CheckpointHeader = serde_json::from_slice(&header_bytes)?;

    if let Some(expected) = expected_schema_hash {
        if header.dims.schema_hash != expected {
            return Err(ModelError::Checkpoint(format!(
                "schema hash mismatch: checkpoint {} vs data {}",
                header.dims.schema_hash, expected
            )));
        }
    }

    let mut model = match &header.mode {
        ModeRepr::Relaxed => OptInterModel::new_relaxed(header.dims.clone(), header.config.clone())?,
        ModeRepr::Fixed(names) => {
            let methods = names
                .iter()
                .map(|n| match n.as_str() {
                    "memorize" => Ok(Method::Memorize),
                    "factorize" => Ok(Method::Factorize),
                    "naive" => Ok(Method::Naive),
                    other => Err(ModelError::Checkpoint(format!("unknown method {other:?}"))),
                })
                .collect::<Result<Vec<_>, _>>()?;
            OptInterModel::new_fixed(
                header.dims.clone(),
                header.config.clone(),
                ArchitectureDecision::new(methods),
            )?
        }
    };

    let mut params = model.named_parameters_mut();
    if params.len() != header.arrays.len() {
        return Err(ModelError::Checkpoint(format!(
            "checkpoint has {} arrays, model has {} parameter blocks",
            header.arrays.len(),
            params.len()
        )));
    }
    for (entry, (name, p)) in header.arrays.iter().zip(params.iter_mut()) {
        if &entry.name != name || entry.rows != p.value.rows() || entry.cols != p.value.cols() {
            return Err(ModelError::Checkpoint(format!(
                "array {} ({}x{}) does not match block {} ({:?})",
                entry.name,
                entry.rows,
                entry.cols,
                name,
                p.value.shape()
            )));
        }
        input.read_exact(&mut len8)?;
        let n = u64::from_le_bytes(len8) as usize;
        if n != p.value.len() {
            return Err(ModelError::Checkpoint(format!(
                "array {}: {} values, expected {}",
                entry.name,
                n,
                p.value.len()
            )));
        }
        let mut buf = [0u8; 8];
        for slot in p.value.data_mut() {
            input.read_exact(&mut buf)?;
            *slot = f64::from_le_bytes(buf);
        }
    }
    Ok(model)
}
