//! Binary model checkpoints.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! magic      8 bytes  "RKCLSCKP"
//! version    u32      1
//! header_len u64
//! header     JSON     variant, architecture, class names, grid, history,
//!                     best epoch, provenance, tensor names and shapes
//! tensors    f64 LE   every parameter tensor, in header order
//! ```
//!
//! Values are stored as raw IEEE-754 bits, so save/load is bit-exact.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::network::{Architecture, Network, Param};
use super::{EpochRecord, Model, ModelVariant};
use crate::provenance::Provenance;
use crate::spectra::GridSpec;

const MAGIC: &[u8; 8] = b"RKCLSCKP";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("checkpoint I/O: {0}")]
    Io(#[from] std::io::Error),
    #[error("not a rockclass checkpoint")]
    BadMagic,
    #[error("unsupported checkpoint version {0}")]
    UnsupportedVersion(u32),
    #[error("corrupt checkpoint header: {0}")]
    Header(String),
    #[error("tensor {name} has shape {found:?}, architecture declares {expected:?}")]
    TensorShape {
        name: String,
        expected: Vec<usize>,
        found: Vec<usize>,
    },
    #[error("trailing bytes after the last tensor")]
    TrailingData,
}

#[derive(Serialize, Deserialize)]
struct Header {
    variant: ModelVariant,
    architecture: Architecture,
    class_names: Vec<String>,
    grid: GridSpec,
    history: Vec<EpochRecord>,
    best_epoch: usize,
    provenance: Provenance,
    tensors: Vec<Param>,
}

pub fn write_checkpoint<W: Write>(mut w: W, model: &Model, provenance: &Provenance) -> Result<(), CheckpointError> {
    let header = Header {
        variant: model.variant,
        architecture: model.network.arch.clone(),
        class_names: model.class_names.clone(),
        grid: model.grid,
        history: model.history.clone(),
        best_epoch: model.best_epoch,
        provenance: provenance.clone(),
        tensors: model.network.params.clone(),
    };
    let json = serde_json::to_vec(&header).map_err(|e| CheckpointError::Header(e.to_string()))?;
    w.write_all(MAGIC)?;
    w.write_all(&CHECKPOINT_VERSION.to_le_bytes())?;
    w.write_all(&(json.len() as u64).to_le_bytes())?;
    w.write_all(&json)?;
    let mut buf = Vec::with_capacity(model.network.num_parameters() * 8);
    for p in &model.network.params {
        for v in &p.values {
            buf.extend_from_slice(&v.to_le_bytes());
        }
    }
    w.write_all(&buf)?;
    w.flush()?;
    Ok(())
}

pub fn read_checkpoint<R: Read>(mut r: R) -> Result<(Model, Provenance), CheckpointError> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(CheckpointError::BadMagic);
    }
    let mut word = [0u8; 4];
    r.read_exact(&mut word)?;
    let version = u32::from_le_bytes(word);
    if version != CHECKPOINT_VERSION {
        return Err(CheckpointError::UnsupportedVersion(version));
    }
    let mut len = [0u8; 8];
    r.read_exact(&mut len)?;
    let header_len = u64::from_le_bytes(len) as usize;
    let mut json = vec![0u8; header_len];
    r.read_exact(&mut json)?;
    let header: Header = serde_json::from_slice(&json).map_err(|e| CheckpointError::Header(e.to_string()))?;
    header
        .architecture
        .validate()
        .map_err(|e| CheckpointError::Header(e.to_string()))?;

    let mut params = header.architecture.zero_params();
    if params.len() != header.tensors.len() {
        return Err(CheckpointError::Header(format!(
            "{} tensors declared, architecture needs {}",
            header.tensors.len(),
            params.len()
        )));
    }
    for (p, declared) in params.iter_mut().zip(&header.tensors) {
        if p.shape != declared.shape || p.name != declared.name {
            return Err(CheckpointError::TensorShape {
                name: declared.name.clone(),
                expected: p.shape.clone(),
                found: declared.shape.clone(),
            });
        }
        let mut bytes = vec![0u8; p.len() * 8];
        r.read_exact(&mut bytes)?;
        for (v, chunk) in p.values.iter_mut().zip(bytes.chunks_exact(8)) {
            *v = f64::from_le_bytes(chunk.try_into().expect("8-byte chunk"));
        }
    }
    let mut rest = [0u8; 1];
    if r.read(&mut rest)? != 0 {
        return Err(CheckpointError::TrailingData);
    }
    if header.class_names.len() != header.architecture.num_classes() {
        return Err(CheckpointError::Header("class list does not match output width".into()));
    }

    let model = Model {
        variant: header.variant,
        network: Network {
            arch: header.architecture,
            params,
        },
        class_names: header.class_names,
        grid: header.grid,
        history: header.history,
        best_epoch: header.best_epoch,
    };
    Ok((model, header.provenance))
}

pub fn save_checkpoint(path: &Path, model: &Model, provenance: &Provenance) -> Result<(), CheckpointError> {
    let file = std::fs::File::create(path)?;
    write_checkpoint(std::io::BufWriter::new(file), model, provenance)
}

pub fn load_checkpoint(path: &Path) -> Result<(Model, Provenance), CheckpointError> {
    let file = std::fs::File::open(path)?;
    read_checkpoint(std::io::BufReader::new(file))
}
