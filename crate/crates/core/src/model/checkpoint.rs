//! Checkpoint container.
//!
//! ```text
//! b"DTVC" | version: u16 LE | header_len: u32 LE | header JSON
//!        | f32 LE blocks, one per tensor, in header order
//! ```
//!
//! The header carries the architecture config and the name and shape of
//! every tensor block.

use std::fs;
use std::io::{self, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::config::{InitScheme, ModelConfig};
use super::params::ModelParams;
use super::ModelError;
use crate::tensor::Tensor;

pub const MAGIC: &[u8; 4] = b"DTVC";
pub const VERSION: u16 = 1;

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("checkpoint i/o: {0}")]
    Io(#[from] io::Error),
    #[error("not a checkpoint: bad magic {0:?}")]
    BadMagic([u8; 4]),
    #[error("unsupported checkpoint version {0}")]
    UnsupportedVersion(u16),
    #[error("malformed checkpoint header: {0}")]
    Header(#[from] serde_json::Error),
    #[error("checkpoint truncated while reading {0}")]
    Truncated(String),
    #[error("checkpoint layout does not match its config: {0}")]
    Layout(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Serialize, Deserialize)]
struct TensorEntry {
    name: String,
    rows: usize,
    cols: usize,
}

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    config: ModelConfig,
    tensors: Vec<TensorEntry>,
}

impl ModelParams {
    pub fn to_checkpoint_bytes(&self) -> Vec<u8> {
        let mut tensors = Vec::new();
        self.weights.for_each(|name, t| {
            tensors.push(TensorEntry {
                name: name.to_string(),
                rows: t.rows(),
                cols: t.cols(),
            })
        });
        let header = serde_json::to_vec(&Header {
            config: self.config.clone(),
            tensors,
        })
        .expect("header serializes");

        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&(header.len() as u32).to_le_bytes());
        out.extend_from_slice(&header);
        for t in self.weights.values() {
            for v in t.data() {
                out.extend_from_slice(&(*v as f32).to_le_bytes());
            }
        }
        out
    }

    pub fn from_checkpoint_bytes(bytes: &[u8]) -> Result<Self, CheckpointError> {
        let mut r = bytes;
        let mut magic = [0u8; 4];
        read_exact(&mut r, &mut magic, "magic")?;
        if &magic != MAGIC {
            return Err(CheckpointError::BadMagic(magic));
        }
        let mut buf2 = [0u8; 2];
        read_exact(&mut r, &mut buf2, "version")?;
        let version = u16::from_le_bytes(buf2);
        if version != VERSION {
            return Err(CheckpointError::UnsupportedVersion(version));
        }
        let mut buf4 = [0u8; 4];
        read_exact(&mut r, &mut buf4, "header length")?;
        let header_len = u32::from_le_bytes(buf4) as usize;
        if r.len() < header_len {
            return Err(CheckpointError::Truncated("header".into()));
        }
        let header: Header = serde_json::from_slice(&r[..header_len])?;
        r = &r[header_len..];

        let mut params = ModelParams::init(header.config, InitScheme::Aligned, 0)?;
        let expected = params.weights.names();
        if expected.len() != header.tensors.len() {
            return Err(CheckpointError::Layout(format!(
                "expected {} tensors, header lists {}",
                expected.len(),
                header.tensors.len()
            )));
        }
        for ((name, slot), entry) in expected
            .iter()
            .zip(params.weights.values_mut())
            .zip(&header.tensors)
        {
            if name != &entry.name || slot.shape() != [entry.rows, entry.cols] {
                return Err(CheckpointError::Layout(format!(
                    "tensor {name} {:?} vs header {} [{}, {}]",
                    slot.shape(),
                    entry.name,
                    entry.rows,
                    entry.cols
                )));
            }
            let len = entry.rows * entry.cols;
            if r.len() < len * 4 {
                return Err(CheckpointError::Truncated(entry.name.clone()));
            }
            let data: Vec<f64> = r[..len * 4]
                .chunks_exact(4)
                .map(|c| f64::from(f32::from_le_bytes([c[0], c[1], c[2], c[3]])))
                .collect();
            *slot = Tensor::new(entry.rows, entry.cols, data).map_err(ModelError::from)?;
            r = &r[len * 4..];
        }
        if !r.is_empty() {
            return Err(CheckpointError::Layout(format!("{} trailing bytes", r.len())));
        }
        Ok(params)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), CheckpointError> {
        let mut f = fs::File::create(path)?;
        f.write_all(&self.to_checkpoint_bytes())?;
        f.sync_all()?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, CheckpointError> {
        let mut bytes = Vec::new();
        fs::File::open(path)?.read_to_end(&mut bytes)?;
        Self::from_checkpoint_bytes(&bytes)
    }

    /// Rounds every parameter through `f32`, matching a save/load cycle.
    pub fn quantized(&self) -> Self {
        let mut out = self.clone();
        for t in out.weights.values_mut() {
            for v in t.data_mut() {
                *v = f64::from(*v as f32);
            }
        }
        out
    }
}

fn read_exact(r: &mut &[u8], buf: &mut [u8], what: &str) -> Result<(), CheckpointError> {
    r.read_exact(buf)
        .map_err(|_| CheckpointError::Truncated(what.to_string()))
}
