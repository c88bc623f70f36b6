//! DTVE embedding container.
//!
//! ```text
//! b"DTVE" | version: u16 | count: u32 | dim: u32
//! count × ( id_len: u16 | id: UTF-8 | rows: u32 | rows·dim f32 )
//! ```
//!
//! All integers and floats are little-endian. A file is decoded completely
//! before anything is returned, so a corrupt file never yields partial data.

use std::fs;
use std::io;
use std::path::Path;

use thiserror::Error;

use crate::embedding::EmbeddingMatrix;

pub const MAGIC: &[u8; 4] = b"DTVE";
pub const VERSION: u16 = 1;

#[derive(Debug, Error)]
pub enum ContainerError {
    #[error("embedding file i/o: {0}")]
    Io(#[from] io::Error),
    #[error("not an embedding container: bad magic {0:?}")]
    BadMagic([u8; 4]),
    #[error("unsupported embedding container version {0}")]
    UnsupportedVersion(u16),
    #[error("embedding container truncated in {0}")]
    Truncated(&'static str),
    #[error("embedding dimension mismatch: expected {expected}, found {found}")]
    DimMismatch { expected: usize, found: usize },
    #[error("invalid record id: {0}")]
    InvalidId(String),
    #[error("{0} trailing bytes after last record")]
    TrailingBytes(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingRecord {
    pub id: String,
    pub matrix: EmbeddingMatrix,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingFile {
    pub dim: usize,
    pub records: Vec<EmbeddingRecord>,
}

pub fn encode(dim: usize, records: &[EmbeddingRecord]) -> Result<Vec<u8>, ContainerError> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(records.len() as u32).to_le_bytes());
    out.extend_from_slice(&(dim as u32).to_le_bytes());
    for rec in records {
        if rec.matrix.dim() != dim {
            return Err(ContainerError::DimMismatch {
                expected: dim,
                found: rec.matrix.dim(),
            });
        }
        let id = rec.id.as_bytes();
        let id_len = u16::try_from(id.len()).map_err(|_| ContainerError::InvalidId(rec.id.clone()))?;
        out.extend_from_slice(&id_len.to_le_bytes());
        out.extend_from_slice(id);
        out.extend_from_slice(&(rec.matrix.rows() as u32).to_le_bytes());
        for v in rec.matrix.data() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    Ok(out)
}

struct Cursor<'a>(&'a [u8]);

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize, what: &'static str) -> Result<&'a [u8], ContainerError> {
        if self.0.len() < n {
            return Err(ContainerError::Truncated(what));
        }
        let (head, tail) = self.0.split_at(n);
        self.0 = tail;
        Ok(head)
    }

    fn u16(&mut self, what: &'static str) -> Result<u16, ContainerError> {
        let b = self.take(2, what)?;
        Ok(u16::from_le_bytes([b[0], b[1]]))
    }

    fn u32(&mut self, what: &'static str) -> Result<u32, ContainerError> {
        let b = self.take(4, what)?;
        Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
    }
}

pub fn decode(bytes: &[u8]) -> Result<EmbeddingFile, ContainerError> {
    let mut c = Cursor(bytes);
    let magic = c.take(4, "magic")?;
    if magic != MAGIC {
        return Err(ContainerError::BadMagic([magic[0], magic[1], magic[2], magic[3]]));
    }
    let version = c.u16("version")?;
    if version != VERSION {
        return Err(ContainerError::UnsupportedVersion(version));
    }
    let count = c.u32("count")? as usize;
    let dim = c.u32("dim")? as usize;
    let mut records = Vec::with_capacity(count.min(1 << 16));
    for _ in 0..count {
        let id_len = c.u16("record id length")? as usize;
        let id = std::str::from_utf8(c.take(id_len, "record id")?)
            .map_err(|e| ContainerError::InvalidId(e.to_string()))?
            .to_string();
        let rows = c.u32("record rows")? as usize;
        let raw = c.take(rows * dim * 4, "record data")?;
        let data = raw
            .chunks_exact(4)
            .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]))
            .collect();
        let matrix = EmbeddingMatrix::new(rows, dim, data).map_err(|_| ContainerError::DimMismatch {
            expected: dim,
            found: 0,
        })?;
        records.push(EmbeddingRecord { id, matrix });
    }
    if !c.0.is_empty() {
        return Err(ContainerError::TrailingBytes(c.0.len()));
    }
    Ok(EmbeddingFile { dim, records })
}

pub fn write_embeddings(path: impl AsRef<Path>, dim: usize, records: &[EmbeddingRecord]) -> Result<(), ContainerError> {
    fs::write(path, encode(dim, records)?)?;
    Ok(())
}

pub fn read_embeddings(path: impl AsRef<Path>) -> Result<EmbeddingFile, ContainerError> {
    decode(&fs::read(path)?)
}
