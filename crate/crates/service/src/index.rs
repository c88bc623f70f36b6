//! Precomputed temporal frame representations for every indexed video.
//!
//! ```text
//! b"DTVI" | version: u16 LE | fp_len: u16 LE | checkpoint fingerprint (hex)
//!        | count: u32 LE | dim: u32 LE
//!        | per video: id_len: u16 LE | id (UTF-8) | rows: u32 LE | rows·dim f64 LE
//! ```
//!
//! Values are stored at full precision so online scores match batch
//! evaluation exactly.

use std::fs;
use std::io;
use std::path::Path;

use dtv_core::model::{ModelError, ModelParams, VideoRecord};
use dtv_core::Tensor;
use thiserror::Error;

pub const MAGIC: &[u8; 4] = b"DTVI";
pub const VERSION: u16 = 1;

#[derive(Debug, Error)]
pub enum IndexError {
    #[error("index i/o: {0}")]
    Io(#[from] io::Error),
    #[error("not an index file: bad magic {0:?}")]
    BadMagic([u8; 4]),
    #[error("unsupported index version {0}")]
    UnsupportedVersion(u16),
    #[error("index truncated while reading {0}")]
    Truncated(&'static str),
    #[error("index is malformed: {0}")]
    Malformed(String),
    #[error("index was built for checkpoint {index} but checkpoint {checkpoint} is loaded; rebuild the index")]
    StaleCheckpoint { index: String, checkpoint: String },
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Index {
    pub fingerprint: String,
    pub dim: usize,
    /// Sorted ascending; ranking ties break on this order.
    pub video_ids: Vec<String>,
    pub temporal: Vec<Tensor>,
}

impl Index {
    pub fn build(params: &ModelParams, videos: &[VideoRecord]) -> Result<Self, IndexError> {
        let mut videos: Vec<&VideoRecord> = videos.iter().collect();
        videos.sort_by(|a, b| a.video_id.cmp(&b.video_id));
        if videos.windows(2).any(|w| w[0].video_id == w[1].video_id) {
            return Err(IndexError::Malformed("duplicate video id".into()));
        }
        let temporal = videos
            .iter()
            .map(|v| params.encode_frames(v))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self {
            fingerprint: params.fingerprint(),
            dim: params.config.dim,
            video_ids: videos.iter().map(|v| v.video_id.clone()).collect(),
            temporal,
        })
    }

    pub fn len(&self) -> usize {
        self.video_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.video_ids.is_empty()
    }

    pub fn position(&self, video_id: &str) -> Option<usize> {
        self.video_ids.binary_search_by(|v| v.as_str().cmp(video_id)).ok()
    }

    pub fn check_checkpoint(&self, params: &ModelParams) -> Result<(), IndexError> {
        let fp = params.fingerprint();
        if fp != self.fingerprint {
            return Err(IndexError::StaleCheckpoint {
                index: self.fingerprint.clone(),
                checkpoint: fp,
            });
        }
        Ok(())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&(self.fingerprint.len() as u16).to_le_bytes());
        out.extend_from_slice(self.fingerprint.as_bytes());
        out.extend_from_slice(&(self.len() as u32).to_le_bytes());
        out.extend_from_slice(&(self.dim as u32).to_le_bytes());
        for (id, t) in self.video_ids.iter().zip(&self.temporal) {
            out.extend_from_slice(&(id.len() as u16).to_le_bytes());
            out.extend_from_slice(id.as_bytes());
            out.extend_from_slice(&(t.rows() as u32).to_le_bytes());
            for v in t.data() {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, IndexError> {
        let mut r = Reader(bytes);
        let magic: [u8; 4] = r.take(4, "magic")?.try_into().expect("4 bytes");
        if &magic != MAGIC {
            return Err(IndexError::BadMagic(magic));
        }
        let version = r.u16("version")?;
        if version != VERSION {
            return Err(IndexError::UnsupportedVersion(version));
        }
        let fp_len = r.u16("fingerprint length")? as usize;
        let fingerprint = r.string(fp_len, "fingerprint")?;
        let count = r.u32("count")? as usize;
        let dim = r.u32("dim")? as usize;
        let mut video_ids = Vec::with_capacity(count.min(1 << 16));
        let mut temporal = Vec::with_capacity(count.min(1 << 16));
        for _ in 0..count {
            let id_len = r.u16("id length")? as usize;
            video_ids.push(r.string(id_len, "id")?);
            let rows = r.u32("rows")? as usize;
            let raw = r.take(rows * dim * 8, "frame data")?;
            let data = raw
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
                .collect();
            temporal.push(Tensor::new(rows, dim, data).map_err(ModelError::from)?);
        }
        if !r.0.is_empty() {
            return Err(IndexError::Malformed(format!("{} trailing bytes", r.0.len())));
        }
        if video_ids.windows(2).any(|w| w[0] >= w[1]) {
            return Err(IndexError::Malformed("video ids not strictly sorted".into()));
        }
        Ok(Self {
            fingerprint,
            dim,
            video_ids,
            temporal,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), IndexError> {
        Ok(fs::write(path, self.to_bytes())?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, IndexError> {
        Self::from_bytes(&fs::read(path)?)
    }
}

struct Reader<'a>(&'a [u8]);

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &'static str) -> Result<&'a [u8], IndexError> {
        if self.0.len() < n {
            return Err(IndexError::Truncated(what));
        }
        let (head, tail) = self.0.split_at(n);
        self.0 = tail;
        Ok(head)
    }

    fn u16(&mut self, what: &'static str) -> Result<u16, IndexError> {
        Ok(u16::from_le_bytes(self.take(2, what)?.try_into().expect("2 bytes")))
    }

    fn u32(&mut self, what: &'static str) -> Result<u32, IndexError> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().expect("4 bytes")))
    }

    fn string(&mut self, n: usize, what: &'static str) -> Result<String, IndexError> {
        String::from_utf8(self.take(n, what)?.to_vec()).map_err(|_| IndexError::Malformed(format!("{what} is not UTF-8")))
    }
}
