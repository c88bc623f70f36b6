//! Corpus data model: manifest, DTVE embedding files, splits, the synthetic
//! generator, and loading splits into model records.
//!
//! On disk a corpus is a directory holding `manifest.json` plus one video
//! file and one dialogue file per split. A dialogue is paired with the video
//! that carries the same id.

pub mod container;
pub mod split;
pub mod synth;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use container::{read_embeddings, write_embeddings, ContainerError, EmbeddingFile, EmbeddingRecord};
pub use split::{split_corpus, Split, SplitAssignment, SplitSpec, AVSD_COUNTS};
pub use synth::{generate_synthetic, SyntheticConfig, SyntheticCorpus};

use crate::model::{DialogueMode, DialogueQuery, ModelError, VideoRecord};
use crate::tensor::TensorError;

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("corpus i/o on {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Container {
        path: PathBuf,
        source: ContainerError,
    },
    #[error("malformed manifest: {0}")]
    Manifest(#[from] serde_json::Error),
    #[error("embedding dim mismatch in {path}: manifest says {expected}, file has {found}")]
    DimMismatch {
        path: PathBuf,
        expected: usize,
        found: usize,
    },
    #[error("invalid corpus: {0}")]
    Invalid(String),
    #[error("split {0} is empty")]
    EmptySplit(Split),
    #[error("corpus has no {0} split")]
    MissingSplit(Split),
    #[error(transparent)]
    Tensor(#[from] TensorError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitFiles {
    pub count: usize,
    /// Paths relative to the corpus directory.
    pub videos: String,
    pub dialogues: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusManifest {
    pub name: String,
    pub embedding_dim: usize,
    pub dialogue_mode: DialogueMode,
    /// Turns per dialogue.
    pub max_turns: usize,
    pub splits: BTreeMap<Split, SplitFiles>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generator_seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub synthetic: Option<SyntheticConfig>,
}

/// Records of one split, ready for the model. Videos and queries are sorted
/// by id and `gold[q]` indexes the video paired with query `q`.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitData {
    pub videos: Vec<VideoRecord>,
    pub queries: Vec<DialogueQuery>,
    pub gold: Vec<usize>,
}

impl SplitData {
    /// Pairs dialogues with same-id videos. Videos longer than
    /// `max_frames` are uniformly subsampled.
    pub fn from_records(
        videos: &[EmbeddingRecord],
        dialogues: &[EmbeddingRecord],
        mode: DialogueMode,
        max_frames: Option<usize>,
    ) -> Result<Self, CorpusError> {
        let mut videos: Vec<VideoRecord> = videos
            .iter()
            .map(|r| {
                let v = VideoRecord::new(r.id.clone(), r.matrix.clone())?;
                Ok(match max_frames {
                    Some(m) => v.subsampled(m),
                    None => v,
                })
            })
            .collect::<Result<_, CorpusError>>()?;
        videos.sort_by(|a, b| a.video_id.cmp(&b.video_id));
        if videos.windows(2).any(|w| w[0].video_id == w[1].video_id) {
            return Err(CorpusError::Invalid("duplicate video id".into()));
        }
        let index: HashMap<&str, usize> = videos
            .iter()
            .enumerate()
            .map(|(i, v)| (v.video_id.as_str(), i))
            .collect();

        let mut queries: Vec<DialogueQuery> = dialogues
            .iter()
            .map(|r| DialogueQuery::new(r.id.clone(), r.matrix.clone(), mode))
            .collect::<Result<_, _>>()?;
        queries.sort_by(|a, b| a.query_id.cmp(&b.query_id));
        let gold = queries
            .iter()
            .map(|q| {
                index
                    .get(q.query_id.as_str())
                    .copied()
                    .ok_or_else(|| CorpusError::Invalid(format!("dialogue {} has no video", q.query_id)))
            })
            .collect::<Result<_, _>>()?;
        Ok(Self { videos, queries, gold })
    }

    pub fn len(&self) -> usize {
        self.queries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.queries.is_empty()
    }

    pub fn video_ids(&self) -> Vec<String> {
        self.videos.iter().map(|v| v.video_id.clone()).collect()
    }

    /// Every query cut to its first `rounds` turns.
    pub fn with_rounds(&self, rounds: usize) -> Result<Self, CorpusError> {
        Ok(Self {
            videos: self.videos.clone(),
            queries: self
                .queries
                .iter()
                .map(|q| q.truncated(rounds))
                .collect::<Result<_, _>>()?,
            gold: self.gold.clone(),
        })
    }
}

/// A corpus directory opened through its manifest.
#[derive(Debug, Clone)]
pub struct Corpus {
    pub root: PathBuf,
    pub manifest: CorpusManifest,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CorpusError + '_ {
    move |source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn read_file(path: &Path) -> Result<EmbeddingFile, CorpusError> {
    read_embeddings(path).map_err(|source| CorpusError::Container {
        path: path.to_path_buf(),
        source,
    })
}

impl Corpus {
    pub fn open(root: impl AsRef<Path>) -> Result<Self, CorpusError> {
        let root = root.as_ref().to_path_buf();
        let path = root.join(MANIFEST_FILE);
        let text = fs::read_to_string(&path).map_err(io_err(&path))?;
        let manifest: CorpusManifest = serde_json::from_str(&text)?;
        Ok(Self { root, manifest })
    }

    /// Writes embedding files and the manifest for all given splits.
    pub fn write(
        root: impl AsRef<Path>,
        name: &str,
        dim: usize,
        mode: DialogueMode,
        max_turns: usize,
        splits: &[(Split, &[EmbeddingRecord], &[EmbeddingRecord])],
        generator: Option<(u64, SyntheticConfig)>,
    ) -> Result<Self, CorpusError> {
        let root = root.as_ref().to_path_buf();
        fs::create_dir_all(&root).map_err(io_err(&root))?;
        let mut files = BTreeMap::new();
        for (split, videos, dialogues) in splits {
            let entry = SplitFiles {
                count: videos.len(),
                videos: format!("{split}.videos.dtve"),
                dialogues: format!("{split}.dialogues.dtve"),
            };
            for (file, records) in [(&entry.videos, videos), (&entry.dialogues, dialogues)] {
                let path = root.join(file);
                write_embeddings(&path, dim, records).map_err(|source| CorpusError::Container {
                    path: path.clone(),
                    source,
                })?;
            }
            files.insert(*split, entry);
        }
        let (generator_seed, synthetic) = match generator {
            Some((seed, cfg)) => (Some(seed), Some(cfg)),
            None => (None, None),
        };
        let manifest = CorpusManifest {
            name: name.to_string(),
            embedding_dim: dim,
            dialogue_mode: mode,
            max_turns,
            splits: files,
            generator_seed,
            synthetic,
        };
        let path = root.join(MANIFEST_FILE);
        let mut json = serde_json::to_string_pretty(&manifest)?;
        json.push('\n');
        fs::write(&path, json).map_err(io_err(&path))?;
        Ok(Self { root, manifest })
    }

    /// Writes a generated corpus as `name` under `root`.
    pub fn write_synthetic(root: impl AsRef<Path>, name: &str, corpus: &SyntheticCorpus) -> Result<Self, CorpusError> {
        let parts: Vec<_> = corpus
            .splits
            .iter()
            .map(|(s, p)| (*s, p.videos.as_slice(), p.dialogues.as_slice()))
            .collect();
        Self::write(
            root,
            name,
            corpus.config.dim,
            corpus.config.mode,
            corpus.config.turns,
            &parts,
            Some((corpus.seed, corpus.config.clone())),
        )
    }

    fn split_files(&self, split: Split) -> Result<&SplitFiles, CorpusError> {
        self.manifest.splits.get(&split).ok_or(CorpusError::MissingSplit(split))
    }

    fn read_checked(&self, rel: &str) -> Result<Vec<EmbeddingRecord>, CorpusError> {
        let path = self.root.join(rel);
        let file = read_file(&path)?;
        if file.dim != self.manifest.embedding_dim {
            return Err(CorpusError::DimMismatch {
                path,
                expected: self.manifest.embedding_dim,
                found: file.dim,
            });
        }
        Ok(file.records)
    }

    /// Raw records of a split: `(videos, dialogues)`.
    pub fn records(&self, split: Split) -> Result<(Vec<EmbeddingRecord>, Vec<EmbeddingRecord>), CorpusError> {
        let files = self.split_files(split)?;
        let videos = self.read_checked(&files.videos)?;
        let dialogues = self.read_checked(&files.dialogues)?;
        if videos.len() != files.count {
            return Err(CorpusError::Invalid(format!(
                "{split}: manifest lists {} videos, file has {}",
                files.count,
                videos.len()
            )));
        }
        if let Some(bad) = dialogues.iter().find(|d| d.matrix.rows() != self.manifest.max_turns) {
            return Err(CorpusError::Invalid(format!(
                "dialogue {} has {} turns, manifest says {}",
                bad.id,
                bad.matrix.rows(),
                self.manifest.max_turns
            )));
        }
        Ok((videos, dialogues))
    }

    /// Loads a split for the model, subsampling long videos to `max_frames`.
    pub fn load_split(&self, split: Split, max_frames: usize) -> Result<SplitData, CorpusError> {
        let (videos, dialogues) = self.records(split)?;
        if dialogues.is_empty() {
            return Err(CorpusError::EmptySplit(split));
        }
        SplitData::from_records(&videos, &dialogues, self.manifest.dialogue_mode, Some(max_frames))
    }

    /// Checks that split ids are disjoint and every dialogue has its video.
    pub fn validate(&self) -> Result<(), CorpusError> {
        let mut seen = BTreeSet::new();
        for &split in self.manifest.splits.keys() {
            let (videos, dialogues) = self.records(split)?;
            let ids: BTreeSet<&str> = videos.iter().map(|v| v.id.as_str()).collect();
            for v in &videos {
                if !seen.insert(v.id.clone()) {
                    return Err(CorpusError::Invalid(format!("video {} appears in two splits", v.id)));
                }
            }
            if let Some(d) = dialogues.iter().find(|d| !ids.contains(d.id.as_str())) {
                return Err(CorpusError::Invalid(format!("{split}: dialogue {} has no video", d.id)));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> SyntheticConfig {
        SyntheticConfig {
            num_videos: [10, 4, 4],
            frames: 3,
            turns: 4,
            dim: 8,
            latent_dim: 4,
            turn_fractions: vec![0.25; 4],
            ..SyntheticConfig::default()
        }
    }

    #[test]
    fn write_open_load_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let gen = generate_synthetic(&tiny(), 4).unwrap();
        let corpus = Corpus::write_synthetic(dir.path(), "tiny", &gen).unwrap();
        let reopened = Corpus::open(dir.path()).unwrap();
        assert_eq!(reopened.manifest, corpus.manifest);
        reopened.validate().unwrap();

        let val = reopened.load_split(Split::Val, 32).unwrap();
        assert_eq!(val.len(), 4);
        for (q, &g) in val.queries.iter().zip(&val.gold) {
            assert_eq!(q.query_id, val.videos[g].video_id);
        }
        let (videos, _) = reopened.records(Split::Val).unwrap();
        assert_eq!(videos, gen.split(Split::Val).videos);
    }

    #[test]
    fn same_seed_gives_byte_identical_files() {
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        for dir in [&a, &b] {
            let gen = generate_synthetic(&tiny(), 99).unwrap();
            Corpus::write_synthetic(dir.path(), "tiny", &gen).unwrap();
        }
        for entry in fs::read_dir(a.path()).unwrap() {
            let name = entry.unwrap().file_name();
            assert_eq!(
                fs::read(a.path().join(&name)).unwrap(),
                fs::read(b.path().join(&name)).unwrap(),
                "{name:?}"
            );
        }
    }

    #[test]
    fn dim_mismatch_against_manifest_is_named() {
        let dir = tempfile::tempdir().unwrap();
        let gen = generate_synthetic(&tiny(), 4).unwrap();
        let mut corpus = Corpus::write_synthetic(dir.path(), "tiny", &gen).unwrap();
        corpus.manifest.embedding_dim = 16;
        assert!(matches!(
            corpus.load_split(Split::Train, 32),
            Err(CorpusError::DimMismatch { expected: 16, found: 8, .. })
        ));
    }

    #[test]
    fn long_videos_are_subsampled_on_load() {
        let dir = tempfile::tempdir().unwrap();
        let gen = generate_synthetic(&tiny(), 4).unwrap();
        let corpus = Corpus::write_synthetic(dir.path(), "tiny", &gen).unwrap();
        let split = corpus.load_split(Split::Test, 2).unwrap();
        assert!(split.videos.iter().all(|v| v.num_frames() == 2));
    }

    #[test]
    fn unpaired_dialogue_is_rejected() {
        let gen = generate_synthetic(&tiny(), 4).unwrap();
        let part = gen.split(Split::Train);
        let err = SplitData::from_records(&part.videos[1..], &part.dialogues, DialogueMode::PerTurn, None);
        assert!(matches!(err, Err(CorpusError::Invalid(_))));
    }

    #[test]
    fn rounds_truncation() {
        let gen = generate_synthetic(&tiny(), 4).unwrap();
        let part = gen.split(Split::Train);
        let data = SplitData::from_records(&part.videos, &part.dialogues, DialogueMode::PerTurn, None).unwrap();
        let two = data.with_rounds(2).unwrap();
        assert!(two.queries.iter().all(|q| q.num_turns() == 2));
        assert!(data.with_rounds(5).is_err());
    }
}
