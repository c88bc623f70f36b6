use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::CorpusError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Val,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Val, Split::Test];

    pub fn name(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
        }
    }
}

impl std::fmt::Display for Split {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Split {
    type Err = CorpusError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "train" => Ok(Split::Train),
            "val" | "validation" => Ok(Split::Val),
            "test" => Ok(Split::Test),
            other => Err(CorpusError::Invalid(format!("unknown split {other:?}"))),
        }
    }
}

/// How to divide ids into train / val / test.
#[derive(Debug, Clone, PartialEq)]
pub enum SplitSpec {
    /// Fractions of the id list; test takes whatever remains after rounding.
    Ratios([f64; 3]),
    Counts([usize; 3]),
    /// Fixed lists; override any ratio or count.
    Explicit {
        train: Vec<String>,
        val: Vec<String>,
        test: Vec<String>,
    },
}

/// The standard AVSD partition sizes.
pub const AVSD_COUNTS: [usize; 3] = [7985, 863, 1000];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitAssignment {
    pub train: Vec<String>,
    pub val: Vec<String>,
    pub test: Vec<String>,
}

impl SplitAssignment {
    pub fn get(&self, split: Split) -> &[String] {
        match split {
            Split::Train => &self.train,
            Split::Val => &self.val,
            Split::Test => &self.test,
        }
    }

    pub fn counts(&self) -> [usize; 3] {
        [self.train.len(), self.val.len(), self.test.len()]
    }
}

/// Deterministic split: ids are sorted, shuffled with `seed`, cut, and each
/// part is returned sorted.
pub fn split_corpus(ids: &[String], spec: &SplitSpec, seed: u64) -> Result<SplitAssignment, CorpusError> {
    let unique: BTreeSet<&String> = ids.iter().collect();
    if unique.len() != ids.len() {
        return Err(CorpusError::Invalid("ids must be unique".into()));
    }
    let counts = match spec {
        SplitSpec::Explicit { train, val, test } => return explicit(&unique, train, val, test),
        SplitSpec::Counts(c) => *c,
        SplitSpec::Ratios(r) => {
            if r.iter().any(|&x| !(0.0..=1.0).contains(&x)) || r.iter().sum::<f64>() > 1.0 + 1e-9 {
                return Err(CorpusError::Invalid(format!("bad split ratios {r:?}")));
            }
            let n = ids.len() as f64;
            let train = (r[0] * n).round() as usize;
            let val = ((r[1] * n).round() as usize).min(ids.len() - train);
            [train, val, ids.len() - train - val]
        }
    };
    if counts.iter().sum::<usize>() > ids.len() {
        return Err(CorpusError::Invalid(format!(
            "split counts {counts:?} exceed {} ids",
            ids.len()
        )));
    }
    let mut order: Vec<String> = unique.into_iter().cloned().collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let take = |start: usize, len: usize| {
        let mut part = order[start..start + len].to_vec();
        part.sort();
        part
    };
    Ok(SplitAssignment {
        train: take(0, counts[0]),
        val: take(counts[0], counts[1]),
        test: take(counts[0] + counts[1], counts[2]),
    })
}

fn explicit(
    known: &BTreeSet<&String>,
    train: &[String],
    val: &[String],
    test: &[String],
) -> Result<SplitAssignment, CorpusError> {
    let mut seen = BTreeSet::new();
    for id in train.iter().chain(val).chain(test) {
        if !known.contains(id) {
            return Err(CorpusError::Invalid(format!("explicit split lists unknown id {id:?}")));
        }
        if !seen.insert(id) {
            return Err(CorpusError::Invalid(format!("id {id:?} appears in more than one split")));
        }
    }
    let sorted = |v: &[String]| {
        let mut v = v.to_vec();
        v.sort();
        v
    };
    Ok(SplitAssignment {
        train: sorted(train),
        val: sorted(val),
        test: sorted(test),
    })
}
