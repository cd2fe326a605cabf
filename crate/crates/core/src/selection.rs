//! Choosing which detected candidates get masked.

use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::candidates::Candidate;
use crate::detectors::DetectionOutcome;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SelectionError {
    #[error("n must be at least 1")]
    ZeroN,
    #[error("the random selector needs a seed")]
    MissingSeed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    Longest,
    Shortest,
    Random,
    Unrestricted,
}

impl Strategy {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Longest => "longest",
            Self::Shortest => "shortest",
            Self::Random => "random",
            Self::Unrestricted => "unrestricted",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Strategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        <Self as clap::ValueEnum>::from_str(s, true)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SelectionConfig {
    pub strategy: Strategy,
    pub n: usize,
    pub seed: Option<u64>,
}

impl SelectionConfig {
    pub fn new(strategy: Strategy, n: usize, seed: Option<u64>) -> Result<Self, SelectionError> {
        let config = Self { strategy, n, seed };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), SelectionError> {
        if self.n == 0 {
            return Err(SelectionError::ZeroN);
        }
        if self.strategy == Strategy::Random && self.seed.is_none() {
            return Err(SelectionError::MissingSeed);
        }
        Ok(())
    }
}

impl Default for SelectionConfig {
    fn default() -> Self {
        Self {
            strategy: Strategy::Longest,
            n: 2,
            seed: None,
        }
    }
}

/// Anything with a character length that selection can rank.
pub trait CharLen {
    fn char_len(&self) -> usize;
}

impl CharLen for Candidate {
    fn char_len(&self) -> usize {
        self.char_len
    }
}

impl CharLen for DetectionOutcome {
    fn char_len(&self) -> usize {
        self.candidate.char_len
    }
}

impl CharLen for usize {
    fn char_len(&self) -> usize {
        *self
    }
}

/// Per-entry RNG seed: FNV-1a of the entry id folded into the global seed,
/// then a splitmix64 finalizer.
pub fn entry_seed(seed: u64, entry_id: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in entry_id.as_bytes() {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    let mut z = seed ^ h;
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Positions (into `items`) of the selected entries, ascending.
///
/// `items` must already be in sentence order; position breaks length ties.
pub fn select_indices<T: CharLen>(items: &[T], config: &SelectionConfig, entry_id: &str) -> Vec<usize> {
    let take = config.n.min(items.len());
    let mut picked: Vec<usize> = match config.strategy {
        Strategy::Unrestricted => return (0..items.len()).collect(),
        Strategy::Longest => {
            let mut order: Vec<usize> = (0..items.len()).collect();
            order.sort_by_key(|&i| (std::cmp::Reverse(items[i].char_len()), i));
            order.truncate(take);
            order
        }
        Strategy::Shortest => {
            let mut order: Vec<usize> = (0..items.len()).collect();
            order.sort_by_key(|&i| (items[i].char_len(), i));
            order.truncate(take);
            order
        }
        Strategy::Random => {
            let seed = config.seed.expect("validated: random selection has a seed");
            let mut rng = ChaCha8Rng::seed_from_u64(entry_seed(seed, entry_id));
            rand::seq::index::sample(&mut rng, items.len(), take).into_vec()
        }
    };
    picked.sort_unstable();
    picked
}

/// Selected items in sentence order.
pub fn select<T: CharLen + Clone>(items: &[T], config: &SelectionConfig, entry_id: &str) -> Vec<T> {
    select_indices(items, config, entry_id)
        .into_iter()
        .map(|i| items[i].clone())
        .collect()
}
