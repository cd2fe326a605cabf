//! Princeton WordNet plain-text database loader and hypernym graph.
//!
//! Only the noun files are needed by the rest of the crate, but the parsers
//! accept every part of speech. The graph is immutable once loaded; the
//! reachable-root memo fills lazily and idempotently so a single graph can be
//! shared across threads.

mod parse;

pub use parse::{parse_data, parse_index, DataFile, IndexFile, IndexKey};

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::{Arc, OnceLock};

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum WordNetError {
    #[error("i/o error reading WordNet database: {0}")]
    Io(#[from] std::io::Error),
    #[error("cannot open {path}: {source}")]
    Open {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("malformed index line {line_no}")]
    MalformedLine { line_no: usize },
    #[error("malformed synset at offset {offset:08}")]
    MalformedSynset { offset: u64 },
    #[error("synset {from} points to missing hypernym {target}")]
    DanglingPointer { from: SynsetId, target: SynsetId },
    #[error("index entry {lemma:?} refers to missing synset {target}")]
    UnresolvedIndexEntry { lemma: String, target: SynsetId },
    #[error("hypernym cycle through {}", format_ids(.0))]
    CycleDetected(Vec<SynsetId>),
    #[error("unknown synset {0}")]
    UnknownSynset(SynsetId),
}

fn format_ids(ids: &[SynsetId]) -> String {
    ids.iter().map(|id| id.to_string()).collect::<Vec<_>>().join(" -> ")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PartOfSpeech {
    Noun,
    Verb,
    Adjective,
    Adverb,
}

impl PartOfSpeech {
    /// Accepts the single-letter tags used in the database files. Satellite
    /// adjectives (`s`) fold into [`PartOfSpeech::Adjective`].
    pub fn from_tag(tag: &str) -> Option<Self> {
        match tag {
            "n" => Some(Self::Noun),
            "v" => Some(Self::Verb),
            "a" | "s" => Some(Self::Adjective),
            "r" => Some(Self::Adverb),
            _ => None,
        }
    }

    pub fn tag(self) -> char {
        match self {
            Self::Noun => 'n',
            Self::Verb => 'v',
            Self::Adjective => 'a',
            Self::Adverb => 'r',
        }
    }

    pub fn file_suffix(self) -> &'static str {
        match self {
            Self::Noun => "noun",
            Self::Verb => "verb",
            Self::Adjective => "adj",
            Self::Adverb => "adv",
        }
    }
}

/// A synset identifier: part of speech plus the byte offset used as key in
/// the data file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SynsetId {
    pub pos: PartOfSpeech,
    pub offset: u64,
}

impl SynsetId {
    pub const fn new(pos: PartOfSpeech, offset: u64) -> Self {
        Self { pos, offset }
    }

    pub const fn noun(offset: u64) -> Self {
        Self::new(PartOfSpeech::Noun, offset)
    }
}

impl fmt::Display for SynsetId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:08}-{}", self.offset, self.pos.tag())
    }
}

impl FromStr for SynsetId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (offset, tag) = s
            .split_once('-')
            .ok_or_else(|| format!("bad synset id {s:?}"))?;
        let pos = PartOfSpeech::from_tag(tag).ok_or_else(|| format!("bad synset id {s:?}"))?;
        let offset = offset.parse().map_err(|_| format!("bad synset id {s:?}"))?;
        Ok(Self { pos, offset })
    }
}

impl Serialize for SynsetId {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for SynsetId {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Synset {
    pub id: SynsetId,
    pub lemmas: Vec<String>,
    pub gloss: String,
    /// Direct parents through `@` and `@i` pointers.
    pub hypernyms: Vec<SynsetId>,
}

/// Lowercase, trim, and join whitespace-separated words with underscores.
pub fn normalize_lemma(text: &str) -> String {
    text.split_whitespace()
        .map(str::to_lowercase)
        .collect::<Vec<_>>()
        .join("_")
}

/// Immutable hypernym graph plus the lemma sense index.
pub struct WordNetGraph {
    synsets: Vec<Synset>,
    slots: HashMap<SynsetId, usize>,
    parents: Vec<Vec<usize>>,
    index: HashMap<IndexKey, Vec<SynsetId>>,
    topo: Vec<usize>,
    version: String,
    roots_memo: Vec<OnceLock<Arc<BTreeSet<SynsetId>>>>,
}

impl fmt::Debug for WordNetGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("WordNetGraph")
            .field("synsets", &self.synsets.len())
            .field("index_entries", &self.index.len())
            .field("version", &self.version)
            .finish()
    }
}

impl WordNetGraph {
    /// Validate cross references and acyclicity, then freeze the graph.
    pub fn load(index: IndexFile, data: DataFile) -> Result<Self, WordNetError> {
        let version = data
            .version
            .clone()
            .or(index.version.clone())
            .unwrap_or_else(|| "unknown".to_string());

        let mut data = data;
        let mut synsets = Vec::with_capacity(data.order.len());
        let mut slots = HashMap::with_capacity(data.order.len());
        for id in &data.order {
            if let Some(s) = data.synsets.remove(id) {
                slots.insert(*id, synsets.len());
                synsets.push(s);
            }
        }

        let mut parents = Vec::with_capacity(synsets.len());
        for s in &synsets {
            let mut ps = Vec::with_capacity(s.hypernyms.len());
            for target in &s.hypernyms {
                let slot = slots.get(target).ok_or(WordNetError::DanglingPointer {
                    from: s.id,
                    target: *target,
                })?;
                ps.push(*slot);
            }
            parents.push(ps);
        }

        let mut keys: Vec<&IndexKey> = index.entries.keys().collect();
        keys.sort();
        for key in keys {
            for target in &index.entries[key] {
                if !slots.contains_key(target) {
                    return Err(WordNetError::UnresolvedIndexEntry {
                        lemma: key.0.clone(),
                        target: *target,
                    });
                }
            }
        }

        let topo = topological_order(&synsets, &parents)?;
        let roots_memo = (0..synsets.len()).map(|_| OnceLock::new()).collect();
        Ok(Self {
            synsets,
            slots,
            parents,
            index: index.entries,
            topo,
            version,
            roots_memo,
        })
    }

    /// Load `index.noun` and `data.noun` from a WordNet `dict` directory.
    pub fn open_dir(dir: impl AsRef<Path>) -> Result<Self, WordNetError> {
        let dir = dir.as_ref();
        let open = |name: &str| {
            let path = dir.join(name);
            File::open(&path)
                .map(BufReader::new)
                .map_err(|source| WordNetError::Open { path, source })
        };
        let index = parse_index(open("index.noun")?)?;
        let data = parse_data(open("data.noun")?)?;
        Self::load(index, data)
    }

    pub fn version(&self) -> &str {
        &self.version
    }

    pub fn len(&self) -> usize {
        self.synsets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.synsets.is_empty()
    }

    pub fn edge_count(&self) -> usize {
        self.parents.iter().map(Vec::len).sum()
    }

    pub fn synset(&self, id: SynsetId) -> Option<&Synset> {
        self.slots.get(&id).map(|&i| &self.synsets[i])
    }

    pub fn synsets(&self) -> impl Iterator<Item = &Synset> {
        self.synsets.iter()
    }

    pub fn contains(&self, lemma: &str, pos: PartOfSpeech) -> bool {
        !self.synsets_of(lemma, pos).is_empty()
    }

    /// Senses of a lemma in database order. Absent lemmas yield an empty
    /// slice.
    pub fn synsets_of(&self, lemma: &str, pos: PartOfSpeech) -> &[SynsetId] {
        let key = (normalize_lemma(lemma), pos);
        self.index.get(&key).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Synsets ordered so that every synset precedes its hypernyms.
    pub fn topological_order(&self) -> Vec<SynsetId> {
        self.topo.iter().map(|&i| self.synsets[i].id).collect()
    }

    /// Every parentless synset reachable from `start` by hypernym edges.
    pub fn reachable_roots(&self, start: SynsetId) -> Result<Arc<BTreeSet<SynsetId>>, WordNetError> {
        let slot = self.slot(start)?;
        Ok(self.roots_at(slot))
    }

    fn roots_at(&self, slot: usize) -> Arc<BTreeSet<SynsetId>> {
        self.roots_memo[slot]
            .get_or_init(|| {
                let ps = &self.parents[slot];
                if ps.is_empty() {
                    return Arc::new(BTreeSet::from([self.synsets[slot].id]));
                }
                let mut roots = BTreeSet::new();
                for &p in ps {
                    roots.extend(self.roots_at(p).iter().copied());
                }
                Arc::new(roots)
            })
            .clone()
    }

    pub(crate) fn slot(&self, id: SynsetId) -> Result<usize, WordNetError> {
        self.slots
            .get(&id)
            .copied()
            .ok_or(WordNetError::UnknownSynset(id))
    }

    pub(crate) fn synset_at(&self, slot: usize) -> &Synset {
        &self.synsets[slot]
    }

    pub(crate) fn parents_at(&self, slot: usize) -> &[usize] {
        &self.parents[slot]
    }
}

/// Kahn's algorithm over child -> parent edges, smallest id first among ready
/// nodes. Leftover nodes sit on or above a cycle; one cycle is extracted for
/// the error.
fn topological_order(synsets: &[Synset], parents: &[Vec<usize>]) -> Result<Vec<usize>, WordNetError> {
    let n = synsets.len();
    let mut children = vec![0usize; n];
    for ps in parents {
        for &p in ps {
            children[p] += 1;
        }
    }
    let mut ready: BTreeSet<(SynsetId, usize)> = (0..n)
        .filter(|&i| children[i] == 0)
        .map(|i| (synsets[i].id, i))
        .collect();
    let mut order = Vec::with_capacity(n);
    while let Some(first) = ready.pop_first() {
        let i = first.1;
        order.push(i);
        for &p in &parents[i] {
            children[p] -= 1;
            if children[p] == 0 {
                ready.insert((synsets[p].id, p));
            }
        }
    }
    if order.len() == n {
        return Ok(order);
    }

    // Walk parent edges among unresolved nodes until one repeats.
    let stuck: Vec<bool> = children.iter().map(|&c| c > 0).collect();
    let start = (0..n).find(|&i| stuck[i]).expect("unresolved node exists");
    let mut seen = HashMap::new();
    let mut path = Vec::new();
    let mut cur = start;
    loop {
        if let Some(&at) = seen.get(&cur) {
            let cycle = path[at..].iter().map(|&i: &usize| synsets[i].id).collect();
            return Err(WordNetError::CycleDetected(cycle));
        }
        seen.insert(cur, path.len());
        path.push(cur);
        cur = *parents[cur]
            .iter()
            .find(|&&p| stuck[p])
            .expect("a node on a cycle has a stuck parent");
    }
}
