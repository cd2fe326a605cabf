//! Concrete/abstract classification of noun senses by hypernym traversal.
//!
//! Each sense of a lemma is walked upward until a labeled hypernym is met on
//! every path. A sense is concrete when any path meets a Concrete label first.
//! The lemma's score is the exact fraction of its senses that are concrete.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::io::BufRead;
use std::str::FromStr;
use std::sync::{Arc, OnceLock};

use num_rational::Ratio;
use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::wordnet::{normalize_lemma, PartOfSpeech, SynsetId, WordNetError, WordNetGraph};

const DEFAULT_TABLE: &str = include_str!("../data/hypernym_labels.tsv");

#[derive(Debug, Error)]
pub enum ConcretenessError {
    #[error("i/o error reading label table: {0}")]
    Io(#[from] std::io::Error),
    #[error("label table line {line_no}: {reason}")]
    MalformedLabel { line_no: usize, reason: String },
    #[error("lemma {0:?} is labeled both Concrete and Abstract")]
    ConflictingLabel(String),
    #[error("label table is empty")]
    EmptyTable,
    #[error("invalid threshold {0:?}: expected a fraction in (0, 1]")]
    InvalidThreshold(String),
    #[error(transparent)]
    WordNet(#[from] WordNetError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Label {
    Concrete,
    Abstract,
}

impl FromStr for Label {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "concrete" => Ok(Self::Concrete),
            "abstract" => Ok(Self::Abstract),
            other => Err(format!("unknown label {other:?}")),
        }
    }
}

/// Outcome of classifying one synset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Class {
    Concrete,
    Abstract,
    Unknown,
}

impl From<Label> for Class {
    fn from(label: Label) -> Self {
        match label {
            Label::Concrete => Class::Concrete,
            Label::Abstract => Class::Abstract,
        }
    }
}

/// Lemma -> label map. Keys are either plain lemmas (`object`) or
/// sense-qualified lemmas (`object.n.01`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HypernymLabelTable {
    entries: BTreeMap<String, Label>,
}

impl HypernymLabelTable {
    /// The bundled reconstruction of the labeled-hypernym table.
    pub fn builtin() -> Self {
        load_label_table(DEFAULT_TABLE.as_bytes()).expect("bundled label table is valid")
    }

    pub fn from_entries<I, S>(entries: I) -> Result<Self, ConcretenessError>
    where
        I: IntoIterator<Item = (S, Label)>,
        S: AsRef<str>,
    {
        let mut map = BTreeMap::new();
        for (lemma, label) in entries {
            insert_label(&mut map, lemma.as_ref(), label)?;
        }
        if map.is_empty() {
            return Err(ConcretenessError::EmptyTable);
        }
        Ok(Self { entries: map })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, lemma: &str) -> Option<Label> {
        self.entries.get(lemma).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, Label)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), *v))
    }

    /// Returns a copy with one more (or a changed) entry.
    pub fn with_label(&self, lemma: &str, label: Label) -> Self {
        let mut entries = self.entries.clone();
        entries.insert(normalize_lemma(lemma), label);
        Self { entries }
    }

    /// Serialize back into the tab-separated file format.
    pub fn to_tsv(&self) -> String {
        self.entries
            .iter()
            .map(|(k, v)| format!("{k}\t{v:?}\n"))
            .collect()
    }
}

fn insert_label(
    map: &mut BTreeMap<String, Label>,
    lemma: &str,
    label: Label,
) -> Result<(), ConcretenessError> {
    let key = normalize_lemma(lemma);
    match map.get(&key) {
        Some(existing) if *existing != label => Err(ConcretenessError::ConflictingLabel(key)),
        _ => {
            map.insert(key, label);
            Ok(())
        }
    }
}

/// Read `lemma<TAB>label` lines. Blank lines and `#` comments are ignored.
pub fn load_label_table<R: BufRead>(reader: R) -> Result<HypernymLabelTable, ConcretenessError> {
    let mut map = BTreeMap::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let content = line.trim();
        if content.is_empty() || content.starts_with('#') {
            continue;
        }
        let malformed = |reason: String| ConcretenessError::MalformedLabel {
            line_no: i + 1,
            reason,
        };
        let (lemma, label) = content
            .split_once('\t')
            .ok_or_else(|| malformed("expected lemma<TAB>label".into()))?;
        if lemma.trim().is_empty() {
            return Err(malformed("empty lemma".into()));
        }
        let label: Label = label.parse().map_err(malformed)?;
        insert_label(&mut map, lemma, label)?;
    }
    if map.is_empty() {
        return Err(ConcretenessError::EmptyTable);
    }
    Ok(HypernymLabelTable { entries: map })
}

/// Exact concreteness threshold in (0, 1].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Threshold(Ratio<u64>);

impl Threshold {
    pub fn new(value: Ratio<u64>) -> Result<Self, ConcretenessError> {
        if *value.numer() == 0 || value > Ratio::from_integer(1) {
            return Err(ConcretenessError::InvalidThreshold(value.to_string()));
        }
        Ok(Self(value))
    }

    pub fn ratio(self) -> Ratio<u64> {
        self.0
    }
}

impl Default for Threshold {
    fn default() -> Self {
        Self(Ratio::new(1, 3))
    }
}

impl fmt::Display for Threshold {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.0.numer(), self.0.denom())
    }
}

/// Accepts `a/b`, a decimal such as `0.33`, or a percentage such as `33%`.
impl FromStr for Threshold {
    type Err = ConcretenessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || ConcretenessError::InvalidThreshold(s.to_string());
        let text = s.trim();
        let ratio = if let Some((n, d)) = text.split_once('/') {
            let n: u64 = n.trim().parse().map_err(|_| bad())?;
            let d: u64 = d.trim().parse().map_err(|_| bad())?;
            if d == 0 {
                return Err(bad());
            }
            Ratio::new(n, d)
        } else if let Some(pct) = text.strip_suffix('%') {
            parse_decimal(pct.trim()).ok_or_else(bad)? / Ratio::from_integer(100)
        } else {
            parse_decimal(text).ok_or_else(bad)?
        };
        Self::new(ratio).map_err(|_| bad())
    }
}

fn parse_decimal(text: &str) -> Option<Ratio<u64>> {
    let (int, frac) = text.split_once('.').unwrap_or((text, ""));
    if int.is_empty() && frac.is_empty() {
        return None;
    }
    if !int.chars().chain(frac.chars()).all(|c| c.is_ascii_digit()) || frac.len() > 18 {
        return None;
    }
    let int: u64 = if int.is_empty() { 0 } else { int.parse().ok()? };
    let scale = 10u64.pow(frac.len() as u32);
    let frac: u64 = if frac.is_empty() { 0 } else { frac.parse().ok()? };
    Some(Ratio::new(int.checked_mul(scale)?.checked_add(frac)?, scale))
}

#[derive(Debug, Clone)]
pub struct ConcretenessConfig {
    pub threshold: Threshold,
    pub label_table: Arc<HypernymLabelTable>,
}

impl Default for ConcretenessConfig {
    fn default() -> Self {
        Self {
            threshold: Threshold::default(),
            label_table: Arc::new(HypernymLabelTable::builtin()),
        }
    }
}

fn serialize_ratio<S: Serializer>(r: &Ratio<u64>, s: S) -> Result<S::Ok, S::Error> {
    s.collect_str(&format_args!("{}/{}", r.numer(), r.denom()))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ConcretenessResult {
    pub lemma: String,
    pub total_senses: usize,
    pub concrete_senses: usize,
    #[serde(serialize_with = "serialize_ratio")]
    pub score: Ratio<u64>,
    pub is_concrete: bool,
}

/// Label-aware view over a graph. Resolves the table against the graph once
/// and memoizes per-synset classes; safe to share between threads.
pub struct Classifier {
    graph: Arc<WordNetGraph>,
    config: ConcretenessConfig,
    labeled: HashMap<usize, Label>,
    memo: Vec<OnceLock<Class>>,
}

impl fmt::Debug for Classifier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Classifier")
            .field("threshold", &self.config.threshold)
            .field("labeled_synsets", &self.labeled.len())
            .finish()
    }
}

impl Classifier {
    pub fn new(graph: Arc<WordNetGraph>, config: ConcretenessConfig) -> Self {
        let mut labeled: HashMap<usize, Label> = HashMap::new();
        let mut mark = |slot: usize, label: Label| {
            labeled
                .entry(slot)
                .and_modify(|l| {
                    if label == Label::Concrete {
                        *l = Label::Concrete;
                    }
                })
                .or_insert(label);
        };

        let mut plain: HashMap<&str, Label> = HashMap::new();
        for (key, label) in config.label_table.iter() {
            match split_sense_key(key) {
                Some((lemma, sense)) => {
                    match graph.synsets_of(lemma, PartOfSpeech::Noun).get(sense - 1) {
                        Some(id) => mark(graph.slot(*id).expect("index resolves"), label),
                        None => log::debug!("label {key:?} does not resolve in this database"),
                    }
                }
                None => {
                    plain.insert(key, label);
                }
            }
        }
        if !plain.is_empty() {
            for s in graph.synsets() {
                for lemma in &s.lemmas {
                    if let Some(label) = plain.get(lemma.to_lowercase().as_str()) {
                        mark(graph.slot(s.id).expect("own synset"), *label);
                    }
                }
            }
        }

        let memo = (0..graph.len()).map(|_| OnceLock::new()).collect();
        Self {
            graph,
            config,
            labeled,
            memo,
        }
    }

    pub fn graph(&self) -> &Arc<WordNetGraph> {
        &self.graph
    }

    pub fn config(&self) -> &ConcretenessConfig {
        &self.config
    }

    pub fn classify_synset(&self, id: SynsetId) -> Result<Class, ConcretenessError> {
        Ok(self.class_at(self.graph.slot(id)?))
    }

    fn class_at(&self, slot: usize) -> Class {
        *self.memo[slot].get_or_init(|| {
            if let Some(label) = self.labeled.get(&slot) {
                return (*label).into();
            }
            let mut class = Class::Unknown;
            for &p in self.graph.parents_at(slot) {
                match self.class_at(p) {
                    Class::Concrete => return Class::Concrete,
                    Class::Abstract => class = Class::Abstract,
                    Class::Unknown => {}
                }
            }
            class
        })
    }

    pub fn concreteness_score(&self, lemma: &str) -> ConcretenessResult {
        let lemma = normalize_lemma(lemma);
        let senses = self.graph.synsets_of(&lemma, PartOfSpeech::Noun);
        let concrete = senses
            .iter()
            .filter(|id| {
                let slot = self.graph.slot(**id).expect("index resolves");
                self.class_at(slot) == Class::Concrete
            })
            .count();
        let total = senses.len();
        let score = if total == 0 {
            Ratio::from_integer(0)
        } else {
            Ratio::new(concrete as u64, total as u64)
        };
        ConcretenessResult {
            lemma,
            total_senses: total,
            concrete_senses: concrete,
            score,
            is_concrete: total > 0 && score >= self.config.threshold.ratio(),
        }
    }

    pub fn is_concrete(&self, lemma: &str) -> bool {
        self.concreteness_score(lemma).is_concrete
    }

    /// Labeled synset names reachable from a sense; handy for explaining a
    /// classification.
    pub fn labeled_ancestors(&self, id: SynsetId) -> Result<Vec<(SynsetId, Label)>, ConcretenessError> {
        let mut stack = vec![self.graph.slot(id)?];
        let mut seen = vec![false; self.graph.len()];
        let mut found = Vec::new();
        while let Some(slot) = stack.pop() {
            if std::mem::replace(&mut seen[slot], true) {
                continue;
            }
            if let Some(label) = self.labeled.get(&slot) {
                found.push((self.graph.synset_at(slot).id, *label));
                continue;
            }
            stack.extend(self.graph.parents_at(slot));
        }
        found.sort_by_key(|(id, _)| *id);
        Ok(found)
    }
}

fn split_sense_key(key: &str) -> Option<(&str, usize)> {
    let (rest, number) = key.rsplit_once('.')?;
    let lemma = rest.strip_suffix(".n")?;
    let sense: usize = number.parse().ok()?;
    (sense > 0 && !lemma.is_empty()).then_some((lemma, sense))
}

/// One-shot classification. Builds a throwaway [`Classifier`]; prefer the
/// classifier when classifying more than once.
pub fn classify_synset(
    graph: &Arc<WordNetGraph>,
    synset: SynsetId,
    table: &HypernymLabelTable,
) -> Result<Class, ConcretenessError> {
    let config = ConcretenessConfig {
        threshold: Threshold::default(),
        label_table: Arc::new(table.clone()),
    };
    Classifier::new(graph.clone(), config).classify_synset(synset)
}

/// One-shot lemma scoring; see [`classify_synset`].
pub fn concreteness_score(
    graph: &Arc<WordNetGraph>,
    lemma: &str,
    config: &ConcretenessConfig,
) -> ConcretenessResult {
    Classifier::new(graph.clone(), config.clone()).concreteness_score(lemma)
}
