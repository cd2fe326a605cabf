#![allow(dead_code)]

use std::collections::BTreeSet;
use std::path::PathBuf;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use vismask::candidates::StopList;
use vismask::collation::{open_jsonl, CorpusEntry};
use vismask::concreteness::{Classifier, ConcretenessConfig, HypernymLabelTable, Label, Threshold};
use vismask::detectors::Detectors;
use vismask::grounding::{load_fixtures, GroundingProvider, MissMode};
use vismask::wordnet::{parse_data, parse_index, WordNetGraph};

pub fn fixture_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}

pub fn corpus_path() -> PathBuf {
    fixture_dir().join("corpus.jsonl")
}

pub fn groundings_path() -> PathBuf {
    fixture_dir().join("groundings.jsonl")
}

pub fn wordnet_dir() -> PathBuf {
    fixture_dir().join("wordnet")
}

pub fn mini_graph() -> Arc<WordNetGraph> {
    Arc::new(WordNetGraph::open_dir(wordnet_dir()).expect("bundled WordNet subset loads"))
}

pub fn corpus() -> Vec<CorpusEntry> {
    open_jsonl(corpus_path())
        .unwrap()
        .collect::<Result<_, _>>()
        .unwrap()
}

pub fn fixture_provider(mode: MissMode) -> Arc<dyn GroundingProvider> {
    Arc::new(load_fixtures(groundings_path()).unwrap().with_miss_mode(mode))
}

pub fn default_detectors() -> Detectors {
    let classifier = Classifier::new(mini_graph(), ConcretenessConfig::default());
    Detectors::new(Arc::new(classifier), Arc::new(StopList::builtin()))
        .with_provider(fixture_provider(MissMode::Lenient))
}

/// Full WordNet 3.0 `dict` directory when one is available.
pub fn full_wordnet_dir() -> Option<PathBuf> {
    let dir = std::env::var_os("WORDNET_DIR").map(PathBuf::from)?;
    (dir.join("index.noun").is_file() && dir.join("data.noun").is_file()).then_some(dir)
}

/// A random hypernym DAG rendered in the WordNet text format.
///
/// Node `i` has the single lemma `n{i}` and may point to any node `j > i`,
/// which keeps the graph acyclic. Lemmas `w{k}` in the index carry 1-4 random
/// senses. Some node lemmas are labeled.
#[derive(Debug, Clone)]
pub struct RandomWordNet {
    pub parents: Vec<Vec<usize>>,
    pub senses: Vec<(String, Vec<usize>)>,
    pub labels: Vec<(usize, Label)>,
}

pub fn offset(node: usize) -> u64 {
    node as u64 + 1
}

impl RandomWordNet {
    pub fn generate(seed: u64, nodes: usize) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let parents = (0..nodes)
            .map(|i| {
                let higher = nodes - i - 1;
                // mostly single parents so path enumeration stays small
                let k = match rng.gen_range(0..8) {
                    0 => 0,
                    1 | 2 => 2,
                    3 => 3,
                    _ => 1,
                }
                .min(higher);
                let mut ps: BTreeSet<usize> = BTreeSet::new();
                while ps.len() < k {
                    ps.insert(rng.gen_range(i + 1..nodes));
                }
                ps.into_iter().collect()
            })
            .collect();
        let senses = (0..nodes / 2)
            .map(|k| {
                let count = rng.gen_range(1..=4usize.min(nodes));
                let mut s: Vec<usize> = Vec::new();
                while s.len() < count {
                    let n = rng.gen_range(0..nodes);
                    if !s.contains(&n) {
                        s.push(n);
                    }
                }
                (format!("w{k}"), s)
            })
            .collect();
        let mut labels: Vec<(usize, Label)> = (0..nodes)
            .filter_map(|i| match rng.gen_range(0..6) {
                0 => Some((i, Label::Concrete)),
                1 => Some((i, Label::Abstract)),
                _ => None,
            })
            .collect();
        if labels.is_empty() {
            labels.push((nodes - 1, Label::Abstract));
        }
        Self {
            parents,
            senses,
            labels,
        }
    }

    pub fn data_text(&self) -> String {
        self.parents
            .iter()
            .enumerate()
            .map(|(i, ps)| {
                let ptrs: String = ps.iter().map(|p| format!(" @ {:08} n 0000", offset(*p))).collect();
                format!("{:08} 03 n 01 n{i} 0 {:03}{ptrs} | node {i}\n", offset(i), ps.len())
            })
            .collect()
    }

    pub fn index_text(&self) -> String {
        self.senses
            .iter()
            .map(|(lemma, s)| {
                let offs: String = s.iter().map(|n| format!(" {:08}", offset(*n))).collect();
                format!("{lemma} n {} 1 @ {} 0{offs}\n", s.len(), s.len())
            })
            .collect()
    }

    pub fn graph(&self) -> Arc<WordNetGraph> {
        Arc::new(
            WordNetGraph::load(
                parse_index(self.index_text().as_bytes()).unwrap(),
                parse_data(self.data_text().as_bytes()).unwrap(),
            )
            .unwrap(),
        )
    }

    pub fn table(&self) -> HypernymLabelTable {
        HypernymLabelTable::from_entries(self.labels.iter().map(|(n, l)| (format!("n{n}"), *l))).unwrap()
    }

    pub fn classifier(&self, threshold: Threshold) -> Classifier {
        Classifier::new(
            self.graph(),
            ConcretenessConfig {
                threshold,
                label_table: Arc::new(self.table()),
            },
        )
    }

    pub fn label_of(&self, node: usize) -> Option<Label> {
        self.labels.iter().find(|(n, _)| *n == node).map(|(_, l)| *l)
    }

    /// Every upward path from `start` to a parentless node.
    pub fn all_paths(&self, start: usize) -> Vec<Vec<usize>> {
        let ps = &self.parents[start];
        if ps.is_empty() {
            return vec![vec![start]];
        }
        ps.iter()
            .flat_map(|&p| {
                self.all_paths(p).into_iter().map(move |mut path| {
                    path.insert(0, start);
                    path
                })
            })
            .collect()
    }

    /// Brute force: label each path by its first labeled node; concrete if
    /// any path says Concrete.
    pub fn oracle_sense_is_concrete(&self, start: usize) -> bool {
        self.all_paths(start)
            .iter()
            .any(|path| path.iter().find_map(|&n| self.label_of(n)) == Some(Label::Concrete))
    }

    /// Brute force: every parentless endpoint of every upward path.
    pub fn oracle_roots(&self, start: usize) -> BTreeSet<usize> {
        self.all_paths(start)
            .into_iter()
            .map(|p| *p.last().unwrap())
            .collect()
    }
}
