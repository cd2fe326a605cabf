//! Score nouns by the share of their senses that sit under a concrete
//! hypernym.
//!
//!     cargo run --example concreteness -- pepper idea hope

use std::path::Path;
use std::sync::Arc;

use vismask::concreteness::{Classifier, ConcretenessConfig};
use vismask::wordnet::WordNetGraph;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/wordnet");
    let graph = Arc::new(WordNetGraph::open_dir(dir)?);
    let classifier = Classifier::new(graph, ConcretenessConfig::default());

    let mut lemmas: Vec<String> = std::env::args().skip(1).collect();
    if lemmas.is_empty() {
        lemmas = ["sedan", "pepper", "hope", "idea", "freedom"].map(String::from).to_vec();
    }
    for lemma in lemmas {
        let r = classifier.concreteness_score(&lemma);
        println!(
            "{:<10} {}/{} senses concrete  score {}  {}",
            r.lemma,
            r.concrete_senses,
            r.total_senses,
            r.score,
            if r.is_concrete { "concrete" } else { "-" }
        );
    }
    Ok(())
}
