//! Detection statistics for the bundled corpus under each detector.

use std::path::Path;
use std::sync::Arc;

use vismask::candidates::StopList;
use vismask::collation::{open_jsonl, CollationConfig, Collator};
use vismask::concreteness::{Classifier, ConcretenessConfig};
use vismask::detectors::{Detectors, Technique};
use vismask::grounding::load_fixtures;
use vismask::selection::SelectionConfig;
use vismask::wordnet::WordNetGraph;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    let graph = Arc::new(WordNetGraph::open_dir(root.join("wordnet"))?);
    let detectors = Detectors::new(
        Arc::new(Classifier::new(graph, ConcretenessConfig::default())),
        Arc::new(StopList::builtin()),
    )
    .with_provider(Arc::new(load_fixtures(root.join("groundings.jsonl"))?));

    println!("{:<8} {:>9} {:>7} {:>7}", "detector", "sentences", "pct", "unique");
    for technique in [Technique::Nltk, Technique::Mdetr, Technique::Joint] {
        let collator = Collator::new(detectors.clone(), CollationConfig::new(technique, SelectionConfig::default()))?;
        let stats = collator.compute_stats(open_jsonl(root.join("corpus.jsonl"))?, |_| Ok(()))?;
        println!(
            "{:<8} {:>9} {:>6.2}% {:>7}",
            technique.as_str(), stats.sentences_total, stats.concrete_pct, stats.unique_detections
        );
    }
    Ok(())
}
