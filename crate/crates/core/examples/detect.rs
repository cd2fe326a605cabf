//! Run the lexical, grounded and joint detectors on a few corpus entries.

use std::path::Path;
use std::sync::Arc;

use vismask::candidates::StopList;
use vismask::collation::open_jsonl;
use vismask::concreteness::{Classifier, ConcretenessConfig};
use vismask::detectors::{Detectors, Technique};
use vismask::grounding::load_fixtures;
use vismask::wordnet::WordNetGraph;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    let graph = Arc::new(WordNetGraph::open_dir(root.join("wordnet"))?);
    let detectors = Detectors::new(
        Arc::new(Classifier::new(graph, ConcretenessConfig::default())),
        Arc::new(StopList::builtin()),
    )
    .with_provider(Arc::new(load_fixtures(root.join("groundings.jsonl"))?));

    for entry in open_jsonl(root.join("corpus.jsonl"))?.take(5) {
        let entry = entry?;
        println!("{}: {}", entry.id, entry.src);
        for technique in [Technique::Nltk, Technique::Mdetr, Technique::Joint] {
            let found: Vec<String> = detectors
                .detect(technique, &entry.src, &entry.image)?
                .into_iter()
                .map(|o| match o.grounding {
                    Some(g) => format!("{}@{:.2}", o.candidate.surface(), g.confidence),
                    None => o.candidate.surface(),
                })
                .collect();
            println!("  {:<6} {}", technique.as_str(), found.join(", "));
        }
    }
    Ok(())
}
