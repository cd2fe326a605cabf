//! Compare the four selection strategies on one sentence's detections.

use std::path::Path;
use std::sync::Arc;

use vismask::candidates::StopList;
use vismask::concreteness::{Classifier, ConcretenessConfig};
use vismask::detectors::detect_nltk;
use vismask::selection::{select, SelectionConfig, Strategy};
use vismask::wordnet::WordNetGraph;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let sentence = "A skateboarder does a trick on a skateboard near a man with a hat.";
    let graph = Arc::new(WordNetGraph::open_dir(Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/wordnet"))?);
    let classifier = Classifier::new(graph, ConcretenessConfig::default());
    let outcomes = detect_nltk(sentence, &classifier, &StopList::builtin());
    let names = |xs: &[_]| -> Vec<String> {
        xs.iter()
            .map(|o: &vismask::detectors::DetectionOutcome| o.candidate.surface())
            .collect()
    };
    println!("{sentence}");
    println!("detected     {:?}", names(&outcomes));
    for strategy in [Strategy::Longest, Strategy::Shortest, Strategy::Random, Strategy::Unrestricted] {
        let config = SelectionConfig::new(strategy, 2, Some(42))?;
        println!("{:<12} {:?}", strategy.as_str(), names(&select(&outcomes, &config, "example-entry")));
    }
    Ok(())
}
