//! Look up a noun's senses and the roots above them.
//!
//!     cargo run --example wordnet_lookup -- sedan [WORDNET_DIR]

use std::path::PathBuf;

use vismask::wordnet::{PartOfSpeech, WordNetGraph};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let lemma = args.next().unwrap_or_else(|| "sedan".into());
    let dir = args
        .next()
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/wordnet"));

    let graph = WordNetGraph::open_dir(&dir)?;
    println!("WordNet {} with {} synsets, {} hypernym edges", graph.version(), graph.len(), graph.edge_count());
    for id in graph.synsets_of(&lemma, PartOfSpeech::Noun) {
        let synset = graph.synset(*id).expect("indexed synsets exist");
        let roots: Vec<String> = graph.reachable_roots(*id)?.iter().map(|r| r.to_string()).collect();
        println!("{id}  {}  roots={}", synset.lemmas.join(","), roots.join(","));
        println!("    {}", synset.gloss);
    }
    Ok(())
}
