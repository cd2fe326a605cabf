//! Build a masked training set from the bundled corpus and check that
//! every variant unmasks back to its source.
//!
//!     cargo run --example collate -- out.jsonl

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::sync::Arc;

use vismask::candidates::StopList;
use vismask::collation::{open_jsonl, unmask, CollationConfig, Collator, CorpusEntry, DEFAULT_MASK_TOKEN};
use vismask::concreteness::{Classifier, ConcretenessConfig};
use vismask::detectors::{Detectors, Technique};
use vismask::selection::{SelectionConfig, Strategy};
use vismask::wordnet::WordNetGraph;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    let out_path = std::env::args()
        .nth(1)
        .unwrap_or_else(|| std::env::temp_dir().join("vismask-collate.jsonl").to_string_lossy().into_owned());
    let graph = Arc::new(WordNetGraph::open_dir(root.join("wordnet"))?);
    let detectors = Detectors::new(
        Arc::new(Classifier::new(graph, ConcretenessConfig::default())),
        Arc::new(StopList::builtin()),
    );
    let config = CollationConfig::new(Technique::Nltk, SelectionConfig::new(Strategy::Longest, 2, None)?);
    let collator = Collator::new(detectors, config)?;

    let entries = open_jsonl(root.join("corpus.jsonl"))?.collect::<Result<Vec<CorpusEntry>, _>>()?;
    let sources: HashMap<&str, &str> = entries.iter().map(|e| (e.id.as_str(), e.src.as_str())).collect();
    let (variants, quarantined) = collator.collate_all(&entries)?;

    let mut out = BufWriter::new(File::create(&out_path)?);
    for v in &variants {
        assert_eq!(unmask(v, DEFAULT_MASK_TOKEN)?, sources[v.entry_id.as_str()]);
        serde_json::to_writer(&mut out, v)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    for v in variants.iter().take(4) {
        println!("{} #{}: {}", v.entry_id, v.variant_index, v.src_masked);
    }
    println!(
        "{} entries -> {} variants, {} quarantined, written to {out_path}",
        entries.len(),
        variants.len(),
        quarantined.len()
    );
    Ok(())
}
