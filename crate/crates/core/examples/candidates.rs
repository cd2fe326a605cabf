//! Tokenize a sentence and list its noun and noun-phrase candidates.
//!
//!     cargo run --example candidates -- "A boy on a mountain bike."

use std::path::Path;

use vismask::candidates::{sentence_candidates, tokenize, StopList};
use vismask::wordnet::WordNetGraph;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let sentence = std::env::args()
        .nth(1)
        .unwrap_or_else(|| "A man's dog sits on a mountain bike.".into());
    let graph = WordNetGraph::open_dir(Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/wordnet"))?;

    let tokens: Vec<String> = tokenize(&sentence).into_iter().map(|t| t.text).collect();
    println!("tokens: {tokens:?}");
    for c in sentence_candidates(&sentence, &graph, &StopList::builtin()) {
        println!("{:<16} tokens {:?}  chars {}", c.phrase, c.token_indices(), c.char_len);
    }
    Ok(())
}
