//! Corpus BLEU-4 over whitespace-tokenized text.
//!
//!     cargo run --example bleu -- hyp.txt ref.txt

use vismask::metrics::{bleu4, whitespace_tokens};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let (hyp, reference) = match args.as_slice() {
        [h, r] => (std::fs::read_to_string(h)?, std::fs::read_to_string(r)?),
        _ => (
            "ein mann fährt fahrrad im park\nzwei hunde spielen im schnee\n".to_string(),
            "ein mann fährt ein fahrrad im park\nzwei hunde spielen im schnee\n".to_string(),
        ),
    };
    let report = bleu4(&whitespace_tokens(&hyp), &whitespace_tokens(&reference))?;
    println!("BLEU {:.2}", report.bleu);
    println!("precisions {:?}", report.precisions.map(|p| (p * 1e4).round() / 1e4));
    println!("BP {:.4} ({} hyp / {} ref tokens)", report.brevity_penalty, report.hyp_len, report.ref_len);
    Ok(())
}
