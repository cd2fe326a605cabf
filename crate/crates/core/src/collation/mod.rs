//! Masked training-triplet assembly and corpus statistics.
//!
//! Every selected candidate produces its own variant with exactly that
//! candidate masked; each of its tokens becomes one mask token. Target text
//! and image reference pass through untouched.

mod corpus;
mod pipeline;

pub use corpus::{open_jsonl, read_parallel_text, CorpusEntry, JsonlCorpus};
pub use pipeline::{CollateSummary, CollationConfig, Collator, CorpusStats, QuarantineRecord};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::candidates::Candidate;

pub const DEFAULT_MASK_TOKEN: &str = "<unk>";

#[derive(Debug, Error)]
pub enum CollationError {
    #[error("corpus line {line_no}: {reason}")]
    MalformedCorpus { line_no: usize, reason: String },
    #[error("duplicate corpus id {0:?}")]
    DuplicateId(String),
    #[error("candidate span {span:?} does not match source of entry {entry_id:?}")]
    SpanOutOfRange { entry_id: String, span: (usize, usize) },
    #[error("variant {entry_id:?}/{variant_index} cannot be unmasked: {reason}")]
    Unmask {
        entry_id: String,
        variant_index: usize,
        reason: String,
    },
    #[error("invalid collation config: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Record of one masked candidate, enough to undo the mask.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MaskedSpan {
    /// Normalized lemma of the candidate.
    pub phrase: String,
    /// Original text of each masked token.
    pub surface: Vec<String>,
    pub token_indices: Vec<usize>,
    /// Byte spans of the masked tokens in the original source.
    pub char_spans: Vec<(usize, usize)>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MaskedVariant {
    pub entry_id: String,
    pub variant_index: usize,
    pub src_masked: String,
    pub tgt: String,
    pub image: String,
    pub masked: Vec<MaskedSpan>,
    pub detector: String,
    pub selector: String,
}

impl MaskedVariant {
    fn tagged(mut self, variant_index: usize, detector: &str, selector: &str) -> Self {
        self.variant_index = variant_index;
        self.detector = detector.to_string();
        self.selector = selector.to_string();
        self
    }
}

/// Mask every token of `candidate` in `entry.src`.
pub fn mask_variant(
    entry: &CorpusEntry,
    candidate: &Candidate,
    mask_token: &str,
) -> Result<MaskedVariant, CollationError> {
    let src = entry.src.as_str();
    let mut out = String::with_capacity(src.len() + mask_token.len() * candidate.tokens.len());
    let mut cursor = 0;
    for token in &candidate.tokens {
        let (start, end) = token.char_span;
        let in_range = cursor <= start
            && start < end
            && src.get(start..end).is_some_and(|s| s == token.text);
        if !in_range {
            return Err(CollationError::SpanOutOfRange {
                entry_id: entry.id.clone(),
                span: token.char_span,
            });
        }
        out.push_str(&src[cursor..start]);
        out.push_str(mask_token);
        cursor = end;
    }
    out.push_str(&src[cursor..]);
    Ok(MaskedVariant {
        entry_id: entry.id.clone(),
        variant_index: 0,
        src_masked: out,
        tgt: entry.tgt.clone(),
        image: entry.image.clone(),
        masked: vec![MaskedSpan {
            phrase: candidate.phrase.clone(),
            surface: candidate.tokens.iter().map(|t| t.text.clone()).collect(),
            token_indices: candidate.token_indices(),
            char_spans: candidate.tokens.iter().map(|t| t.char_span).collect(),
        }],
        detector: String::new(),
        selector: String::new(),
    })
}

/// Unmasked baseline variant.
pub fn passthrough_variant(entry: &CorpusEntry) -> MaskedVariant {
    MaskedVariant {
        entry_id: entry.id.clone(),
        variant_index: 0,
        src_masked: entry.src.clone(),
        tgt: entry.tgt.clone(),
        image: entry.image.clone(),
        masked: Vec::new(),
        detector: String::new(),
        selector: String::new(),
    }
}

/// Put the recorded surface tokens back at their recorded spans.
pub fn unmask(variant: &MaskedVariant, mask_token: &str) -> Result<String, CollationError> {
    let fail = |reason: String| CollationError::Unmask {
        entry_id: variant.entry_id.clone(),
        variant_index: variant.variant_index,
        reason,
    };
    let mut spans: Vec<(usize, &str)> = Vec::new();
    for m in &variant.masked {
        if m.surface.len() != m.char_spans.len() {
            return Err(fail("surface/span count mismatch".into()));
        }
        spans.extend(m.char_spans.iter().map(|s| s.0).zip(m.surface.iter().map(String::as_str)));
    }
    spans.sort_by_key(|s| s.0);

    let masked = variant.src_masked.as_str();
    let mut out = String::with_capacity(masked.len());
    // `shift` maps original offsets to masked-string offsets
    let mut shift: isize = 0;
    let mut cursor = 0usize;
    for (orig_start, surface) in spans {
        let at = orig_start as isize + shift;
        let at = usize::try_from(at).map_err(|_| fail("span before start".into()))?;
        if at < cursor || masked.get(at..at + mask_token.len()) != Some(mask_token) {
            return Err(fail(format!("no mask token at offset {at}")));
        }
        out.push_str(&masked[cursor..at]);
        out.push_str(surface);
        cursor = at + mask_token.len();
        shift += mask_token.len() as isize - surface.len() as isize;
    }
    out.push_str(&masked[cursor..]);
    Ok(out)
}
