//! Concrete-token masking for image-captioned parallel corpora.
//!
//! The pipeline finds nouns and noun phrases in a source sentence, decides
//! which of them are visually concrete (by WordNet hypernym traversal, by a
//! grounding model, or both), picks a few with a selection strategy and
//! masks them, producing `(masked source, target, image)` training triplets.
//!
//! | module | role |
//! |---|---|
//! | [`wordnet`] | WordNet database parser and hypernym DAG |
//! | [`concreteness`] | concrete/abstract sense classification and scores |
//! | [`candidates`] | tokenizer and noun / noun-phrase candidates |
//! | [`grounding`] | grounding providers (fixtures, HTTP service) |
//! | [`detectors`] | lexical, grounded and joint detectors |
//! | [`selection`] | longest / shortest / random / unrestricted selection |
//! | [`collation`] | masking, corpus streaming, statistics |
//! | [`metrics`] | corpus BLEU-4 |
//! | [`cli`] | the `vismask` command line |

pub mod candidates;
pub mod cli;
pub mod collation;
pub mod concreteness;
pub mod detectors;
pub mod grounding;
pub mod metrics;
pub mod selection;
pub mod wordnet;
