//! Corpus-level BLEU-4 with one reference per hypothesis, no smoothing.

use std::collections::HashMap;

use serde::Serialize;
use thiserror::Error;

const MAX_ORDER: usize = 4;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MetricsError {
    #[error("{hypotheses} hypotheses but {references} references")]
    LengthMismatch { hypotheses: usize, references: usize },
    #[error("empty corpus")]
    EmptyCorpus,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BleuReport {
    pub bleu: f64,
    /// Modified n-gram precisions for n = 1..=4.
    pub precisions: [f64; MAX_ORDER],
    pub brevity_penalty: f64,
    pub hyp_len: usize,
    pub ref_len: usize,
}

fn ngram_counts<S: AsRef<str>>(tokens: &[S], n: usize) -> HashMap<Vec<&str>, usize> {
    let mut counts = HashMap::new();
    if tokens.len() >= n {
        for w in tokens.windows(n) {
            *counts.entry(w.iter().map(AsRef::as_ref).collect()).or_insert(0) += 1;
        }
    }
    counts
}

/// Clipped matches and total hypothesis n-grams for one sentence pair.
pub fn clipped_counts<S: AsRef<str>>(hyp: &[S], reference: &[S], n: usize) -> (usize, usize) {
    let hyp_counts = ngram_counts(hyp, n);
    let ref_counts = ngram_counts(reference, n);
    let matched = hyp_counts
        .iter()
        .map(|(g, c)| (*c).min(ref_counts.get(g).copied().unwrap_or(0)))
        .sum();
    (matched, hyp.len().saturating_sub(n - 1))
}

pub fn bleu4<S: AsRef<str>>(hypotheses: &[Vec<S>], references: &[Vec<S>]) -> Result<BleuReport, MetricsError> {
    if hypotheses.len() != references.len() {
        return Err(MetricsError::LengthMismatch {
            hypotheses: hypotheses.len(),
            references: references.len(),
        });
    }
    if hypotheses.is_empty() {
        return Err(MetricsError::EmptyCorpus);
    }
    let mut matched = [0usize; MAX_ORDER];
    let mut possible = [0usize; MAX_ORDER];
    let (mut hyp_len, mut ref_len) = (0, 0);
    for (hyp, reference) in hypotheses.iter().zip(references) {
        hyp_len += hyp.len();
        ref_len += reference.len();
        for n in 1..=MAX_ORDER {
            let (m, p) = clipped_counts(hyp, reference, n);
            matched[n - 1] += m;
            possible[n - 1] += p;
        }
    }
    let mut precisions = [0.0; MAX_ORDER];
    for i in 0..MAX_ORDER {
        if possible[i] > 0 {
            precisions[i] = matched[i] as f64 / possible[i] as f64;
        }
    }
    let brevity_penalty = if hyp_len == 0 {
        0.0
    } else if hyp_len < ref_len {
        (1.0 - ref_len as f64 / hyp_len as f64).exp()
    } else {
        1.0
    };
    let bleu = if precisions.contains(&0.0) {
        0.0
    } else {
        let log_mean = precisions.iter().map(|p| p.ln()).sum::<f64>() / MAX_ORDER as f64;
        100.0 * brevity_penalty * log_mean.exp()
    };
    Ok(BleuReport {
        bleu,
        precisions,
        brevity_penalty,
        hyp_len,
        ref_len,
    })
}

/// Whitespace tokenization for line-aligned text files.
pub fn whitespace_tokens(text: &str) -> Vec<Vec<String>> {
    text.lines()
        .map(|l| l.split_whitespace().map(str::to_string).collect())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<&str> {
        s.split_whitespace().collect()
    }

    #[test]
    fn identical_corpus_scores_100() {
        let refs = vec![toks("a man rides a horse on the beach"), toks("two dogs play in the snow")];
        let r = bleu4(&refs, &refs).unwrap();
        assert!((r.bleu - 100.0).abs() < 1e-12);
        assert_eq!(r.brevity_penalty, 1.0);
    }

    #[test]
    fn no_four_gram_overlap_scores_zero() {
        let hyp = vec![toks("horse a rides man the")];
        let refs = vec![toks("a man rides a horse")];
        let r = bleu4(&hyp, &refs).unwrap();
        assert_eq!(r.precisions[3], 0.0);
        assert_eq!(r.bleu, 0.0);
    }

    #[test]
    fn clipping() {
        // "the" x7 against a reference holding it twice
        let (m, p) = clipped_counts(&toks("the the the the the the the"), &toks("the cat is on the mat"), 1);
        assert_eq!((m, p), (2, 7));
    }

    #[test]
    fn errors() {
        let a = vec![toks("x")];
        assert_eq!(
            bleu4(&a, &[]),
            Err(MetricsError::LengthMismatch {
                hypotheses: 1,
                references: 0
            })
        );
        assert_eq!(bleu4::<&str>(&[], &[]), Err(MetricsError::EmptyCorpus));
    }
}
