//! Tokenization and lexicon-based noun / noun-phrase candidate extraction.
//!
//! A token counts as a noun when its lowercased form, or a naive singular of
//! it, has at least one noun sense in the loaded WordNet index and it is not a
//! function word. Maximal runs of noun tokens also form a phrase candidate.

use std::collections::HashSet;
use std::io::BufRead;

use serde::{Deserialize, Serialize};

use crate::wordnet::{PartOfSpeech, WordNetGraph};

const DEFAULT_STOP_WORDS: &str = include_str!("../data/stop_words.txt");

const CLITICS: &[&str] = &["'s", "'re", "'ve", "'ll", "'d", "'m", "n't"];

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Token {
    pub text: String,
    pub index: usize,
    /// Byte offsets `[start, end)` into the original sentence.
    pub char_span: (usize, usize),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Candidate {
    pub tokens: Vec<Token>,
    /// Normalized lemma used for lexicon lookup.
    pub phrase: String,
    /// Unicode scalar count of the surface tokens, separators excluded.
    pub char_len: usize,
}

impl Candidate {
    fn new(tokens: Vec<Token>, phrase: String) -> Self {
        let char_len = tokens.iter().map(|t| t.text.chars().count()).sum();
        Self {
            tokens,
            phrase,
            char_len,
        }
    }

    /// Index of the first token in the sentence.
    pub fn start(&self) -> usize {
        self.tokens[0].index
    }

    pub fn token_indices(&self) -> Vec<usize> {
        self.tokens.iter().map(|t| t.index).collect()
    }

    pub fn is_phrase(&self) -> bool {
        self.tokens.len() > 1
    }

    /// Surface tokens joined by single spaces.
    pub fn surface(&self) -> String {
        self.tokens
            .iter()
            .map(|t| t.text.as_str())
            .collect::<Vec<_>>()
            .join(" ")
    }

    /// The exact slice of `sentence` the candidate covers, separators
    /// included.
    pub fn slice<'s>(&self, sentence: &'s str) -> &'s str {
        let start = self.tokens[0].char_span.0;
        let end = self.tokens[self.tokens.len() - 1].char_span.1;
        &sentence[start..end]
    }
}

/// Lowercased function words excluded from candidacy.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StopList(HashSet<String>);

impl StopList {
    pub fn builtin() -> Self {
        Self::load(DEFAULT_STOP_WORDS.as_bytes()).expect("bundled stop list is valid")
    }

    pub fn empty() -> Self {
        Self(HashSet::new())
    }

    pub fn load<R: BufRead>(reader: R) -> std::io::Result<Self> {
        let mut words = HashSet::new();
        for line in reader.lines() {
            let line = line?;
            let word = line.trim();
            if word.is_empty() || word.starts_with('#') {
                continue;
            }
            words.insert(word.to_lowercase());
        }
        Ok(Self(words))
    }

    pub fn contains(&self, word: &str) -> bool {
        self.0.contains(&word.to_lowercase())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl FromIterator<String> for StopList {
    fn from_iter<I: IntoIterator<Item = String>>(iter: I) -> Self {
        Self(iter.into_iter().map(|w| w.to_lowercase()).collect())
    }
}

fn is_punct(c: char) -> bool {
    c.is_ascii_punctuation()
        || matches!(
            c,
            '\u{2018}' | '\u{2019}' | '\u{201C}' | '\u{201D}' | '\u{2026}' | '\u{2013}' | '\u{2014}'
                | '\u{00BF}' | '\u{00A1}' | '\u{00AB}' | '\u{00BB}'
        )
}

fn clitic_at(word: &str) -> Option<usize> {
    let lower = word.to_lowercase();
    if lower.len() != word.len() {
        return None;
    }
    CLITICS
        .iter()
        .find(|c| lower.ends_with(*c) && lower.len() > c.len())
        .map(|c| word.len() - c.len())
}

/// Split on whitespace, then peel leading and trailing punctuation one
/// character at a time, and split common English clitics (`'s`, `n't`, ...)
/// off the word they attach to.
pub fn tokenize(sentence: &str) -> Vec<Token> {
    let mut spans: Vec<(usize, usize)> = Vec::new();
    let mut chunk_start = None;
    for (i, c) in sentence.char_indices().chain(std::iter::once((sentence.len(), ' '))) {
        match (c.is_whitespace(), chunk_start) {
            (true, Some(start)) => {
                split_chunk(sentence, start, i, &mut spans);
                chunk_start = None;
            }
            (false, None) => chunk_start = Some(i),
            _ => {}
        }
    }
    spans
        .into_iter()
        .enumerate()
        .map(|(index, (s, e))| Token {
            text: sentence[s..e].to_string(),
            index,
            char_span: (s, e),
        })
        .collect()
}

fn split_chunk(text: &str, mut start: usize, mut end: usize, out: &mut Vec<(usize, usize)>) {
    let chunk = &text[start..end];
    if CLITICS.iter().any(|c| chunk.eq_ignore_ascii_case(c)) {
        out.push((start, end));
        return;
    }
    while let Some(c) = text[start..end].chars().next().filter(|c| is_punct(*c)) {
        out.push((start, start + c.len_utf8()));
        start += c.len_utf8();
    }
    let mut trailing = Vec::new();
    while start < end {
        let word = &text[start..end];
        // a clitic may sit behind trailing punctuation, e.g. "dogs'." or "man's,"
        if let Some(at) = clitic_at(word) {
            trailing.push((start + at, end));
            end = start + at;
            continue;
        }
        match word.chars().next_back().filter(|c| is_punct(*c)) {
            Some(c) => {
                trailing.push((end - c.len_utf8(), end));
                end -= c.len_utf8();
            }
            None => break,
        }
    }
    if start < end {
        out.push((start, end));
    }
    out.extend(trailing.into_iter().rev());
}

/// Resolve a token to a noun lemma present in the index, trying the
/// lowercased form, then stripping `s`, then `es`.
pub fn noun_lemma(word: &str, graph: &WordNetGraph) -> Option<String> {
    let lower = word.to_lowercase();
    if !lower.chars().any(char::is_alphabetic) {
        return None;
    }
    if graph.contains(&lower, PartOfSpeech::Noun) {
        return Some(lower);
    }
    for suffix in ["s", "es"] {
        if let Some(stem) = lower.strip_suffix(suffix) {
            if !stem.is_empty() && graph.contains(stem, PartOfSpeech::Noun) {
                return Some(stem.to_string());
            }
        }
    }
    None
}

fn phrase_lemma(run: &[(Token, String)], graph: &WordNetGraph) -> String {
    let words: Vec<String> = run.iter().map(|(t, _)| t.text.to_lowercase()).collect();
    let joined = words.join("_");
    if graph.contains(&joined, PartOfSpeech::Noun) {
        return joined;
    }
    let (last, head) = run.split_last().expect("non-empty run");
    let singular = head
        .iter()
        .map(|(t, _)| t.text.to_lowercase())
        .chain(std::iter::once(last.1.clone()))
        .collect::<Vec<_>>()
        .join("_");
    if graph.contains(&singular, PartOfSpeech::Noun) {
        singular
    } else {
        joined
    }
}

/// Noun and noun-phrase candidates ordered by first token index; a phrase
/// precedes the single-token candidates it contains.
pub fn noun_candidates(tokens: &[Token], graph: &WordNetGraph, stop_list: &StopList) -> Vec<Candidate> {
    let mut out = Vec::new();
    let mut run: Vec<(Token, String)> = Vec::new();
    let flush = |run: &mut Vec<(Token, String)>, out: &mut Vec<Candidate>| {
        if run.len() > 1 {
            let phrase = phrase_lemma(run, graph);
            out.push(Candidate::new(run.iter().map(|(t, _)| t.clone()).collect(), phrase));
        }
        for (token, lemma) in run.drain(..) {
            out.push(Candidate::new(vec![token], lemma));
        }
    };
    for token in tokens {
        let lemma = if stop_list.contains(&token.text) {
            None
        } else {
            noun_lemma(&token.text, graph)
        };
        match lemma {
            Some(lemma) if run.last().is_none_or(|(t, _)| t.index + 1 == token.index) => {
                run.push((token.clone(), lemma));
            }
            Some(lemma) => {
                flush(&mut run, &mut out);
                run.push((token.clone(), lemma));
            }
            None => flush(&mut run, &mut out),
        }
    }
    flush(&mut run, &mut out);
    out
}

/// Tokenize and extract in one step.
pub fn sentence_candidates(sentence: &str, graph: &WordNetGraph, stop_list: &StopList) -> Vec<Candidate> {
    noun_candidates(&tokenize(sentence), graph, stop_list)
}
