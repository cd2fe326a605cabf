use std::collections::BTreeSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{mask_variant, passthrough_variant, CollationError, CorpusEntry, MaskedVariant, DEFAULT_MASK_TOKEN};
use crate::detectors::{DetectionOutcome, Detectors, Technique};
use crate::selection::{select, SelectionConfig};

/// Entries handed to the worker pool at a time. Output order is restored per
/// batch, so this only bounds memory.
const BATCH: usize = 256;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CollationConfig {
    pub technique: Technique,
    pub selection: SelectionConfig,
    pub mask_token: String,
    /// Emit every entry unmasked instead of masking.
    pub passthrough: bool,
    /// Worker threads; 0 means available parallelism.
    pub workers: usize,
}

impl CollationConfig {
    pub fn new(technique: Technique, selection: SelectionConfig) -> Self {
        Self {
            technique,
            selection,
            mask_token: DEFAULT_MASK_TOKEN.to_string(),
            passthrough: false,
            workers: 0,
        }
    }

    pub fn validate(&self) -> Result<(), CollationError> {
        if self.mask_token.is_empty() {
            return Err(CollationError::Config("mask token must be non-empty".into()));
        }
        if !self.passthrough {
            self.selection
                .validate()
                .map_err(|e| CollationError::Config(e.to_string()))?;
        }
        Ok(())
    }
}

/// An entry set aside because its grounding calls failed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuarantineRecord {
    pub entry_id: String,
    pub error: String,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct CollateSummary {
    pub entries: usize,
    pub variants: usize,
    pub without_detection: usize,
    pub quarantined: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusStats {
    /// Entries processed without error.
    pub sentences_total: usize,
    pub sentences_with_detection: usize,
    pub concrete_pct: f64,
    /// Distinct normalized phrases detected across the corpus.
    pub unique_detections: usize,
    pub total_detections: usize,
    pub sentences_quarantined: usize,
    pub detector: Technique,
    pub wordnet_version: String,
}

/// Runs a detector and a selector over a corpus.
#[derive(Debug, Clone)]
pub struct Collator {
    detectors: Detectors,
    config: CollationConfig,
}

impl Collator {
    pub fn new(detectors: Detectors, config: CollationConfig) -> Result<Self, CollationError> {
        config.validate()?;
        if config.technique.needs_grounding() && !config.passthrough && detectors.provider.is_none() {
            return Err(CollationError::Config(format!(
                "detector {} needs a grounding provider",
                config.technique
            )));
        }
        Ok(Self { detectors, config })
    }

    pub fn config(&self) -> &CollationConfig {
        &self.config
    }

    fn pool(&self) -> Result<rayon::ThreadPool, CollationError> {
        rayon::ThreadPoolBuilder::new()
            .num_threads(self.config.workers)
            .build()
            .map_err(|e| CollationError::Config(e.to_string()))
    }

    fn detect(&self, entry: &CorpusEntry) -> Result<Vec<DetectionOutcome>, String> {
        self.detectors
            .detect(self.config.technique, &entry.src, &entry.image)
            .map_err(|e| e.to_string())
    }

    /// Variants for one entry; `Err` carries the quarantine reason.
    pub fn process_entry(&self, entry: &CorpusEntry) -> Result<Vec<MaskedVariant>, String> {
        if self.config.passthrough {
            return Ok(vec![passthrough_variant(entry).tagged(0, "none", "none")]);
        }
        let outcomes = self.detect(entry)?;
        let detector = self.config.technique.as_str();
        let selector = self.config.selection.strategy.as_str();
        select(&outcomes, &self.config.selection, &entry.id)
            .iter()
            .enumerate()
            .map(|(k, outcome)| {
                mask_variant(entry, &outcome.candidate, &self.config.mask_token)
                    .map(|v| v.tagged(k, detector, selector))
                    .map_err(|e| e.to_string())
            })
            .collect()
    }

    /// Stream a corpus through detection, selection and masking.
    ///
    /// Variants arrive at `on_variant` in corpus order, then variant index,
    /// whatever the worker count. Entries whose detection fails go to
    /// `on_quarantine`; a malformed corpus aborts the run.
    pub fn collate<I, V, Q>(&self, entries: I, mut on_variant: V, mut on_quarantine: Q) -> Result<CollateSummary, CollationError>
    where
        I: IntoIterator<Item = Result<CorpusEntry, CollationError>>,
        V: FnMut(&MaskedVariant) -> std::io::Result<()>,
        Q: FnMut(&QuarantineRecord) -> std::io::Result<()>,
    {
        let pool = self.pool()?;
        let mut summary = CollateSummary::default();
        self.for_each_batch(entries, |batch| {
            let results: Vec<_> = pool.install(|| batch.par_iter().map(|e| self.process_entry(e)).collect());
            for (entry, result) in batch.iter().zip(results) {
                summary.entries += 1;
                match result {
                    Ok(variants) if variants.is_empty() => {
                        log::debug!("entry {:?}: no detections", entry.id);
                        summary.without_detection += 1;
                    }
                    Ok(variants) => {
                        for v in &variants {
                            on_variant(v)?;
                        }
                        summary.variants += variants.len();
                    }
                    Err(error) => {
                        log::warn!("entry {:?} quarantined: {error}", entry.id);
                        summary.quarantined += 1;
                        on_quarantine(&QuarantineRecord {
                            entry_id: entry.id.clone(),
                            error,
                        })?;
                    }
                }
            }
            Ok(())
        })?;
        Ok(summary)
    }

    /// Collate an in-memory corpus.
    pub fn collate_all(&self, entries: &[CorpusEntry]) -> Result<(Vec<MaskedVariant>, Vec<QuarantineRecord>), CollationError> {
        let mut variants = Vec::new();
        let mut errors = Vec::new();
        self.collate(
            entries.iter().cloned().map(Ok),
            |v| {
                variants.push(v.clone());
                Ok(())
            },
            |q| {
                errors.push(q.clone());
                Ok(())
            },
        )?;
        Ok((variants, errors))
    }

    /// Detection statistics over a corpus with the configured detector.
    pub fn compute_stats<I, Q>(&self, entries: I, mut on_quarantine: Q) -> Result<CorpusStats, CollationError>
    where
        I: IntoIterator<Item = Result<CorpusEntry, CollationError>>,
        Q: FnMut(&QuarantineRecord) -> std::io::Result<()>,
    {
        let pool = self.pool()?;
        let mut total = 0;
        let mut with_detection = 0;
        let mut occurrences = 0;
        let mut quarantined = 0;
        let mut unique = BTreeSet::new();
        self.for_each_batch(entries, |batch| {
            let results: Vec<_> = pool.install(|| batch.par_iter().map(|e| self.detect(e)).collect());
            for (entry, result) in batch.iter().zip(results) {
                match result {
                    Ok(outcomes) => {
                        total += 1;
                        if !outcomes.is_empty() {
                            with_detection += 1;
                        }
                        occurrences += outcomes.len();
                        unique.extend(outcomes.into_iter().map(|o| o.candidate.phrase));
                    }
                    Err(error) => {
                        quarantined += 1;
                        on_quarantine(&QuarantineRecord {
                            entry_id: entry.id.clone(),
                            error,
                        })?;
                    }
                }
            }
            Ok(())
        })?;
        Ok(CorpusStats {
            sentences_total: total,
            sentences_with_detection: with_detection,
            concrete_pct: if total == 0 {
                0.0
            } else {
                100.0 * with_detection as f64 / total as f64
            },
            unique_detections: unique.len(),
            total_detections: occurrences,
            sentences_quarantined: quarantined,
            detector: self.config.technique,
            wordnet_version: self.detectors.classifier.graph().version().to_string(),
        })
    }

    fn for_each_batch<I, F>(&self, entries: I, mut f: F) -> Result<(), CollationError>
    where
        I: IntoIterator<Item = Result<CorpusEntry, CollationError>>,
        F: FnMut(&[CorpusEntry]) -> std::io::Result<()>,
    {
        let mut batch = Vec::with_capacity(BATCH);
        for entry in entries {
            batch.push(entry?);
            if batch.len() == BATCH {
                f(&batch)?;
                batch.clear();
            }
        }
        if !batch.is_empty() {
            f(&batch)?;
        }
        Ok(())
    }
}
