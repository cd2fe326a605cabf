//! The three concrete-token detectors.
//!
//! * lexical: candidates whose WordNet concreteness score passes the
//!   threshold; ignores the image.
//! * grounded: one grounding query with the whole sentence; candidates
//!   matched by a confident detection label.
//! * joint: lexical detections, each confirmed by its own grounding query.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::candidates::{sentence_candidates, tokenize, Candidate, StopList};
use crate::concreteness::{Classifier, ConcretenessResult};
use crate::grounding::{
    best_detection, filter_detections, Detection, GroundingError, GroundingProvider, GroundingRequest,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Technique {
    Nltk,
    Mdetr,
    Joint,
}

impl Technique {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Nltk => "nltk",
            Self::Mdetr => "mdetr",
            Self::Joint => "joint",
        }
    }

    pub fn needs_grounding(self) -> bool {
        !matches!(self, Self::Nltk)
    }
}

impl fmt::Display for Technique {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Technique {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        <Self as clap::ValueEnum>::from_str(s, true)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DetectionOutcome {
    pub candidate: Candidate,
    pub technique: Technique,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub concreteness: Option<ConcretenessResult>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grounding: Option<Detection>,
}

fn words(text: &str) -> Vec<String> {
    tokenize(text)
        .into_iter()
        .map(|t| t.text.to_lowercase())
        .filter(|w| w.chars().any(char::is_alphanumeric))
        .collect()
}

fn contains_run(haystack: &[String], needle: &[String]) -> bool {
    !needle.is_empty() && haystack.windows(needle.len()).any(|w| w == needle)
}

/// True when the candidate's surface words, or its lemma words, occur as a
/// contiguous whole-word run inside the detection label (case-insensitive).
pub fn label_aligns(label: &str, candidate: &Candidate) -> bool {
    let label = words(label);
    let surface: Vec<String> = candidate.tokens.iter().map(|t| t.text.to_lowercase()).collect();
    let lemma: Vec<String> = candidate.phrase.split('_').map(str::to_string).collect();
    contains_run(&label, &surface) || contains_run(&label, &lemma)
}

/// Lexical detection; image-agnostic.
pub fn detect_nltk(sentence: &str, classifier: &Classifier, stop_list: &StopList) -> Vec<DetectionOutcome> {
    sentence_candidates(sentence, classifier.graph(), stop_list)
        .into_iter()
        .filter_map(|candidate| {
            let score = classifier.concreteness_score(&candidate.phrase);
            score.is_concrete.then_some(DetectionOutcome {
                candidate,
                technique: Technique::Nltk,
                concreteness: Some(score),
                grounding: None,
            })
        })
        .collect()
}

/// Whole-sentence grounding. Each candidate takes the best surviving
/// detection whose label aligns with it.
pub fn detect_mdetr(
    sentence: &str,
    image_ref: &str,
    classifier: &Classifier,
    stop_list: &StopList,
    provider: &dyn GroundingProvider,
    confidence_threshold: f64,
) -> Result<Vec<DetectionOutcome>, GroundingError> {
    let candidates = sentence_candidates(sentence, classifier.graph(), stop_list);
    if candidates.is_empty() {
        return Ok(Vec::new());
    }
    let request = GroundingRequest::new(image_ref, sentence)?;
    let confident = filter_detections(&provider.detect(&request)?, confidence_threshold);
    Ok(candidates
        .into_iter()
        .filter_map(|candidate| {
            let best = best_detection(confident.iter().filter(|d| label_aligns(&d.label, &candidate)))?;
            Some(DetectionOutcome {
                grounding: Some(best.clone()),
                candidate,
                technique: Technique::Mdetr,
                concreteness: None,
            })
        })
        .collect())
}

/// Lexical detections confirmed one at a time by a grounding query holding
/// only the candidate text. Queries run in parallel; output keeps sentence
/// order.
pub fn detect_joint(
    sentence: &str,
    image_ref: &str,
    classifier: &Classifier,
    stop_list: &StopList,
    provider: &dyn GroundingProvider,
    confidence_threshold: f64,
) -> Result<Vec<DetectionOutcome>, GroundingError> {
    let lexical = detect_nltk(sentence, classifier, stop_list);
    let confirmed = lexical
        .into_par_iter()
        .map(|outcome| {
            let request = GroundingRequest::new(image_ref, outcome.candidate.surface())?;
            let confident = filter_detections(&provider.detect(&request)?, confidence_threshold);
            Ok(best_detection(&confident).map(|best| DetectionOutcome {
                technique: Technique::Joint,
                grounding: Some(best.clone()),
                ..outcome
            }))
        })
        .collect::<Result<Vec<_>, GroundingError>>()?;
    Ok(confirmed.into_iter().flatten().collect())
}

/// Everything a detector needs, bundled so pipelines can share it across
/// threads.
#[derive(Clone)]
pub struct Detectors {
    pub classifier: Arc<Classifier>,
    pub stop_list: Arc<StopList>,
    pub provider: Option<Arc<dyn GroundingProvider>>,
    pub confidence_threshold: f64,
}

impl fmt::Debug for Detectors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Detectors")
            .field("classifier", &self.classifier)
            .field("provider", &self.provider.as_ref().map(|p| p.describe()))
            .field("confidence_threshold", &self.confidence_threshold)
            .finish()
    }
}

impl Detectors {
    pub fn new(classifier: Arc<Classifier>, stop_list: Arc<StopList>) -> Self {
        Self {
            classifier,
            stop_list,
            provider: None,
            confidence_threshold: crate::grounding::DEFAULT_CONFIDENCE_THRESHOLD,
        }
    }

    pub fn with_provider(mut self, provider: Arc<dyn GroundingProvider>) -> Self {
        self.provider = Some(provider);
        self
    }

    pub fn with_confidence_threshold(mut self, threshold: f64) -> Self {
        self.confidence_threshold = threshold;
        self
    }

    fn provider(&self) -> Result<&dyn GroundingProvider, GroundingError> {
        self.provider
            .as_deref()
            .ok_or_else(|| GroundingError::Config("this detector needs a grounding provider".into()))
    }

    pub fn detect(
        &self,
        technique: Technique,
        sentence: &str,
        image_ref: &str,
    ) -> Result<Vec<DetectionOutcome>, GroundingError> {
        match technique {
            Technique::Nltk => Ok(detect_nltk(sentence, &self.classifier, &self.stop_list)),
            Technique::Mdetr => detect_mdetr(
                sentence,
                image_ref,
                &self.classifier,
                &self.stop_list,
                self.provider()?,
                self.confidence_threshold,
            ),
            Technique::Joint => detect_joint(
                sentence,
                image_ref,
                &self.classifier,
                &self.stop_list,
                self.provider()?,
                self.confidence_threshold,
            ),
        }
    }
}
