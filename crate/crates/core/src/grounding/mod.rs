//! Visual grounding: `(image, text query) -> scored boxes`.
//!
//! Two providers implement [`GroundingProvider`]: an in-memory fixture table
//! and an HTTP client for a grounding service. Providers return every
//! detection they get; confidence filtering happens in [`filter_detections`]
//! on the caller side.

mod fixture;
mod remote;

pub use fixture::{load_fixtures, FixtureProvider, FixtureRecord, MissMode};
pub use remote::{HealthStatus, ImagePayload, RemoteProvider};

use std::path::PathBuf;
use std::sync::Arc;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Confidence threshold applied to grounding output unless configured
/// otherwise.
pub const DEFAULT_CONFIDENCE_THRESHOLD: f64 = 0.85;

#[derive(Debug, Error)]
pub enum GroundingError {
    #[error("no fixture for image {image_ref:?} and query {query:?}")]
    FixtureMiss { image_ref: String, query: String },
    #[error("fixture line {line_no}: {reason}")]
    MalformedFixture { line_no: usize, reason: String },
    #[error("grounding service unavailable: {0}")]
    RemoteUnavailable(String),
    #[error("grounding request timed out")]
    Timeout,
    #[error("malformed grounding response: {0}")]
    MalformedResponse(String),
    #[error("invalid grounding request: {0}")]
    InvalidRequest(String),
    #[error("invalid provider configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Normalized box `[x0, y0, x1, y1]` inside the unit square.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 4]", into = "[f64; 4]")]
pub struct BBox {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
}

impl BBox {
    pub fn new(x0: f64, y0: f64, x1: f64, y1: f64) -> Result<Self, String> {
        let in_unit = |v: f64| (0.0..=1.0).contains(&v);
        if ![x0, y0, x1, y1].into_iter().all(in_unit) {
            return Err(format!("bbox [{x0}, {y0}, {x1}, {y1}] leaves the unit square"));
        }
        if !(x0 < x1 && y0 < y1) {
            return Err(format!("bbox [{x0}, {y0}, {x1}, {y1}] is not ordered"));
        }
        Ok(Self { x0, y0, x1, y1 })
    }
}

impl TryFrom<[f64; 4]> for BBox {
    type Error = String;

    fn try_from(v: [f64; 4]) -> Result<Self, Self::Error> {
        Self::new(v[0], v[1], v[2], v[3])
    }
}

impl From<BBox> for [f64; 4] {
    fn from(b: BBox) -> Self {
        [b.x0, b.y0, b.x1, b.y1]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub query: String,
    /// Span of the query the detector matched.
    pub label: String,
    pub confidence: f64,
    pub bbox: BBox,
}

impl Detection {
    pub fn new(query: &str, label: &str, confidence: f64, bbox: BBox) -> Result<Self, String> {
        if !(0.0..=1.0).contains(&confidence) {
            return Err(format!("confidence {confidence} outside [0, 1]"));
        }
        Ok(Self {
            query: query.to_string(),
            label: label.to_string(),
            confidence,
            bbox,
        })
    }
}

/// A detection as it appears on the wire and in fixture files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WireDetection {
    pub label: String,
    pub score: f64,
    pub bbox: [f64; 4],
}

impl WireDetection {
    pub fn into_detection(self, query: &str) -> Result<Detection, String> {
        let bbox = BBox::try_from(self.bbox)?;
        Detection::new(query, &self.label, self.score, bbox)
    }
}

impl From<&Detection> for WireDetection {
    fn from(d: &Detection) -> Self {
        Self {
            label: d.label.clone(),
            score: d.confidence,
            bbox: d.bbox.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct GroundingRequest {
    pub image_ref: String,
    pub query: String,
}

impl GroundingRequest {
    pub fn new(image_ref: impl Into<String>, query: impl Into<String>) -> Result<Self, GroundingError> {
        let (image_ref, query) = (image_ref.into(), query.into());
        if image_ref.trim().is_empty() {
            return Err(GroundingError::InvalidRequest("empty image reference".into()));
        }
        if query.trim().is_empty() {
            return Err(GroundingError::InvalidRequest("empty query".into()));
        }
        Ok(Self { image_ref, query })
    }
}

pub trait GroundingProvider: Send + Sync {
    /// All detections for the request, unfiltered.
    fn detect(&self, request: &GroundingRequest) -> Result<Vec<Detection>, GroundingError>;

    /// Short human-readable identity, recorded in run manifests.
    fn describe(&self) -> String;
}

impl<P: GroundingProvider + ?Sized> GroundingProvider for Arc<P> {
    fn detect(&self, request: &GroundingRequest) -> Result<Vec<Detection>, GroundingError> {
        (**self).detect(request)
    }

    fn describe(&self) -> String {
        (**self).describe()
    }
}

/// Detections with `confidence >= threshold`, order preserved.
pub fn filter_detections(detections: &[Detection], threshold: f64) -> Vec<Detection> {
    detections
        .iter()
        .filter(|d| d.confidence >= threshold)
        .cloned()
        .collect()
}

/// The highest-confidence detection; earlier wins ties.
pub fn best_detection<'a, I>(detections: I) -> Option<&'a Detection>
where
    I: IntoIterator<Item = &'a Detection>,
{
    detections.into_iter().fold(None, |best: Option<&Detection>, d| match best {
        Some(b) if b.confidence >= d.confidence => Some(b),
        _ => Some(d),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProviderKind {
    Fixture,
    Remote,
}

#[derive(Debug, Clone)]
pub struct ProviderConfig {
    pub kind: ProviderKind,
    pub fixture_path: Option<PathBuf>,
    pub endpoint: Option<String>,
    pub timeout: Duration,
    pub max_inflight: usize,
    pub retries: u32,
    pub miss_mode: MissMode,
    pub image_payload: ImagePayload,
}

impl ProviderConfig {
    pub fn fixture(path: impl Into<PathBuf>) -> Self {
        Self {
            kind: ProviderKind::Fixture,
            fixture_path: Some(path.into()),
            ..Self::base()
        }
    }

    pub fn remote(endpoint: impl Into<String>) -> Self {
        Self {
            kind: ProviderKind::Remote,
            endpoint: Some(endpoint.into()),
            ..Self::base()
        }
    }

    fn base() -> Self {
        Self {
            kind: ProviderKind::Fixture,
            fixture_path: None,
            endpoint: None,
            timeout: Duration::from_secs(30),
            max_inflight: 8,
            retries: 2,
            miss_mode: MissMode::Lenient,
            image_payload: ImagePayload::Path,
        }
    }

    pub fn build(&self) -> Result<Arc<dyn GroundingProvider>, GroundingError> {
        match self.kind {
            ProviderKind::Fixture => {
                let path = self
                    .fixture_path
                    .as_ref()
                    .ok_or_else(|| GroundingError::Config("fixture provider needs a fixture path".into()))?;
                Ok(Arc::new(load_fixtures(path)?.with_miss_mode(self.miss_mode)))
            }
            ProviderKind::Remote => {
                let endpoint = self
                    .endpoint
                    .as_ref()
                    .ok_or_else(|| GroundingError::Config("remote provider needs an endpoint".into()))?;
                if self.max_inflight == 0 {
                    return Err(GroundingError::Config("max_inflight must be at least 1".into()));
                }
                Ok(Arc::new(RemoteProvider::new(
                    endpoint,
                    self.timeout,
                    self.max_inflight,
                    self.retries,
                    self.image_payload,
                )))
            }
        }
    }
}
