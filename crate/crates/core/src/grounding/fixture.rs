use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Detection, GroundingError, GroundingProvider, GroundingRequest, WireDetection};

/// What a fixture provider does for an unknown `(image, query)` pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MissMode {
    /// Treat as "nothing grounded".
    #[default]
    Lenient,
    /// Fail with [`GroundingError::FixtureMiss`].
    Strict,
}

/// One line of a fixture file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixtureRecord {
    pub image: String,
    pub query: String,
    pub detections: Vec<WireDetection>,
}

/// Recorded grounding answers keyed by image and normalized query.
#[derive(Debug, Clone, Default)]
pub struct FixtureProvider {
    table: HashMap<(String, String), Vec<Detection>>,
    mode: MissMode,
    duplicates: usize,
    source: String,
}

fn query_key(query: &str) -> String {
    query
        .split_whitespace()
        .map(str::to_lowercase)
        .collect::<Vec<_>>()
        .join(" ")
}

impl FixtureProvider {
    pub fn from_reader<R: BufRead>(reader: R) -> Result<Self, GroundingError> {
        let mut provider = Self::default();
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let line_no = i + 1;
            let malformed = |reason: String| GroundingError::MalformedFixture { line_no, reason };
            let record: FixtureRecord =
                serde_json::from_str(&line).map_err(|e| malformed(e.to_string()))?;
            if record.image.trim().is_empty() || record.query.trim().is_empty() {
                return Err(malformed("image and query must be non-empty".into()));
            }
            let detections = record
                .detections
                .into_iter()
                .map(|w| w.into_detection(&record.query))
                .collect::<Result<Vec<_>, _>>()
                .map_err(malformed)?;
            if provider.insert(&record.image, &record.query, detections) {
                log::warn!(
                    "fixture line {line_no}: duplicate key ({:?}, {:?}); last record wins",
                    record.image,
                    record.query
                );
            }
        }
        Ok(provider)
    }

    /// Insert or replace an entry. Returns true when a previous entry was
    /// replaced.
    pub fn insert(&mut self, image: &str, query: &str, detections: Vec<Detection>) -> bool {
        let replaced = self
            .table
            .insert((image.to_string(), query_key(query)), detections)
            .is_some();
        if replaced {
            self.duplicates += 1;
        }
        replaced
    }

    pub fn with_miss_mode(mut self, mode: MissMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn miss_mode(&self) -> MissMode {
        self.mode
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }

    /// Number of records that overwrote an earlier record with the same key.
    pub fn duplicates(&self) -> usize {
        self.duplicates
    }

    pub fn keys(&self) -> impl Iterator<Item = (&str, &str)> {
        self.table.keys().map(|(i, q)| (i.as_str(), q.as_str()))
    }
}

impl GroundingProvider for FixtureProvider {
    fn detect(&self, request: &GroundingRequest) -> Result<Vec<Detection>, GroundingError> {
        let key = (request.image_ref.clone(), query_key(&request.query));
        match (self.table.get(&key), self.mode) {
            (Some(found), _) => Ok(found
                .iter()
                .map(|d| Detection {
                    query: request.query.clone(),
                    ..d.clone()
                })
                .collect()),
            (None, MissMode::Lenient) => Ok(Vec::new()),
            (None, MissMode::Strict) => Err(GroundingError::FixtureMiss {
                image_ref: request.image_ref.clone(),
                query: request.query.clone(),
            }),
        }
    }

    fn describe(&self) -> String {
        format!("fixture:{} ({} records)", self.source, self.table.len())
    }
}

pub fn load_fixtures(path: impl AsRef<Path>) -> Result<FixtureProvider, GroundingError> {
    let path = path.as_ref();
    let mut provider = FixtureProvider::from_reader(BufReader::new(File::open(path)?))?;
    provider.source = path.display().to_string();
    Ok(provider)
}
