use std::io::ErrorKind;
use std::sync::{Condvar, Mutex};
use std::time::Duration;

use base64::Engine;
use serde::Deserialize;
use serde_json::json;

use super::{Detection, GroundingError, GroundingProvider, GroundingRequest, WireDetection};

/// How the image reference travels in a `/detect` request.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ImagePayload {
    /// Send the reference as `image_path`; the service resolves it.
    #[default]
    Path,
    /// Read the file locally and send its bytes as `image_b64`.
    Base64,
}

#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
pub struct HealthStatus {
    pub status: String,
    pub model: String,
}

#[derive(Deserialize)]
struct DetectResponse {
    detections: Vec<WireDetection>,
}

/// Counting semaphore bounding concurrent requests.
struct Gate {
    state: Mutex<(usize, usize)>,
    freed: Condvar,
    limit: usize,
}

struct Permit<'a>(&'a Gate);

impl Gate {
    fn new(limit: usize) -> Self {
        Self {
            state: Mutex::new((0, 0)),
            freed: Condvar::new(),
            limit,
        }
    }

    fn acquire(&self) -> Permit<'_> {
        let mut state = self.state.lock().expect("gate lock");
        while state.0 >= self.limit {
            state = self.freed.wait(state).expect("gate lock");
        }
        state.0 += 1;
        state.1 = state.1.max(state.0);
        Permit(self)
    }
}

impl Drop for Permit<'_> {
    fn drop(&mut self) {
        self.0.state.lock().expect("gate lock").0 -= 1;
        self.0.freed.notify_one();
    }
}

/// Blocking HTTP client for the grounding service.
///
/// Each call holds one connection for its full request/response exchange, so
/// responses never cross between requests. At most `max_inflight` calls are
/// on the wire at once; transport failures and 5xx answers are retried up to
/// `retries` times.
pub struct RemoteProvider {
    agent: ureq::Agent,
    endpoint: String,
    retries: u32,
    payload: ImagePayload,
    gate: Gate,
}

impl RemoteProvider {
    pub fn new(
        endpoint: &str,
        timeout: Duration,
        max_inflight: usize,
        retries: u32,
        payload: ImagePayload,
    ) -> Self {
        let agent = ureq::AgentBuilder::new()
            .timeout(timeout)
            .max_idle_connections_per_host(max_inflight.max(1))
            .build();
        Self {
            agent,
            endpoint: endpoint.trim_end_matches('/').to_string(),
            retries,
            payload,
            gate: Gate::new(max_inflight.max(1)),
        }
    }

    pub fn endpoint(&self) -> &str {
        &self.endpoint
    }

    /// Highest number of simultaneous requests observed so far.
    pub fn peak_inflight(&self) -> usize {
        self.gate.state.lock().expect("gate lock").1
    }

    pub fn health(&self) -> Result<HealthStatus, GroundingError> {
        let _permit = self.gate.acquire();
        let response = self
            .agent
            .get(&format!("{}/health", self.endpoint))
            .call()
            .map_err(classify_error)?;
        response
            .into_json::<HealthStatus>()
            .map_err(|e| GroundingError::MalformedResponse(e.to_string()))
    }

    fn body(&self, request: &GroundingRequest) -> Result<serde_json::Value, GroundingError> {
        Ok(match self.payload {
            ImagePayload::Path => json!({"image_path": request.image_ref, "query": request.query}),
            ImagePayload::Base64 => {
                let bytes = std::fs::read(&request.image_ref)?;
                let encoded = base64::engine::general_purpose::STANDARD.encode(bytes);
                json!({"image_b64": encoded, "query": request.query})
            }
        })
    }

    fn attempt(&self, body: &serde_json::Value, query: &str) -> Result<Vec<Detection>, GroundingError> {
        let _permit = self.gate.acquire();
        let response = self
            .agent
            .post(&format!("{}/detect", self.endpoint))
            .send_json(body)
            .map_err(classify_error)?;
        let parsed: DetectResponse = response
            .into_json()
            .map_err(|e| GroundingError::MalformedResponse(e.to_string()))?;
        parsed
            .detections
            .into_iter()
            .map(|w| w.into_detection(query))
            .collect::<Result<Vec<_>, _>>()
            .map_err(GroundingError::MalformedResponse)
    }
}

fn classify_error(err: ureq::Error) -> GroundingError {
    match err {
        ureq::Error::Status(code, response) => {
            let detail = response.into_string().unwrap_or_default();
            if code >= 500 {
                GroundingError::RemoteUnavailable(format!("HTTP {code}: {detail}"))
            } else {
                GroundingError::MalformedResponse(format!("HTTP {code}: {detail}"))
            }
        }
        ureq::Error::Transport(t) => {
            let timed_out = std::error::Error::source(&t)
                .and_then(|s| s.downcast_ref::<std::io::Error>())
                .is_some_and(|io| matches!(io.kind(), ErrorKind::TimedOut | ErrorKind::WouldBlock));
            if timed_out || t.to_string().contains("timed out") {
                GroundingError::Timeout
            } else {
                GroundingError::RemoteUnavailable(t.to_string())
            }
        }
    }
}

fn retryable(err: &GroundingError) -> bool {
    matches!(err, GroundingError::RemoteUnavailable(_) | GroundingError::Timeout)
}

impl GroundingProvider for RemoteProvider {
    fn detect(&self, request: &GroundingRequest) -> Result<Vec<Detection>, GroundingError> {
        let body = self.body(request)?;
        let mut attempt = 0;
        loop {
            match self.attempt(&body, &request.query) {
                Err(e) if retryable(&e) && attempt < self.retries => {
                    attempt += 1;
                    log::debug!("retrying {:?} after: {e}", request.query);
                    std::thread::sleep(Duration::from_millis(50 * u64::from(attempt)));
                }
                other => return other,
            }
        }
    }

    fn describe(&self) -> String {
        format!("remote:{}", self.endpoint)
    }
}
