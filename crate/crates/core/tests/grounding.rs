mod common;

use std::io::{BufRead, BufReader, Read, Write};
use std::net::{TcpListener, TcpStream};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::time::Duration;

use base64::Engine;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use vismask::grounding::{
    filter_detections, load_fixtures, BBox, Detection, FixtureProvider, GroundingError, GroundingProvider,
    GroundingRequest, ImagePayload, MissMode, ProviderConfig, RemoteProvider,
};

fn req(image: &str, query: &str) -> GroundingRequest {
    GroundingRequest::new(image, query).unwrap()
}

#[test]
fn generated_fixture_answers_every_key() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut file = tempfile::NamedTempFile::new().unwrap();
    let mut expected = Vec::new();
    for i in 0..100 {
        let image = format!("img/{}.jpg", i % 17);
        let query = format!("Query {} {}", i, ["dog", "red Pepper", "a  man"][i % 3]);
        let dets: Vec<Value> = (0..rng.gen_range(0..4))
            .map(|k| {
                let x0: f64 = rng.gen_range(0.0..0.5);
                let y0: f64 = rng.gen_range(0.0..0.5);
                json!({"label": format!("l{k}"), "score": rng.gen_range(0.0..=1.0), "bbox": [x0, y0, x0 + 0.3, y0 + 0.4]})
            })
            .collect();
        writeln!(file, "{}", json!({"image": image, "query": query, "detections": dets})).unwrap();
        expected.push((image, query, dets));
    }
    let provider = load_fixtures(file.path()).unwrap().with_miss_mode(MissMode::Strict);
    assert_eq!(provider.len(), 100);
    assert_eq!(provider.duplicates(), 0);
    for (image, query, dets) in &expected {
        for q in [query.clone(), query.to_uppercase()] {
            let got = provider.detect(&req(image, &q)).unwrap();
            assert_eq!(got.len(), dets.len());
            for (g, d) in got.iter().zip(dets) {
                assert_eq!(g.label, d["label"].as_str().unwrap());
                assert_eq!(g.confidence, d["score"].as_f64().unwrap());
                let bbox: Vec<f64> = d["bbox"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect();
                assert_eq!(<[f64; 4]>::from(g.bbox).to_vec(), bbox);
            }
            assert_eq!(got, provider.detect(&req(image, &q)).unwrap());
        }
    }
    assert!(matches!(
        provider.detect(&req("img/0.jpg", "not there")),
        Err(GroundingError::FixtureMiss { .. })
    ));
}

#[test]
fn malformed_fixture_reports_line() {
    let text = "{\"image\":\"a\",\"query\":\"q\",\"detections\":[]}\n{\"image\":\"a\",\"query\":\"r\",\"detections\":[{\"label\":\"x\",\"score\":0.5,\"bbox\":[0.6,0.1,0.2,0.3]}]}\n";
    match FixtureProvider::from_reader(text.as_bytes()) {
        Err(GroundingError::MalformedFixture { line_no, .. }) => assert_eq!(line_no, 2),
        other => panic!("{other:?}"),
    }
    let score = "{\"image\":\"a\",\"query\":\"r\",\"detections\":[{\"label\":\"x\",\"score\":1.5,\"bbox\":[0.1,0.1,0.2,0.3]}]}\n";
    assert!(FixtureProvider::from_reader(score.as_bytes()).is_err());
}

#[test]
fn bundled_fixture_validates() {
    let p = load_fixtures(common::groundings_path()).unwrap();
    assert_eq!(p.len(), 474);
    assert_eq!(p.duplicates(), 0);
}

#[test]
fn provider_config_invariants() {
    assert!(matches!(
        ProviderConfig { fixture_path: None, ..ProviderConfig::fixture("x") }.build(),
        Err(GroundingError::Config(_))
    ));
    assert!(matches!(
        ProviderConfig { endpoint: None, ..ProviderConfig::remote("x") }.build(),
        Err(GroundingError::Config(_))
    ));
    let c = ProviderConfig::remote("http://localhost:1");
    assert_eq!((c.timeout, c.max_inflight, c.retries), (Duration::from_secs(30), 8, 2));
    assert!(ProviderConfig::fixture(common::groundings_path()).build().is_ok());
}

fn det(conf: f64) -> Detection {
    Detection::new("q", "l", conf, BBox::new(0.0, 0.0, 1.0, 1.0).unwrap()).unwrap()
}

proptest! {
    #[test]
    fn filtering_equals_rescan(confs in prop::collection::vec(0.0f64..=1.0, 0..40), t in 0.0f64..=1.0) {
        let dets: Vec<Detection> = confs.iter().map(|c| det(*c)).collect();
        let got = filter_detections(&dets, t);
        let mut want = Vec::new();
        for d in &dets {
            if d.confidence >= t {
                want.push(d.clone());
            }
        }
        prop_assert_eq!(&got, &want);
        prop_assert!(got.iter().all(|d| d.confidence >= t));
    }
}

#[test]
fn filter_examples() {
    let confs = |ds: Vec<Detection>| ds.iter().map(|d| d.confidence).collect::<Vec<_>>();
    let dets = vec![det(0.91), det(0.84), det(0.85)];
    assert_eq!(confs(filter_detections(&dets, 0.85)), [0.91, 0.85]);
    assert_eq!(filter_detections(&dets, 0.0), dets);
    assert!(filter_detections(&[], 0.85).is_empty());
}

// A tiny HTTP/1.1 stub speaking the grounding wire protocol.

struct Reply {
    status: u16,
    body: String,
    delay: Duration,
}

type Handler = dyn Fn(usize, &str, &str, &Value) -> Reply + Send + Sync;

struct Stub {
    url: String,
    hits: Arc<AtomicUsize>,
    peak: Arc<AtomicUsize>,
    bodies: Arc<Mutex<Vec<Value>>>,
}

fn read_request(stream: &mut TcpStream) -> Option<(String, String, Value)> {
    let mut reader = BufReader::new(stream.try_clone().ok()?);
    let mut line = String::new();
    reader.read_line(&mut line).ok()?;
    let mut parts = line.split_whitespace();
    let method = parts.next()?.to_string();
    let path = parts.next()?.to_string();
    let mut len = 0;
    loop {
        let mut h = String::new();
        reader.read_line(&mut h).ok()?;
        if h == "\r\n" || h.is_empty() {
            break;
        }
        if let Some((k, v)) = h.split_once(':') {
            if k.eq_ignore_ascii_case("content-length") {
                len = v.trim().parse().unwrap_or(0);
            }
        }
    }
    let mut body = vec![0; len];
    reader.read_exact(&mut body).ok()?;
    let value = serde_json::from_slice(&body).unwrap_or(Value::Null);
    Some((method, path, value))
}

fn serve(handler: Arc<Handler>) -> Stub {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}", listener.local_addr().unwrap());
    let hits = Arc::new(AtomicUsize::new(0));
    let active = Arc::new(AtomicUsize::new(0));
    let peak = Arc::new(AtomicUsize::new(0));
    let bodies = Arc::new(Mutex::new(Vec::new()));
    let stub = Stub {
        url,
        hits: hits.clone(),
        peak: peak.clone(),
        bodies: bodies.clone(),
    };
    std::thread::spawn(move || {
        for stream in listener.incoming() {
            let Ok(mut stream) = stream else { continue };
            let (handler, hits, active, peak, bodies) =
                (handler.clone(), hits.clone(), active.clone(), peak.clone(), bodies.clone());
            std::thread::spawn(move || {
                let Some((method, path, body)) = read_request(&mut stream) else { return };
                let n = hits.fetch_add(1, Ordering::SeqCst);
                let now = active.fetch_add(1, Ordering::SeqCst) + 1;
                peak.fetch_max(now, Ordering::SeqCst);
                bodies.lock().unwrap().push(body.clone());
                let reply = handler(n, &method, &path, &body);
                std::thread::sleep(reply.delay);
                active.fetch_sub(1, Ordering::SeqCst);
                let _ = write!(
                    stream,
                    "HTTP/1.1 {} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{}",
                    reply.status,
                    reply.body.len(),
                    reply.body
                );
            });
        }
    });
    stub
}

fn ok(body: Value) -> Reply {
    Reply {
        status: 200,
        body: body.to_string(),
        delay: Duration::ZERO,
    }
}

fn client(url: &str, retries: u32) -> RemoteProvider {
    RemoteProvider::new(url, Duration::from_secs(5), 8, retries, ImagePayload::Path)
}

#[test]
fn remote_round_trip_preserves_fields() {
    let stub = serve(Arc::new(|_, method, path, body| {
        assert_eq!((method, path), ("POST", "/detect"));
        ok(json!({"detections": [{"label": body["query"], "score": 0.93, "bbox": [0.1, 0.2, 0.4, 0.5]}]}))
    }));
    let got = client(&stub.url, 0).detect(&req("imgX", "dog")).unwrap();
    assert_eq!(got, vec![Detection::new("dog", "dog", 0.93, BBox::new(0.1, 0.2, 0.4, 0.5).unwrap()).unwrap()]);
    assert_eq!(stub.bodies.lock().unwrap()[0], json!({"image_path": "imgX", "query": "dog"}));
}

#[test]
fn remote_base64_payload() {
    let stub = serve(Arc::new(|_, _, _, _| ok(json!({"detections": []}))));
    let mut image = tempfile::NamedTempFile::new().unwrap();
    image.write_all(b"\x89PNG fake bytes").unwrap();
    let p = RemoteProvider::new(&stub.url, Duration::from_secs(5), 2, 0, ImagePayload::Base64);
    assert!(p.detect(&req(image.path().to_str().unwrap(), "dog")).unwrap().is_empty());
    let body = stub.bodies.lock().unwrap()[0].clone();
    let decoded = base64::engine::general_purpose::STANDARD.decode(body["image_b64"].as_str().unwrap()).unwrap();
    assert_eq!(decoded, b"\x89PNG fake bytes");
    assert!(body.get("image_path").is_none());
}

#[test]
fn remote_bounds_inflight_requests() {
    let stub = serve(Arc::new(|_, _, _, _| Reply {
        delay: Duration::from_millis(40),
        ..ok(json!({"detections": []}))
    }));
    let p = RemoteProvider::new(&stub.url, Duration::from_secs(10), 3, 0, ImagePayload::Path);
    std::thread::scope(|s| {
        for i in 0..24 {
            let p = &p;
            s.spawn(move || p.detect(&req("img", &format!("q{i}"))).unwrap());
        }
    });
    assert_eq!(stub.hits.load(Ordering::SeqCst), 24);
    assert!(stub.peak.load(Ordering::SeqCst) <= 3);
    assert!(p.peak_inflight() <= 3 && p.peak_inflight() >= 2);
}

#[test]
fn remote_retries_server_errors_then_surfaces_them() {
    let stub = serve(Arc::new(|_, _, _, _| Reply {
        status: 503,
        body: "busy".into(),
        delay: Duration::ZERO,
    }));
    let err = client(&stub.url, 2).detect(&req("img", "dog")).unwrap_err();
    assert!(matches!(err, GroundingError::RemoteUnavailable(_)), "{err:?}");
    assert_eq!(stub.hits.load(Ordering::SeqCst), 3);
}

#[test]
fn remote_recovers_within_retry_budget() {
    let stub = serve(Arc::new(|n, _, _, _| {
        if n < 2 {
            Reply {
                status: 500,
                body: "boom".into(),
                delay: Duration::ZERO,
            }
        } else {
            ok(json!({"detections": [{"label": "dog", "score": 0.9, "bbox": [0, 0, 1, 1]}]}))
        }
    }));
    assert_eq!(client(&stub.url, 2).detect(&req("img", "dog")).unwrap().len(), 1);
    assert_eq!(stub.hits.load(Ordering::SeqCst), 3);
}

#[test]
fn remote_client_errors_and_schema_violations_are_malformed() {
    for reply in [
        Reply {
            status: 400,
            body: "{\"error\":\"missing query\"}".into(),
            delay: Duration::ZERO,
        },
        ok(json!({"boxes": []})),
        ok(json!({"detections": [{"label": "dog", "score": 0.9, "bbox": [0.5, 0, 0.1, 1]}]})),
        ok(json!({"detections": [{"label": "dog", "score": 1.9, "bbox": [0, 0, 1, 1]}]})),
    ] {
        let reply = Arc::new(reply);
        let stub = serve(Arc::new(move |_, _, _, _| Reply {
            status: reply.status,
            body: reply.body.clone(),
            delay: Duration::ZERO,
        }));
        let err = client(&stub.url, 2).detect(&req("img", "dog")).unwrap_err();
        assert!(matches!(err, GroundingError::MalformedResponse(_)), "{err:?}");
        assert_eq!(stub.hits.load(Ordering::SeqCst), 1);
    }
}

#[test]
fn remote_timeout_is_retried_and_surfaced() {
    let stub = serve(Arc::new(|_, _, _, _| Reply {
        delay: Duration::from_millis(800),
        ..ok(json!({"detections": []}))
    }));
    let p = RemoteProvider::new(&stub.url, Duration::from_millis(150), 2, 1, ImagePayload::Path);
    let err = p.detect(&req("img", "dog")).unwrap_err();
    assert!(matches!(err, GroundingError::Timeout), "{err:?}");
    assert_eq!(stub.hits.load(Ordering::SeqCst), 2);
}

#[test]
fn remote_unreachable_is_an_error_not_empty() {
    let port = TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
    let err = client(&format!("http://127.0.0.1:{port}"), 1).detect(&req("img", "dog")).unwrap_err();
    assert!(matches!(err, GroundingError::RemoteUnavailable(_)), "{err:?}");
}

#[test]
fn remote_health_probe() {
    let stub = serve(Arc::new(|_, method, path, _| {
        assert_eq!((method, path), ("GET", "/health"));
        ok(json!({"status": "ok", "model": "stub-1"}))
    }));
    let h = client(&format!("{}/", stub.url), 0).health().unwrap();
    assert_eq!((h.status.as_str(), h.model.as_str()), ("ok", "stub-1"));
}

#[test]
fn recorded_fixture_replays_remote_answers() {
    let stub = serve(Arc::new(|_, _, _, body| {
        ok(json!({"detections": [
            {"label": body["query"], "score": 0.91, "bbox": [0.1, 0.2, 0.4, 0.5]},
            {"label": "other", "score": 0.2, "bbox": [0.0, 0.0, 0.3, 0.3]}
        ]}))
    }));
    let remote = client(&stub.url, 0);
    let live = remote.detect(&req("img1", "pepper")).unwrap();
    let wire: Vec<_> = live.iter().map(vismask::grounding::WireDetection::from).collect();
    let record = json!({"image": "img1", "query": "pepper", "detections": wire});
    let replay = FixtureProvider::from_reader(record.to_string().as_bytes()).unwrap();
    assert_eq!(replay.detect(&req("img1", "pepper")).unwrap(), live);
}
