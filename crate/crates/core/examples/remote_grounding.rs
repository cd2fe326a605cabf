//! Talk to a grounding service over HTTP.
//!
//! Uses GROUNDING_ENDPOINT when set. Otherwise starts a throwaway local
//! service that echoes the query back as a single detection.
//!
//!     GROUNDING_ENDPOINT=http://localhost:8000 cargo run --example remote_grounding

use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::time::Duration;

use vismask::grounding::{GroundingProvider, GroundingRequest, ImagePayload, RemoteProvider};

fn echo_service() -> std::io::Result<String> {
    let listener = TcpListener::bind("127.0.0.1:0")?;
    let url = format!("http://{}", listener.local_addr()?);
    std::thread::spawn(move || {
        for mut stream in listener.incoming().flatten() {
            let mut reader = BufReader::new(stream.try_clone().expect("clone stream"));
            let mut request_line = String::new();
            let mut len = 0;
            let _ = reader.read_line(&mut request_line);
            loop {
                let mut line = String::new();
                if reader.read_line(&mut line).unwrap_or(0) == 0 || line == "\r\n" {
                    break;
                }
                if let Some(v) = line.to_ascii_lowercase().strip_prefix("content-length:") {
                    len = v.trim().parse().unwrap_or(0);
                }
            }
            let mut body = vec![0; len];
            let _ = reader.read_exact(&mut body);
            let reply = if request_line.starts_with("GET /health") {
                serde_json::json!({"status": "ok", "model": "echo"})
            } else {
                let req: serde_json::Value = serde_json::from_slice(&body).unwrap_or_default();
                serde_json::json!({"detections": [{"label": req["query"], "score": 0.9, "bbox": [0.1, 0.1, 0.6, 0.8]}]})
            }
            .to_string();
            let _ = write!(
                stream,
                "HTTP/1.1 200 OK\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{reply}",
                reply.len()
            );
        }
    });
    Ok(url)
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let endpoint = match std::env::var("GROUNDING_ENDPOINT") {
        Ok(url) if !url.is_empty() => url,
        _ => echo_service()?,
    };
    let provider = RemoteProvider::new(&endpoint, Duration::from_secs(30), 8, 2, ImagePayload::Path);
    let health = provider.health()?;
    println!("{endpoint}: {} ({})", health.status, health.model);
    for d in provider.detect(&GroundingRequest::new("images/1000.jpg", "pepper")?)? {
        println!("{} {:.2} {:?}", d.label, d.confidence, <[f64; 4]>::from(d.bbox));
    }
    Ok(())
}
