//! Replay recorded grounding answers and apply the confidence filter.

use std::path::Path;

use vismask::grounding::{
    filter_detections, load_fixtures, GroundingProvider, GroundingRequest, MissMode, DEFAULT_CONFIDENCE_THRESHOLD,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let fixtures = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/groundings.jsonl");
    let provider = load_fixtures(&fixtures)?.with_miss_mode(MissMode::Strict);
    println!("{} records from {}", provider.len(), provider.describe());

    let (image, query) = provider.keys().next().map(|(i, q)| (i.to_string(), q.to_string())).expect("non-empty fixture");
    let detections = provider.detect(&GroundingRequest::new(&image, &query)?)?;
    println!("{image} / {query:?}");
    for d in &detections {
        println!("  {:<12} {:.3} {:?}", d.label, d.confidence, <[f64; 4]>::from(d.bbox));
    }
    let kept = filter_detections(&detections, DEFAULT_CONFIDENCE_THRESHOLD);
    println!("{} of {} pass {}", kept.len(), detections.len(), DEFAULT_CONFIDENCE_THRESHOLD);

    match provider.detect(&GroundingRequest::new(&image, "unicorn")?) {
        Err(e) => println!("strict miss: {e}"),
        Ok(d) => println!("unexpected hit: {d:?}"),
    }
    Ok(())
}
