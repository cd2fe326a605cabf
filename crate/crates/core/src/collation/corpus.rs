use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader, Lines};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::CollationError;

/// One source/target/image triplet of a parallel corpus.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusEntry {
    pub id: String,
    pub src: String,
    pub tgt: String,
    pub image: String,
}

/// Streaming JSON-lines corpus reader. Rejects duplicate ids and empty
/// sources.
pub struct JsonlCorpus<R> {
    lines: Lines<R>,
    line_no: usize,
    seen: HashSet<String>,
}

impl<R: BufRead> JsonlCorpus<R> {
    pub fn new(reader: R) -> Self {
        Self {
            lines: reader.lines(),
            line_no: 0,
            seen: HashSet::new(),
        }
    }
}

impl<R: BufRead> Iterator for JsonlCorpus<R> {
    type Item = Result<CorpusEntry, CollationError>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            let line = match self.lines.next()? {
                Ok(line) => line,
                Err(e) => return Some(Err(e.into())),
            };
            self.line_no += 1;
            if line.trim().is_empty() {
                continue;
            }
            let line_no = self.line_no;
            let entry = serde_json::from_str::<CorpusEntry>(&line)
                .map_err(|e| CollationError::MalformedCorpus {
                    line_no,
                    reason: e.to_string(),
                })
                .and_then(|entry| check_entry(entry, line_no, &mut self.seen));
            return Some(entry);
        }
    }
}

fn check_entry(
    entry: CorpusEntry,
    line_no: usize,
    seen: &mut HashSet<String>,
) -> Result<CorpusEntry, CollationError> {
    if entry.src.trim().is_empty() {
        return Err(CollationError::MalformedCorpus {
            line_no,
            reason: format!("entry {:?} has an empty source sentence", entry.id),
        });
    }
    if !seen.insert(entry.id.clone()) {
        return Err(CollationError::DuplicateId(entry.id));
    }
    Ok(entry)
}

pub fn open_jsonl(path: impl AsRef<Path>) -> Result<JsonlCorpus<BufReader<File>>, CollationError> {
    Ok(JsonlCorpus::new(BufReader::new(File::open(path)?)))
}

/// Line-aligned source, target and image-list files. Entry ids are 0-based
/// line numbers.
pub fn read_parallel_text(
    src: impl AsRef<Path>,
    tgt: impl AsRef<Path>,
    images: impl AsRef<Path>,
) -> Result<Vec<CorpusEntry>, CollationError> {
    let read = |p: &Path| -> Result<Vec<String>, CollationError> {
        Ok(std::fs::read_to_string(p)?.lines().map(str::to_string).collect())
    };
    let (src, tgt, images) = (read(src.as_ref())?, read(tgt.as_ref())?, read(images.as_ref())?);
    if src.len() != tgt.len() || src.len() != images.len() {
        return Err(CollationError::MalformedCorpus {
            line_no: src.len().min(tgt.len()).min(images.len()) + 1,
            reason: format!(
                "parallel files differ in length: {} source, {} target, {} image lines",
                src.len(),
                tgt.len(),
                images.len()
            ),
        });
    }
    let mut seen = HashSet::new();
    src.into_iter()
        .zip(tgt)
        .zip(images)
        .enumerate()
        .map(|(i, ((src, tgt), image))| {
            check_entry(
                CorpusEntry {
                    id: i.to_string(),
                    src,
                    tgt,
                    image: image.trim().to_string(),
                },
                i + 1,
                &mut seen,
            )
        })
        .collect()
}
