//! Line parsers for the WordNet 3.x `index.<pos>` and `data.<pos>` files.

use std::collections::HashMap;
use std::io::BufRead;

use super::{PartOfSpeech, Synset, SynsetId, WordNetError};

/// Lemma/POS key into the sense index.
pub type IndexKey = (String, PartOfSpeech);

/// Parsed contents of an `index.<pos>` file.
#[derive(Debug, Default, Clone)]
pub struct IndexFile {
    pub entries: HashMap<IndexKey, Vec<SynsetId>>,
    pub version: Option<String>,
}

/// Parsed contents of a `data.<pos>` file.
#[derive(Debug, Default, Clone)]
pub struct DataFile {
    pub synsets: HashMap<SynsetId, Synset>,
    /// Synset ids in file order.
    pub order: Vec<SynsetId>,
    pub version: Option<String>,
}

fn is_header(line: &str) -> bool {
    line.starts_with("  ")
}

fn header_version(line: &str) -> Option<String> {
    let mut words = line.split_whitespace();
    while let Some(w) = words.next() {
        if w == "WordNet" {
            if let Some(v) = words.next() {
                if v.chars().next().is_some_and(|c| c.is_ascii_digit()) {
                    return Some(v.trim_end_matches([',', '.']).to_string());
                }
            }
        }
    }
    None
}

/// Parse an `index.<pos>` file.
///
/// Each entry keeps its synset offsets in file order, which is the database
/// sense order.
pub fn parse_index<R: BufRead>(reader: R) -> Result<IndexFile, WordNetError> {
    let mut out = IndexFile::default();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line?;
        if is_header(&line) {
            if out.version.is_none() {
                out.version = header_version(&line);
            }
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let malformed = || WordNetError::MalformedLine { line_no };
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() < 6 {
            return Err(malformed());
        }
        let lemma = fields[0].to_string();
        let pos = PartOfSpeech::from_tag(fields[1]).ok_or_else(malformed)?;
        let synset_cnt: usize = fields[2].parse().map_err(|_| malformed())?;
        let p_cnt: usize = fields[3].parse().map_err(|_| malformed())?;
        // lemma pos synset_cnt p_cnt [ptr_symbol]{p_cnt} sense_cnt tagsense_cnt [offset]{synset_cnt}
        if fields.len() != 4 + p_cnt + 2 + synset_cnt {
            return Err(malformed());
        }
        let sense_cnt_at = 4 + p_cnt;
        fields[sense_cnt_at]
            .parse::<usize>()
            .map_err(|_| malformed())?;
        fields[sense_cnt_at + 1]
            .parse::<usize>()
            .map_err(|_| malformed())?;
        let offsets = fields[sense_cnt_at + 2..]
            .iter()
            .map(|f| {
                f.parse::<u64>()
                    .map(|offset| SynsetId::new(pos, offset))
                    .map_err(|_| malformed())
            })
            .collect::<Result<Vec<_>, _>>()?;
        out.entries.insert((lemma, pos), offsets);
    }
    Ok(out)
}

/// Parse a `data.<pos>` file.
///
/// Hypernyms are the union of `@` and `@i` pointer targets, deduplicated and
/// kept in first-seen order. Dangling targets are not checked here.
pub fn parse_data<R: BufRead>(reader: R) -> Result<DataFile, WordNetError> {
    let mut out = DataFile::default();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if is_header(&line) {
            if out.version.is_none() {
                out.version = header_version(&line);
            }
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let synset = parse_data_line(&line, i + 1)?;
        out.order.push(synset.id);
        out.synsets.insert(synset.id, synset);
    }
    Ok(out)
}

fn parse_data_line(line: &str, line_no: usize) -> Result<Synset, WordNetError> {
    let (body, gloss) = match line.split_once('|') {
        Some((b, g)) => (b, g.trim().to_string()),
        None => (line, String::new()),
    };
    let fields: Vec<&str> = body.split_whitespace().collect();
    let offset_text = fields.first().copied().unwrap_or_default();
    let offset: u64 = offset_text
        .parse()
        .map_err(|_| WordNetError::MalformedLine { line_no })?;
    let malformed = || WordNetError::MalformedSynset { offset };

    // offset lex_filenum ss_type w_cnt [word lex_id]{w_cnt} p_cnt [ptr]{p_cnt} ...
    if fields.len() < 4 {
        return Err(malformed());
    }
    let pos = PartOfSpeech::from_tag(fields[2]).ok_or_else(malformed)?;
    let w_cnt = usize::from_str_radix(fields[3], 16).map_err(|_| malformed())?;
    let mut cursor = 4;
    let mut lemmas = Vec::with_capacity(w_cnt);
    for _ in 0..w_cnt {
        let word = fields.get(cursor).ok_or_else(malformed)?;
        // adjective syntactic markers: "word(a)", "word(p)", "word(ip)"
        let word = match word.find('(') {
            Some(at) if pos == PartOfSpeech::Adjective => &word[..at],
            _ => word,
        };
        lemmas.push(word.to_string());
        fields.get(cursor + 1).ok_or_else(malformed)?;
        cursor += 2;
    }
    let p_cnt: usize = fields
        .get(cursor)
        .ok_or_else(malformed)?
        .parse()
        .map_err(|_| malformed())?;
    cursor += 1;
    let mut hypernyms: Vec<SynsetId> = Vec::new();
    for _ in 0..p_cnt {
        let ptr = fields.get(cursor..cursor + 4).ok_or_else(malformed)?;
        cursor += 4;
        if ptr[0] == "@" || ptr[0] == "@i" {
            let target_offset: u64 = ptr[1].parse().map_err(|_| malformed())?;
            let target_pos = PartOfSpeech::from_tag(ptr[2]).ok_or_else(malformed)?;
            let target = SynsetId::new(target_pos, target_offset);
            if !hypernyms.contains(&target) {
                hypernyms.push(target);
            }
        }
    }
    Ok(Synset {
        id: SynsetId::new(pos, offset),
        lemmas,
        gloss,
        hypernyms,
    })
}
