//! Plain-text edge-list and label readers.
//!
//! Edge files hold one edge per line as two whitespace-separated integer ids.
//! Label files hold `node_id<whitespace>label_id` per line. Lines starting with
//! `#` and blank lines are ignored in both. A label file may open with a
//! `node label` header line.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

fn parse_pair(path: &Path, line_no: usize, line: &str) -> Result<(u64, u64)> {
    let fields: Vec<&str> = line.split_whitespace().collect();
    let err = |message: String| Error::Parse {
        path: path.to_path_buf(),
        line: line_no,
        message,
    };
    if fields.len() != 2 {
        return Err(err(format!("expected 2 fields, found {}", fields.len())));
    }
    let a = fields[0]
        .parse()
        .map_err(|_| err(format!("not an integer: {:?}", fields[0])))?;
    let b = fields[1]
        .parse()
        .map_err(|_| err(format!("not an integer: {:?}", fields[1])))?;
    Ok((a, b))
}

fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

/// Reads raw (possibly sparse) node ids from an edge-list file.
pub fn read_edge_list(path: &Path) -> Result<Vec<(u64, u64)>> {
    let text = fs::read_to_string(path)?;
    content_lines(&text)
        .map(|(no, line)| parse_pair(path, no, line))
        .collect()
}

/// Reads `(raw node id, class id)` pairs from a label file.
pub fn read_labels(path: &Path) -> Result<Vec<(u64, usize)>> {
    let text = fs::read_to_string(path)?;
    let mut out = Vec::new();
    for (k, (no, line)) in content_lines(&text).enumerate() {
        if k == 0 && line.split_whitespace().next() == Some("node") {
            continue;
        }
        let (node, label) = parse_pair(path, no, line)?;
        out.push((node, label as usize));
    }
    Ok(out)
}
