//! Rank table CSV: header `method,score`, ascending score, ties by method id.

use std::fs;
use std::path::Path;

use voxpost_core::RankTable;

use crate::error::{Error, Result};

pub fn to_csv(table: &RankTable) -> Result<String> {
    let mut out = String::from("method,score\n");
    for (method, score) in table.sorted() {
        if method.contains([',', '"', '\n', '\r']) {
            return Err(Error::Usage(format!(
                "method id {method:?} cannot be written to CSV"
            )));
        }
        // `Display` for f64 is the shortest string that parses back exactly.
        out.push_str(&format!("{method},{score}\n"));
    }
    Ok(out)
}

pub fn export_ranks(table: &RankTable, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, to_csv(table)?).map_err(|e| Error::io(path, e))
}

pub fn parse_ranks(text: &str, path: &Path) -> Result<Vec<(String, f64)>> {
    let mut lines = text.lines().enumerate();
    let parse_err = |line: usize, reason: String| Error::Parse {
        path: path.into(),
        line: line + 1,
        reason,
    };
    match lines.next() {
        Some((_, "method,score")) => {}
        other => {
            return Err(parse_err(0, format!("expected header \"method,score\", got {:?}", other.map(|l| l.1))))
        }
    }
    lines
        .filter(|(_, l)| !l.is_empty())
        .map(|(n, l)| {
            let (method, score) = l
                .split_once(',')
                .ok_or_else(|| parse_err(n, "expected two columns".into()))?;
            let score = score
                .parse::<f64>()
                .map_err(|e| parse_err(n, e.to_string()))?;
            Ok((method.to_string(), score))
        })
        .collect()
}

pub fn read_ranks(path: impl AsRef<Path>) -> Result<Vec<(String, f64)>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_ranks(&text, path)
}
