//! LIBSVM text format: `label idx:val idx:val ...` with 1-based indices.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use rasqp_core::problem::Dataset;

use crate::error::{BenchError, Result};

/// Parses a LIBSVM stream, inferring the feature count from the largest
/// index seen. Distinct labels are mapped to `0..K` in increasing numeric
/// order. The bias feature is appended by [`Dataset`].
pub fn parse_libsvm<R: BufRead>(reader: R) -> Result<Dataset> {
    parse_libsvm_dims(reader, None)
}

/// Like [`parse_libsvm`], with an explicit raw feature count. Indices past
/// it are a parse error.
pub fn parse_libsvm_dims<R: BufRead>(reader: R, n_raw_features: Option<usize>) -> Result<Dataset> {
    let mut rows = Vec::new();
    let mut raw_labels = Vec::new();
    let mut max_index = 0usize;
    for (lineno, line) in reader.lines().enumerate() {
        let line_no = lineno + 1;
        let line = line.map_err(|e| BenchError::Parse { line: line_no, message: e.to_string() })?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let err = |message: String| BenchError::Parse { line: line_no, message };
        let mut tokens = line.split_ascii_whitespace();
        let label_tok = tokens.next().unwrap_or_default();
        let label: f64 = label_tok.parse().map_err(|_| err(format!("bad label {label_tok:?}")))?;
        if !label.is_finite() {
            return Err(err(format!("non-finite label {label_tok:?}")));
        }
        let mut row: Vec<(u32, f64)> = Vec::new();
        for tok in tokens {
            let (idx, val) = tok.split_once(':').ok_or_else(|| err(format!("expected idx:val, got {tok:?}")))?;
            let idx: usize = idx.parse().map_err(|_| err(format!("bad index in {tok:?}")))?;
            if idx == 0 {
                return Err(err("indices are 1-based".into()));
            }
            let val: f64 = val.parse().map_err(|_| err(format!("bad value in {tok:?}")))?;
            if !val.is_finite() {
                return Err(err(format!("non-finite value in {tok:?}")));
            }
            if let Some(limit) = n_raw_features {
                if idx > limit {
                    return Err(err(format!("index {idx} exceeds {limit} features")));
                }
            }
            let j = u32::try_from(idx - 1).map_err(|_| err(format!("index {idx} too large")))?;
            if row.last().is_some_and(|&(p, _)| p >= j) {
                return Err(err("feature indices must be strictly increasing".into()));
            }
            max_index = max_index.max(idx);
            row.push((j, val));
        }
        rows.push(row);
        raw_labels.push(label);
    }
    let mut classes: BTreeMap<u64, usize> = BTreeMap::new();
    let mut sorted = raw_labels.clone();
    sorted.sort_by(f64::total_cmp);
    sorted.dedup();
    for (i, l) in sorted.iter().enumerate() {
        classes.insert(l.to_bits(), i);
    }
    let labels = raw_labels.iter().map(|l| classes[&l.to_bits()]).collect();
    let n_raw = n_raw_features.unwrap_or(max_index);
    Ok(Dataset::new(rows, labels, n_raw, sorted.len())?)
}

pub fn read_libsvm(path: &Path) -> Result<Dataset> {
    let file = File::open(path).map_err(|e| BenchError::io(path, e))?;
    parse_libsvm(BufReader::new(file))
}

/// Writes class ids as labels and explicit features with 1-based indices.
/// The bias is implicit and not written.
pub fn write_libsvm<W: Write>(data: &Dataset, mut out: W) -> std::io::Result<()> {
    for i in 0..data.len() {
        write!(out, "{}", data.label(i))?;
        for &(j, v) in data.raw_row(i) {
            write!(out, " {}:{}", j + 1, v)?;
        }
        writeln!(out)?;
    }
    Ok(())
}
