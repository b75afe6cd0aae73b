//! LIBSVM sparse text format.
//!
//! Each record line is `<label> <idx>:<val> <idx>:<val> …` with 1-based,
//! strictly increasing indices. Labels map to `{-1, +1}`:
//!
//! | token value | label |
//! |-------------|-------|
//! | `1`, `+1`   | `+1`  |
//! | `0`, `-1`   | `-1`  |
//!
//! Blank lines are skipped; any other label value is rejected.

use std::fmt::Write as _;
use std::io::BufRead;

use thiserror::Error;

use super::Sample;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LibsvmError {
    #[error("line {line}: malformed token `{token}`")]
    MalformedToken { line: usize, token: String },
    #[error("line {line}: unsupported label `{token}`")]
    BadLabel { line: usize, token: String },
    #[error("line {line}: non-increasing index {index} after {previous}")]
    NonIncreasingIndex { line: usize, index: u32, previous: u32 },
    #[error("line {line}: index {index} exceeds dimension {d}")]
    IndexOutOfRange { line: usize, index: u32, d: usize },
    #[error("input contains no records")]
    Empty,
    #[error("read error at line {line}: {message}")]
    Io { line: usize, message: String },
}

impl LibsvmError {
    /// 1-based line number the error refers to, if any.
    pub fn line(&self) -> Option<usize> {
        match self {
            LibsvmError::MalformedToken { line, .. }
            | LibsvmError::BadLabel { line, .. }
            | LibsvmError::NonIncreasingIndex { line, .. }
            | LibsvmError::IndexOutOfRange { line, .. }
            | LibsvmError::Io { line, .. } => Some(*line),
            LibsvmError::Empty => None,
        }
    }
}

/// One parsed line: a `±1` label and sparse `(index, value)` pairs.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseRecord {
    pub line: usize,
    pub label: f64,
    pub entries: Vec<(u32, f64)>,
}

fn parse_label(token: &str, line: usize) -> Result<f64, LibsvmError> {
    let v: f64 = token.parse().map_err(|_| LibsvmError::MalformedToken {
        line,
        token: token.to_string(),
    })?;
    if v == 1.0 {
        Ok(1.0)
    } else if v == 0.0 || v == -1.0 {
        Ok(-1.0)
    } else {
        Err(LibsvmError::BadLabel {
            line,
            token: token.to_string(),
        })
    }
}

/// Parse one line. `Ok(None)` for blank lines.
pub fn parse_line(text: &str, line: usize) -> Result<Option<SparseRecord>, LibsvmError> {
    let mut tokens = text.split_whitespace();
    let Some(label_tok) = tokens.next() else {
        return Ok(None);
    };
    let label = parse_label(label_tok, line)?;
    let mut entries = Vec::new();
    let mut previous = 0u32;
    for token in tokens {
        let malformed = || LibsvmError::MalformedToken {
            line,
            token: token.to_string(),
        };
        let (idx, val) = token.split_once(':').ok_or_else(malformed)?;
        let index: u32 = idx.parse().map_err(|_| malformed())?;
        let value: f64 = val.parse().map_err(|_| malformed())?;
        if index == 0 || !value.is_finite() {
            return Err(malformed());
        }
        if index <= previous {
            return Err(LibsvmError::NonIncreasingIndex {
                line,
                index,
                previous,
            });
        }
        previous = index;
        entries.push((index, value));
    }
    Ok(Some(SparseRecord { line, label, entries }))
}

/// Line-by-line results, so callers can keep valid records and collect errors.
pub fn parse_lines(text: &str) -> impl Iterator<Item = Result<SparseRecord, LibsvmError>> + '_ {
    text.lines()
        .enumerate()
        .filter_map(|(i, l)| parse_line(l, i + 1).transpose())
}

/// Strict parse: the first malformed line aborts.
pub fn parse_libsvm<R: BufRead>(reader: R) -> Result<Vec<SparseRecord>, LibsvmError> {
    let mut records = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let text = line.map_err(|e| LibsvmError::Io {
            line: line_no,
            message: e.to_string(),
        })?;
        if let Some(rec) = parse_line(&text, line_no)? {
            records.push(rec);
        }
    }
    if records.is_empty() {
        return Err(LibsvmError::Empty);
    }
    Ok(records)
}

pub fn parse_libsvm_str(text: &str) -> Result<Vec<SparseRecord>, LibsvmError> {
    parse_libsvm(text.as_bytes())
}

/// Dense samples of dimension `d`; index `k` lands at position `k - 1`.
pub fn densify(records: &[SparseRecord], d: usize) -> Result<Vec<Sample>, LibsvmError> {
    records
        .iter()
        .map(|r| {
            let mut features = vec![0.0; d];
            for &(index, value) in &r.entries {
                if index as usize > d {
                    return Err(LibsvmError::IndexOutOfRange {
                        line: r.line,
                        index,
                        d,
                    });
                }
                features[index as usize - 1] = value;
            }
            Ok(Sample {
                features,
                label: r.label,
            })
        })
        .collect()
}

/// Canonical text: `+1`/`-1` labels and shortest round-trip values.
pub fn serialize(records: &[SparseRecord]) -> String {
    let mut s = String::new();
    for r in records {
        s.push_str(if r.label > 0.0 { "+1" } else { "-1" });
        for (i, v) in &r.entries {
            let _ = write!(s, " {i}:{v}");
        }
        s.push('\n');
    }
    s
}
