//! Matrix file formats and output helpers for the `abflow` binary.
//!
//! Two input formats are accepted:
//!
//! * `json`: `{"rows": r, "cols": c, "data": [[re, im], ...]}`, row-major.
//! * `txt`: whitespace-separated real entries, one matrix row per line.
//!
//! Output matrices are always JSON. Floats are written in shortest
//! round-trip form, so `parse(emit(M)) == M` bit for bit.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use abflow::{ComplexMatrix, C64};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error at line {line}, column {col}: {msg}")]
    Parse {
        line: usize,
        col: usize,
        msg: String,
    },
    #[error("shape error at line {line}: expected {expected} entries, found {found}")]
    Shape {
        line: usize,
        expected: usize,
        found: usize,
    },
    #[error("invalid matrix: {0}")]
    Invalid(String),
    #[error("unknown matrix format {0:?} (expected json or txt)")]
    UnknownFormat(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MatrixFormat {
    Json,
    Txt,
}

impl MatrixFormat {
    /// `.json` means json, anything else txt.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("json") => MatrixFormat::Json,
            _ => MatrixFormat::Txt,
        }
    }
}

impl FromStr for MatrixFormat {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "json" => Ok(MatrixFormat::Json),
            "txt" => Ok(MatrixFormat::Txt),
            _ => Err(CliError::UnknownFormat(s.to_string())),
        }
    }
}

/// On-disk JSON layout. Extra fields are ignored on input, so result
/// files with diagnostics attached still load as matrices.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MatrixDoc {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<[f64; 2]>,
}

impl From<&ComplexMatrix> for MatrixDoc {
    fn from(m: &ComplexMatrix) -> Self {
        Self {
            rows: m.rows(),
            cols: m.cols(),
            data: m.as_slice().iter().map(|z| [z.re, z.im]).collect(),
        }
    }
}

impl TryFrom<MatrixDoc> for ComplexMatrix {
    type Error = CliError;

    fn try_from(doc: MatrixDoc) -> Result<Self, CliError> {
        let expected = doc.rows * doc.cols;
        if doc.data.len() != expected {
            return Err(CliError::Shape {
                line: 1,
                expected,
                found: doc.data.len(),
            });
        }
        let data = doc.data.iter().map(|&[re, im]| C64::new(re, im)).collect();
        ComplexMatrix::new(doc.rows, doc.cols, data).map_err(|e| CliError::Invalid(e.to_string()))
    }
}

pub fn parse_matrix_str(text: &str, format: MatrixFormat) -> Result<ComplexMatrix, CliError> {
    match format {
        MatrixFormat::Json => parse_json(text),
        MatrixFormat::Txt => parse_txt(text),
    }
}

pub fn parse_matrix_file(path: &Path, format: MatrixFormat) -> Result<ComplexMatrix, CliError> {
    let text = fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_matrix_str(&text, format)
}

fn parse_json(text: &str) -> Result<ComplexMatrix, CliError> {
    let doc: MatrixDoc = serde_json::from_str(text).map_err(|e| CliError::Parse {
        line: e.line(),
        col: e.column(),
        msg: e.to_string(),
    })?;
    doc.try_into()
}

fn parse_txt(text: &str) -> Result<ComplexMatrix, CliError> {
    let mut cols: Option<usize> = None;
    let mut rows = 0;
    let mut data = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let lineno = idx + 1;
        let mut count = 0;
        let mut rest = line;
        let mut offset = 0;
        // walk tokens by hand to keep their column
        loop {
            let skip = rest.len() - rest.trim_start().len();
            offset += skip;
            rest = &rest[skip..];
            if rest.is_empty() {
                break;
            }
            let end = rest.find(char::is_whitespace).unwrap_or(rest.len());
            let tok = &rest[..end];
            let x: f64 = tok.parse().map_err(|_| CliError::Parse {
                line: lineno,
                col: offset + 1,
                msg: format!("not a number: {tok:?}"),
            })?;
            if !x.is_finite() {
                return Err(CliError::Parse {
                    line: lineno,
                    col: offset + 1,
                    msg: format!("non-finite entry {tok:?}"),
                });
            }
            data.push(C64::new(x, 0.0));
            count += 1;
            offset += end;
            rest = &rest[end..];
        }
        if count == 0 {
            continue;
        }
        match cols {
            None => cols = Some(count),
            Some(c) if c != count => {
                return Err(CliError::Shape {
                    line: lineno,
                    expected: c,
                    found: count,
                })
            }
            Some(_) => {}
        }
        rows += 1;
    }
    let cols = cols.ok_or_else(|| CliError::Invalid("no entries".into()))?;
    ComplexMatrix::new(rows, cols, data).map_err(|e| CliError::Invalid(e.to_string()))
}

pub fn matrix_to_json(m: &ComplexMatrix) -> String {
    serde_json::to_string(&MatrixDoc::from(m)).expect("matrix documents always serialize")
}

/// Writes through a temporary file in the target directory, then renames,
/// so readers never see a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let io_err = |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    };
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    fs::create_dir_all(dir).map_err(io_err)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io_err)?;
    tmp.write_all(bytes).map_err(io_err)?;
    tmp.as_file().sync_all().map_err(io_err)?;
    tmp.persist(path).map_err(|e| io_err(e.error))?;
    Ok(())
}

/// Comma-separated eigenvalues; each item is a real or complex literal
/// such as `2`, `0.5-1i`.
pub fn parse_spectrum(s: &str) -> Result<Vec<C64>, CliError> {
    s.split(',')
        .enumerate()
        .map(|(i, item)| {
            let item = item.trim();
            C64::from_str(item).map_err(|_| CliError::Parse {
                line: 1,
                col: i + 1,
                msg: format!("bad spectrum entry {item:?}"),
            })
        })
        .collect()
}
