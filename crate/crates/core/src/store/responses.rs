//! Append-only response log: a header line naming the schema, then one
//! canonical single-line record per response.
//!
//! Each record is appended with one `write` call on a file opened in append
//! mode, so concurrent writers (threads or processes) never interleave
//! inside a line. A final line without its newline is a write cut short by
//! a crash and is skipped on reading.

use std::fs::OpenOptions;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::canonical::{from_canonical_str, to_canonical_line, SchemaTag};
use super::StoreError;
use crate::eval::ResponseRecord;

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Header {
    schema: String,
}

struct ResponseLogSchema;

impl SchemaTag for ResponseLogSchema {
    const SCHEMA: &'static str = "tnoise.responses/1";
}

/// Handle to a response log file.
#[derive(Clone, Debug)]
pub struct ResponseLog {
    path: PathBuf,
}

impl ResponseLog {
    /// Open `path`, creating it with its header line if it does not exist.
    pub fn open(path: impl Into<PathBuf>) -> Result<Self, StoreError> {
        let path = path.into();
        match OpenOptions::new().write(true).create_new(true).open(&path) {
            Ok(mut f) => {
                let header = to_canonical_line(&Header {
                    schema: ResponseLogSchema::SCHEMA.to_string(),
                }) + "\n";
                f.write_all(header.as_bytes()).map_err(StoreError::io(&path))?;
            }
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => {}
            Err(e) => return Err(StoreError::io(&path)(e)),
        }
        Ok(ResponseLog { path })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    /// Validate and append one record as a single line.
    pub fn append(&self, record: &ResponseRecord) -> Result<(), StoreError> {
        record
            .validate()
            .map_err(|e| match e {
                crate::eval::EvalError::InvalidResponse { path, reason } => StoreError::schema(path, reason),
                other => StoreError::schema(".", other.to_string()),
            })?;
        let line = to_canonical_line(record) + "\n";
        let mut f = OpenOptions::new()
            .append(true)
            .open(&self.path)
            .map_err(StoreError::io(&self.path))?;
        f.write_all(line.as_bytes()).map_err(StoreError::io(&self.path))
    }

    pub fn read(&self) -> Result<Vec<ResponseRecord>, StoreError> {
        read_responses(&self.path)
    }
}

/// Append `record` to the log at `path`, creating the log if needed.
pub fn append_response(path: &Path, record: &ResponseRecord) -> Result<(), StoreError> {
    ResponseLog::open(path)?.append(record)
}

/// All complete records of a log, in file order.
pub fn read_responses(path: &Path) -> Result<Vec<ResponseRecord>, StoreError> {
    let text = std::fs::read_to_string(path).map_err(StoreError::io(path))?;
    let complete = match text.rfind('\n') {
        Some(i) => &text[..=i],
        None => "",
    };
    let mut lines = complete.lines().enumerate();
    match lines.next() {
        Some((_, first)) => {
            let h: Header = from_canonical_str(first).map_err(|e| prefix("line 1", e))?;
            if h.schema != ResponseLogSchema::SCHEMA {
                return Err(StoreError::schema(
                    "line 1.schema",
                    format!("expected \"{}\", found \"{}\"", ResponseLogSchema::SCHEMA, h.schema),
                ));
            }
        }
        None => return Err(StoreError::schema("line 1", "missing header")),
    }
    let mut out = Vec::new();
    for (i, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let where_ = format!("line {}", i + 1);
        let rec: ResponseRecord = from_canonical_str(line).map_err(|e| prefix(&where_, e))?;
        rec.validate()
            .map_err(|e| StoreError::schema(where_.clone(), e.to_string()))?;
        out.push(rec);
    }
    Ok(out)
}

fn prefix(at: &str, e: StoreError) -> StoreError {
    match e {
        StoreError::SchemaViolation { path, message } => StoreError::schema(format!("{at}.{path}"), message),
        other => other,
    }
}
