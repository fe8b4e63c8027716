//! Append-only JSON-lines result store.

use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::RunConfig;

pub const SCHEMA_VERSION: u32 = 1;

/// Build identifier in `git describe` style. Set `FUCHSIAN_BUILD_ID` at
/// compile time to embed an actual describe string.
pub fn build_id() -> String {
    option_env!("FUCHSIAN_BUILD_ID")
        .map(str::to_string)
        .unwrap_or_else(|| format!("v{}", env!("CARGO_PKG_VERSION")))
}

#[derive(Debug, Error)]
pub enum PersistError {
    #[error("{path}: line {line} is not a valid record: {message}")]
    Malformed {
        path: String,
        line: usize,
        message: String,
    },
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("cannot encode record: {0}")]
    Encode(#[from] serde_json::Error),
}

/// One stored result. `wallclock_s` is left empty unless the run asked for
/// it, so records of identical runs are byte-identical.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub schema_version: u32,
    pub build_id: String,
    pub config: RunConfig,
    pub kind: String,
    pub payload: serde_json::Value,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wallclock_s: Option<f64>,
}

impl ResultRecord {
    pub fn new(config: &RunConfig, kind: &str, payload: impl Serialize) -> Result<Self, PersistError> {
        Ok(ResultRecord {
            schema_version: SCHEMA_VERSION,
            build_id: build_id(),
            config: config.clone(),
            kind: kind.into(),
            payload: serde_json::to_value(payload)?,
            wallclock_s: None,
        })
    }

    pub fn to_line(&self) -> Result<String, PersistError> {
        Ok(serde_json::to_string(self)?)
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> PersistError + '_ {
    move |source| PersistError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Reads every record; a missing file is an empty store.
pub fn load_results(path: &Path) -> Result<Vec<ResultRecord>, PersistError> {
    let file = match File::open(path) {
        Ok(f) => f,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
        Err(e) => return Err(io_err(path)(e)),
    };
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(io_err(path))?;
        if line.trim().is_empty() {
            continue;
        }
        let record: ResultRecord = serde_json::from_str(&line).map_err(|e| PersistError::Malformed {
            path: path.display().to_string(),
            line: i + 1,
            message: e.to_string(),
        })?;
        out.push(record);
    }
    Ok(out)
}

/// Serialises concurrent writers onto one file. The existing contents are
/// validated once, on open.
pub struct Appender {
    path: PathBuf,
    file: Mutex<File>,
}

impl Appender {
    pub fn open(path: &Path) -> Result<Appender, PersistError> {
        load_results(path)?;
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)
            .map_err(io_err(path))?;
        Ok(Appender {
            path: path.to_path_buf(),
            file: Mutex::new(file),
        })
    }

    pub fn append(&self, record: &ResultRecord) -> Result<(), PersistError> {
        let mut line = record.to_line()?;
        line.push('\n');
        let mut file = self.file.lock().unwrap_or_else(|e| e.into_inner());
        file.write_all(line.as_bytes()).map_err(io_err(&self.path))?;
        file.flush().map_err(io_err(&self.path))
    }
}

/// Appends `records`, refusing to touch a file that does not parse.
pub fn persist_results(records: &[ResultRecord], path: &Path) -> Result<(), PersistError> {
    let appender = Appender::open(path)?;
    records.iter().try_for_each(|r| appender.append(r))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(i: usize) -> ResultRecord {
        let mut c = RunConfig::default();
        c.seed = i as u64;
        ResultRecord::new(&c, "drift", serde_json::json!({ "mean": 0.1 + i as f64 / 3.0 })).unwrap()
    }

    #[test]
    fn round_trip_hundred_records() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.jsonl");
        let records: Vec<_> = (0..100).map(record).collect();
        persist_results(&records[..40], &path).unwrap();
        persist_results(&records[40..], &path).unwrap();
        assert_eq!(load_results(&path).unwrap(), records);
    }

    #[test]
    fn corrupt_line_is_reported_and_blocks_appends() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.jsonl");
        persist_results(&[record(0), record(1)], &path).unwrap();
        let mut text = std::fs::read_to_string(&path).unwrap();
        text.push_str("{not json\n");
        std::fs::write(&path, &text).unwrap();
        assert!(matches!(load_results(&path), Err(PersistError::Malformed { line: 3, .. })));
        assert!(persist_results(&[record(2)], &path).is_err());
        assert_eq!(std::fs::read_to_string(&path).unwrap(), text);
    }

    #[test]
    fn identical_runs_give_identical_lines() {
        assert_eq!(record(3).to_line().unwrap(), record(3).to_line().unwrap());
        let line = record(3).to_line().unwrap();
        assert!(line.contains("\"schema_version\":1"));
        assert!(!line.contains("wallclock_s"));
    }
}
