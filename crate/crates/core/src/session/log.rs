//! Line-delimited JSON session log: one `{time, type, payload}` object per event.

use std::fs::{File, OpenOptions};
use std::io::{self, BufWriter, Write};
use std::path::Path;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::Value;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LogKind {
    Action,
    Feedback,
    Command,
    StateSet,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogRecord {
    /// Session time in seconds.
    pub time: f64,
    #[serde(rename = "type")]
    pub kind: LogKind,
    pub payload: Value,
}

impl LogRecord {
    /// Parameter values carried by the record, if any.
    pub fn values(&self) -> Option<Vec<f64>> {
        let arr = self.payload.get("values")?.as_array()?;
        arr.iter().map(Value::as_f64).collect()
    }
}

pub struct SessionLog {
    out: Box<dyn Write + Send>,
}

impl std::fmt::Debug for SessionLog {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("SessionLog")
    }
}

impl SessionLog {
    pub fn new<W: Write + Send + 'static>(out: W) -> Self {
        Self { out: Box::new(out) }
    }

    /// Appends to `path`, creating it if needed.
    pub fn open(path: &Path) -> io::Result<Self> {
        let file: File = OpenOptions::new().create(true).append(true).open(path)?;
        Ok(Self::new(BufWriter::new(file)))
    }

    pub fn record(&mut self, time: Duration, kind: LogKind, payload: Value) -> io::Result<()> {
        let rec = LogRecord { time: time.as_secs_f64(), kind, payload };
        serde_json::to_writer(&mut self.out, &rec)?;
        // flushed per record so a killed process leaves a complete log
        self.out.write_all(b"\n")?;
        self.out.flush()
    }

    pub fn flush(&mut self) -> io::Result<()> {
        self.out.flush()
    }
}

/// Parses a whole log; blank lines are skipped.
pub fn read_log(text: &str) -> Result<Vec<LogRecord>, serde_json::Error> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(serde_json::from_str)
        .collect()
}
