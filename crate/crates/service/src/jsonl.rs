//! Append-only JSON Lines logs for requests and outbound calls.

use std::fs::{File, OpenOptions};
use std::io::Write;
use std::path::Path;
use std::sync::Mutex;

use serde::Serialize;

#[derive(Debug)]
pub struct JsonlLog {
    file: Mutex<File>,
}

impl JsonlLog {
    pub fn open(path: impl AsRef<Path>) -> std::io::Result<Self> {
        let file = OpenOptions::new().create(true).append(true).open(path)?;
        Ok(JsonlLog { file: Mutex::new(file) })
    }

    /// Logging never fails the caller; write errors go to the tracing log.
    pub fn write(&self, entry: &impl Serialize) {
        let line = match serde_json::to_string(entry) {
            Ok(l) => l,
            Err(e) => {
                tracing::warn!("unserializable log entry: {e}");
                return;
            }
        };
        let mut f = self.file.lock().expect("log lock");
        if let Err(e) = writeln!(f, "{line}") {
            tracing::warn!("log write failed: {e}");
        }
    }
}

pub fn now() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true)
}
