//! Exit codes, error mapping and JSON/CSV emission.

use std::io::Write;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde_json::Value;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Exit {
    Ok = 0,
    CheckFailed = 1,
    Usage = 2,
    NonConvergence = 3,
}

#[derive(Debug)]
pub struct CliError {
    pub code: Exit,
    pub message: String,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        CliError { code: Exit::Usage, message: message.into() }
    }
}

impl From<ymvac::Error> for CliError {
    fn from(e: ymvac::Error) -> Self {
        use ymvac::Error as E;
        let code = match &e {
            E::NonConvergence(_) => Exit::NonConvergence,
            E::BranchCut { .. } | E::DiagnosticUnavailable(_) => Exit::CheckFailed,
            _ => Exit::Usage,
        };
        CliError { code, message: e.to_string() }
    }
}

/// Adds the timestamp when enabled, prints to stdout and writes `path`.
pub fn emit_json(mut value: Value, path: Option<&Path>, timestamp: bool) -> Result<(), CliError> {
    if timestamp {
        let secs = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
        if let Value::Object(map) = &mut value {
            map.insert("timestamp".into(), Value::from(secs));
        }
    }
    let text = serde_json::to_string_pretty(&value).expect("JSON values serialize") + "\n";
    // A closed stdout (piped into `head`) must not abort the run before
    // the report file is written.
    let _ = std::io::stdout().lock().write_all(text.as_bytes());
    if let Some(p) = path {
        write_file(p, text.as_bytes())?;
    }
    Ok(())
}

pub fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| CliError::usage(format!("{}: {e}", dir.display())))?;
    }
    std::fs::write(path, bytes).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))
}
