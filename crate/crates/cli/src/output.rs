//! Run metadata and file writing. Every output carries the tool version and
//! the resolved run configuration; the timestamp is optional.

use std::fs;
use std::io::{self, Write};
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::OutputArgs;

#[derive(Debug)]
pub enum CliError {
    Core(xxqst_core::Error),
    Io(io::Error),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Io(e) => write!(f, "i/o error: {e}"),
        }
    }
}

impl From<xxqst_core::Error> for CliError {
    fn from(e: xxqst_core::Error) -> Self {
        CliError::Core(e)
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Io(e)
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Core(e.into())
    }
}

impl CliError {
    /// 2 usage, 3 resource, 4 internal consistency, 1 anything else.
    pub fn exit_code(&self) -> u8 {
        use xxqst_core::Error as E;
        match self {
            CliError::Core(E::InvalidArgument(_)) => 2,
            CliError::Core(E::ResourceLimit { .. }) => 3,
            CliError::Core(E::InternalConsistency(_) | E::ZeroProbability { .. }) => 4,
            CliError::Core(E::Json(_)) | CliError::Io(_) => 1,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

/// Resolved parameters of one invocation.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig<P: Serialize> {
    pub command: &'static str,
    pub format: &'static str,
    pub params: P,
}

fn timestamp() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs())
}

/// `#`-prefixed header lines for CSV and text outputs.
pub fn comment_header<P: Serialize>(run: &RunConfig<P>, out: &OutputArgs) -> CliResult<String> {
    let mut s = format!("# xxqst {}\n# run: {}\n", xxqst_core::VERSION, serde_json::to_string(run)?);
    if !out.no_timestamp {
        s.push_str(&format!("# timestamp: {}\n", timestamp()));
    }
    Ok(s)
}

/// JSON document with a `metadata` block followed by the payload fields.
pub fn json_document<P: Serialize, B: Serialize>(run: &RunConfig<P>, body: &B, out: &OutputArgs) -> CliResult<String> {
    let mut meta = Map::new();
    meta.insert("version".into(), json!(xxqst_core::VERSION));
    meta.insert("run".into(), serde_json::to_value(run)?);
    if !out.no_timestamp {
        meta.insert("timestamp".into(), json!(timestamp()));
    }
    let mut doc = Map::new();
    doc.insert("metadata".into(), Value::Object(meta));
    match serde_json::to_value(body)? {
        Value::Object(fields) => doc.extend(fields),
        other => {
            doc.insert("result".into(), other);
        }
    }
    let mut text = serde_json::to_string_pretty(&Value::Object(doc))?;
    text.push('\n');
    Ok(text)
}

pub fn emit(path: Option<&Path>, text: &str) -> CliResult<()> {
    match path {
        Some(p) => fs::write(p, text)?,
        None => io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(())
}
