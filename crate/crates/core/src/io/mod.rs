//! File formats: scenario configuration, CSI traces, observations, and
//! result summaries.
//!
//! Every format carries a `schema_version` of the form `MAJOR.MINOR`.
//! Readers accept any minor revision of the major they know and reject
//! newer majors.

mod config;
mod observation;
mod report;
mod trace;

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path as FsPath;

use sha2::{Digest, Sha256};

pub use config::{load_scenario, parse_scenario, LoadedConfig};
pub use observation::{read_observation, write_observation};
pub use report::{
    read_report, write_coverage, write_json, write_manifest, write_paramstudy, write_polar, write_report, write_sweep,
    Manifest, OutputFile, Provenance, ReportFile,
};
pub use trace::{export_trace, ingest_trace, write_trace, TraceHeader, TraceReader, TraceWriter};

use crate::error::{Error, Result};

pub const SCHEMA_VERSION: &str = "1.0";
const SCHEMA_MAJOR: u32 = 1;

pub const CODE_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Accepts `1.x`, rejects anything else.
pub fn check_schema(version: &str) -> Result<()> {
    let major = version
        .split('.')
        .next()
        .and_then(|m| m.trim().parse::<u32>().ok())
        .ok_or_else(|| Error::Schema(format!("malformed schema_version {version:?}")))?;
    if major > SCHEMA_MAJOR {
        return Err(Error::Schema(format!(
            "schema_version {version} is newer than the supported {SCHEMA_VERSION}"
        )));
    }
    if major < SCHEMA_MAJOR {
        return Err(Error::Schema(format!(
            "schema_version {version} is no longer supported"
        )));
    }
    Ok(())
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn create(path: &FsPath) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| Error::file(path, e))
}

fn finish(mut w: BufWriter<File>, path: &FsPath) -> Result<()> {
    w.flush().map_err(|e| Error::file(path, e))
}

/// Parses `key=value` pairs from a `# ...` metadata line.
fn parse_meta(line: &str) -> Vec<(&str, &str)> {
    line.trim_start_matches('#')
        .split_whitespace()
        .filter_map(|tok| tok.split_once('='))
        .collect()
}

fn meta_get<'a>(meta: &[(&str, &'a str)], key: &str) -> Option<&'a str> {
    meta.iter().find(|(k, _)| *k == key).map(|(_, v)| *v)
}

fn meta_parse<T: std::str::FromStr>(meta: &[(&str, &str)], key: &str, what: &str) -> Result<T> {
    let raw = meta_get(meta, key).ok_or_else(|| Error::Schema(format!("{what} header lacks `{key}`")))?;
    raw.parse()
        .map_err(|_| Error::Schema(format!("{what} header has a malformed `{key}`: {raw:?}")))
}
