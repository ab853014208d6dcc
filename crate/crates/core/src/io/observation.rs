//! Observation CSV.
//!
//! ```text
//! # csi-shield observation schema_version=1.0 sample_rate=70 window_s=1 label=reference seed=7 start_index=69
//! t_seconds,sigma_bar
//! 0.9857142857142858,2.0471283129383727e-5
//! ```
//!
//! `t_seconds` is the end of each sample's window.

use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path as FsPath;

use super::{check_schema, create, finish, meta_get, meta_parse, parse_meta, SCHEMA_VERSION};
use crate::error::{Error, Result};
use crate::sensing::{ObservationMeta, ObservationSeries};

const COLUMNS: &str = "t_seconds,sigma_bar";

pub fn write_observation(path: impl AsRef<FsPath>, obs: &ObservationSeries) -> Result<()> {
    let path = path.as_ref();
    let label = &obs.meta.label;
    if label.is_empty() || label.contains(|c: char| c.is_whitespace() || c == '=') {
        return Err(Error::contract(format!(
            "observation label {label:?} must be non-empty without spaces or `=`"
        )));
    }
    let mut w = create(path)?;
    writeln!(
        w,
        "# csi-shield observation schema_version={SCHEMA_VERSION} sample_rate={} window_s={} label={label} seed={} start_index={}",
        obs.sample_rate, obs.window_s, obs.meta.seed, obs.meta.start_index
    )?;
    writeln!(w, "{COLUMNS}")?;
    for (i, v) in obs.values.iter().enumerate() {
        writeln!(w, "{},{v:.16e}", obs.t_seconds(i))?;
    }
    finish(w, path)
}

pub fn read_observation(path: impl AsRef<FsPath>) -> Result<ObservationSeries> {
    let path = path.as_ref();
    let f = File::open(path).map_err(|e| Error::file(path, e))?;
    let mut lines = BufReader::new(f).lines();
    let mut next = |what: &str| -> Result<String> {
        lines
            .next()
            .transpose()?
            .ok_or_else(|| Error::Schema(format!("{}: missing {what}", path.display())))
    };
    let head = next("metadata line")?;
    if !head.starts_with('#') {
        return Err(Error::Schema(format!("{}: not an observation file", path.display())));
    }
    let meta = parse_meta(&head);
    check_schema(
        meta_get(&meta, "schema_version")
            .ok_or_else(|| Error::Schema("observation header lacks `schema_version`".into()))?,
    )?;
    let mut obs = ObservationSeries {
        values: Vec::new(),
        sample_rate: meta_parse(&meta, "sample_rate", "observation")?,
        window_s: meta_parse(&meta, "window_s", "observation")?,
        meta: ObservationMeta {
            label: meta_get(&meta, "label").unwrap_or("").to_string(),
            seed: meta_parse(&meta, "seed", "observation")?,
            start_index: meta_parse(&meta, "start_index", "observation")?,
        },
    };
    if next("column header")?.trim() != COLUMNS {
        return Err(Error::Schema(format!(
            "{}: expected columns `{COLUMNS}`",
            path.display()
        )));
    }
    for (i, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let v = line
            .split_once(',')
            .and_then(|(_, v)| v.trim().parse::<f64>().ok())
            .filter(|v| v.is_finite())
            .ok_or_else(|| Error::Parse {
                line: i + 3,
                message: format!("malformed observation row {line:?}"),
            })?;
        obs.values.push(v);
    }
    Ok(obs)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("obs.csv");
        let obs = ObservationSeries {
            values: vec![0.1 + 0.2, 1e-300, 2.0_f64.sqrt(), 0.0],
            sample_rate: 70.0,
            window_s: 1.0,
            meta: ObservationMeta {
                label: "walk".into(),
                seed: u64::MAX,
                start_index: 69,
            },
        };
        write_observation(&p, &obs).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        // n data rows and one header row besides the metadata comment
        assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), obs.len() + 1);
        assert_eq!(read_observation(&p).unwrap(), obs);
    }

    #[test]
    fn label_with_space_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let mut obs = ObservationSeries {
            values: vec![1.0],
            sample_rate: 1.0,
            window_s: 2.0,
            meta: ObservationMeta::default(),
        };
        obs.meta.label = "two words".into();
        assert!(write_observation(dir.path().join("o.csv"), &obs).is_err());
    }
}
