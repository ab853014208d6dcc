//! JSON reports, run manifests, and plot-ready summary CSVs.

use std::io::Write;
use std::path::Path as FsPath;

use serde::{Deserialize, Serialize};

use super::{check_schema, create, finish, sha256_hex, CODE_VERSION, SCHEMA_VERSION};
use crate::error::{Error, Result};
use crate::experiments::{CoverageMap, ParamStudyCell, SweepResult};
use crate::sensing::{DetectionReport, ThresholdRule};

/// Where a result came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub seed: u64,
    pub config_hash: String,
    pub code_version: String,
}

impl Provenance {
    pub fn new(seed: u64, config_hash: impl Into<String>) -> Self {
        Self {
            seed,
            config_hash: config_hash.into(),
            code_version: CODE_VERSION.to_string(),
        }
    }
}

/// On-disk form of a [`DetectionReport`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportFile {
    pub schema_version: String,
    pub threshold: f64,
    pub rule: ThresholdRule,
    pub detection_rate: f64,
    pub tpr: f64,
    pub fpr: f64,
    /// `[fpr, tpr]` pairs.
    pub roc: Vec<[f64; 2]>,
    pub auc: f64,
    pub decisions: Vec<bool>,
    pub reference_samples: usize,
    pub reference_duration_s: f64,
    pub provenance: Provenance,
}

impl ReportFile {
    pub fn new(
        report: &DetectionReport,
        reference_samples: usize,
        reference_duration_s: f64,
        provenance: Provenance,
    ) -> Self {
        Self {
            schema_version: SCHEMA_VERSION.to_string(),
            threshold: report.threshold,
            rule: report.rule,
            detection_rate: report.detection_rate,
            tpr: report.tpr,
            fpr: report.fpr,
            roc: report.roc_points.iter().map(|&(f, t)| [f, t]).collect(),
            auc: report.auc,
            decisions: report.decisions.clone(),
            reference_samples,
            reference_duration_s,
            provenance,
        }
    }
}

fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

fn write_text(path: &FsPath, text: &str) -> Result<()> {
    let mut w = create(path)?;
    w.write_all(text.as_bytes()).map_err(|e| Error::file(path, e))?;
    finish(w, path)
}

pub fn write_report(path: impl AsRef<FsPath>, report: &ReportFile) -> Result<()> {
    write_text(path.as_ref(), &to_json(report)?)
}

pub fn read_report(path: impl AsRef<FsPath>) -> Result<ReportFile> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::file(path, e))?;
    let raw: serde_json::Value = serde_json::from_str(&text)?;
    let version = raw
        .get("schema_version")
        .and_then(|v| v.as_str())
        .ok_or_else(|| Error::Schema(format!("{}: missing schema_version", path.display())))?;
    check_schema(version)?;
    Ok(serde_json::from_value(raw)?)
}

#[derive(Serialize)]
struct Versioned<'a, T: Serialize> {
    schema_version: &'a str,
    kind: &'a str,
    provenance: &'a Provenance,
    #[serde(flatten)]
    data: &'a T,
}

/// Writes `data` as a versioned JSON summary tagged with `kind`.
pub fn write_json<T: Serialize>(path: impl AsRef<FsPath>, kind: &str, provenance: &Provenance, data: &T) -> Result<()> {
    let v = Versioned {
        schema_version: SCHEMA_VERSION,
        kind,
        provenance,
        data,
    };
    write_text(path.as_ref(), &to_json(&v)?)
}

/// A file produced by a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputFile {
    pub name: String,
    pub sha256: String,
}

/// What is needed to reproduce a run: the command, its resolved
/// parameters, and the hashes of what it wrote.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub schema_version: String,
    pub command: String,
    pub parameters: serde_json::Value,
    pub provenance: Provenance,
    pub outputs: Vec<OutputFile>,
}

impl Manifest {
    pub fn new(command: &str, parameters: serde_json::Value, provenance: Provenance) -> Self {
        Self {
            schema_version: SCHEMA_VERSION.to_string(),
            command: command.to_string(),
            parameters,
            provenance,
            outputs: Vec::new(),
        }
    }

    /// Records a written file by name and content hash.
    pub fn add_output(&mut self, path: &FsPath) -> Result<()> {
        let bytes = std::fs::read(path).map_err(|e| Error::file(path, e))?;
        let name = path
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default();
        self.outputs.push(OutputFile {
            name,
            sha256: sha256_hex(&bytes),
        });
        Ok(())
    }
}

pub fn write_manifest(path: impl AsRef<FsPath>, manifest: &Manifest) -> Result<()> {
    write_text(path.as_ref(), &to_json(manifest)?)
}

/// Long format: `sweep_var,value,stat,number`.
pub fn write_sweep(path: impl AsRef<FsPath>, result: &SweepResult) -> Result<()> {
    let path = path.as_ref();
    let mut w = create(path)?;
    writeln!(w, "sweep_var,value,stat,number")?;
    for c in &result.cells {
        for (stat, x) in [
            ("median", c.median),
            ("p01", c.p01),
            ("p99", c.p99),
            ("threshold", c.threshold),
        ] {
            writeln!(w, "{},{},{stat},{x}", result.sweep_var, c.value)?;
        }
    }
    finish(w, path)
}

/// Orientation sweep in polar form: `angle_deg,angle_rad,median,p01,p99,threshold`.
pub fn write_polar(path: impl AsRef<FsPath>, result: &SweepResult) -> Result<()> {
    let path = path.as_ref();
    let mut w = create(path)?;
    writeln!(w, "angle_deg,angle_rad,median,p01,p99,threshold")?;
    for c in &result.cells {
        writeln!(
            w,
            "{},{},{},{},{},{}",
            c.value,
            c.value.to_radians(),
            c.median,
            c.p01,
            c.p99,
            c.threshold
        )?;
    }
    finish(w, path)
}

/// Position-indexed heatmap: `index,x,y,rate,rate_max_ref`.
pub fn write_coverage(path: impl AsRef<FsPath>, map: &CoverageMap) -> Result<()> {
    let path = path.as_ref();
    let mut w = create(path)?;
    writeln!(w, "index,x,y,rate,rate_max_ref")?;
    for c in &map.cells {
        writeln!(
            w,
            "{},{},{},{},{}",
            c.index, c.position.x, c.position.y, c.rate, c.rate_max_ref
        )?;
    }
    finish(w, path)
}

pub fn write_paramstudy(path: impl AsRef<FsPath>, cells: &[ParamStudyCell]) -> Result<()> {
    let path = path.as_ref();
    let mut w = create(path)?;
    writeln!(w, "R,P_hold,median,mad,threshold,euclidean_norm,coherence_time_s")?;
    for c in cells {
        writeln!(
            w,
            "{},{},{},{},{},{},{}",
            c.progression_rate, c.hold_prob, c.median, c.mad, c.threshold, c.euclidean_norm, c.coherence_time_s
        )?;
    }
    finish(w, path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::SweepCell;
    use crate::sensing::evaluate;

    fn report(motion: &[f64], reference: &[f64]) -> ReportFile {
        let r = evaluate(motion, reference, ThresholdRule::MedianMad { c: 11.0 }).unwrap();
        ReportFile::new(&r, reference.len(), 180.0, Provenance::new(3, "abc"))
    }

    #[test]
    fn report_round_trip_is_canonical() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("report.json");
        let r = report(&[0.1, 0.5, 0.9], &[0.1, 0.2, 0.3, 0.2]);
        write_report(&p, &r).unwrap();
        let back = read_report(&p).unwrap();
        assert_eq!(back, r);
        let p2 = dir.path().join("again.json");
        write_report(&p2, &back).unwrap();
        let norm =
            |p: &std::path::Path| -> serde_json::Value { serde_json::from_slice(&std::fs::read(p).unwrap()).unwrap() };
        assert_eq!(norm(&p), norm(&p2));
        assert_eq!(std::fs::read(&p).unwrap(), std::fs::read(&p2).unwrap());
    }

    #[test]
    fn empty_roc_is_an_empty_array() {
        let mut r = report(&[1.0], &[1.0, 2.0]);
        r.roc.clear();
        let v: serde_json::Value = serde_json::from_str(&to_json(&r).unwrap()).unwrap();
        assert_eq!(v["roc"], serde_json::json!([]));
    }

    #[test]
    fn newer_report_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("r.json");
        let mut r = report(&[1.0], &[1.0, 2.0]);
        r.schema_version = "2.0".into();
        write_report(&p, &r).unwrap();
        assert!(matches!(read_report(&p), Err(Error::Schema(_))));
    }

    #[test]
    fn sweep_long_format() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("s.csv");
        let cell = |v: f64| SweepCell {
            value: v,
            median: 1.0,
            p01: 0.5,
            p99: 2.0,
            threshold: 3.0,
        };
        let res = SweepResult {
            sweep_var: "size".into(),
            conservativeness: 11.0,
            duration_s: 60.0,
            cells: vec![cell(32.0), cell(64.0)],
        };
        write_sweep(&p, &res).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        assert_eq!(text.lines().count(), 1 + 2 * 4);
        assert!(text.contains("size,32,median,1\n"));
    }

    #[test]
    fn manifest_hashes_outputs() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.txt");
        std::fs::write(&p, b"").unwrap();
        let mut m = Manifest::new("simulate", serde_json::json!({"x": 1}), Provenance::new(1, "h"));
        m.add_output(&p).unwrap();
        assert_eq!(m.outputs[0].name, "a.txt");
        assert!(m.outputs[0].sha256.starts_with("e3b0c442"));
    }
}
