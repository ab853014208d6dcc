use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use csi_shield::channel::{ChannelModel, CsiFrame};
use csi_shield::experiments::{
    grid_positions, parameter_study, run_coverage_grid, run_session_with, sweep_irs_distance, sweep_irs_orientation,
    sweep_irs_size, Selection, SessionSpec,
};
use csi_shield::io::{
    load_scenario, read_observation, sha256_hex, write_coverage, write_json, write_manifest, write_observation,
    write_paramstudy, write_polar, write_report, write_sweep, LoadedConfig, Manifest, Provenance, ReportFile,
    TraceHeader, TraceReader, TraceWriter,
};
use csi_shield::motion::Motion;
use csi_shield::sensing::{self, window_samples, ThresholdRule};
use csi_shield::{Error, Result};
use serde_json::json;

use crate::values::{as_counts, parse_values};
use crate::{Cli, Command, MotionKind, SweepVar};

fn file_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::File {
        path: path.to_path_buf(),
        source,
    }
}

struct Run {
    out: PathBuf,
    manifest: Manifest,
}

impl Run {
    fn new(out: &Path, command: &str, parameters: serde_json::Value, provenance: Provenance) -> Result<Self> {
        fs::create_dir_all(out).map_err(file_err(out))?;
        Ok(Self {
            out: out.to_path_buf(),
            manifest: Manifest::new(command, parameters, provenance),
        })
    }

    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    fn record(&mut self, name: &str) -> Result<()> {
        self.manifest.add_output(&self.path(name))
    }

    fn finish(self) -> Result<()> {
        let path = self.path("manifest.json");
        write_manifest(&path, &self.manifest)?;
        println!("wrote {}", self.out.display());
        Ok(())
    }
}

pub fn run(cli: Cli) -> Result<()> {
    let g = cli.global;
    let cfg = match &g.config {
        Some(p) => load_scenario(p)?,
        None => LoadedConfig::office(0),
    };
    let cfg = match g.seed {
        Some(s) => cfg.with_seed(s),
        None => cfg,
    };
    cfg.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(g.jobs)
        .build()
        .map_err(|e| Error::Io(std::io::Error::other(e)))?;
    pool.install(|| dispatch(cli.command, &cfg, &g.out))
}

fn dispatch(command: Command, cfg: &LoadedConfig, out: &Path) -> Result<()> {
    let s = &cfg.scenario;
    let exp = &cfg.experiment;
    let provenance = Provenance::new(s.seed, cfg.hash());
    match command {
        Command::Simulate {
            motion,
            defense,
            duration,
            at,
        } => {
            let duration = duration.unwrap_or(exp.session_s);
            let (label, motion) = match motion {
                MotionKind::None => ("none", Motion::None),
                MotionKind::Walk => ("walk", exp.walk_motion()),
                MotionKind::Reflector => ("reflector", exp.reflector_at(at.unwrap_or(exp.reflector.position))),
            };
            let spec = SessionSpec::new(label, defense.is_on(), motion, duration, exp.defense);
            let n_w = window_samples(exp.window_s, s.sample_rate);
            if spec.n_frames(s.sample_rate) < n_w.max(2) {
                return Err(Error::Contract(format!(
                    "a {duration} s session is shorter than the {} s window",
                    exp.window_s
                )));
            }
            let model = ChannelModel::new(s)?;
            let k = exp.n_select.min(s.n_subcarriers);
            let mut run = Run::new(
                out,
                "simulate",
                json!({
                    "motion": label,
                    "defense": defense.is_on(),
                    "duration_s": duration,
                    "window_s": exp.window_s,
                    "n_select": k,
                }),
                provenance,
            )?;
            let trace_path = run.path("trace.csv");
            let file = File::create(&trace_path).map_err(file_err(&trace_path))?;
            let mut trace = TraceWriter::new(BufWriter::new(file), TraceHeader::from_scenario(s))?;
            let res = run_session_with(
                &model,
                &spec,
                &Selection::FromSession(k),
                exp.window_s,
                |f: &CsiFrame| trace.write_frame(f),
            )?;
            trace.into_inner().flush().map_err(file_err(&trace_path))?;
            write_observation(run.path("observation.csv"), &res.observation)?;
            run.manifest.parameters["selection"] = json!(res.selection);
            run.record("trace.csv")?;
            run.record("observation.csv")?;
            run.finish()
        }
        Command::Attack {
            reference,
            motion,
            c,
            max_ref,
        } => {
            let r = read_observation(&reference)?;
            let m = read_observation(&motion)?;
            if r.sample_rate != m.sample_rate || r.window_s != m.window_s {
                return Err(Error::Schema(format!(
                    "reference ({} frames/s, {} s window) and motion ({} frames/s, {} s window) do not match",
                    r.sample_rate, r.window_s, m.sample_rate, m.window_s
                )));
            }
            let rule = if max_ref {
                ThresholdRule::MaxReference
            } else {
                ThresholdRule::MedianMad {
                    c: c.unwrap_or(exp.conservativeness),
                }
            };
            let hash_of = |p: &Path| fs::read(p).map(|b| sha256_hex(&b)).map_err(file_err(p));
            let inputs = json!({
                "reference_sha256": hash_of(&reference)?,
                "motion_sha256": hash_of(&motion)?,
                "rule": rule,
            });
            let provenance = Provenance::new(r.meta.seed, sha256_hex(inputs.to_string().as_bytes()));
            let report = sensing::evaluate(&m.values, &r.values, rule)?;
            let frames = r.len() + r.window_samples() - 1;
            let file = ReportFile::new(&report, r.len(), frames as f64 / r.sample_rate, provenance.clone());
            let mut run = Run::new(out, "attack", inputs, provenance)?;
            write_report(run.path("report.json"), &file)?;
            run.record("report.json")?;
            println!(
                "threshold {:.6e}  detection rate {:.4}  fpr {:.4}  auc {:.4}",
                file.threshold, file.detection_rate, file.fpr, file.auc
            );
            run.finish()
        }
        Command::Coverage { grid, defense, c } => {
            let c = c.unwrap_or(exp.conservativeness);
            let positions = grid_positions(s, grid.0, grid.1)?;
            let map = run_coverage_grid(s, exp, &positions, defense.is_on(), c)?;
            let mut run = Run::new(
                out,
                "coverage",
                json!({"grid": [grid.0, grid.1], "defense": defense.is_on(), "C": c}),
                provenance.clone(),
            )?;
            write_coverage(run.path("coverage.csv"), &map)?;
            write_json(run.path("coverage.json"), "coverage", &provenance, &map)?;
            run.record("coverage.csv")?;
            run.record("coverage.json")?;
            run.finish()
        }
        Command::Sweep { var, values, duration } => {
            let duration = duration.unwrap_or(exp.session_s);
            let v = parse_values(&values)?;
            let (name, result) = match var {
                SweepVar::Size => ("size", sweep_irs_size(s, exp, &as_counts(&v)?, duration)?),
                SweepVar::Distance => ("distance", sweep_irs_distance(s, exp, &v, duration)?),
                SweepVar::Orientation => ("orientation", sweep_irs_orientation(s, exp, &v, duration)?),
            };
            let mut run = Run::new(
                out,
                "sweep",
                json!({"var": name, "values": v, "duration_s": duration}),
                provenance.clone(),
            )?;
            write_sweep(run.path("sweep.csv"), &result)?;
            write_json(run.path("sweep.json"), "sweep", &provenance, &result)?;
            run.record("sweep.csv")?;
            run.record("sweep.json")?;
            if var == SweepVar::Orientation {
                write_polar(run.path("polar.csv"), &result)?;
                run.record("polar.csv")?;
            }
            run.finish()
        }
        Command::Paramstudy { r, p, duration } => {
            let duration = duration.unwrap_or(exp.session_s);
            let cells = parameter_study(s, exp, &r, &p, duration)?;
            let mut run = Run::new(
                out,
                "paramstudy",
                json!({"R": r, "P_hold": p, "duration_s": duration}),
                provenance.clone(),
            )?;
            write_paramstudy(run.path("paramstudy.csv"), &cells)?;
            write_json(
                run.path("paramstudy.json"),
                "paramstudy",
                &provenance,
                &json!({ "cells": cells }),
            )?;
            run.record("paramstudy.csv")?;
            run.record("paramstudy.json")?;
            run.finish()
        }
        Command::Ingest { trace, window, select } => {
            let window = window.unwrap_or(exp.window_s);
            let reader = TraceReader::open(&trace, None)?;
            let header = reader.header();
            let frames = reader.collect::<Result<Vec<_>>>()?;
            if frames.is_empty() {
                return Err(Error::Ingest(format!("{}: no frames", trace.display())));
            }
            let k = select.unwrap_or(exp.n_select).min(header.n_subcarriers);
            let chosen = sensing::select_subcarriers(&frames, k)?;
            let reduced = frames.iter().map(|f| f.select(&chosen)).collect::<Result<Vec<_>>>()?;
            let mut obs = sensing::observe(&reduced, header.sample_rate, window)?;
            obs.meta.label = "ingest".into();
            obs.meta.seed = s.seed;
            let trace_hash = fs::read(&trace).map(|b| sha256_hex(&b)).map_err(file_err(&trace))?;
            let mut run = Run::new(
                out,
                "ingest",
                json!({"trace_sha256": trace_hash, "window_s": window, "n_select": k, "selection": chosen}),
                provenance,
            )?;
            write_observation(run.path("observation.csv"), &obs)?;
            run.record("observation.csv")?;
            run.finish()
        }
    }
}
