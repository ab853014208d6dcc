//! TOML scenario files.
//!
//! ```toml
//! schema_version = "1.0"
//! seed = 7
//!
//! [anchor]
//! position = [2.0, 2.2]
//!
//! [eavesdropper]
//! position = [9.0, 2.5]
//! ```
//!
//! is a complete file; every other section and key is optional and falls
//! back to the defaults of the office scenario and [`ExperimentConfig`].
//! Unknown keys are rejected.

use std::path::Path as FsPath;

use serde::{Deserialize, Serialize};

use super::{check_schema, sha256_hex};
use crate::channel::{PersonState, Scenario, SPEED_OF_LIGHT};
use crate::error::{Error, Result};
use crate::experiments::ExperimentConfig;
use crate::geometry::{Point, Segment};
use crate::irs::{AlgParams, IrsLayout};
use crate::motion::{RotatingReflector, Trajectory};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    schema_version: Option<String>,
    seed: u64,
    #[serde(default)]
    room: RoomSection,
    anchor: PositionSection,
    eavesdropper: PositionSection,
    #[serde(default)]
    irs: IrsSection,
    #[serde(default)]
    radio: RadioSection,
    #[serde(default)]
    defense: DefenseSection,
    #[serde(default)]
    experiment: ExperimentSection,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RoomSection {
    walls: Option<Vec<Segment>>,
    wall_reflection_loss_db: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct PositionSection {
    position: Point,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct IrsSection {
    enabled: Option<bool>,
    elements: Option<i64>,
    /// `"<columns>x<rows>"`; columns run along the surface width.
    grid: Option<String>,
    width: Option<f64>,
    height: Option<f64>,
    /// Distance behind the anchor, away from the eavesdropper. Ignored when
    /// `position` is given.
    distance: Option<f64>,
    position: Option<Point>,
    normal: Option<Point>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RadioSection {
    n_tx: Option<i64>,
    n_rx: Option<i64>,
    antenna_spacing: Option<f64>,
    carrier_freq: Option<f64>,
    n_subcarriers: Option<i64>,
    subcarrier_spacing: Option<f64>,
    sample_rate: Option<f64>,
    snr_db: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct DefenseSection {
    progression_rate: Option<f64>,
    hold_prob: Option<f64>,
    update_rate: Option<f64>,
    inversion: Option<bool>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ExperimentSection {
    window_s: Option<f64>,
    n_select: Option<i64>,
    conservativeness: Option<f64>,
    reference_s: Option<f64>,
    session_s: Option<f64>,
    orbit_radius: Option<f64>,
    walk: Option<WalkSection>,
    person: Option<PersonSection>,
    reflector: Option<ReflectorSection>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct WalkSection {
    waypoints: Option<Vec<Point>>,
    speed: Option<f64>,
    dwell_s: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct PersonSection {
    scatter_gain_db: Option<f64>,
    blocking_radius: Option<f64>,
    blocking_depth_db: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ReflectorSection {
    position: Option<Point>,
    rpm: Option<f64>,
    peak_scatter_gain_db: Option<f64>,
    phase0: Option<f64>,
    half_width: Option<f64>,
    blocking_radius: Option<f64>,
    blocking_depth_db: Option<f64>,
}

/// A validated scenario together with the experiment settings.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LoadedConfig {
    pub scenario: Scenario,
    pub experiment: ExperimentConfig,
}

impl LoadedConfig {
    /// Office defaults with the given seed.
    pub fn office(seed: u64) -> Self {
        Self {
            scenario: Scenario::office(seed),
            experiment: ExperimentConfig::default(),
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.scenario.seed = seed;
        self
    }

    /// SHA-256 of the canonical JSON form of the resolved configuration.
    pub fn hash(&self) -> String {
        // struct field order is fixed, so the encoding is canonical
        sha256_hex(serde_json::to_string(self).expect("config serializes").as_bytes())
    }

    pub fn validate(&self) -> Result<()> {
        self.scenario.validate()?;
        self.experiment.validate()
    }
}

pub fn load_scenario(path: impl AsRef<FsPath>) -> Result<LoadedConfig> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::file(path, e))?;
    parse_scenario(&text)
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

fn count(key: &str, v: Option<i64>, default: usize) -> Result<usize> {
    match v {
        None => Ok(default),
        Some(n) if n >= 0 => Ok(n as usize),
        Some(n) => Err(Error::validation(key, format!("must be non-negative, got {n}"))),
    }
}

fn parse_grid(s: &str) -> Result<(usize, usize)> {
    let bad = || Error::validation("irs.grid", format!("expected COLSxROWS, got {s:?}"));
    let (c, r) = s.split_once(['x', 'X']).ok_or_else(bad)?;
    let c: usize = c.trim().parse().map_err(|_| bad())?;
    let r: usize = r.trim().parse().map_err(|_| bad())?;
    Ok((c, r))
}

pub fn parse_scenario(text: &str) -> Result<LoadedConfig> {
    let file: ConfigFile = toml::from_str(text).map_err(|e| Error::Parse {
        line: e.span().map_or(0, |s| line_of(text, s.start)),
        message: e.message().to_string(),
    })?;
    if let Some(v) = &file.schema_version {
        check_schema(v)?;
    }
    let base = Scenario::office(file.seed);
    let anchor = file.anchor.position;
    let eve = file.eavesdropper.position;

    let radio = &file.radio;
    let carrier_freq = radio.carrier_freq.unwrap_or(base.carrier_freq);
    let mut s = Scenario {
        walls: file.room.walls.unwrap_or(base.walls),
        anchor,
        eve,
        irs: None,
        n_tx: count("radio.n_tx", radio.n_tx, base.n_tx)?,
        n_rx: count("radio.n_rx", radio.n_rx, base.n_rx)?,
        antenna_spacing: radio.antenna_spacing.unwrap_or(SPEED_OF_LIGHT / carrier_freq / 2.0),
        carrier_freq,
        n_subcarriers: count("radio.n_subcarriers", radio.n_subcarriers, base.n_subcarriers)?,
        subcarrier_spacing: radio.subcarrier_spacing.unwrap_or(base.subcarrier_spacing),
        sample_rate: radio.sample_rate.unwrap_or(base.sample_rate),
        snr_db: radio.snr_db.unwrap_or(base.snr_db),
        wall_reflection_loss_db: file
            .room
            .wall_reflection_loss_db
            .unwrap_or(base.wall_reflection_loss_db),
        seed: file.seed,
    };

    let irs = &file.irs;
    if irs.enabled.unwrap_or(true) {
        let default_layout = base.irs.expect("office has a surface");
        let (cols, rows) = match &irs.grid {
            Some(g) => parse_grid(g)?,
            None => (default_layout.cols, default_layout.rows),
        };
        let elements = count("irs.elements", irs.elements, cols * rows)?;
        if elements != cols * rows {
            return Err(Error::validation(
                "irs.elements",
                format!("{elements} elements do not fill a {cols}x{rows} grid"),
            ));
        }
        let facing = (eve - anchor).unit();
        let normal = match irs.normal {
            Some(n) if n.norm() > 0.0 => n.unit(),
            Some(_) => return Err(Error::validation("irs.normal", "must be non-zero")),
            None => facing,
        };
        let distance = irs.distance.unwrap_or(0.3);
        if !(distance > 0.0) {
            return Err(Error::validation("irs.distance", "must be positive"));
        }
        s.irs = Some(IrsLayout {
            center: irs.position.unwrap_or(anchor - facing * distance),
            normal,
            width: irs.width.unwrap_or(default_layout.width),
            height: irs.height.unwrap_or(default_layout.height),
            rows,
            cols,
        });
    }
    s.validate()?;

    let mut exp = ExperimentConfig::default();
    let d = &file.defense;
    exp.defense = AlgParams {
        progression_rate: d.progression_rate.unwrap_or(exp.defense.progression_rate),
        hold_prob: d.hold_prob.unwrap_or(exp.defense.hold_prob),
        update_rate: d.update_rate.unwrap_or(exp.defense.update_rate),
        inversion: d.inversion.unwrap_or(exp.defense.inversion),
    };
    let e = file.experiment;
    exp.window_s = e.window_s.unwrap_or(exp.window_s);
    exp.n_select = count("experiment.n_select", e.n_select, exp.n_select)?;
    exp.conservativeness = e.conservativeness.unwrap_or(exp.conservativeness);
    exp.reference_s = e.reference_s.unwrap_or(exp.reference_s);
    exp.session_s = e.session_s.unwrap_or(exp.session_s);
    exp.orbit_radius = e.orbit_radius.unwrap_or(exp.orbit_radius);
    if let Some(w) = e.walk {
        let t = Trajectory::default();
        exp.walk = Trajectory {
            waypoints: w.waypoints.unwrap_or(t.waypoints),
            speed: w.speed.unwrap_or(t.speed),
            dwell_s: w.dwell_s.unwrap_or(t.dwell_s),
        };
    }
    if let Some(p) = e.person {
        let d = PersonState::default();
        exp.person = PersonState {
            scatter_gain_db: p.scatter_gain_db.unwrap_or(d.scatter_gain_db),
            blocking_radius: p.blocking_radius.unwrap_or(d.blocking_radius),
            blocking_depth_db: p.blocking_depth_db.unwrap_or(d.blocking_depth_db),
            ..d
        };
    }
    if let Some(r) = e.reflector {
        let d = RotatingReflector::default();
        exp.reflector = RotatingReflector {
            position: r.position.unwrap_or(d.position),
            rpm: r.rpm.unwrap_or(d.rpm),
            peak_scatter_gain_db: r.peak_scatter_gain_db.unwrap_or(d.peak_scatter_gain_db),
            phase0: r.phase0.unwrap_or(d.phase0),
            half_width: r.half_width.unwrap_or(d.half_width),
            blocking_radius: r.blocking_radius.unwrap_or(d.blocking_radius),
            blocking_depth_db: r.blocking_depth_db.unwrap_or(d.blocking_depth_db),
        };
    }
    exp.validate()?;
    Ok(LoadedConfig {
        scenario: s,
        experiment: exp,
    })
}
