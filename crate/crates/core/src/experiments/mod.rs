//! Experiment orchestration: reference calibration, walk detection,
//! coverage grids, surface sweeps, and the generator parameter study.
//!
//! Every comparison between a defended and an undefended run reuses the
//! same scenario seed, so receiver noise and the initial surface
//! configuration are identical and differences come from the surface alone.

mod session;

use rand::seq::index;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use session::{run_session, run_session_with, Selection, SessionOutput, SessionSpec, SessionSynth};

use crate::channel::{ChannelModel, PersonState, Scenario};
use crate::error::{Error, Result};
use crate::geometry::{bounding_box, Point};
use crate::irs::AlgParams;
use crate::motion::{Motion, RotatingReflector, Trajectory};
use crate::seed;
use crate::sensing::{self, ObservationSeries, ThresholdRule};

/// Attacker and protocol settings shared by all experiments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub defense: AlgParams,
    /// Sliding window length in seconds.
    pub window_s: f64,
    /// Number of subcarriers the eavesdropper keeps.
    pub n_select: usize,
    /// Conservativeness factor C of the median/MAD threshold.
    pub conservativeness: f64,
    /// Length of the quiet reference recording.
    pub reference_s: f64,
    /// Length of motion recordings and sweep cells.
    pub session_s: f64,
    pub walk: Trajectory,
    pub person: PersonState,
    pub reflector: RotatingReflector,
    /// Distance of the surface from the anchor in the orientation sweep.
    pub orbit_radius: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            defense: AlgParams::default(),
            window_s: 1.0,
            n_select: 28,
            conservativeness: 11.0,
            reference_s: 180.0,
            session_s: 60.0,
            walk: Trajectory::default(),
            person: PersonState::default(),
            reflector: RotatingReflector::default(),
            orbit_radius: 0.3,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        self.defense.validate()?;
        self.walk.validate()?;
        self.person.validate()?;
        self.reflector.validate()?;
        if !(self.window_s > 0.0) {
            return Err(Error::validation("experiment.window_s", "must be positive"));
        }
        if self.n_select == 0 {
            return Err(Error::validation("experiment.n_select", "must be at least 1"));
        }
        if !(self.conservativeness >= 0.0) {
            return Err(Error::validation("experiment.conservativeness", "must be non-negative"));
        }
        if !(self.reference_s > 0.0) {
            return Err(Error::validation("experiment.reference_s", "must be positive"));
        }
        if !(self.session_s > 0.0) {
            return Err(Error::validation("experiment.session_s", "must be positive"));
        }
        if !(self.orbit_radius > 0.0) {
            return Err(Error::validation("experiment.orbit_radius", "must be positive"));
        }
        Ok(())
    }

    pub fn walk_motion(&self) -> Motion {
        Motion::Walk {
            trajectory: self.walk.clone(),
            person: self.person,
        }
    }

    pub fn reflector_at(&self, position: Point) -> Motion {
        Motion::Reflector(RotatingReflector {
            position,
            ..self.reflector
        })
    }

    pub fn rule(&self) -> ThresholdRule {
        ThresholdRule::MedianMad {
            c: self.conservativeness,
        }
    }

    fn n_select_for(&self, scenario: &Scenario) -> usize {
        self.n_select.min(scenario.n_subcarriers)
    }
}

/// The eavesdropper's calibration: frozen subcarrier choice and the quiet
/// reference observation.
#[derive(Debug, Clone)]
pub struct Reference {
    pub selection: Vec<usize>,
    pub observation: ObservationSeries,
    pub duration_s: f64,
}

impl Reference {
    pub fn threshold(&self, rule: ThresholdRule) -> Result<f64> {
        rule.apply(&self.observation.values)
    }
}

/// Records the quiet reference and fixes the subcarrier selection.
pub fn calibrate_reference(model: &ChannelModel, exp: &ExperimentConfig, defense_on: bool) -> Result<Reference> {
    let spec = SessionSpec::new("reference", defense_on, Motion::None, exp.reference_s, exp.defense);
    let out = run_session(
        model,
        &spec,
        &Selection::FromSession(exp.n_select_for(model.scenario())),
        exp.window_s,
    )?;
    Ok(Reference {
        selection: out.selection,
        observation: out.observation,
        duration_s: exp.reference_s,
    })
}

/// Simulates one session as the calibrated eavesdropper sees it.
pub fn observe_session(
    model: &ChannelModel,
    exp: &ExperimentConfig,
    reference: &Reference,
    label: &str,
    defense_on: bool,
    motion: Motion,
    duration_s: f64,
) -> Result<SessionOutput> {
    let spec = SessionSpec::new(label, defense_on, motion, duration_s, exp.defense);
    run_session(
        model,
        &spec,
        &Selection::Fixed(reference.selection.clone()),
        exp.window_s,
    )
}

/// Outcome of the walk-detection protocol.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WalkResult {
    pub defense_on: bool,
    pub threshold: f64,
    pub conservativeness: f64,
    pub reference_s: f64,
    /// Detection rate over samples whose window contains a direct-path
    /// crossing.
    pub crossing_rate: f64,
    /// Detection rate over all motion samples.
    pub motion_rate: f64,
    /// False-positive rate on an independent quiet recording.
    pub heldout_fpr: f64,
    /// Motion samples against reference samples.
    pub auc: f64,
    /// Crossing samples only against reference samples.
    pub crossing_auc: f64,
    pub reference: Vec<f64>,
    pub motion: Vec<f64>,
    pub crossing: Vec<bool>,
}

/// Reference calibration, a walk session, and a held-out quiet session.
pub fn walk_experiment(scenario: &Scenario, exp: &ExperimentConfig, defense_on: bool) -> Result<WalkResult> {
    exp.validate()?;
    let model = ChannelModel::new(scenario)?;
    let reference = calibrate_reference(&model, exp, defense_on)?;
    let u = reference.threshold(exp.rule())?;
    let walk = observe_session(
        &model,
        exp,
        &reference,
        "walk",
        defense_on,
        exp.walk_motion(),
        exp.session_s,
    )?;
    let quiet = observe_session(
        &model,
        exp,
        &reference,
        "heldout",
        defense_on,
        Motion::None,
        exp.session_s,
    )?;
    let crossing = walk.window_any(&walk.los_blocked);
    let crossing_values: Vec<f64> = walk
        .observation
        .values
        .iter()
        .zip(&crossing)
        .filter_map(|(&v, &c)| c.then_some(v))
        .collect();
    if crossing_values.is_empty() {
        return Err(Error::contract("the walk never crosses the direct path"));
    }
    let crossing_rate = sensing::detect(&crossing_values, u)?.detection_rate;
    let motion_rate = sensing::detect(&walk.observation.values, u)?.detection_rate;
    let heldout_fpr = sensing::detect(&quiet.observation.values, u)?.detection_rate;
    let auc = sensing::roc(&walk.observation.values, &reference.observation.values)?.auc;
    let crossing_auc = sensing::roc(&crossing_values, &reference.observation.values)?.auc;
    Ok(WalkResult {
        defense_on,
        threshold: u,
        conservativeness: exp.conservativeness,
        reference_s: reference.duration_s,
        crossing_rate,
        motion_rate,
        heldout_fpr,
        auc,
        crossing_auc,
        reference: reference.observation.values,
        motion: walk.observation.values,
        crossing,
    })
}

/// `nx × ny` cell centres spanning the bounding box of the room walls.
pub fn grid_positions(scenario: &Scenario, nx: usize, ny: usize) -> Result<Vec<Point>> {
    let (lo, hi) = bounding_box(&scenario.walls).ok_or_else(|| Error::invalid("coverage grid needs room walls"))?;
    let mut out = Vec::with_capacity(nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            out.push(Point::new(
                lo.x + (i as f64 + 0.5) / nx as f64 * (hi.x - lo.x),
                lo.y + (j as f64 + 0.5) / ny as f64 * (hi.y - lo.y),
            ));
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageCell {
    pub index: usize,
    pub position: Point,
    /// Detection rate under the median/MAD threshold.
    pub rate: f64,
    /// Detection rate under the maximum-of-reference threshold.
    pub rate_max_ref: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageMap {
    pub defense_on: bool,
    pub conservativeness: f64,
    pub reference_s: f64,
    pub session_s: f64,
    pub threshold: f64,
    pub threshold_max_ref: f64,
    pub cells: Vec<CoverageCell>,
}

/// Detection rate of a rotating reflector placed at each grid position.
pub fn run_coverage_grid(
    scenario: &Scenario,
    exp: &ExperimentConfig,
    grid: &[Point],
    defense_on: bool,
    c: f64,
) -> Result<CoverageMap> {
    exp.validate()?;
    if grid.is_empty() {
        return Err(Error::contract("empty coverage grid"));
    }
    let model = ChannelModel::new(scenario)?;
    let reference = calibrate_reference(&model, exp, defense_on)?;
    let u = reference.threshold(ThresholdRule::MedianMad { c })?;
    let u_max = reference.threshold(ThresholdRule::MaxReference)?;
    let cells = grid
        .par_iter()
        .enumerate()
        .map(|(i, &pos)| {
            let out = observe_session(
                &model,
                exp,
                &reference,
                &format!("coverage-{i}"),
                defense_on,
                exp.reflector_at(pos),
                exp.session_s,
            )?;
            let v = &out.observation.values;
            Ok(CoverageCell {
                index: i,
                position: pos,
                rate: sensing::detect(v, u)?.detection_rate,
                rate_max_ref: sensing::detect(v, u_max)?.detection_rate,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CoverageMap {
        defense_on,
        conservativeness: c,
        reference_s: reference.duration_s,
        session_s: exp.session_s,
        threshold: u,
        threshold_max_ref: u_max,
        cells,
    })
}

/// Distribution summary of the observation for one sweep value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    pub value: f64,
    pub median: f64,
    pub p01: f64,
    pub p99: f64,
    /// `median + C·MAD` with the configured C.
    pub threshold: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub sweep_var: String,
    pub conservativeness: f64,
    pub duration_s: f64,
    pub cells: Vec<SweepCell>,
}

fn summarize(value: f64, obs: &[f64], c: f64) -> Result<SweepCell> {
    Ok(SweepCell {
        value,
        median: sensing::median(obs),
        p01: sensing::percentile(obs, 1.0),
        p99: sensing::percentile(obs, 99.0),
        threshold: sensing::calibrate_threshold(obs, c)?,
    })
}

/// A quiet defended session, observed with a selection made on itself.
fn quiet_defended(model: &ChannelModel, exp: &ExperimentConfig, spec: SessionSpec) -> Result<ObservationSeries> {
    let k = exp.n_select_for(model.scenario());
    Ok(run_session(model, &spec, &Selection::FromSession(k), exp.window_s)?.observation)
}

fn sweep_label(var: &str) -> String {
    format!("sweep-{var}")
}

/// Varies the number of elements the generator drives. The active subset for
/// each count is drawn once; the remaining elements hold their initial bit.
pub fn sweep_irs_size(
    scenario: &Scenario,
    exp: &ExperimentConfig,
    counts: &[usize],
    duration_s: f64,
) -> Result<SweepResult> {
    exp.validate()?;
    let model = ChannelModel::new(scenario)?;
    let m = model.n_elements();
    if let Some(&bad) = counts.iter().find(|&&c| c > m) {
        return Err(Error::contract(format!(
            "{bad} active elements requested, surface has {m}"
        )));
    }
    let cells = counts
        .par_iter()
        .map(|&count| {
            let mut spec = SessionSpec::new(sweep_label("size"), true, Motion::None, duration_s, exp.defense);
            if count < m {
                let mut rng = seed::stream(scenario.seed, "active", count as u64);
                spec.active = Some(index::sample(&mut rng, m, count).into_vec());
            }
            let obs = quiet_defended(&model, exp, spec)?;
            summarize(count as f64, &obs.values, exp.conservativeness)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepResult {
        sweep_var: "size".into(),
        conservativeness: exp.conservativeness,
        duration_s,
        cells,
    })
}

/// Scenario with the surface moved to `distance` metres from the anchor along
/// its current anchor→surface axis.
pub fn with_irs_distance(scenario: &Scenario, distance: f64) -> Result<Scenario> {
    let layout = scenario
        .irs
        .as_ref()
        .ok_or_else(|| Error::invalid("scenario has no surface"))?;
    if !(distance > 0.0) {
        return Err(Error::contract(format!(
            "surface distance must be positive, got {distance}"
        )));
    }
    let axis = (layout.center - scenario.anchor).unit();
    if axis.norm() == 0.0 {
        return Err(Error::invalid("surface sits on the anchor; distance axis undefined"));
    }
    let mut s = scenario.clone();
    s.irs = Some(layout.with_pose(scenario.anchor + axis * distance, layout.normal));
    s.validate()?;
    Ok(s)
}

/// Scenario with the surface on a circle of `radius` around the anchor. At 0°
/// it faces the eavesdropper from behind the anchor; the angle turns the
/// facing direction counter-clockwise, and the surface stays on the far side
/// of the anchor from where it faces.
pub fn with_irs_orientation(scenario: &Scenario, angle_deg: f64, radius: f64) -> Result<Scenario> {
    let layout = scenario
        .irs
        .as_ref()
        .ok_or_else(|| Error::invalid("scenario has no surface"))?;
    let facing = (scenario.eve - scenario.anchor).unit().rotate(angle_deg.to_radians());
    let mut s = scenario.clone();
    s.irs = Some(layout.with_pose(scenario.anchor - facing * radius, facing));
    s.validate()?;
    Ok(s)
}

fn sweep_scenarios(
    var: &str,
    scenarios: Vec<(f64, Scenario)>,
    exp: &ExperimentConfig,
    duration_s: f64,
) -> Result<SweepResult> {
    let cells = scenarios
        .par_iter()
        .map(|(value, s)| {
            let model = ChannelModel::new(s)?;
            let spec = SessionSpec::new(sweep_label(var), true, Motion::None, duration_s, exp.defense);
            let obs = quiet_defended(&model, exp, spec)?;
            summarize(*value, &obs.values, exp.conservativeness)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepResult {
        sweep_var: var.into(),
        conservativeness: exp.conservativeness,
        duration_s,
        cells,
    })
}

pub fn sweep_irs_distance(
    scenario: &Scenario,
    exp: &ExperimentConfig,
    distances: &[f64],
    duration_s: f64,
) -> Result<SweepResult> {
    exp.validate()?;
    let scenarios = distances
        .iter()
        .map(|&d| Ok((d, with_irs_distance(scenario, d)?)))
        .collect::<Result<Vec<_>>>()?;
    sweep_scenarios("distance", scenarios, exp, duration_s)
}

pub fn sweep_irs_orientation(
    scenario: &Scenario,
    exp: &ExperimentConfig,
    angles_deg: &[f64],
    duration_s: f64,
) -> Result<SweepResult> {
    exp.validate()?;
    let scenarios = angles_deg
        .iter()
        .map(|&a| Ok((a, with_irs_orientation(scenario, a, exp.orbit_radius)?)))
        .collect::<Result<Vec<_>>>()?;
    sweep_scenarios("orientation", scenarios, exp, duration_s)
}

/// Smallest lag at which the mean-removed, normalized autocorrelation drops
/// below 0.5, in seconds. A series that never decorrelates returns its own
/// duration.
pub fn coherence_time(series: &[f64], sample_rate: f64) -> Result<f64> {
    if series.len() < 2 {
        return Err(Error::contract("coherence time needs at least two samples"));
    }
    let n = series.len();
    let mean = series.iter().sum::<f64>() / n as f64;
    let dev: Vec<f64> = series.iter().map(|v| v - mean).collect();
    let var: f64 = dev.iter().map(|d| d * d).sum();
    if var == 0.0 || series.iter().all(|&v| v == series[0]) {
        return Err(Error::UndefinedCoherence);
    }
    for lag in 1..n {
        let acf: f64 = dev[..n - lag].iter().zip(&dev[lag..]).map(|(a, b)| a * b).sum::<f64>() / var;
        if acf < 0.5 {
            return Ok(lag as f64 / sample_rate);
        }
    }
    Ok(n as f64 / sample_rate)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamStudyCell {
    pub progression_rate: f64,
    pub hold_prob: f64,
    pub median: f64,
    pub mad: f64,
    pub threshold: f64,
    pub euclidean_norm: f64,
    pub coherence_time_s: f64,
}

/// Quiet defended sessions over the Cartesian product of `r_values × p_values`.
pub fn parameter_study(
    scenario: &Scenario,
    exp: &ExperimentConfig,
    r_values: &[f64],
    p_values: &[f64],
    duration_s: f64,
) -> Result<Vec<ParamStudyCell>> {
    exp.validate()?;
    if r_values.is_empty() || p_values.is_empty() {
        return Err(Error::contract("parameter grids must be non-empty"));
    }
    if !(duration_s > 0.0) {
        return Err(Error::contract("parameter study needs a positive session length"));
    }
    let model = ChannelModel::new(scenario)?;
    let grid: Vec<(f64, f64)> = r_values
        .iter()
        .flat_map(|&r| p_values.iter().map(move |&p| (r, p)))
        .collect();
    grid.par_iter()
        .map(|&(r, p)| {
            let params = AlgParams {
                progression_rate: r,
                hold_prob: p,
                ..exp.defense
            };
            let spec = SessionSpec::new("paramstudy", true, Motion::None, duration_s, params);
            let obs = quiet_defended(&model, exp, spec)?;
            let v = &obs.values;
            let coherence = match coherence_time(v, obs.sample_rate) {
                Ok(c) => c,
                Err(Error::UndefinedCoherence) => 0.0,
                Err(e) => return Err(e),
            };
            Ok(ParamStudyCell {
                progression_rate: r,
                hold_prob: p,
                median: sensing::median(v),
                mad: sensing::mad(v),
                threshold: sensing::calibrate_threshold(v, exp.conservativeness)?,
                euclidean_norm: v.iter().map(|x| x * x).sum::<f64>().sqrt(),
                coherence_time_s: coherence,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coherence_of_white_noise_is_one_sample() {
        let mut rng = seed::stream(1, "t", 0);
        let v: Vec<f64> = (0..5000).map(|_| rand::Rng::random::<f64>(&mut rng)).collect();
        assert_eq!(coherence_time(&v, 70.0).unwrap(), 1.0 / 70.0);
    }

    #[test]
    fn coherence_of_slow_cosine() {
        // period 700 samples over 100 periods; the biased estimator scales the
        // cosine by (1 − τ/N), so the crossing lands just before P/6
        let period = 700.0;
        let v: Vec<f64> = (0..70_000)
            .map(|i| (2.0 * std::f64::consts::PI * i as f64 / period).cos())
            .collect();
        let tau = coherence_time(&v, 1.0).unwrap();
        assert!((tau - period / 6.0).abs() <= 1.5, "tau = {tau}");
    }

    #[test]
    fn coherence_of_constant_is_undefined() {
        assert!(matches!(
            coherence_time(&[2.0; 10], 1.0),
            Err(Error::UndefinedCoherence)
        ));
        assert!(coherence_time(&[1.0], 1.0).is_err());
    }

    #[test]
    fn twenty_cell_grid() {
        let g = grid_positions(&Scenario::office(0), 5, 4).unwrap();
        assert_eq!(g.len(), 20);
        assert!((g[0].x - 0.75).abs() < 1e-12 && (g[0].y - 0.6875).abs() < 1e-12);
    }

    #[test]
    fn irs_moves_along_its_axis() {
        let s = Scenario::office(0);
        let near = with_irs_distance(&s, 0.15).unwrap();
        let c = near.irs.unwrap().center;
        assert!((c.distance(s.anchor) - 0.15).abs() < 1e-12);
        assert!(matches!(with_irs_distance(&s, 5.0), Err(Error::InvalidScenario(_))));
    }

    #[test]
    fn orientation_zero_is_the_default_pose() {
        let s = Scenario::office(0);
        let o = with_irs_orientation(&s, 0.0, 0.3).unwrap();
        let (a, b) = (o.irs.unwrap(), s.irs.unwrap());
        assert!(a.center.distance(b.center) < 1e-12);
        assert!(a.normal.distance(b.normal) < 1e-12);
    }

    #[test]
    fn full_size_sweep_cell_is_the_plain_session() {
        let s = Scenario::office(2);
        let exp = ExperimentConfig::default();
        let cell = &sweep_irs_size(&s, &exp, &[256], 5.0).unwrap().cells[0];
        let model = ChannelModel::new(&s).unwrap();
        let spec = SessionSpec::new(sweep_label("size"), true, Motion::None, 5.0, exp.defense);
        let plain = quiet_defended(&model, &exp, spec).unwrap();
        assert_eq!(cell.median, sensing::median(&plain.values));
    }
}
