//! Frame-by-frame simulation of a recording session.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::channel::{add_scaled, blocking_atten, ChannelModel, CsiFrame, PathKind};
use crate::error::{Error, Result};
use crate::irs::{AlgParams, IrsAlgState, IrsConfig, StepOutcome};
use crate::motion::Motion;
use crate::seed;
use crate::sensing::{self, window_samples, MagnitudeMatrix, ObservationSeries};

/// One recording: what moves, whether the surface is running, how long.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionSpec {
    /// Names the noise stream. Sessions with the same label and scenario
    /// seed see identical receiver noise.
    pub label: String,
    pub defense_on: bool,
    pub motion: Motion,
    pub duration_s: f64,
    pub params: AlgParams,
    /// Elements driven by the generator; `None` means all of them.
    pub active: Option<Vec<usize>>,
}

impl SessionSpec {
    pub fn new(label: impl Into<String>, defense_on: bool, motion: Motion, duration_s: f64, params: AlgParams) -> Self {
        Self {
            label: label.into(),
            defense_on,
            motion,
            duration_s,
            params,
            active: None,
        }
    }

    pub fn n_frames(&self, sample_rate: f64) -> usize {
        (self.duration_s * sample_rate).round().max(0.0) as usize
    }
}

/// Incremental frame generator. The surface sum `Σ r_m·G'_m` is kept up to
/// date element by element as the generator flips bits, so a frame costs a
/// handful of vector additions plus noise.
pub struct SessionSynth<'a> {
    model: &'a ChannelModel,
    spec: &'a SessionSpec,
    alg: Option<IrsAlgState>,
    cfg: IrsConfig,
    irs_sum: Vec<Complex64>,
    noise_key: u64,
    n_frames: usize,
    t: usize,
    ticks_done: u64,
    /// Per frame: did the surface configuration change since the previous frame.
    pub irs_changed: Vec<bool>,
    /// Per frame: is the direct path shadowed.
    pub los_blocked: Vec<bool>,
}

impl<'a> SessionSynth<'a> {
    pub fn new(model: &'a ChannelModel, spec: &'a SessionSpec) -> Result<Self> {
        spec.motion.validate()?;
        let scenario = model.scenario();
        if !(spec.duration_s >= 0.0 && spec.duration_s.is_finite()) {
            return Err(Error::contract(format!("bad session duration {}", spec.duration_s)));
        }
        let m = model.n_elements();
        if spec.defense_on && m == 0 {
            return Err(Error::invalid("defense requested but the scenario has no surface"));
        }
        let irs_seed = seed::derive_seed(scenario.seed, "irs", 0);
        let (alg, cfg) = if m > 0 {
            let mut alg = IrsAlgState::new(m, spec.params, irs_seed)?;
            if let Some(active) = &spec.active {
                alg.set_active(active.clone())?;
            }
            let cfg = alg.config().clone();
            (spec.defense_on.then_some(alg), cfg)
        } else {
            (None, IrsConfig::zeros(0))
        };
        let irs_sum = model.irs_sum(&cfg)?;
        Ok(Self {
            model,
            spec,
            alg,
            cfg,
            irs_sum,
            noise_key: seed::derive_seed(scenario.seed, &spec.label, 0),
            n_frames: spec.n_frames(scenario.sample_rate),
            t: 0,
            ticks_done: 0,
            irs_changed: Vec::new(),
            los_blocked: Vec::new(),
        })
    }

    pub fn n_frames(&self) -> usize {
        self.n_frames
    }

    pub fn config(&self) -> &IrsConfig {
        &self.cfg
    }

    /// Runs every generator tick scheduled at or before `time`.
    fn advance_surface(&mut self, time: f64) -> bool {
        let Some(alg) = self.alg.as_mut() else {
            return false;
        };
        let due = (time * alg.params().update_rate + 1e-9).floor() as u64;
        let mut changed = false;
        let resp = self.model.irs_responses();
        while self.ticks_done < due {
            self.ticks_done += 1;
            match alg.step() {
                StepOutcome::Randomized(flipped) => {
                    for m in flipped {
                        // r went from −r_new to r_new
                        add_scaled(&mut self.irs_sum, &resp[m], 2.0 * alg.config().coefficient(m));
                    }
                    changed = true;
                }
                StepOutcome::Inverted => {
                    if alg.active().len() == alg.config().len() {
                        self.irs_sum.iter_mut().for_each(|v| *v = -*v);
                    } else {
                        for &m in alg.active() {
                            add_scaled(&mut self.irs_sum, &resp[m], 2.0 * alg.config().coefficient(m));
                        }
                    }
                    changed = true;
                }
                StepOutcome::Held | StepOutcome::InversionBypassed => {}
            }
        }
        if changed {
            self.cfg = alg.config().clone();
        }
        changed
    }

    pub fn next_frame(&mut self) -> Option<CsiFrame> {
        if self.t >= self.n_frames {
            return None;
        }
        let scenario = self.model.scenario();
        let time = self.t as f64 / scenario.sample_rate;
        let changed = self.advance_surface(time);
        let (obstacle, echoes) = self.spec.motion.state_at(scenario, time);

        let mut frame = CsiFrame::zeros(self.t as u64, scenario.n_subcarriers, scenario.n_rx, scenario.n_tx);
        frame.values.copy_from_slice(&self.irs_sum);
        let mut los_blocked = false;
        for (p, r) in self.model.env_paths().iter().zip(self.model.env_responses()) {
            let atten = obstacle.map_or(1.0, |o| {
                blocking_atten(&p.points, o.position, o.blocking_radius, o.blocking_depth_db)
            });
            if p.kind == PathKind::Los && atten < 1.0 {
                los_blocked = true;
            }
            add_scaled(&mut frame.values, r, atten);
        }
        if let Some(o) = obstacle {
            for (m, (p, r)) in self
                .model
                .irs_paths()
                .iter()
                .zip(self.model.irs_responses())
                .enumerate()
            {
                let atten = blocking_atten(&p.points, o.position, o.blocking_radius, o.blocking_depth_db);
                if atten < 1.0 {
                    add_scaled(&mut frame.values, r, (atten - 1.0) * self.cfg.coefficient(m));
                }
            }
        }
        for e in &echoes {
            add_scaled(&mut frame.values, &self.model.path_response(e), 1.0);
        }
        self.model.add_noise(&mut frame.values, self.noise_key, self.t as u64);
        self.irs_changed.push(changed);
        self.los_blocked.push(los_blocked);
        self.t += 1;
        Some(frame)
    }
}

/// Result of one simulated recording.
#[derive(Debug, Clone)]
pub struct SessionOutput {
    pub observation: ObservationSeries,
    /// Magnitudes of the subcarriers the observation was computed from.
    pub magnitudes: MagnitudeMatrix,
    /// The subcarriers used, ascending.
    pub selection: Vec<usize>,
    pub irs_changed: Vec<bool>,
    pub los_blocked: Vec<bool>,
}

impl SessionOutput {
    /// Per observation sample: does its window contain a frame where
    /// `flags` is set.
    pub fn window_any(&self, flags: &[bool]) -> Vec<bool> {
        let n_w = self.observation.window_samples();
        (0..self.observation.len())
            .map(|i| flags[i..i + n_w].iter().any(|&b| b))
            .collect()
    }
}

/// How the eavesdropper chooses subcarriers for a session.
#[derive(Debug, Clone, PartialEq)]
pub enum Selection {
    /// Use these subcarriers.
    Fixed(Vec<usize>),
    /// Select the best `k` from this session's own frames.
    FromSession(usize),
}

/// Simulates a session and computes the eavesdropper's observation.
pub fn run_session(
    model: &ChannelModel,
    spec: &SessionSpec,
    selection: &Selection,
    window_s: f64,
) -> Result<SessionOutput> {
    run_session_with(model, spec, selection, window_s, |_| Ok(()))
}

/// [`run_session`] that also hands every full frame to `sink` as it is
/// generated.
pub fn run_session_with(
    model: &ChannelModel,
    spec: &SessionSpec,
    selection: &Selection,
    window_s: f64,
    mut sink: impl FnMut(&CsiFrame) -> Result<()>,
) -> Result<SessionOutput> {
    let scenario = model.scenario();
    let n_w = window_samples(window_s, scenario.sample_rate);
    let n = spec.n_frames(scenario.sample_rate);
    if n_w < 2 {
        return Err(Error::contract(format!(
            "window of {window_s} s spans fewer than 2 frames"
        )));
    }
    if n < n_w {
        return Err(Error::contract(format!(
            "session of {} s ({n} frames) is shorter than the {window_s} s window",
            spec.duration_s
        )));
    }
    let mut synth = SessionSynth::new(model, spec)?;
    let spatial = scenario.n_rx * scenario.n_tx;
    let (mut mags, keep) = match selection {
        Selection::Fixed(v) => (MagnitudeMatrix::zeros(v.len(), spatial, n), Some(v.as_slice())),
        Selection::FromSession(_) => (MagnitudeMatrix::zeros(scenario.n_subcarriers, spatial, n), None),
    };
    while let Some(f) = synth.next_frame() {
        sink(&f)?;
        mags.write_frame(f.t_index as usize, &f, keep)?;
    }
    let (mags, selection) = match selection {
        Selection::Fixed(v) => (mags, v.clone()),
        Selection::FromSession(k) => {
            let sel = sensing::select_subcarriers_from(&mags, *k)?;
            (mags.select(&sel)?, sel)
        }
    };
    let mut observation = sensing::observe_magnitudes(&mags, scenario.sample_rate, window_s)?;
    observation.meta.label = spec.label.clone();
    observation.meta.seed = scenario.seed;
    Ok(SessionOutput {
        observation,
        magnitudes: mags,
        selection,
        irs_changed: synth.irs_changed,
        los_blocked: synth.los_blocked,
    })
}
