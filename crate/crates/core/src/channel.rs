//! Geometric multipath channel simulator.
//!
//! The channel between the anchor (transmitter) and the eavesdropper
//! (receiver) is the superposition of
//!
//! * environment paths: the direct path and first-order wall reflections,
//!   each with free-space loss `λ/(4π·L)`,
//! * one path per reflecting-surface element with product loss
//!   `λ²/((4π)²·d₁·d₂)`, scaled by the element's reflection coefficient,
//! * transient paths created by moving objects (people, reflectors),
//!
//! plus complex white Gaussian noise. A person near a path route attenuates
//! that path. All computations are in the plane; surface elements carry a
//! height so that the vertical extent of the surface shows up in the path
//! lengths.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{bounding_box, Point, Segment};
use crate::irs::{IrsConfig, IrsElement, IrsLayout};
use crate::seed;

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Shortest leg length used in product path-loss terms, so that an object
/// placed on top of an antenna stays finite.
const MIN_LEG: f64 = 0.05;

/// Static description of the propagation environment and radio setup.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub walls: Vec<Segment>,
    pub anchor: Point,
    pub eve: Point,
    /// Reflecting surface, if one is installed.
    pub irs: Option<IrsLayout>,
    pub n_tx: usize,
    pub n_rx: usize,
    /// Uniform linear array spacing in metres.
    pub antenna_spacing: f64,
    pub carrier_freq: f64,
    pub n_subcarriers: usize,
    pub subcarrier_spacing: f64,
    /// CSI frames per second.
    pub sample_rate: f64,
    /// Signal-to-noise ratio; `+inf` disables noise.
    pub snr_db: f64,
    pub wall_reflection_loss_db: f64,
    pub seed: u64,
}

impl Scenario {
    /// A 7.5 m × 5.5 m office with a window opening in the east wall. The
    /// eavesdropper stands outside, in line of sight of the anchor through
    /// the opening; the surface sits 30 cm behind the anchor facing the
    /// eavesdropper.
    pub fn office(seed: u64) -> Self {
        let p = Point::new;
        let walls = vec![
            Segment::new(p(0.0, 0.0), p(7.5, 0.0)),
            Segment::new(p(7.5, 5.5), p(0.0, 5.5)),
            Segment::new(p(0.0, 5.5), p(0.0, 0.0)),
            Segment::new(p(7.5, 0.0), p(7.5, 1.5)),
            Segment::new(p(7.5, 3.5), p(7.5, 5.5)),
        ];
        let anchor = p(2.0, 2.2);
        let eve = p(9.0, 2.5);
        let carrier_freq = 5.32e9;
        let facing = (eve - anchor).unit();
        let irs = IrsLayout {
            center: anchor - facing * 0.3,
            normal: facing,
            width: 0.43,
            height: 0.35,
            rows: 16,
            cols: 16,
        };
        Self {
            walls,
            anchor,
            eve,
            irs: Some(irs),
            n_tx: 3,
            n_rx: 3,
            antenna_spacing: SPEED_OF_LIGHT / carrier_freq / 2.0,
            carrier_freq,
            n_subcarriers: 56,
            subcarrier_spacing: 312.5e3,
            sample_rate: 70.0,
            snr_db: 30.0,
            wall_reflection_loss_db: 6.0,
            seed,
        }
    }

    pub fn wavelength(&self) -> f64 {
        SPEED_OF_LIGHT / self.carrier_freq
    }

    /// Centre frequency of subcarrier `k`: `f_c + (k − K/2)·Δf`.
    pub fn subcarrier_freq(&self, k: usize) -> f64 {
        self.carrier_freq + (k as f64 - (self.n_subcarriers / 2) as f64) * self.subcarrier_spacing
    }

    pub fn entries_per_frame(&self) -> usize {
        self.n_subcarriers * self.n_rx * self.n_tx
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |k: &str, m: String| Err(Error::validation(k, m));
        if self.n_tx < 1 {
            return bad("radio.n_tx", "need at least one antenna".into());
        }
        if self.n_rx < 1 {
            return bad("radio.n_rx", "need at least one antenna".into());
        }
        if self.n_subcarriers < 1 {
            return bad("radio.n_subcarriers", "need at least one subcarrier".into());
        }
        if !(self.sample_rate > 0.0 && self.sample_rate.is_finite()) {
            return bad(
                "radio.sample_rate",
                format!("must be positive, got {}", self.sample_rate),
            );
        }
        if !(self.carrier_freq > 0.0 && self.carrier_freq.is_finite()) {
            return bad(
                "radio.carrier_freq",
                format!("must be positive, got {}", self.carrier_freq),
            );
        }
        if !(self.subcarrier_spacing >= 0.0 && self.subcarrier_spacing.is_finite()) {
            return bad("radio.subcarrier_spacing", "must be non-negative".into());
        }
        if self.subcarrier_freq(0) <= 0.0 {
            return bad(
                "radio.subcarrier_spacing",
                "lowest subcarrier frequency is not positive".into(),
            );
        }
        if !(self.antenna_spacing >= 0.0 && self.antenna_spacing.is_finite()) {
            return bad("radio.antenna_spacing", "must be non-negative".into());
        }
        if self.snr_db.is_nan() || self.snr_db == f64::NEG_INFINITY {
            return bad("radio.snr_db", "must be a number or +inf".into());
        }
        if !self.wall_reflection_loss_db.is_finite() {
            return bad("room.wall_reflection_loss_db", "must be finite".into());
        }
        if !self.anchor.is_finite() || !self.eve.is_finite() {
            return Err(Error::invalid("positions must be finite"));
        }
        if self.anchor == self.eve {
            return Err(Error::invalid("anchor and eavesdropper coincide"));
        }
        if let Some(irs) = &self.irs {
            if (irs.normal.norm() - 1.0).abs() > 1e-9 {
                return bad("irs.normal", format!("must have unit norm, got {}", irs.normal.norm()));
            }
            if irs.rows == 0 || irs.cols == 0 {
                return bad("irs.grid", "surface needs at least one element".into());
            }
            if !(irs.width >= 0.0 && irs.height >= 0.0) {
                return bad("irs.size", "surface dimensions must be non-negative".into());
            }
            if let Some((lo, hi)) = bounding_box(&self.walls) {
                let inside = |q: Point| q.x >= lo.x && q.x <= hi.x && q.y >= lo.y && q.y <= hi.y;
                if !irs.elements().iter().all(|e| inside(e.position)) {
                    return Err(Error::invalid(format!(
                        "surface at ({:.3}, {:.3}) extends outside the room",
                        irs.center.x, irs.center.y
                    )));
                }
            }
        }
        Ok(())
    }

    /// Antenna offsets of a uniform linear array broadside to the
    /// anchor–eavesdropper line.
    pub fn antenna_offsets(&self, n: usize) -> Vec<Point> {
        let axis = (self.eve - self.anchor).unit().perp();
        (0..n)
            .map(|i| axis * ((i as f64 - (n as f64 - 1.0) / 2.0) * self.antenna_spacing))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PathKind {
    Los,
    WallReflection(usize),
    IrsElement(usize),
    HumanScatter,
}

/// One propagation path from the anchor to the eavesdropper.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Path {
    pub kind: PathKind,
    /// Route from anchor to eavesdropper in the plane.
    pub points: Vec<Point>,
    /// Complex gain at the carrier frequency, before blocking.
    pub base_gain: Complex64,
    /// Propagation length (sets the phase).
    pub length: f64,
    /// Blocking attenuation in `[0, 1]`.
    pub blocked_atten: f64,
    /// Real amplitude factor: reflection loss, obliquity, scatter gain.
    pub coef: f64,
    /// Distance product in the loss denominator: `L` for single-hop loss,
    /// `d₁·d₂` for product loss.
    pub spread: f64,
    /// Power of `λ/(4π)` in the loss: 1 for single-hop, 2 for product loss.
    pub order: i32,
}

pub type PathSet = Vec<Path>;

impl Path {
    fn new(kind: PathKind, points: Vec<Point>, length: f64, coef: f64, spread: f64, order: i32, fc: f64) -> Self {
        let mut p = Path {
            kind,
            points,
            base_gain: Complex64::new(0.0, 0.0),
            length,
            blocked_atten: 1.0,
            coef,
            spread,
            order,
        };
        p.base_gain = p.gain_at(fc, 0.0);
        p
    }

    /// Unblocked complex gain at frequency `f` with `extra` metres added to
    /// the phase length.
    pub fn gain_at(&self, f: f64, extra: f64) -> Complex64 {
        let lambda = SPEED_OF_LIGHT / f;
        let amp = self.coef * (lambda / (4.0 * PI)).powi(self.order) / self.spread;
        Complex64::from_polar(amp, -2.0 * PI * f * (self.length + extra) / SPEED_OF_LIGHT)
    }

    pub fn segments(&self) -> impl Iterator<Item = Segment> + '_ {
        self.points.windows(2).map(|w| Segment::new(w[0], w[1]))
    }

    /// Unit vector leaving the anchor along the first leg.
    fn departure(&self) -> Point {
        (self.points[1] - self.points[0]).unit()
    }

    /// Unit vector pointing from the eavesdropper back along the last leg.
    fn arrival(&self) -> Point {
        let n = self.points.len();
        (self.points[n - 2] - self.points[n - 1]).unit()
    }
}

/// Direct path (unless a wall blocks it) and one specular reflection per
/// wall that has a valid image point.
pub fn build_static_paths(scenario: &Scenario) -> Result<PathSet> {
    let (a, e) = (scenario.anchor, scenario.eve);
    if a == e {
        return Err(Error::invalid("anchor and eavesdropper coincide"));
    }
    let fc = scenario.carrier_freq;
    let mut paths = Vec::new();
    let direct = Segment::new(a, e);
    if !scenario.walls.iter().any(|w| w.intersects(&direct)) {
        let d = a.distance(e);
        paths.push(Path::new(PathKind::Los, vec![a, e], d, 1.0, d, 1, fc));
    }
    let gamma = 10f64.powf(-scenario.wall_reflection_loss_db / 20.0);
    for (i, wall) in scenario.walls.iter().enumerate() {
        if wall.length() == 0.0 || wall.side(a) * wall.side(e) <= 0.0 {
            continue;
        }
        let image = wall.mirror(a);
        let Some((t_wall, t_ray)) = wall.line_params(&Segment::new(image, e)) else {
            continue;
        };
        if !(0.0..=1.0).contains(&t_wall) || !(0.0..=1.0).contains(&t_ray) {
            continue;
        }
        let bounce = wall.a + wall.direction() * t_wall;
        let len = image.distance(e);
        paths.push(Path::new(
            PathKind::WallReflection(i),
            vec![a, bounce, e],
            len,
            gamma,
            len,
            1,
            fc,
        ));
    }
    Ok(paths)
}

fn element_legs(scenario: &Scenario, el: &IrsElement) -> (f64, f64) {
    let d = |p: Point| ((p - el.position).norm().powi(2) + el.height * el.height).sqrt();
    (d(scenario.anchor), d(scenario.eve))
}

/// One path per surface element. Amplitude carries the obliquity factor
/// `max(0, n̂·û₁)·max(0, n̂·û₂)`; elements facing away keep a zero-gain path.
pub fn build_irs_paths(scenario: &Scenario, layout: &IrsLayout) -> PathSet {
    let n = layout.normal.unit();
    layout
        .elements()
        .iter()
        .enumerate()
        .map(|(m, el)| {
            let (d1, d2) = element_legs(scenario, el);
            let cos1 = (n.dot(scenario.anchor - el.position) / d1).max(0.0);
            let cos2 = (n.dot(scenario.eve - el.position) / d2).max(0.0);
            Path::new(
                PathKind::IrsElement(m),
                vec![scenario.anchor, el.position, scenario.eve],
                d1 + d2,
                cos1 * cos2,
                d1.max(MIN_LEG) * d2.max(MIN_LEG),
                2,
                scenario.carrier_freq,
            )
        })
        .collect()
}

/// A person in the room.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PersonState {
    pub position: Point,
    pub present: bool,
    pub scatter_gain_db: f64,
    pub blocking_radius: f64,
    pub blocking_depth_db: f64,
}

impl PersonState {
    pub fn at(position: Point) -> Self {
        Self {
            position,
            ..Self::default()
        }
    }

    pub fn absent() -> Self {
        Self {
            present: false,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.blocking_radius > 0.0) {
            return Err(Error::validation(
                "experiment.person.blocking_radius",
                "must be positive",
            ));
        }
        if !(self.blocking_depth_db >= 0.0) {
            return Err(Error::validation(
                "experiment.person.blocking_depth_db",
                "must be non-negative",
            ));
        }
        Ok(())
    }
}

impl Default for PersonState {
    fn default() -> Self {
        Self {
            position: Point::default(),
            present: true,
            scatter_gain_db: -5.0,
            blocking_radius: 0.4,
            blocking_depth_db: 10.0,
        }
    }
}

/// Attenuation an obstacle at `pos` applies to a path following `route`:
/// `10^(−depth·s/20)` with `s` ramping from 0 at `radius` to 1 on the route.
pub fn blocking_atten(route: &[Point], pos: Point, radius: f64, depth_db: f64) -> f64 {
    let d = route
        .windows(2)
        .map(|w| Segment::new(w[0], w[1]).distance_to(pos))
        .fold(f64::INFINITY, f64::min);
    if d >= radius {
        return 1.0;
    }
    let s = 1.0 - d / radius;
    10f64.powf(-depth_db * s / 20.0)
}

/// Bistatic scatter path anchor → `via` → eavesdropper with product loss.
pub fn scatter_path(scenario: &Scenario, via: Point, gain_db: f64) -> Path {
    let d1 = scenario.anchor.distance(via);
    let d2 = via.distance(scenario.eve);
    Path::new(
        PathKind::HumanScatter,
        vec![scenario.anchor, via, scenario.eve],
        d1 + d2,
        10f64.powf(gain_db / 20.0),
        d1.max(MIN_LEG) * d2.max(MIN_LEG),
        2,
        scenario.carrier_freq,
    )
}

/// Sets blocking attenuation on every path without adding the scatter path.
pub fn apply_blocking(paths: &[Path], person: &PersonState) -> PathSet {
    let mut out: PathSet = paths.to_vec();
    for p in &mut out {
        p.blocked_atten = if person.present {
            blocking_atten(
                &p.points,
                person.position,
                person.blocking_radius,
                person.blocking_depth_db,
            )
        } else {
            1.0
        };
    }
    out
}

/// Sets blocking attenuation on every path and, if the person is present,
/// appends their scatter path.
pub fn apply_motion(scenario: &Scenario, paths: &[Path], person: &PersonState) -> PathSet {
    let mut out = apply_blocking(paths, person);
    if person.present {
        out.push(scatter_path(scenario, person.position, person.scatter_gain_db));
    }
    out
}

/// One channel estimate: entries ordered subcarrier-major, then column-major
/// within each `n_rx × n_tx` matrix, i.e. index `k·n_rx·n_tx + tx·n_rx + rx`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsiFrame {
    pub t_index: u64,
    pub n_subcarriers: usize,
    pub n_rx: usize,
    pub n_tx: usize,
    pub values: Vec<Complex64>,
}

impl CsiFrame {
    pub fn zeros(t_index: u64, n_subcarriers: usize, n_rx: usize, n_tx: usize) -> Self {
        Self {
            t_index,
            n_subcarriers,
            n_rx,
            n_tx,
            values: vec![Complex64::new(0.0, 0.0); n_subcarriers * n_rx * n_tx],
        }
    }

    pub fn index(&self, k: usize, rx: usize, tx: usize) -> usize {
        (k * self.n_tx + tx) * self.n_rx + rx
    }

    pub fn get(&self, k: usize, rx: usize, tx: usize) -> Complex64 {
        self.values[self.index(k, rx, tx)]
    }

    pub fn spatial_channels(&self) -> usize {
        self.n_rx * self.n_tx
    }

    /// Keeps only the listed subcarriers, in the given order.
    pub fn select(&self, subcarriers: &[usize]) -> Result<CsiFrame> {
        let s = self.spatial_channels();
        let mut values = Vec::with_capacity(subcarriers.len() * s);
        for &k in subcarriers {
            if k >= self.n_subcarriers {
                return Err(Error::contract(format!(
                    "subcarrier {k} out of range for a frame with {}",
                    self.n_subcarriers
                )));
            }
            values.extend_from_slice(&self.values[k * s..(k + 1) * s]);
        }
        Ok(CsiFrame {
            t_index: self.t_index,
            n_subcarriers: subcarriers.len(),
            n_rx: self.n_rx,
            n_tx: self.n_tx,
            values,
        })
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.re.is_finite() && v.im.is_finite())
    }
}

/// Precomputed channel for one scenario: per-path frequency responses across
/// every (subcarrier, antenna pair) entry, and the calibrated noise level.
#[derive(Debug, Clone)]
pub struct ChannelModel {
    scenario: Scenario,
    env_paths: PathSet,
    irs_paths: PathSet,
    env_resp: Vec<Vec<Complex64>>,
    irs_resp: Vec<Vec<Complex64>>,
    freqs: Vec<f64>,
    tx_offsets: Vec<Point>,
    rx_offsets: Vec<Point>,
    noise_sigma: f64,
}

impl ChannelModel {
    pub fn new(scenario: &Scenario) -> Result<Self> {
        scenario.validate()?;
        let env_paths = build_static_paths(scenario)?;
        let irs_paths = scenario
            .irs
            .as_ref()
            .map(|l| build_irs_paths(scenario, l))
            .unwrap_or_default();
        let mut model = Self {
            scenario: scenario.clone(),
            env_paths: Vec::new(),
            irs_paths: Vec::new(),
            env_resp: Vec::new(),
            irs_resp: Vec::new(),
            freqs: (0..scenario.n_subcarriers)
                .map(|k| scenario.subcarrier_freq(k))
                .collect(),
            tx_offsets: scenario.antenna_offsets(scenario.n_tx),
            rx_offsets: scenario.antenna_offsets(scenario.n_rx),
            noise_sigma: 0.0,
        };
        model.env_resp = env_paths.iter().map(|p| model.path_response(p)).collect();
        model.irs_resp = irs_paths.iter().map(|p| model.path_response(p)).collect();
        model.env_paths = env_paths;
        model.irs_paths = irs_paths;
        model.noise_sigma = model.calibrate_noise();
        Ok(model)
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn env_paths(&self) -> &[Path] {
        &self.env_paths
    }

    pub fn irs_paths(&self) -> &[Path] {
        &self.irs_paths
    }

    pub(crate) fn env_responses(&self) -> &[Vec<Complex64>] {
        &self.env_resp
    }

    pub(crate) fn irs_responses(&self) -> &[Vec<Complex64>] {
        &self.irs_resp
    }

    pub fn n_elements(&self) -> usize {
        self.irs_paths.len()
    }

    pub fn entries(&self) -> usize {
        self.scenario.entries_per_frame()
    }

    /// Standard deviation of the complex noise per entry (`E|n|² = σ²`).
    pub fn noise_sigma(&self) -> f64 {
        self.noise_sigma
    }

    /// Noise power from the unblocked environment-only frame:
    /// `mean|H|² / 10^(snr/10)`.
    fn calibrate_noise(&self) -> f64 {
        if self.scenario.snr_db == f64::INFINITY {
            return 0.0;
        }
        let mut acc = vec![Complex64::new(0.0, 0.0); self.entries()];
        for r in &self.env_resp {
            add_scaled(&mut acc, r, 1.0);
        }
        let power = acc.iter().map(|v| v.norm_sqr()).sum::<f64>() / acc.len() as f64;
        (power / 10f64.powf(self.scenario.snr_db / 10.0)).sqrt()
    }

    /// Response of a single unblocked path over every entry. Antenna offsets
    /// shift the phase length by their projection on the departure and
    /// arrival directions.
    pub fn path_response(&self, path: &Path) -> Vec<Complex64> {
        let s = &self.scenario;
        let dep = path.departure();
        let arr = path.arrival();
        let mut out = Vec::with_capacity(self.entries());
        for &f in &self.freqs {
            for tx in &self.tx_offsets {
                for rx in &self.rx_offsets {
                    let extra = -(tx.dot(dep)) - rx.dot(arr);
                    out.push(path.gain_at(f, extra));
                }
            }
        }
        debug_assert_eq!(out.len(), s.entries_per_frame());
        out
    }

    /// Surface contribution `Σ r_m·G'_m` for a configuration.
    pub fn irs_sum(&self, cfg: &IrsConfig) -> Result<Vec<Complex64>> {
        self.check_config(cfg)?;
        let mut acc = vec![Complex64::new(0.0, 0.0); self.entries()];
        for (m, r) in self.irs_resp.iter().enumerate() {
            add_scaled(&mut acc, r, cfg.coefficient(m));
        }
        Ok(acc)
    }

    pub(crate) fn check_config(&self, cfg: &IrsConfig) -> Result<()> {
        if cfg.len() != self.irs_paths.len() {
            return Err(Error::contract(format!(
                "configuration has {} elements, surface has {}",
                cfg.len(),
                self.irs_paths.len()
            )));
        }
        Ok(())
    }

    /// Adds complex noise for frame `t_index` of the session keyed by
    /// `noise_key`. The stream depends only on the key and the index.
    pub fn add_noise(&self, values: &mut [Complex64], noise_key: u64, t_index: u64) {
        if self.noise_sigma == 0.0 {
            return;
        }
        let mut rng = seed::stream(noise_key, "noise", t_index);
        let scale = self.noise_sigma / std::f64::consts::SQRT_2;
        for v in values {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            *v += Complex64::new(re * scale, im * scale);
        }
    }

    /// Full evaluation of the channel for arbitrary path sets.
    ///
    /// `env` and `irs` carry their own blocking attenuation; `cfg` supplies
    /// the reflection coefficients for `irs` (which must be this model's
    /// surface paths, in order).
    pub fn evaluate(
        &self,
        env: &[Path],
        irs: &[Path],
        cfg: Option<&IrsConfig>,
        t_index: u64,
        noise_key: u64,
    ) -> Result<CsiFrame> {
        let s = &self.scenario;
        let mut frame = CsiFrame::zeros(t_index, s.n_subcarriers, s.n_rx, s.n_tx);
        for p in env {
            if p.blocked_atten == 0.0 {
                continue;
            }
            let resp = self.cached_or_computed(p);
            add_scaled(&mut frame.values, &resp, p.blocked_atten);
        }
        if !irs.is_empty() {
            let cfg = cfg.ok_or_else(|| Error::contract("surface paths given without a configuration"))?;
            if cfg.len() != irs.len() {
                return Err(Error::contract(format!(
                    "configuration has {} elements, surface has {}",
                    cfg.len(),
                    irs.len()
                )));
            }
            for (m, p) in irs.iter().enumerate() {
                let resp = self.cached_or_computed(p);
                add_scaled(&mut frame.values, &resp, cfg.coefficient(m) * p.blocked_atten);
            }
        }
        self.add_noise(&mut frame.values, noise_key, t_index);
        Ok(frame)
    }

    fn cached_or_computed(&self, p: &Path) -> std::borrow::Cow<'_, [Complex64]> {
        let cached = match p.kind {
            PathKind::IrsElement(m) => self.irs_paths.get(m).zip(self.irs_resp.get(m)),
            PathKind::Los | PathKind::WallReflection(_) => self
                .env_paths
                .iter()
                .position(|q| q.kind == p.kind)
                .map(|i| (&self.env_paths[i], &self.env_resp[i])),
            PathKind::HumanScatter => None,
        };
        match cached {
            Some((q, r)) if same_geometry(p, q) => std::borrow::Cow::Borrowed(r.as_slice()),
            _ => std::borrow::Cow::Owned(self.path_response(p)),
        }
    }
}

fn same_geometry(a: &Path, b: &Path) -> bool {
    a.points == b.points && a.length == b.length && a.coef == b.coef && a.spread == b.spread && a.order == b.order
}

pub(crate) fn add_scaled(acc: &mut [Complex64], v: &[Complex64], scale: f64) {
    for (a, b) in acc.iter_mut().zip(v) {
        *a += b * scale;
    }
}

/// One noisy channel estimate. The person (if present) blocks paths near them
/// and adds a scatter path; `cfg` must match the surface size.
#[allow(clippy::too_many_arguments)]
pub fn channel_response(
    model: &ChannelModel,
    static_paths: &[Path],
    irs_paths: &[Path],
    cfg: Option<&IrsConfig>,
    person: Option<&PersonState>,
    t_index: u64,
    noise_key: u64,
) -> Result<CsiFrame> {
    let scenario = model.scenario();
    let (env, irs) = match person {
        Some(p) if p.present => (apply_motion(scenario, static_paths, p), apply_blocking(irs_paths, p)),
        _ => (static_paths.to_vec(), irs_paths.to_vec()),
    };
    model.evaluate(&env, &irs, cfg, t_index, noise_key)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bare(anchor: Point, eve: Point) -> Scenario {
        Scenario {
            walls: vec![],
            anchor,
            eve,
            irs: None,
            n_tx: 1,
            n_rx: 1,
            snr_db: f64::INFINITY,
            ..Scenario::office(0)
        }
    }

    #[test]
    fn free_space_single_path() {
        let s = bare(Point::new(0.0, 0.0), Point::new(5.0, 0.0));
        let paths = build_static_paths(&s).unwrap();
        assert_eq!(paths.len(), 1);
        assert_eq!(paths[0].kind, PathKind::Los);
        assert_eq!(paths[0].length, 5.0);
    }

    #[test]
    fn parallel_wall_reflection_length() {
        let mut s = bare(Point::new(0.0, 0.0), Point::new(5.0, 0.0));
        s.walls = vec![Segment::new(Point::new(-10.0, 2.0), Point::new(10.0, 2.0))];
        let paths = build_static_paths(&s).unwrap();
        assert_eq!(paths.len(), 2);
        let refl = &paths[1];
        assert_eq!(refl.kind, PathKind::WallReflection(0));
        let expected = 2.0 * (2.5f64 * 2.5 + 2.0 * 2.0).sqrt();
        assert!((refl.length - expected).abs() < 1e-12);
        assert!((refl.points[1].x - 2.5).abs() < 1e-12);
        let gamma = 10f64.powf(-s.wall_reflection_loss_db / 20.0);
        let lambda = s.wavelength();
        assert!((refl.base_gain.norm() - lambda / (4.0 * PI * expected) * gamma).abs() < 1e-15);
    }

    #[test]
    fn crossing_wall_removes_los() {
        let mut s = bare(Point::new(0.0, 0.0), Point::new(5.0, 0.0));
        s.walls = vec![
            Segment::new(Point::new(2.0, -3.0), Point::new(2.0, 3.0)),
            Segment::new(Point::new(-10.0, 2.0), Point::new(10.0, 2.0)),
        ];
        let paths = build_static_paths(&s).unwrap();
        assert!(paths.iter().all(|p| p.kind != PathKind::Los));
        assert_eq!(paths.len(), 1);
    }

    #[test]
    fn coincident_endpoints_rejected() {
        let s = bare(Point::new(1.0, 1.0), Point::new(1.0, 1.0));
        assert!(matches!(build_static_paths(&s), Err(Error::InvalidScenario(_))));
    }

    #[test]
    fn office_has_los_and_three_reflections() {
        let s = Scenario::office(1);
        s.validate().unwrap();
        let paths = build_static_paths(&s).unwrap();
        assert_eq!(paths[0].kind, PathKind::Los);
        assert_eq!(paths.len(), 4);
    }

    fn one_element(center: Point, normal: Point) -> IrsLayout {
        IrsLayout {
            center,
            normal,
            width: 0.0,
            height: 0.0,
            rows: 1,
            cols: 1,
        }
    }

    #[test]
    fn element_on_midpoint() {
        let s = bare(Point::new(0.0, 0.0), Point::new(4.0, 0.0));
        let paths = build_irs_paths(&s, &one_element(Point::new(2.0, 0.0), Point::new(-1.0, 0.0)));
        assert_eq!(paths.len(), 1);
        assert!((paths[0].length - 4.0).abs() < 1e-12);
        // anchor in front, eavesdropper behind: cos factors 1 · 0
        assert_eq!(paths[0].coef, 0.0);
        assert_eq!(paths[0].base_gain.norm(), 0.0);
    }

    #[test]
    fn element_off_axis_product_loss() {
        // element 1 m above the midpoint of a 4 m link, facing down
        let s = bare(Point::new(0.0, 0.0), Point::new(4.0, 0.0));
        let paths = build_irs_paths(&s, &one_element(Point::new(2.0, 1.0), Point::new(0.0, -1.0)));
        let d = 5f64.sqrt();
        let cos = 1.0 / d;
        let lambda = s.wavelength();
        let expected = lambda * lambda / ((4.0 * PI).powi(2) * d * d) * cos * cos;
        assert!((paths[0].base_gain.norm() - expected).abs() < 1e-18);
        assert!((paths[0].length - 2.0 * d).abs() < 1e-12);
    }

    #[test]
    fn orthogonal_normal_zero_gain() {
        let s = bare(Point::new(0.0, 0.0), Point::new(4.0, 0.0));
        let paths = build_irs_paths(&s, &one_element(Point::new(2.0, 1.0), Point::new(1.0, 0.0).rotate(0.0)));
        // normal along x: anchor at cos<0 side, eve at cos>0 side
        assert_eq!(paths[0].base_gain.norm(), 0.0);
        let paths = build_irs_paths(&s, &one_element(Point::new(2.0, 0.0), Point::new(0.0, 1.0)));
        assert_eq!(paths[0].base_gain.norm(), 0.0);
    }

    #[test]
    fn full_grid_cardinality() {
        let s = Scenario::office(0);
        let paths = build_irs_paths(&s, s.irs.as_ref().unwrap());
        assert_eq!(paths.len(), 256);
        for (m, p) in paths.iter().enumerate() {
            assert_eq!(p.kind, PathKind::IrsElement(m));
        }
    }

    #[test]
    fn motion_absent_is_identity() {
        let s = Scenario::office(0);
        let paths = build_static_paths(&s).unwrap();
        let out = apply_motion(&s, &paths, &PersonState::absent());
        assert_eq!(out, paths);
    }

    #[test]
    fn person_on_los_blocks_ten_db() {
        let s = bare(Point::new(0.0, 0.0), Point::new(5.0, 0.0));
        let paths = build_static_paths(&s).unwrap();
        let out = apply_motion(&s, &paths, &PersonState::at(Point::new(2.0, 0.0)));
        assert!((out[0].blocked_atten - 10f64.powf(-0.5)).abs() < 1e-15);
        assert_eq!(out.len(), 2);
        assert_eq!(out[1].kind, PathKind::HumanScatter);
    }

    #[test]
    fn distant_person_only_scatters() {
        let s = Scenario::office(0);
        let paths = build_static_paths(&s).unwrap();
        let person = PersonState::at(Point::new(100.0, 100.0));
        let out = apply_motion(&s, &paths, &person);
        assert!(out[..paths.len()].iter().all(|p| p.blocked_atten == 1.0));
        assert_eq!(out.len(), paths.len() + 1);
    }

    #[test]
    fn single_path_frequency_response() {
        let s = Scenario {
            n_subcarriers: 56,
            ..bare(Point::new(0.0, 0.0), Point::new(5.0, 0.0))
        };
        let model = ChannelModel::new(&s).unwrap();
        let f = channel_response(&model, model.env_paths(), &[], None, None, 0, 0).unwrap();
        for k in 0..56 {
            let lambda = SPEED_OF_LIGHT / s.subcarrier_freq(k);
            let want = lambda / (4.0 * PI * 5.0);
            assert!((f.get(k, 0, 0).norm() - want).abs() < 1e-15 * want.max(1.0));
        }
    }

    #[test]
    fn frame_ordering() {
        let mut f = CsiFrame::zeros(0, 3, 3, 3);
        let i = f.index(1, 0, 0);
        assert_eq!(i, 9);
        let j = f.index(2, 1, 2);
        f.values[j] = Complex64::new(1.0, 0.0);
        assert_eq!(f.values[2 * 9 + 2 * 3 + 1], Complex64::new(1.0, 0.0));
    }

    #[test]
    fn config_length_mismatch() {
        let s = Scenario::office(0);
        let model = ChannelModel::new(&s).unwrap();
        let bad = IrsConfig::zeros(10);
        assert!(matches!(
            channel_response(&model, model.env_paths(), model.irs_paths(), Some(&bad), None, 0, 0),
            Err(Error::Contract(_))
        ));
    }

    #[test]
    fn validation_rules() {
        let mut s = Scenario::office(0);
        s.snr_db = -10.0;
        assert!(s.validate().is_ok());
        s.n_subcarriers = 0;
        assert!(s.validate().is_err());
        let mut s = Scenario::office(0);
        s.irs.as_mut().unwrap().normal = Point::new(1.0, 1.0);
        assert!(s.validate().is_err());
        let mut s = Scenario::office(0);
        s.irs.as_mut().unwrap().center = Point::new(-3.0, 2.0);
        assert!(matches!(s.validate(), Err(Error::InvalidScenario(_))));
    }
}
