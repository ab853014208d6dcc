//! Binary-phase reflecting surface: configurations, surface layout, and the
//! randomized configuration generator used for channel obfuscation.
//!
//! The generator is a two-state machine. A `Rand` step flips `⌈R·M⌉`
//! distinct, uniformly chosen elements; a `Flip` step inverts every element.
//! The two alternate. On every tick the machine first draws a hold decision:
//! with probability `P_hold` nothing happens and the pending state is kept.
//! A held tick still occupies one slot of the update schedule.

use std::fmt;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::seed::{self, StreamRng};

/// Reflection coefficient of a single element state: `0 → −1`, `1 → +1`.
pub fn map_coefficient(bit: bool) -> f64 {
    if bit {
        1.0
    } else {
        -1.0
    }
}

/// An M-bit surface configuration.
#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct IrsConfig {
    bits: Vec<bool>,
}

impl IrsConfig {
    pub fn zeros(m: usize) -> Self {
        Self { bits: vec![false; m] }
    }

    pub fn ones(m: usize) -> Self {
        Self { bits: vec![true; m] }
    }

    pub fn from_bits(bits: Vec<bool>) -> Self {
        Self { bits }
    }

    pub fn random<R: Rng + ?Sized>(m: usize, rng: &mut R) -> Self {
        Self {
            bits: (0..m).map(|_| rng.random::<bool>()).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn get(&self, m: usize) -> bool {
        self.bits[m]
    }

    pub fn flip(&mut self, m: usize) {
        self.bits[m] = !self.bits[m];
    }

    pub fn invert(&mut self) {
        self.bits.iter_mut().for_each(|b| *b = !*b);
    }

    /// Reflection coefficient of element `m`.
    pub fn coefficient(&self, m: usize) -> f64 {
        map_coefficient(self.bits[m])
    }

    pub fn coefficients(&self) -> impl Iterator<Item = f64> + '_ {
        self.bits.iter().map(|&b| map_coefficient(b))
    }

    /// Little-endian hex rendering: element `m` is bit `m % 8` of byte `m / 8`.
    pub fn to_hex(&self) -> String {
        let mut bytes = vec![0u8; self.bits.len().div_ceil(8)];
        for (m, &b) in self.bits.iter().enumerate() {
            if b {
                bytes[m / 8] |= 1 << (m % 8);
            }
        }
        hex::encode(bytes)
    }

    /// Inverse of [`IrsConfig::to_hex`] for a surface of `m` elements.
    pub fn from_hex(s: &str, m: usize) -> Result<Self> {
        let bytes = hex::decode(s).map_err(|e| Error::contract(format!("bad config hex: {e}")))?;
        if bytes.len() != m.div_ceil(8) {
            return Err(Error::contract(format!(
                "config hex has {} bytes, expected {} for {m} elements",
                bytes.len(),
                m.div_ceil(8)
            )));
        }
        Ok(Self {
            bits: (0..m).map(|i| bytes[i / 8] >> (i % 8) & 1 == 1).collect(),
        })
    }
}

impl fmt::Debug for IrsConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "IrsConfig({}; {})", self.bits.len(), self.to_hex())
    }
}

/// Number of positions at which two equally long configurations differ.
pub fn hamming_distance(a: &IrsConfig, b: &IrsConfig) -> Result<usize> {
    if a.len() != b.len() {
        return Err(Error::contract(format!(
            "hamming distance of configurations with {} and {} elements",
            a.len(),
            b.len()
        )));
    }
    Ok(a.bits.iter().zip(&b.bits).filter(|(x, y)| x != y).count())
}

/// Generator parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlgParams {
    /// Progression rate R: fraction of (active) elements flipped by a `Rand` step.
    pub progression_rate: f64,
    /// Probability that a tick is held.
    pub hold_prob: f64,
    /// Ticks per second.
    pub update_rate: f64,
    /// When false, `Flip` steps are executed as no-ops (the state machine
    /// still alternates).
    pub inversion: bool,
}

impl Default for AlgParams {
    fn default() -> Self {
        Self {
            progression_rate: 0.05,
            hold_prob: 0.6,
            update_rate: 20.0,
            inversion: true,
        }
    }
}

impl AlgParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.progression_rate > 0.0 && self.progression_rate <= 0.5) {
            return Err(Error::validation(
                "defense.progression_rate",
                format!("must lie in (0, 0.5], got {}", self.progression_rate),
            ));
        }
        if !(0.0..1.0).contains(&self.hold_prob) {
            return Err(Error::validation(
                "defense.hold_prob",
                format!("must lie in [0, 1), got {}", self.hold_prob),
            ));
        }
        if !(self.update_rate > 0.0 && self.update_rate.is_finite()) {
            return Err(Error::validation(
                "defense.update_rate",
                format!("must be positive, got {}", self.update_rate),
            ));
        }
        Ok(())
    }

    /// `⌈R·n⌉`, at least one. A 1e-9 slack absorbs products such as
    /// `0.1 × 30` landing just above an integer.
    pub fn flips_per_step(&self, n: usize) -> usize {
        ((self.progression_rate * n as f64 - 1e-9).ceil() as usize).clamp(1, n.max(1))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NextStep {
    Rand,
    Flip,
}

/// What a single tick did to the configuration.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StepOutcome {
    Held,
    /// A `Rand` step flipped these element indices.
    Randomized(Vec<usize>),
    /// A `Flip` step inverted all active elements.
    Inverted,
    /// A `Flip` step ran with inversion disabled.
    InversionBypassed,
}

impl StepOutcome {
    pub fn changed(&self) -> bool {
        matches!(self, StepOutcome::Randomized(_) | StepOutcome::Inverted)
    }

    pub fn executed(&self) -> bool {
        !matches!(self, StepOutcome::Held)
    }
}

/// Running state of the configuration generator.
#[derive(Debug, Clone)]
pub struct IrsAlgState {
    cfg: IrsConfig,
    next: NextStep,
    params: AlgParams,
    /// Sorted indices of the elements the generator may touch.
    active: Vec<usize>,
    rng: StreamRng,
}

impl IrsAlgState {
    /// Generator over all `m` elements, starting from a random configuration
    /// drawn from the same stream.
    pub fn new(m: usize, params: AlgParams, seed: u64) -> Result<Self> {
        let mut rng = StreamRng::seed_from_u64(seed);
        let cfg = IrsConfig::random(m, &mut rng);
        Self::with_config(cfg, params, rng)
    }

    pub fn with_config(cfg: IrsConfig, params: AlgParams, rng: StreamRng) -> Result<Self> {
        params.validate()?;
        if cfg.is_empty() {
            return Err(Error::contract("surface must have at least one element"));
        }
        let active = (0..cfg.len()).collect();
        Ok(Self {
            cfg,
            next: NextStep::Rand,
            params,
            active,
            rng,
        })
    }

    /// Restricts the generator to `active` elements; the others stay at
    /// their current bit forever.
    pub fn set_active(&mut self, mut active: Vec<usize>) -> Result<()> {
        active.sort_unstable();
        active.dedup();
        if active.last().is_some_and(|&m| m >= self.cfg.len()) {
            return Err(Error::contract("active element index out of range"));
        }
        self.active = active;
        Ok(())
    }

    pub fn config(&self) -> &IrsConfig {
        &self.cfg
    }

    pub fn next_step(&self) -> NextStep {
        self.next
    }

    pub fn params(&self) -> &AlgParams {
        &self.params
    }

    pub fn active(&self) -> &[usize] {
        &self.active
    }

    /// One tick of the generator.
    pub fn step(&mut self) -> StepOutcome {
        if self.rng.random::<f64>() < self.params.hold_prob {
            return StepOutcome::Held;
        }
        if self.active.is_empty() {
            return StepOutcome::Held;
        }
        match self.next {
            NextStep::Rand => {
                let n = self.active.len();
                let k = self.params.flips_per_step(n);
                let picked: Vec<usize> = index::sample(&mut self.rng, n, k)
                    .into_iter()
                    .map(|i| self.active[i])
                    .collect();
                for &m in &picked {
                    self.cfg.flip(m);
                }
                self.next = NextStep::Flip;
                StepOutcome::Randomized(picked)
            }
            NextStep::Flip => {
                self.next = NextStep::Rand;
                if !self.params.inversion {
                    return StepOutcome::InversionBypassed;
                }
                if self.active.len() == self.cfg.len() {
                    self.cfg.invert();
                } else {
                    for &m in &self.active {
                        self.cfg.flip(m);
                    }
                }
                StepOutcome::Inverted
            }
        }
    }
}

/// Ensemble-mean Hamming distance to the initial configuration, one entry
/// per tick (entry 0 is the start and always 0).
pub fn hamming_trace(m: usize, params: AlgParams, n_steps: usize, n_ensemble: usize, seed: u64) -> Result<Vec<f64>> {
    if n_ensemble == 0 {
        return Err(Error::contract("hamming trace needs at least one ensemble member"));
    }
    let mut sums = vec![0usize; n_steps + 1];
    for member in 0..n_ensemble {
        let mut state = IrsAlgState::new(m, params, seed::derive_seed(seed, "hamming", member as u64))?;
        let start = state.config().clone();
        for slot in sums.iter_mut().skip(1) {
            state.step();
            *slot += hamming_distance(&start, state.config())?;
        }
    }
    Ok(sums.into_iter().map(|s| s as f64 / n_ensemble as f64).collect())
}

/// A single reflecting element: planar position plus its height above the
/// antenna plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IrsElement {
    pub position: Point,
    pub height: f64,
}

/// Rectangular element grid centred on `center`, spanning `width` along the
/// surface tangent and `height` vertically.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IrsLayout {
    pub center: Point,
    pub normal: Point,
    pub width: f64,
    pub height: f64,
    pub rows: usize,
    pub cols: usize,
}

impl IrsLayout {
    pub fn n_elements(&self) -> usize {
        self.rows * self.cols
    }

    /// Element `m` sits at row `m / cols`, column `m % cols`.
    pub fn elements(&self) -> Vec<IrsElement> {
        let tangent = self.normal.perp();
        let mut out = Vec::with_capacity(self.n_elements());
        for r in 0..self.rows {
            let z = ((r as f64 + 0.5) / self.rows as f64 - 0.5) * self.height;
            for c in 0..self.cols {
                let u = ((c as f64 + 0.5) / self.cols as f64 - 0.5) * self.width;
                out.push(IrsElement {
                    position: self.center + tangent * u,
                    height: z,
                });
            }
        }
        out
    }

    pub fn with_pose(&self, center: Point, normal: Point) -> Self {
        Self {
            center,
            normal: normal.unit(),
            ..self.clone()
        }
    }
}
