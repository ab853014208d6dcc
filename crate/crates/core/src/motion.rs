//! Moving objects in the room: walking people and rotating reflectors.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::channel::{scatter_path, Path, PersonState, Scenario};
use crate::error::{Error, Result};
use crate::geometry::Point;

/// A walk along a polyline, back and forth, pausing `dwell_s` at each end.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub waypoints: Vec<Point>,
    /// Walking speed in m/s.
    pub speed: f64,
    pub dwell_s: f64,
}

impl Default for Trajectory {
    /// A tour of the office: a loop through the southern half, one crossing
    /// of the anchor–eavesdropper line of sight, a loop through the northern
    /// half, and back the same way.
    fn default() -> Self {
        let p = Point::new;
        Self {
            waypoints: vec![
                p(3.0, 0.4),
                p(3.0, 1.6),
                p(4.5, 1.6),
                p(4.5, 0.4),
                p(6.0, 0.4),
                p(6.0, 4.8),
                p(4.5, 4.8),
                p(4.5, 3.4),
                p(3.0, 3.4),
                p(3.0, 4.8),
            ],
            speed: 1.0,
            dwell_s: 0.0,
        }
    }
}

impl Trajectory {
    pub fn validate(&self) -> Result<()> {
        if self.waypoints.len() < 2 {
            return Err(Error::validation(
                "experiment.walk.waypoints",
                "need at least two waypoints",
            ));
        }
        if !(self.speed > 0.0 && self.speed.is_finite()) {
            return Err(Error::validation("experiment.walk.speed", "must be positive"));
        }
        if !(self.dwell_s >= 0.0) {
            return Err(Error::validation("experiment.walk.dwell_s", "must be non-negative"));
        }
        Ok(())
    }

    pub fn length(&self) -> f64 {
        self.waypoints.windows(2).map(|w| w[0].distance(w[1])).sum()
    }

    /// Position at time `t` seconds after the start of the session.
    pub fn position_at(&self, t: f64) -> Point {
        let len = self.length();
        let leg = len / self.speed;
        let period = 2.0 * (leg + self.dwell_s);
        if period == 0.0 {
            return self.waypoints[0];
        }
        let mut s = t.rem_euclid(period);
        // dwell at start, walk out, dwell at end, walk back
        let along = if s < self.dwell_s {
            0.0
        } else {
            s -= self.dwell_s;
            if s < leg {
                s * self.speed
            } else {
                s -= leg;
                if s < self.dwell_s {
                    len
                } else {
                    len - (s - self.dwell_s) * self.speed
                }
            }
        };
        self.point_at_distance(along.clamp(0.0, len))
    }

    fn point_at_distance(&self, mut d: f64) -> Point {
        for w in self.waypoints.windows(2) {
            let l = w[0].distance(w[1]);
            if d <= l {
                return if l == 0.0 { w[0] } else { w[0] + (w[1] - w[0]) * (d / l) };
            }
            d -= l;
        }
        *self.waypoints.last().unwrap()
    }
}

/// A flat metal sheet spinning about a vertical axis.
///
/// Its echo is a bistatic scatter path whose amplitude follows `cos θ(t)`
/// (`θ = 2π·rpm/60·t + φ₀`), with the sheet edge adding `w·sin θ` of path
/// length. While broadside it shadows nearby paths like a person does, with
/// depth scaled by `|cos θ|`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RotatingReflector {
    pub position: Point,
    pub rpm: f64,
    pub peak_scatter_gain_db: f64,
    pub phase0: f64,
    pub half_width: f64,
    pub blocking_radius: f64,
    pub blocking_depth_db: f64,
}

impl Default for RotatingReflector {
    fn default() -> Self {
        Self {
            position: Point::new(3.75, 2.75),
            rpm: 20.0,
            peak_scatter_gain_db: 10.0,
            phase0: 0.0,
            half_width: 0.25,
            blocking_radius: 0.4,
            blocking_depth_db: 10.0,
        }
    }
}

impl RotatingReflector {
    pub fn validate(&self) -> Result<()> {
        if !(self.rpm > 0.0) {
            return Err(Error::validation("experiment.reflector.rpm", "must be positive"));
        }
        if !(self.blocking_radius > 0.0) {
            return Err(Error::validation(
                "experiment.reflector.blocking_radius",
                "must be positive",
            ));
        }
        Ok(())
    }

    pub fn angle_at(&self, t: f64) -> f64 {
        2.0 * PI * self.rpm / 60.0 * t + self.phase0
    }

    /// Echo path at time `t`, or `None` for a silent reflector.
    pub fn path_at(&self, scenario: &Scenario, t: f64) -> Option<Path> {
        if self.peak_scatter_gain_db == f64::NEG_INFINITY {
            return None;
        }
        let theta = self.angle_at(t);
        let mut p = scatter_path(scenario, self.position, self.peak_scatter_gain_db);
        p.coef *= theta.cos();
        p.length += self.half_width * theta.sin();
        p.base_gain = p.gain_at(scenario.carrier_freq, 0.0);
        Some(p)
    }

    /// Shadowing parameters at time `t` as an equivalent person.
    pub fn shadow_at(&self, t: f64) -> PersonState {
        PersonState {
            position: self.position,
            present: true,
            scatter_gain_db: f64::NEG_INFINITY,
            blocking_radius: self.blocking_radius,
            blocking_depth_db: self.blocking_depth_db * self.angle_at(t).cos().abs(),
        }
    }
}

/// What moves during a session.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Motion {
    None,
    Walk {
        trajectory: Trajectory,
        person: PersonState,
    },
    Reflector(RotatingReflector),
}

impl Motion {
    pub fn validate(&self) -> Result<()> {
        match self {
            Motion::None => Ok(()),
            Motion::Walk { trajectory, person } => {
                trajectory.validate()?;
                person.validate()
            }
            Motion::Reflector(r) => r.validate(),
        }
    }

    /// Obstacle (for blocking) and extra echo paths at time `t`.
    pub fn state_at(&self, scenario: &Scenario, t: f64) -> (Option<PersonState>, Vec<Path>) {
        match self {
            Motion::None => (None, Vec::new()),
            Motion::Walk { trajectory, person } => {
                let p = PersonState {
                    position: trajectory.position_at(t),
                    present: true,
                    ..*person
                };
                let echo = (p.scatter_gain_db > f64::NEG_INFINITY)
                    .then(|| scatter_path(scenario, p.position, p.scatter_gain_db));
                (Some(p), echo.into_iter().collect())
            }
            Motion::Reflector(r) => (Some(r.shadow_at(t)), r.path_at(scenario, t).into_iter().collect()),
        }
    }
}
