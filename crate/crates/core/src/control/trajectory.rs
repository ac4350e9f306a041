use nalgebra::DVector;

use crate::{Error, Result};

/// A sample of a reference trajectory. `position` is either an end-effector
/// position (3 entries) or joint angles (n entries); `velocity` and
/// `acceleration` have the same length.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectorySetpoint {
    pub t: f64,
    pub position: DVector<f64>,
    pub velocity: DVector<f64>,
    pub acceleration: DVector<f64>,
    /// `t` was outside the trajectory and has been clamped to it.
    pub clamped: bool,
}

impl TrajectorySetpoint {
    /// A motionless setpoint.
    pub fn hold(t: f64, position: DVector<f64>) -> Self {
        let n = position.len();
        Self { t, position, velocity: DVector::zeros(n), acceleration: DVector::zeros(n), clamped: false }
    }
}

/// Quintic time scaling on τ ∈ [0, 1]: returns (s, ds/dτ, d²s/dτ²) with zero
/// rate and acceleration at both ends.
pub fn quintic(tau: f64) -> (f64, f64, f64) {
    let t2 = tau * tau;
    let t3 = t2 * tau;
    (t3 * (10.0 - 15.0 * tau + 6.0 * t2), 30.0 * t2 * (1.0 - 2.0 * tau + t2), 60.0 * tau * (1.0 - 3.0 * tau + 2.0 * t2))
}

/// Straight-line quintic move from `start` to `goal` over `duration`, sampled at `t`.
/// Times outside `[0, duration]` are clamped and flagged.
pub fn interpolate(start: &DVector<f64>, goal: &DVector<f64>, duration: f64, t: f64) -> Result<TrajectorySetpoint> {
    if !(duration > 0.0) || !duration.is_finite() {
        return Err(Error::InvalidArgument(format!("trajectory duration must be positive, got {duration}")));
    }
    if start.len() != goal.len() {
        return Err(Error::InvalidArgument(format!("start has {} entries, goal has {}", start.len(), goal.len())));
    }
    let clamped = !(0.0..=duration).contains(&t);
    let tc = t.clamp(0.0, duration);
    let (s, ds, dds) = quintic(tc / duration);
    let delta = goal - start;
    Ok(TrajectorySetpoint {
        t,
        position: start + &delta * s,
        velocity: &delta * (ds / duration),
        acceleration: &delta * (dds / (duration * duration)),
        clamped,
    })
}

/// Piecewise quintic path through waypoints, one segment per `segment_time`,
/// stopping at every waypoint. Holds the last waypoint afterwards.
#[derive(Debug, Clone, PartialEq)]
pub struct JointPath {
    pub waypoints: Vec<DVector<f64>>,
    pub segment_time: f64,
}

impl JointPath {
    pub fn new(waypoints: Vec<DVector<f64>>, segment_time: f64) -> Result<Self> {
        if waypoints.len() < 2 {
            return Err(Error::InvalidArgument("a path needs at least two waypoints".into()));
        }
        if !(segment_time > 0.0) || !segment_time.is_finite() {
            return Err(Error::InvalidArgument(format!("segment time must be positive, got {segment_time}")));
        }
        let n = waypoints[0].len();
        if waypoints.iter().any(|w| w.len() != n) {
            return Err(Error::InvalidArgument("waypoints differ in length".into()));
        }
        Ok(Self { waypoints, segment_time })
    }

    pub fn duration(&self) -> f64 {
        self.segment_time * (self.waypoints.len() - 1) as f64
    }

    /// True when the path ends where it starts.
    pub fn is_closed(&self) -> bool {
        self.waypoints.first() == self.waypoints.last()
    }

    /// The same path traversed backwards.
    pub fn reversed(&self) -> Self {
        Self { waypoints: self.waypoints.iter().rev().cloned().collect(), segment_time: self.segment_time }
    }

    pub fn sample(&self, t: f64) -> TrajectorySetpoint {
        let segments = self.waypoints.len() - 1;
        let k = ((t / self.segment_time).floor().max(0.0) as usize).min(segments - 1);
        let local = t - k as f64 * self.segment_time;
        // the segment is valid, so interpolate cannot fail
        let mut sp = interpolate(&self.waypoints[k], &self.waypoints[k + 1], self.segment_time, local)
            .expect("validated path segment");
        sp.t = t;
        sp.clamped = !(0.0..=self.duration()).contains(&t);
        sp
    }
}
