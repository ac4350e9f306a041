//! Controllers for the free-floating arm: quintic trajectory interpolation,
//! resolved-motion rate control (generalized and naive fixed-base), computed
//! torque, and reaction-feedforward attitude control of the base.
//!
//! Everything here is a pure function of `(model, state, setpoint, gains)`.
//! The sampled-data loop that ties them together lives in [`crate::sim`].
//!
//! Hybrid position/force control is not provided: there is no contact model.

mod attitude;
mod rmrc;
mod torque;
mod trajectory;

pub use attitude::{
    attitude_command, attitude_error, attitude_feedforward, attitude_pd, AttitudeCommand, AttitudeMode,
};
pub use rmrc::{dls_solve, rmrc_generalized, rmrc_naive, BasePose, RateCommand, SINGULARITY_THRESHOLD};
pub use torque::{computed_torque, computed_torque_with, joint_accel_command, TorqueCommand};
pub use trajectory::{interpolate, quintic, JointPath, TrajectorySetpoint};

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Controller gains. Attitude gains are per unit base inertia, so the PD
/// torque is `−I0 (kp e + kd ω)` and the gains keep their 1/s², 1/s units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ControllerGains {
    /// Task-space position gain (1/s).
    pub task_gain: f64,
    /// Joint PD gains (1/s², 1/s).
    pub kp: f64,
    pub kd: f64,
    /// Damped-least-squares damping λ (m²).
    pub dls_damping: f64,
    pub attitude_kp: f64,
    pub attitude_kd: f64,
    /// Attitude actuator torque limit (N·m), applied to the torque norm.
    pub attitude_torque_limit: f64,
}

impl Default for ControllerGains {
    fn default() -> Self {
        Self {
            task_gain: 2.0,
            kp: 100.0,
            kd: 20.0,
            dls_damping: 1e-4,
            attitude_kp: 4.0,
            attitude_kd: 4.0,
            attitude_torque_limit: 200.0,
        }
    }
}

impl ControllerGains {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("task_gain", self.task_gain),
            ("kp", self.kp),
            ("kd", self.kd),
            ("dls_damping", self.dls_damping),
            ("attitude_kp", self.attitude_kp),
            ("attitude_kd", self.attitude_kd),
            ("attitude_torque_limit", self.attitude_torque_limit),
        ];
        for (name, v) in fields {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::InvalidField {
                    path: name.into(),
                    message: format!("must be finite and ≥ 0, got {v}"),
                });
            }
        }
        if self.dls_damping <= 0.0 {
            return Err(Error::InvalidField { path: "dls_damping".into(), message: "must be > 0".into() });
        }
        Ok(())
    }

    /// All feedback gains zeroed; the DLS damping is kept.
    pub fn open_loop(&self) -> Self {
        Self { task_gain: 0.0, kp: 0.0, kd: 0.0, attitude_kp: 0.0, attitude_kd: 0.0, ..*self }
    }
}
