use nalgebra::{DVector, UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};

use super::ControllerGains;
use crate::dynamics::reaction_wrench;
use crate::model::{SystemModel, SystemState};
use crate::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttitudeMode {
    /// No attitude torque; the base floats freely.
    #[default]
    Off,
    Pd,
    /// PD plus the −N_r reaction feedforward.
    PdFeedforward,
}

/// Attitude actuator command for one control tick.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AttitudeCommand {
    /// Saturated torque sent to the actuator, base frame.
    pub torque: Vector3<f64>,
    /// The feedforward term −N_r, inertial frame (zero unless enabled).
    pub feedforward: Vector3<f64>,
    /// PD term, base frame.
    pub pd: Vector3<f64>,
    pub saturated: bool,
}

impl AttitudeCommand {
    pub fn zero() -> Self {
        Self { torque: Vector3::zeros(), feedforward: Vector3::zeros(), pd: Vector3::zeros(), saturated: false }
    }
}

/// Rotation vector (base frame) taking the target attitude to the current one.
/// Its norm is the attitude error angle, in [0, π].
pub fn attitude_error(attitude: &UnitQuaternion<f64>, target: &UnitQuaternion<f64>) -> Vector3<f64> {
    let e = target.inverse() * attitude;
    let q = e.quaternion();
    // pick the short way round
    let sign = if q.w < 0.0 { -1.0 } else { 1.0 };
    let v = q.imag() * sign;
    let s = v.norm();
    if s < 1e-300 {
        return v * 2.0;
    }
    v * (2.0 * s.atan2(q.w * sign) / s)
}

/// PD torque `−I0 (kp e + kd ω)`, base frame.
pub fn attitude_pd(
    model: &SystemModel,
    state: &SystemState,
    target: &UnitQuaternion<f64>,
    gains: &ControllerGains,
) -> Vector3<f64> {
    let e = attitude_error(&state.base_attitude, target);
    -(model.base().inertia.matrix() * (e * gains.attitude_kp + state.base_ang_velocity * gains.attitude_kd))
}

/// Reaction feedforward −N_r, inertial frame, for the commanded joint accelerations.
pub fn attitude_feedforward(
    model: &SystemModel,
    state: &SystemState,
    joint_accels: &DVector<f64>,
) -> Result<Vector3<f64>> {
    Ok(-reaction_wrench(model, state, joint_accels)?.moment)
}

/// Attitude torque for `mode`, saturated on its norm at the configured limit.
pub fn attitude_command(
    model: &SystemModel,
    state: &SystemState,
    joint_accels: &DVector<f64>,
    mode: AttitudeMode,
    target: &UnitQuaternion<f64>,
    gains: &ControllerGains,
) -> Result<AttitudeCommand> {
    let (pd, feedforward) = match mode {
        AttitudeMode::Off => return Ok(AttitudeCommand::zero()),
        AttitudeMode::Pd => (attitude_pd(model, state, target, gains), Vector3::zeros()),
        AttitudeMode::PdFeedforward => {
            (attitude_pd(model, state, target, gains), attitude_feedforward(model, state, joint_accels)?)
        }
    };
    let mut torque = pd + state.base_attitude.inverse() * feedforward;
    let norm = torque.norm();
    let saturated = norm > gains.attitude_torque_limit;
    if saturated {
        torque *= gains.attitude_torque_limit / norm;
    }
    Ok(AttitudeCommand { torque, feedforward, pd, saturated })
}
