use nalgebra::DVector;

use super::{ControllerGains, TrajectorySetpoint};
use crate::dynamics::{clamp_torques, inverse_dynamics_free};
use crate::model::{SystemModel, SystemState, Wrench};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct TorqueCommand {
    /// Torques after clamping to the model limits.
    pub torques: DVector<f64>,
    /// Joint accelerations the controller asked inverse dynamics for.
    pub commanded_accels: DVector<f64>,
    pub clamped: bool,
}

/// `θ̈_des + K_d (θ̇_des − θ̇) + K_p (θ_des − θ)`.
pub fn joint_accel_command(
    state: &SystemState,
    setpoint: &TrajectorySetpoint,
    gains: &ControllerGains,
) -> DVector<f64> {
    &setpoint.acceleration
        + (&setpoint.velocity - &state.joint_rates) * gains.kd
        + (&setpoint.position - &state.joint_angles) * gains.kp
}

/// Computed torque on the free-floating plant with no external base wrench.
pub fn computed_torque(
    model: &SystemModel,
    state: &SystemState,
    setpoint: &TrajectorySetpoint,
    gains: &ControllerGains,
) -> Result<TorqueCommand> {
    computed_torque_with(model, state, setpoint, gains, &Wrench::zero())
}

/// `τ = ID(θ̈_des + K_d (θ̇_des − θ̇) + K_p (θ_des − θ))`, where the inverse
/// dynamics lets the base respond as it will under `base_wrench`.
pub fn computed_torque_with(
    model: &SystemModel,
    state: &SystemState,
    setpoint: &TrajectorySetpoint,
    gains: &ControllerGains,
    base_wrench: &Wrench,
) -> Result<TorqueCommand> {
    let n = model.dof();
    if setpoint.position.len() != n || setpoint.velocity.len() != n || setpoint.acceleration.len() != n {
        return Err(Error::InvalidArgument(format!("joint setpoint must have {n} entries")));
    }
    let accels = joint_accel_command(state, setpoint, gains);
    let (ne, _) = inverse_dynamics_free(model, state, &accels, base_wrench)?;
    let (torques, clamped) = clamp_torques(model, &ne.joint_torques);
    Ok(TorqueCommand { torques, commanded_accels: accels, clamped })
}
