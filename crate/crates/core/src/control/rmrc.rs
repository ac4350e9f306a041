use nalgebra::{DMatrix, DVector, UnitQuaternion, Vector3};

use super::{ControllerGains, TrajectorySetpoint};
use crate::kinematics::{
    ee_position_barycentric, ee_position_explicit, fixed_base_jacobian, generalized_jacobian, system_com,
    JacobianMatrix,
};
use crate::model::{SystemModel, SystemState};
use crate::{Error, Result};

/// Below this smallest singular value a Jacobian is reported as singular.
pub const SINGULARITY_THRESHOLD: f64 = 1e-8;

/// Joint-rate command from a resolved-motion rate controller.
#[derive(Debug, Clone, PartialEq)]
pub struct RateCommand {
    pub rates: DVector<f64>,
    /// End-effector position the controller believed it was at.
    pub estimated_position: Vector3<f64>,
    pub min_singular_value: f64,
    pub singular: bool,
    /// Rates were scaled down to respect the joint rate limits.
    pub rate_clamped: bool,
    /// Task velocity was scaled down to the end-effector speed cap.
    pub speed_clamped: bool,
}

/// Base pose a fixed-base controller assumes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BasePose {
    pub position: Vector3<f64>,
    pub attitude: UnitQuaternion<f64>,
}

impl BasePose {
    pub fn of(state: &SystemState) -> Self {
        Self { position: state.base_position, attitude: state.base_attitude }
    }
}

/// Damped least squares: `Jᵀ (J Jᵀ + λ I)⁻¹ v`.
pub fn dls_solve(j: &DMatrix<f64>, v: &DVector<f64>, damping: f64) -> DVector<f64> {
    let mut jjt = j * j.transpose();
    for i in 0..jjt.nrows() {
        jjt[(i, i)] += damping;
    }
    // J Jᵀ + λ I is symmetric positive definite for λ > 0
    let y = jjt.cholesky().map(|c| c.solve(v)).unwrap_or_else(|| DVector::zeros(v.len()));
    j.transpose() * y
}

fn task_setpoint(setpoint: &TrajectorySetpoint) -> Result<(Vector3<f64>, Vector3<f64>)> {
    if setpoint.position.len() != 3 || setpoint.velocity.len() != 3 {
        return Err(Error::InvalidArgument(format!(
            "task setpoint must have 3 entries, got {}",
            setpoint.position.len()
        )));
    }
    Ok((
        Vector3::new(setpoint.position[0], setpoint.position[1], setpoint.position[2]),
        Vector3::new(setpoint.velocity[0], setpoint.velocity[1], setpoint.velocity[2]),
    ))
}

fn resolve(
    model: &SystemModel,
    jac: &JacobianMatrix,
    position: Vector3<f64>,
    setpoint: &TrajectorySetpoint,
    gains: &ControllerGains,
    max_ee_speed: Option<f64>,
) -> Result<RateCommand> {
    let (p_des, v_des) = task_setpoint(setpoint)?;
    let mut v = v_des + (p_des - position) * gains.task_gain;
    let mut speed_clamped = false;
    if let Some(cap) = max_ee_speed {
        let speed = v.norm();
        if speed > cap {
            v *= cap / speed;
            speed_clamped = true;
        }
    }
    let mut rates = dls_solve(&jac.matrix, &DVector::from_column_slice(v.as_slice()), gains.dls_damping);

    let ratio = rates.iter().zip(model.rate_limits()).map(|(r, lim)| r.abs() / lim).fold(0.0, f64::max);
    let rate_clamped = ratio > 1.0;
    if rate_clamped {
        rates /= ratio;
    }
    Ok(RateCommand {
        rates,
        estimated_position: position,
        min_singular_value: jac.min_singular_value,
        singular: jac.min_singular_value < SINGULARITY_THRESHOLD,
        rate_clamped,
        speed_clamped,
    })
}

/// RMRC through the generalized Jacobian J̄, with the end-effector position from
/// the barycentric map about the current system CoM:
/// `θ̇ = J̄⁺ (v_des + K (p_des − p*))`, J̄⁺ the damped pseudo-inverse.
pub fn rmrc_generalized(
    model: &SystemModel,
    state: &SystemState,
    setpoint: &TrajectorySetpoint,
    gains: &ControllerGains,
    max_ee_speed: Option<f64>,
) -> Result<RateCommand> {
    let p = ee_position_barycentric(model, state, &system_com(model, state));
    resolve(model, &generalized_jacobian(model, state), p, setpoint, gains, max_ee_speed)
}

/// The terrestrial controller: believes the base sits at `assumed_base` and
/// uses fixed-base forward kinematics and the fixed-base linear Jacobian.
pub fn rmrc_naive(
    model: &SystemModel,
    state: &SystemState,
    assumed_base: &BasePose,
    setpoint: &TrajectorySetpoint,
    gains: &ControllerGains,
    max_ee_speed: Option<f64>,
) -> Result<RateCommand> {
    let believed =
        SystemState { base_position: assumed_base.position, base_attitude: assumed_base.attitude, ..state.clone() };
    let p = ee_position_explicit(model, &believed);
    resolve(model, &fixed_base_jacobian(model, &believed).linear(), p, setpoint, gains, max_ee_speed)
}
