//! Fixed-step classical Runge–Kutta integration of the full state.

use log::warn;
use nalgebra::{DVector, Quaternion, UnitQuaternion, Vector3};

use super::forward::forward_dynamics_free;
use crate::model::{SystemModel, SystemState, Wrench};
use crate::{Error, Result};

/// Inputs held over one derivative evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct Actuation {
    pub joint_torques: DVector<f64>,
    pub base_wrench: Wrench,
}

impl Actuation {
    pub fn new(joint_torques: DVector<f64>, attitude_torque: Vector3<f64>) -> Self {
        Self { joint_torques, base_wrench: Wrench::torque_in_base(attitude_torque) }
    }

    pub fn idle(n: usize) -> Self {
        Self { joint_torques: DVector::zeros(n), base_wrench: Wrench::zero() }
    }
}

// layout: r(3) q(4: w x y z) v(3) ω_body(3) θ(n) θ̇(n)
const R: usize = 0;
const Q: usize = 3;
const V: usize = 7;
const W: usize = 10;
const J: usize = 13;

fn pack(s: &SystemState) -> DVector<f64> {
    let n = s.joint_angles.len();
    let mut x = DVector::zeros(J + 2 * n);
    x.fixed_rows_mut::<3>(R).copy_from(&s.base_position);
    let q = s.base_attitude.quaternion();
    x[Q] = q.w;
    x[Q + 1] = q.i;
    x[Q + 2] = q.j;
    x[Q + 3] = q.k;
    x.fixed_rows_mut::<3>(V).copy_from(&s.base_lin_velocity);
    x.fixed_rows_mut::<3>(W).copy_from(&s.base_ang_velocity);
    x.rows_mut(J, n).copy_from(&s.joint_angles);
    x.rows_mut(J + n, n).copy_from(&s.joint_rates);
    x
}

fn unpack(x: &DVector<f64>, t: f64, n: usize) -> SystemState {
    let q = Quaternion::new(x[Q], x[Q + 1], x[Q + 2], x[Q + 3]);
    SystemState {
        t,
        base_position: x.fixed_rows::<3>(R).into_owned(),
        base_attitude: UnitQuaternion::from_quaternion(q),
        base_lin_velocity: x.fixed_rows::<3>(V).into_owned(),
        base_ang_velocity: x.fixed_rows::<3>(W).into_owned(),
        joint_angles: x.rows(J, n).into_owned(),
        joint_rates: x.rows(J + n, n).into_owned(),
    }
}

const ENTRY_NAMES: [&str; J] = [
    "base_position.x",
    "base_position.y",
    "base_position.z",
    "base_attitude.w",
    "base_attitude.x",
    "base_attitude.y",
    "base_attitude.z",
    "base_lin_velocity.x",
    "base_lin_velocity.y",
    "base_lin_velocity.z",
    "base_ang_velocity.x",
    "base_ang_velocity.y",
    "base_ang_velocity.z",
];

fn entry_name(i: usize, n: usize) -> String {
    if i < J {
        ENTRY_NAMES[i].to_string()
    } else if i < J + n {
        format!("joint_angles[{}]", i - J + 1)
    } else {
        format!("joint_rates[{}]", i - J - n + 1)
    }
}

fn derivative(model: &SystemModel, x: &DVector<f64>, t: f64, actuation: &Actuation) -> Result<DVector<f64>> {
    let n = model.dof();
    let state = unpack(x, t, n);
    let acc = forward_dynamics_free(model, &state, &actuation.joint_torques, &actuation.base_wrench)?;
    let mut dx = DVector::zeros(x.len());
    dx.fixed_rows_mut::<3>(R).copy_from(&state.base_lin_velocity);
    // q̇ = ½ q ⊗ (0, ω_body), on the raw (not renormalised) stage quaternion
    let q = Quaternion::new(x[Q], x[Q + 1], x[Q + 2], x[Q + 3]);
    let w = &state.base_ang_velocity;
    let qd = q * Quaternion::new(0.0, w.x, w.y, w.z) * 0.5;
    dx[Q] = qd.w;
    dx[Q + 1] = qd.i;
    dx[Q + 2] = qd.j;
    dx[Q + 3] = qd.k;
    dx.fixed_rows_mut::<3>(V).copy_from(&acc.base.linear);
    dx.fixed_rows_mut::<3>(W).copy_from(&acc.base.angular);
    dx.rows_mut(J, n).copy_from(&state.joint_rates);
    dx.rows_mut(J + n, n).copy_from(&acc.joints);
    Ok(dx)
}

fn check_finite(x: &DVector<f64>, t: f64, n: usize) -> Result<()> {
    match x.iter().position(|v| !v.is_finite()) {
        Some(i) => Err(Error::IntegrationFailure { t, entry: entry_name(i, n) }),
        None => Ok(()),
    }
}

/// One RK4 step where the actuation is re-evaluated at every stage from the
/// stage state (its `t` is the stage time).
pub fn step_with<F>(model: &SystemModel, state: &SystemState, dt: f64, mut actuation: F) -> Result<SystemState>
where
    F: FnMut(&SystemState) -> Result<Actuation>,
{
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::InvalidArgument(format!("time step must be positive, got {dt}")));
    }
    state.check(model)?;
    let n = model.dof();
    let t0 = state.t;
    let x0 = pack(state);

    let mut eval = |x: &DVector<f64>, t: f64| -> Result<DVector<f64>> {
        check_finite(x, t, n)?;
        let stage = unpack(x, t, n);
        let act = actuation(&stage)?;
        let dx = derivative(model, x, t, &act)?;
        check_finite(&dx, t, n)?;
        Ok(dx)
    };
    let k1 = eval(&x0, t0)?;
    let k2 = eval(&(&x0 + &k1 * (0.5 * dt)), t0 + 0.5 * dt)?;
    let k3 = eval(&(&x0 + &k2 * (0.5 * dt)), t0 + 0.5 * dt)?;
    let k4 = eval(&(&x0 + &k3 * dt), t0 + dt)?;
    let x1 = &x0 + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0);

    let t1 = t0 + dt;
    check_finite(&x1, t1, n)?;
    // unpack renormalises the attitude quaternion
    Ok(unpack(&x1, t1, n))
}

/// Clamps each torque to the model's limit, returning whether any was clamped.
pub fn clamp_torques(model: &SystemModel, torques: &DVector<f64>) -> (DVector<f64>, bool) {
    let mut clamped = false;
    let out = DVector::from_iterator(
        torques.len(),
        torques.iter().zip(model.torque_limits()).map(|(t, lim)| {
            if t.abs() > *lim {
                clamped = true;
                t.clamp(-lim, *lim)
            } else {
                *t
            }
        }),
    );
    (out, clamped)
}

/// One RK4 step under constant joint torques and a constant body-frame
/// attitude torque. Torques beyond the model limits are clamped with a warning.
pub fn step(
    model: &SystemModel,
    state: &SystemState,
    joint_torques: &DVector<f64>,
    attitude_torque: &Vector3<f64>,
    dt: f64,
) -> Result<SystemState> {
    if joint_torques.len() != model.dof() {
        return Err(Error::StateMismatch(format!(
            "expected {} joint torques, got {}",
            model.dof(),
            joint_torques.len()
        )));
    }
    let (torques, clamped) = clamp_torques(model, joint_torques);
    if clamped {
        warn!("t = {}: joint torques {:?} clamped to model limits", state.t, joint_torques.as_slice());
    }
    let act = Actuation::new(torques, *attitude_torque);
    step_with(model, state, dt, |_| Ok(act.clone()))
}
