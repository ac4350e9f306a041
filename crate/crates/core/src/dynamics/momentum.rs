use nalgebra::{DVector, Vector3};

use super::forward::momentum_consistent_base_accel;
use super::rnea::{BaseMotion, DynamicsPose};
use crate::kinematics::com_of_pose;
use crate::model::{SystemModel, SystemState, Wrench};
use crate::Result;

/// Total linear momentum, angular momentum about the system CoM and kinetic energy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentumState {
    pub linear: Vector3<f64>,
    pub angular: Vector3<f64>,
    pub kinetic_energy: f64,
}

pub fn momentum(model: &SystemModel, state: &SystemState) -> MomentumState {
    let dp = DynamicsPose::new(model, state);
    let base = BaseMotion::from_state(state, &Default::default());
    let kin = dp.outward(&base, &state.joint_rates, &DVector::zeros(model.dof()));
    let com = com_of_pose(model, &dp.pose);

    let m0 = model.base().mass;
    let v0 = base.velocity;
    let w0 = base.angular_velocity;
    let h0 = dp.base_inertia * w0;
    let mut linear = v0 * m0;
    let mut angular = h0 + (state.base_position - com).cross(&(v0 * m0));
    let mut ke = 0.5 * (m0 * v0.norm_squared() + w0.dot(&h0));
    for i in 0..dp.masses.len() {
        let m = dp.masses[i];
        let v = kin.com_velocity[i];
        let w = kin.angular_velocity[i];
        let h = dp.inertias[i] * w;
        linear += v * m;
        angular += h + (dp.com(i) - com).cross(&(v * m));
        ke += 0.5 * (m * v.norm_squared() + w.dot(&h));
    }
    MomentumState { linear, angular, kinetic_energy: ke }
}

/// Mount reaction. `moment` is N_r, the moment the arm exerts on the
/// spacecraft about the mount point (inertial axes); it is the negative of the
/// rate of change of the arm's angular momentum about the mount. The force the
/// spacecraft receives is `-total_force`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReactionWrench {
    /// F_T = Σ m_i v̇_ci over links and payload.
    pub total_force: Vector3<f64>,
    /// N_T = Σ (I_i ẇ_i + w_i × I_i w_i) over links and payload.
    pub total_moment: Vector3<f64>,
    /// N_r, inertial frame.
    pub moment: Vector3<f64>,
}

impl ReactionWrench {
    pub fn force_on_base(&self) -> Vector3<f64> {
        -self.total_force
    }
}

/// Reaction at the mount for the given joint accelerations, with the base
/// moving as momentum conservation dictates (no external wrench):
/// `N_r = −(N_T + Σ (p_ci − p_mount) × F_ci)`.
pub fn reaction_wrench(
    model: &SystemModel,
    state: &SystemState,
    joint_accels: &DVector<f64>,
) -> Result<ReactionWrench> {
    let base = momentum_consistent_base_accel(model, state, joint_accels, &Wrench::zero())?;
    let dp = DynamicsPose::new(model, state);
    let motion = BaseMotion::from_state(state, &base);
    let kin = dp.outward(&motion, &state.joint_rates, joint_accels);
    let ne = dp.inward(&motion, &kin, model.base().mass);
    let mount = dp.pose.mount();
    let mut about_mount = ne.total_moment;
    for (i, f) in ne.link_forces.iter().enumerate() {
        about_mount += (dp.com(i) - mount).cross(f);
    }
    Ok(ReactionWrench { total_force: ne.total_force, total_moment: ne.total_moment, moment: -about_mount })
}
