//! Recursive Newton–Euler inverse dynamics on a moving base.
//!
//! Everything is computed in inertial axes. Bodies are indexed 1..=n for the
//! links and n+1 for the payload; vectors below store body i at index i-1.

use nalgebra::{DVector, Matrix3, Vector3};

use crate::kinematics::ChainPose;
use crate::model::{SystemModel, SystemState};

/// Base acceleration. `linear` is the inertial acceleration of the base CoM;
/// `angular` is the time derivative of the body-frame angular velocity.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BaseAcceleration {
    pub linear: Vector3<f64>,
    pub angular: Vector3<f64>,
}

impl BaseAcceleration {
    pub fn zero() -> Self {
        Self::default()
    }
}

/// Per-body velocities and accelerations, inertial frame, bodies 1..=n+1.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkKinematics {
    pub angular_velocity: Vec<Vector3<f64>>,
    pub angular_acceleration: Vec<Vector3<f64>>,
    pub com_velocity: Vec<Vector3<f64>>,
    pub com_acceleration: Vec<Vector3<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NewtonEulerResult {
    pub joint_torques: DVector<f64>,
    /// F_ci = m_i v̇_ci for bodies 1..=n+1.
    pub link_forces: Vec<Vector3<f64>>,
    /// N_ci = I_i ẇ_i + w_i × I_i w_i for bodies 1..=n+1.
    pub link_moments: Vec<Vector3<f64>>,
    /// F_T = Σ F_ci.
    pub total_force: Vector3<f64>,
    /// N_T = Σ N_ci.
    pub total_moment: Vector3<f64>,
    /// Force the base applies to link 1 at the mount.
    pub mount_force: Vector3<f64>,
    /// Moment the base applies to link 1, about the mount point.
    pub mount_moment: Vector3<f64>,
    /// Force the base needs (external + internal) for the given motion.
    pub base_force: Vector3<f64>,
    /// Moment about the base CoM the base needs for the given motion.
    pub base_moment: Vector3<f64>,
}

/// Base velocity and acceleration in inertial axes.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct BaseMotion {
    pub velocity: Vector3<f64>,
    pub angular_velocity: Vector3<f64>,
    pub acceleration: Vector3<f64>,
    pub angular_acceleration: Vector3<f64>,
}

impl BaseMotion {
    pub fn from_state(state: &SystemState, accel: &BaseAcceleration) -> Self {
        Self {
            velocity: state.base_lin_velocity,
            angular_velocity: state.base_ang_velocity_inertial(),
            acceleration: accel.linear,
            angular_acceleration: state.base_attitude * accel.angular,
        }
    }
}

/// Chain pose plus inertial-frame inertia tensors, reused across many
/// recursions at the same configuration.
#[derive(Debug, Clone)]
pub(crate) struct DynamicsPose {
    pub pose: ChainPose,
    /// Links then payload.
    pub inertias: Vec<Matrix3<f64>>,
    pub masses: Vec<f64>,
    pub base_inertia: Matrix3<f64>,
}

impl DynamicsPose {
    pub fn new(model: &SystemModel, state: &SystemState) -> Self {
        let pose = ChainPose::new(model, state);
        let n = model.dof();
        let mut inertias = Vec::with_capacity(n + 1);
        let mut masses = Vec::with_capacity(n + 1);
        for (r, link) in pose.rotations.iter().zip(model.links()) {
            inertias.push(r * link.inertia.matrix() * r.transpose());
            masses.push(link.mass);
        }
        let r_ee = pose.end_effector_rotation();
        inertias.push(r_ee * model.payload().inertia.matrix() * r_ee.transpose());
        masses.push(model.payload().mass);
        let r0 = pose.base_rotation;
        let base_inertia = r0 * model.base().inertia.matrix() * r0.transpose();
        Self { pose, inertias, masses, base_inertia }
    }

    /// CoM of body `i` (0-based: links then payload).
    pub fn com(&self, i: usize) -> Vector3<f64> {
        if i < self.pose.link_coms.len() {
            self.pose.link_coms[i]
        } else {
            self.pose.payload_com
        }
    }

    /// Outward velocity/acceleration pass.
    pub fn outward(&self, base: &BaseMotion, qd: &DVector<f64>, qdd: &DVector<f64>) -> LinkKinematics {
        let pose = &self.pose;
        let n = pose.rotations.len();
        let rho = pose.mount() - pose.base_position;
        let mut w = base.angular_velocity;
        let mut dw = base.angular_acceleration;
        let mut v_o = base.velocity + w.cross(&rho);
        let mut a_o = base.acceleration + dw.cross(&rho) + w.cross(&w.cross(&rho));

        let mut out = LinkKinematics {
            angular_velocity: Vec::with_capacity(n + 1),
            angular_acceleration: Vec::with_capacity(n + 1),
            com_velocity: Vec::with_capacity(n + 1),
            com_acceleration: Vec::with_capacity(n + 1),
        };
        for i in 0..=n {
            if i < n {
                let z = pose.axes[i];
                let w_prev = w;
                w += z * qd[i];
                dw += z * qdd[i] + w_prev.cross(&z) * qd[i];
            }
            // the payload (i == n) rides rigidly on the last frame, about o_n
            let c = self.com(i) - pose.origins[i];
            out.angular_velocity.push(w);
            out.angular_acceleration.push(dw);
            out.com_velocity.push(v_o + w.cross(&c));
            out.com_acceleration.push(a_o + dw.cross(&c) + w.cross(&w.cross(&c)));
            if i < n {
                let d = pose.origins[i + 1] - pose.origins[i];
                v_o += w.cross(&d);
                a_o += dw.cross(&d) + w.cross(&w.cross(&d));
            }
        }
        out
    }

    /// Inward force recursion given the outward kinematics.
    pub fn inward(&self, base: &BaseMotion, kin: &LinkKinematics, base_mass: f64) -> NewtonEulerResult {
        let pose = &self.pose;
        let n = pose.rotations.len();
        let mut link_forces = Vec::with_capacity(n + 1);
        let mut link_moments = Vec::with_capacity(n + 1);
        for i in 0..=n {
            let inertia = &self.inertias[i];
            let w = &kin.angular_velocity[i];
            link_forces.push(kin.com_acceleration[i] * self.masses[i]);
            link_moments.push(inertia * kin.angular_acceleration[i] + w.cross(&(inertia * w)));
        }

        let mut joint_torques = DVector::zeros(n);
        // payload wrench about o_n
        let mut f = link_forces[n];
        let mut m = link_moments[n] + (pose.payload_com - pose.origins[n]).cross(&link_forces[n]);
        for i in (0..n).rev() {
            let o = pose.origins[i];
            m += link_moments[i] + (pose.link_coms[i] - o).cross(&link_forces[i]) + (pose.origins[i + 1] - o).cross(&f);
            f += link_forces[i];
            joint_torques[i] = pose.axes[i].dot(&m);
        }

        let rho = pose.mount() - pose.base_position;
        let w0 = &base.angular_velocity;
        let base_force = base.acceleration * base_mass + f;
        let base_moment =
            self.base_inertia * base.angular_acceleration + w0.cross(&(self.base_inertia * w0)) + m + rho.cross(&f);

        NewtonEulerResult {
            joint_torques,
            total_force: link_forces.iter().sum(),
            total_moment: link_moments.iter().sum(),
            link_forces,
            link_moments,
            mount_force: f,
            mount_moment: m,
            base_force,
            base_moment,
        }
    }
}

/// Per-body velocities and accelerations for the given joint and base accelerations.
pub fn link_kinematics(
    model: &SystemModel,
    state: &SystemState,
    joint_accels: &DVector<f64>,
    base_accels: &BaseAcceleration,
) -> LinkKinematics {
    let dp = DynamicsPose::new(model, state);
    dp.outward(&BaseMotion::from_state(state, base_accels), &state.joint_rates, joint_accels)
}

/// Outward velocity/acceleration recursion from the moving base followed by the
/// inward force recursion. No gravity.
pub fn newton_euler(
    model: &SystemModel,
    state: &SystemState,
    joint_accels: &DVector<f64>,
    base_accels: &BaseAcceleration,
) -> NewtonEulerResult {
    let dp = DynamicsPose::new(model, state);
    let base = BaseMotion::from_state(state, base_accels);
    let kin = dp.outward(&base, &state.joint_rates, joint_accels);
    dp.inward(&base, &kin, model.base().mass)
}
