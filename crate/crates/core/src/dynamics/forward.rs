//! Coupled base + arm equations of motion.
//!
//! The generalized velocity is `u = (v_0, ω_0, θ̇)` with both base rates in
//! inertial axes; the generalized mass matrix is assembled column by column by
//! probing the Newton–Euler recursion with unit accelerations at zero velocity,
//! and the bias vector is one recursion at zero acceleration.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn, Matrix6, SymmetricEigen, Vector3, Vector6};

use super::rnea::{BaseAcceleration, BaseMotion, DynamicsPose, NewtonEulerResult};
use crate::model::{SystemModel, SystemState, Wrench};
use crate::{Error, Result};

/// Joint and base accelerations produced by the forward dynamics.
#[derive(Debug, Clone, PartialEq)]
pub struct Accelerations {
    pub joints: DVector<f64>,
    pub base: BaseAcceleration,
}

/// `H(q) u̇ + c(q, u) = Q`, with base rows first.
#[derive(Debug, Clone)]
pub struct EquationsOfMotion {
    pub mass_matrix: DMatrix<f64>,
    pub bias: DVector<f64>,
}

fn generalized_force(r: &NewtonEulerResult) -> DVector<f64> {
    let n = r.joint_torques.len();
    let mut q = DVector::zeros(6 + n);
    q.fixed_rows_mut::<3>(0).copy_from(&r.base_force);
    q.fixed_rows_mut::<3>(3).copy_from(&r.base_moment);
    q.rows_mut(6, n).copy_from(&r.joint_torques);
    q
}

impl EquationsOfMotion {
    pub fn assemble(model: &SystemModel, state: &SystemState) -> Self {
        let dp = DynamicsPose::new(model, state);
        let n = model.dof();
        let m0 = model.base().mass;

        let moving = BaseMotion {
            velocity: state.base_lin_velocity,
            angular_velocity: state.base_ang_velocity_inertial(),
            ..BaseMotion::default()
        };
        let zero_n = DVector::zeros(n);
        let kin = dp.outward(&moving, &state.joint_rates, &zero_n);
        let bias = generalized_force(&dp.inward(&moving, &kin, m0));

        let dim = 6 + n;
        let mut mass_matrix = DMatrix::zeros(dim, dim);
        let mut qdd = DVector::zeros(n);
        for k in 0..dim {
            let mut probe = BaseMotion::default();
            if k < 3 {
                probe.acceleration[k] = 1.0;
            } else if k < 6 {
                probe.angular_acceleration[k - 3] = 1.0;
            } else {
                qdd[k - 6] = 1.0;
            }
            let kin = dp.outward(&probe, &zero_n, &qdd);
            mass_matrix.set_column(k, &generalized_force(&dp.inward(&probe, &kin, m0)));
            if k >= 6 {
                qdd[k - 6] = 0.0;
            }
        }
        // probing yields a symmetric matrix up to round-off; make it exact
        let sym = (&mass_matrix + mass_matrix.transpose()) * 0.5;
        Self { mass_matrix: sym, bias }
    }

    fn dof(&self) -> usize {
        self.bias.len() - 6
    }

    fn base_block(&self) -> Matrix6<f64> {
        self.mass_matrix.fixed_view::<6, 6>(0, 0).into_owned()
    }

    fn condition_estimate(&self) -> f64 {
        let ev = SymmetricEigen::new(self.mass_matrix.clone()).eigenvalues;
        let (lo, hi) = ev.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), v| (lo.min(v.abs()), hi.max(v.abs())));
        if lo == 0.0 {
            f64::INFINITY
        } else {
            hi / lo
        }
    }

    fn base_cholesky(&self) -> Result<Cholesky<f64, nalgebra::U6>> {
        Cholesky::new(self.base_block())
            .ok_or_else(|| Error::SingularMassMatrix { condition: self.condition_estimate() })
    }

    /// Solves `H u̇ = Q − c` by block elimination of the base rows.
    pub fn solve(
        &self,
        base_force: &Vector6<f64>,
        joint_torques: &DVector<f64>,
    ) -> Result<(Vector6<f64>, DVector<f64>)> {
        let n = self.dof();
        let a = self.base_cholesky()?;
        let b = self.mass_matrix.view((0, 6), (6, n)).into_owned();
        let d = self.mass_matrix.view((6, 6), (n, n)).into_owned();
        let rb: Vector6<f64> = base_force - self.bias.fixed_rows::<6>(0);
        let rj = joint_torques - self.bias.rows(6, n);

        let mut a_inv_b = DMatrix::zeros(6, n);
        for k in 0..n {
            let col: Vector6<f64> = b.column(k).into_owned().fixed_rows::<6>(0).into_owned();
            a_inv_b.set_column(k, &a.solve(&col));
        }
        let a_inv_rb = a.solve(&rb);
        let schur = d - b.transpose() * &a_inv_b;
        let schur = Cholesky::<f64, Dyn>::new(schur)
            .ok_or_else(|| Error::SingularMassMatrix { condition: self.condition_estimate() })?;
        let rhs = rj - b.transpose() * a_inv_rb;
        let qdd = schur.solve(&rhs);
        let ub = a_inv_rb - a_inv_b * &qdd;
        Ok((ub, qdd))
    }

    /// Base accelerations consistent with prescribed joint accelerations and an
    /// external base wrench.
    pub fn base_response(&self, base_force: &Vector6<f64>, joint_accels: &DVector<f64>) -> Result<Vector6<f64>> {
        let n = self.dof();
        let a = self.base_cholesky()?;
        let b = self.mass_matrix.view((0, 6), (6, n));
        let rhs: Vector6<f64> = base_force - self.bias.fixed_rows::<6>(0) - b * joint_accels;
        Ok(a.solve(&rhs))
    }
}

fn base_wrench_vector(model: &SystemModel, state: &SystemState, wrench: &Wrench) -> Vector6<f64> {
    let (f, m) = wrench.at_base_com(model, state);
    Vector6::new(f.x, f.y, f.z, m.x, m.y, m.z)
}

fn to_base_acceleration(state: &SystemState, ub: &Vector6<f64>) -> BaseAcceleration {
    let alpha = Vector3::new(ub[3], ub[4], ub[5]);
    BaseAcceleration {
        linear: Vector3::new(ub[0], ub[1], ub[2]),
        // d/dt (R0ᵀ ω) = R0ᵀ ω̇ because ω × ω = 0
        angular: state.base_attitude.inverse() * alpha,
    }
}

/// Accelerations of the free-floating system under joint torques and an
/// external wrench on the base.
pub fn forward_dynamics_free(
    model: &SystemModel,
    state: &SystemState,
    joint_torques: &DVector<f64>,
    external_base_wrench: &Wrench,
) -> Result<Accelerations> {
    state.check(model)?;
    if joint_torques.len() != model.dof() {
        return Err(Error::StateMismatch(format!(
            "expected {} joint torques, got {}",
            model.dof(),
            joint_torques.len()
        )));
    }
    let eom = EquationsOfMotion::assemble(model, state);
    let (ub, joints) = eom.solve(&base_wrench_vector(model, state, external_base_wrench), joint_torques)?;
    Ok(Accelerations { joints, base: to_base_acceleration(state, &ub) })
}

/// Base accelerations that the free-floating plant produces when the joints
/// accelerate at `joint_accels` while `external_base_wrench` acts on the base.
pub fn momentum_consistent_base_accel(
    model: &SystemModel,
    state: &SystemState,
    joint_accels: &DVector<f64>,
    external_base_wrench: &Wrench,
) -> Result<BaseAcceleration> {
    let eom = EquationsOfMotion::assemble(model, state);
    let ub = eom.base_response(&base_wrench_vector(model, state, external_base_wrench), joint_accels)?;
    Ok(to_base_acceleration(state, &ub))
}

/// Inverse dynamics of the free-floating plant: the joint torques that produce
/// `joint_accels`, with the base responding freely to `external_base_wrench`.
pub fn inverse_dynamics_free(
    model: &SystemModel,
    state: &SystemState,
    joint_accels: &DVector<f64>,
    external_base_wrench: &Wrench,
) -> Result<(NewtonEulerResult, BaseAcceleration)> {
    let base = momentum_consistent_base_accel(model, state, joint_accels, external_base_wrench)?;
    Ok((super::newton_euler(model, state, joint_accels, &base), base))
}

/// Joint accelerations with the base held inertially fixed (base velocity ignored).
pub fn forward_dynamics_fixed(
    model: &SystemModel,
    state: &SystemState,
    joint_torques: &DVector<f64>,
) -> Result<DVector<f64>> {
    let n = model.dof();
    let fixed =
        SystemState { base_lin_velocity: Vector3::zeros(), base_ang_velocity: Vector3::zeros(), ..state.clone() };
    let eom = EquationsOfMotion::assemble(model, &fixed);
    let d = eom.mass_matrix.view((6, 6), (n, n)).into_owned();
    let chol = Cholesky::new(d).ok_or_else(|| Error::SingularMassMatrix { condition: eom.condition_estimate() })?;
    Ok(chol.solve(&(joint_torques - eom.bias.rows(6, n))))
}
