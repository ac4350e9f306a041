//! Forward kinematics of the arm, system centre of mass, barycentric link
//! vectors and the two Jacobians.
//!
//! Frame numbering follows standard DH: frame 0 is the mount frame (aligned with
//! the base), joint k rotates about the z axis of frame k-1, and frame n is the
//! end-effector frame. `R_i` below is the inertial rotation of frame i.

use std::ops::Mul;

use nalgebra::{DMatrix, Matrix3, Vector3};

use crate::model::{DHParams, SystemModel, SystemState};

/// Rigid transform `(R, p)`; acts on points as `R x + p`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HomogeneousTransform {
    pub rotation: Matrix3<f64>,
    pub translation: Vector3<f64>,
}

impl HomogeneousTransform {
    pub fn identity() -> Self {
        Self { rotation: Matrix3::identity(), translation: Vector3::zeros() }
    }

    pub fn new(rotation: Matrix3<f64>, translation: Vector3<f64>) -> Self {
        Self { rotation, translation }
    }

    pub fn inverse(&self) -> Self {
        let rt = self.rotation.transpose();
        Self { rotation: rt, translation: -(rt * self.translation) }
    }

    pub fn transform_point(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * p + self.translation
    }

    /// Largest deviation of `RᵀR` from identity and of `det R` from one.
    pub fn orthonormality_error(&self) -> f64 {
        let r = &self.rotation;
        let ortho = (r.transpose() * r - Matrix3::identity()).amax();
        ortho.max((r.determinant() - 1.0).abs())
    }
}

impl Mul for HomogeneousTransform {
    type Output = HomogeneousTransform;

    fn mul(self, rhs: HomogeneousTransform) -> HomogeneousTransform {
        HomogeneousTransform {
            rotation: self.rotation * rhs.rotation,
            translation: self.rotation * rhs.translation + self.translation,
        }
    }
}

/// Standard DH transform `Rz(θ) Tz(d) Tx(a) Rx(α)` with θ = `theta + theta_offset`.
pub fn dh_transform(params: &DHParams, theta: f64) -> HomogeneousTransform {
    let (st, ct) = (theta + params.theta_offset).sin_cos();
    let (sa, ca) = params.alpha.sin_cos();
    let rotation = Matrix3::new(ct, -st * ca, st * sa, st, ct * ca, -ct * sa, 0.0, sa, ca);
    let translation = Vector3::new(params.a * ct, params.a * st, params.d);
    HomogeneousTransform { rotation, translation }
}

/// DH frames 0..=n. `mount_relative[k]` maps frame k into the mount frame;
/// `inertial[k]` maps it into the inertial frame. Entry 0 is the mount frame,
/// entry n the end effector.
#[derive(Debug, Clone)]
pub struct LinkFrames {
    pub mount_relative: Vec<HomogeneousTransform>,
    pub inertial: Vec<HomogeneousTransform>,
}

impl LinkFrames {
    pub fn end_effector(&self) -> &HomogeneousTransform {
        self.inertial.last().expect("frames always hold the mount frame")
    }
}

pub fn link_frames(model: &SystemModel, state: &SystemState) -> LinkFrames {
    let n = model.dof();
    let mut mount_relative = Vec::with_capacity(n + 1);
    let mut t = HomogeneousTransform::identity();
    mount_relative.push(t);
    for (link, theta) in model.links().iter().zip(state.joint_angles.iter()) {
        t = t * dh_transform(&link.dh, *theta);
        mount_relative.push(t);
    }
    let r0 = state.base_rotation();
    let base = HomogeneousTransform::new(r0, state.base_position + r0 * model.base().mount_offset);
    let inertial = mount_relative.iter().map(|f| base * *f).collect();
    LinkFrames { mount_relative, inertial }
}

/// Inertial geometry of the whole chain at one configuration; shared by the
/// kinematic maps and the dynamics recursions.
#[derive(Debug, Clone)]
pub struct ChainPose {
    pub base_rotation: Matrix3<f64>,
    pub base_position: Vector3<f64>,
    /// Joint origins o_0..o_n; o_0 is the mount point, o_n the end effector.
    pub origins: Vec<Vector3<f64>>,
    /// Inertial rotations R_1..R_n (index i-1 holds link i).
    pub rotations: Vec<Matrix3<f64>>,
    /// Joint axes z_0..z_{n-1} (index k-1 holds the axis of joint k).
    pub axes: Vec<Vector3<f64>>,
    /// Link CoMs (index i-1 holds link i).
    pub link_coms: Vec<Vector3<f64>>,
    pub payload_com: Vector3<f64>,
}

impl ChainPose {
    pub fn new(model: &SystemModel, state: &SystemState) -> Self {
        let n = model.dof();
        let r0 = state.base_rotation();
        let mount = state.base_position + r0 * model.base().mount_offset;
        let mut origins = Vec::with_capacity(n + 1);
        let mut rotations = Vec::with_capacity(n);
        let mut axes = Vec::with_capacity(n);
        let mut link_coms = Vec::with_capacity(n);
        origins.push(mount);
        let mut r_prev = r0;
        let mut o_prev = mount;
        for (link, theta) in model.links().iter().zip(state.joint_angles.iter()) {
            let t = dh_transform(&link.dh, *theta);
            let r = r_prev * t.rotation;
            axes.push(r_prev.column(2).into_owned());
            link_coms.push(o_prev + r * link.com_offset);
            o_prev += r * link.link_vector;
            origins.push(o_prev);
            rotations.push(r);
            r_prev = r;
        }
        let payload_com = o_prev + r_prev * model.payload().grasp_offset;
        Self { base_rotation: r0, base_position: state.base_position, origins, rotations, axes, link_coms, payload_com }
    }

    pub fn mount(&self) -> Vector3<f64> {
        self.origins[0]
    }

    pub fn end_effector(&self) -> Vector3<f64> {
        *self.origins.last().expect("at least the mount origin")
    }

    /// Rotation of the end-effector frame (the payload frame).
    pub fn end_effector_rotation(&self) -> Matrix3<f64> {
        self.rotations.last().copied().unwrap_or(self.base_rotation)
    }
}

/// Mass-weighted mean of base, link and payload CoMs (inertial frame).
pub fn system_com(model: &SystemModel, state: &SystemState) -> Vector3<f64> {
    com_of_pose(model, &ChainPose::new(model, state))
}

pub(crate) fn com_of_pose(model: &SystemModel, pose: &ChainPose) -> Vector3<f64> {
    let mut acc = pose.base_position * model.base().mass;
    for (link, c) in model.links().iter().zip(&pose.link_coms) {
        acc += c * link.mass;
    }
    acc += pose.payload_com * model.payload().mass;
    acc / model.total_mass()
}

/// Returns `state` with the base translated so the system CoM sits at `target`.
pub fn with_com_at(model: &SystemModel, state: &SystemState, target: &Vector3<f64>) -> SystemState {
    let shift = target - system_com(model, state);
    SystemState { base_position: state.base_position + shift, ..state.clone() }
}

/// Link-local barycentric vectors λ_1..λ_n and the total mass they were built with.
#[derive(Debug, Clone, PartialEq)]
pub struct BarycentricSet {
    pub vectors: Vec<Vector3<f64>>,
    pub total_mass: f64,
}

/// λ_i = (1/m_T) (Σ_{j=0}^{i} m_j l_i − m_i c_i), with c_i = l_i − r_i the
/// joint-to-CoM vector of link i. Equivalently (1/m_T)(Σ_{j<i} m_j l_i + m_i r_i).
pub fn barycentric_vectors(model: &SystemModel) -> BarycentricSet {
    let m_t = model.total_mass();
    let mut inboard = model.base().mass;
    let vectors = model
        .links()
        .iter()
        .map(|link| {
            inboard += link.mass;
            (link.link_vector * inboard - link.com_offset * link.mass) / m_t
        })
        .collect();
    BarycentricSet { vectors, total_mass: m_t }
}

/// p* = r_c0 + R_0 s_0 + Σ R_i l_i.
pub fn ee_position_explicit(model: &SystemModel, state: &SystemState) -> Vector3<f64> {
    let pose = ChainPose::new(model, state);
    let mut p = state.base_position + pose.base_rotation * model.base().mount_offset;
    for (r, link) in pose.rotations.iter().zip(model.links()) {
        p += r * link.link_vector;
    }
    p
}

/// p* = p_cm + (m_0/m_T) R_0 s_0 + Σ R_i λ_i − (m_p/m_T) R_n r_p.
pub fn ee_position_barycentric(model: &SystemModel, state: &SystemState, com: &Vector3<f64>) -> Vector3<f64> {
    ee_position_barycentric_with(model, state, com, &barycentric_vectors(model))
}

/// [`ee_position_barycentric`] with a precomputed λ set.
pub fn ee_position_barycentric_with(
    model: &SystemModel,
    state: &SystemState,
    com: &Vector3<f64>,
    set: &BarycentricSet,
) -> Vector3<f64> {
    let pose = ChainPose::new(model, state);
    let m_t = set.total_mass;
    let mut p = com + pose.base_rotation * model.base().mount_offset * (model.base().mass / m_t);
    for (r, lambda) in pose.rotations.iter().zip(&set.vectors) {
        p += r * lambda;
    }
    let payload = model.payload();
    p - pose.end_effector_rotation() * payload.grasp_offset * (payload.mass / m_t)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JacobianKind {
    /// 6×n, linear rows first, mount treated as inertially fixed.
    FixedBase,
    /// 3×n linear part of [`JacobianKind::FixedBase`].
    FixedBaseLinear,
    /// 3×n translational generalized Jacobian (attitude held, linear momentum conserved).
    Generalized,
}

#[derive(Debug, Clone)]
pub struct JacobianMatrix {
    pub kind: JacobianKind,
    pub matrix: DMatrix<f64>,
    pub min_singular_value: f64,
}

impl JacobianMatrix {
    fn new(kind: JacobianKind, matrix: DMatrix<f64>) -> Self {
        let min_singular_value = smallest_singular_value(&matrix);
        Self { kind, matrix, min_singular_value }
    }

    /// Linear (top three) rows of a fixed-base Jacobian.
    pub fn linear(&self) -> JacobianMatrix {
        match self.kind {
            JacobianKind::FixedBase => {
                JacobianMatrix::new(JacobianKind::FixedBaseLinear, self.matrix.rows(0, 3).into_owned())
            }
            _ => self.clone(),
        }
    }

    pub fn cols(&self) -> usize {
        self.matrix.ncols()
    }
}

fn smallest_singular_value(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone().svd(false, false).singular_values.min()
}

/// Geometric Jacobian of the end effector with the mount held fixed, in
/// inertial axes. Rows 0..3 are linear velocity, rows 3..6 angular velocity.
pub fn fixed_base_jacobian(model: &SystemModel, state: &SystemState) -> JacobianMatrix {
    let pose = ChainPose::new(model, state);
    let n = model.dof();
    let ee = pose.end_effector();
    let mut j = DMatrix::zeros(6, n);
    for k in 0..n {
        let z = pose.axes[k];
        let lin = z.cross(&(ee - pose.origins[k]));
        j.fixed_view_mut::<3, 1>(0, k).copy_from(&lin);
        j.fixed_view_mut::<3, 1>(3, k).copy_from(&z);
    }
    JacobianMatrix::new(JacobianKind::FixedBase, j)
}

/// J̄: column k is Σ_{i≥k} ∂(R_i λ_i)/∂θ_k = z_{k-1} × Σ_{i≥k} R_i λ_i, plus the
/// payload term, so that ṗ* = J̄ θ̇ with R_0 and the system CoM held fixed.
pub fn generalized_jacobian(model: &SystemModel, state: &SystemState) -> JacobianMatrix {
    generalized_jacobian_with(model, state, &barycentric_vectors(model))
}

pub fn generalized_jacobian_with(model: &SystemModel, state: &SystemState, set: &BarycentricSet) -> JacobianMatrix {
    let pose = ChainPose::new(model, state);
    let n = model.dof();
    let payload = model.payload();
    let payload_term = pose.end_effector_rotation() * payload.grasp_offset * (payload.mass / set.total_mass);

    // suffix sums of R_i λ_i
    let mut tail = vec![Vector3::zeros(); n + 1];
    for i in (0..n).rev() {
        tail[i] = tail[i + 1] + pose.rotations[i] * set.vectors[i];
    }
    let mut j = DMatrix::zeros(3, n);
    for (k, (axis, tail)) in pose.axes.iter().zip(&tail).enumerate() {
        let col = axis.cross(&(tail - payload_term));
        j.fixed_view_mut::<3, 1>(0, k).copy_from(&col);
    }
    JacobianMatrix::new(JacobianKind::Generalized, j)
}
