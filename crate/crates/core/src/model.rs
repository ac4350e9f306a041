//! Rigid-body and system description types shared by every other module.
//!
//! A [`SystemModel`] is an immutable description of the spacecraft base, the
//! serial arm mounted on it, and an optional payload held in the end effector.
//! [`SystemState`] carries everything that changes with time.
//!
//! Vector conventions used throughout the crate:
//!
//! * `mount_offset` (s0) points from the base CoM to the manipulator mount, base frame.
//! * `link_vector` (l_i) points from the joint-i origin to the joint-(i+1) origin,
//!   expressed in the axes of link frame i.
//! * `com_offset` (c_i) points from the joint-i origin to the link CoM, link-i axes.
//! * `com_to_tip` (r_i) points from the link CoM to the joint-(i+1) origin, link-i axes,
//!   so that `c_i + r_i = l_i`.
//! * `grasp_offset` points from the end-effector frame origin to the payload CoM.

use std::fmt;

use nalgebra::{DVector, Matrix3, SymmetricEigen, UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

const SYMMETRY_TOL: f64 = 1e-12;
const VECTOR_TOL: f64 = 1e-12;

/// Inertia tensor about the body CoM, in the body's own frame (kg·m²).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[[f64; 3]; 3]", into = "[[f64; 3]; 3]")]
pub struct InertiaTensor(Matrix3<f64>);

impl InertiaTensor {
    pub fn new(matrix: Matrix3<f64>) -> Self {
        Self(matrix)
    }

    pub fn diagonal(ixx: f64, iyy: f64, izz: f64) -> Self {
        Self(Matrix3::from_diagonal(&Vector3::new(ixx, iyy, izz)))
    }

    /// Solid cuboid with edge lengths `x`, `y`, `z`.
    pub fn cuboid(mass: f64, x: f64, y: f64, z: f64) -> Self {
        let k = mass / 12.0;
        Self::diagonal(k * (y * y + z * z), k * (x * x + z * z), k * (x * x + y * y))
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.0
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self(self.0 * factor)
    }

    /// Principal moments in ascending order.
    pub fn principal_moments(&self) -> Vector3<f64> {
        let sym = (self.0 + self.0.transpose()) * 0.5;
        let mut ev: Vec<f64> = SymmetricEigen::new(sym).eigenvalues.iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        Vector3::new(ev[0], ev[1], ev[2])
    }

    fn check(&self, field: &str, report: &mut ValidationReport) {
        let m = &self.0;
        if m.iter().any(|v| !v.is_finite()) {
            report.push(field, format!("{:?}", m.as_slice()), "entries must be finite");
            return;
        }
        let scale = m.amax().max(f64::MIN_POSITIVE);
        let asym = (m - m.transpose()).amax();
        if asym > SYMMETRY_TOL * scale {
            report.push(field, format!("asymmetry {asym:e}"), "inertia tensor must be symmetric");
        }
        let p = self.principal_moments();
        if p[0] <= 0.0 {
            report.push(
                field,
                format!("eigenvalues ({}, {}, {})", p[0], p[1], p[2]),
                "inertia tensor must be positive definite",
            );
            return;
        }
        // sorted ascending, so the only inequality that can fail is p0 + p1 >= p2
        if p[0] + p[1] < p[2] - SYMMETRY_TOL * scale {
            report.push(
                field,
                format!("principal moments ({}, {}, {})", p[0], p[1], p[2]),
                "principal moments violate the triangle inequality",
            );
        }
    }
}

impl From<[[f64; 3]; 3]> for InertiaTensor {
    fn from(rows: [[f64; 3]; 3]) -> Self {
        Self(Matrix3::from_fn(|r, c| rows[r][c]))
    }
}

impl From<InertiaTensor> for [[f64; 3]; 3] {
    fn from(t: InertiaTensor) -> Self {
        let m = t.0;
        [[m[(0, 0)], m[(0, 1)], m[(0, 2)]], [m[(1, 0)], m[(1, 1)], m[(1, 2)]], [m[(2, 0)], m[(2, 1)], m[(2, 2)]]]
    }
}

/// Standard (distal) Denavit–Hartenberg parameters of one joint/link pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DHParams {
    /// Link length (m).
    pub a: f64,
    /// Link twist (rad).
    pub alpha: f64,
    /// Joint offset along the previous z axis (m).
    pub d: f64,
    /// Added to the joint angle before evaluating the transform (rad).
    #[serde(default)]
    pub theta_offset: f64,
}

impl DHParams {
    pub fn new(a: f64, alpha: f64, d: f64) -> Self {
        Self { a, alpha, d, theta_offset: 0.0 }
    }

    /// Joint-i to joint-(i+1) vector implied by these parameters, in link-frame axes.
    pub fn link_vector(&self) -> Vector3<f64> {
        Vector3::new(self.a, self.d * self.alpha.sin(), self.d * self.alpha.cos())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkParams {
    pub dh: DHParams,
    pub mass: f64,
    pub inertia: InertiaTensor,
    pub com_offset: Vector3<f64>,
    pub link_vector: Vector3<f64>,
    pub com_to_tip: Vector3<f64>,
}

impl LinkParams {
    /// Builds a link whose `link_vector` and `com_to_tip` follow from the DH
    /// parameters and the CoM location.
    pub fn from_dh(dh: DHParams, mass: f64, inertia: InertiaTensor, com_offset: Vector3<f64>) -> Self {
        let link_vector = dh.link_vector();
        Self { dh, mass, inertia, com_offset, link_vector, com_to_tip: link_vector - com_offset }
    }

    /// Uniform slender link with its CoM halfway along the link vector.
    pub fn uniform(dh: DHParams, mass: f64, radius: f64) -> Self {
        let l = dh.link_vector();
        let len = l.norm();
        let axial = 0.5 * mass * radius * radius;
        let transverse = mass * (3.0 * radius * radius + len * len) / 12.0;
        // rod inertia about its own axis, rotated so the axis follows l
        let inertia = if len > 0.0 {
            let u = l / len;
            Matrix3::identity() * transverse + u * u.transpose() * (axial - transverse)
        } else {
            Matrix3::identity() * (0.4 * mass * radius * radius)
        };
        Self::from_dh(dh, mass, InertiaTensor::new(inertia), l * 0.5)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BaseBody {
    pub mass: f64,
    pub inertia: InertiaTensor,
    pub mount_offset: Vector3<f64>,
}

/// Rigid payload held by the end effector. Zero mass means no payload.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Payload {
    pub mass: f64,
    pub inertia: InertiaTensor,
    pub grasp_offset: Vector3<f64>,
}

impl Payload {
    pub fn none() -> Self {
        Self { mass: 0.0, inertia: InertiaTensor::new(Matrix3::zeros()), grasp_offset: Vector3::zeros() }
    }

    pub fn is_present(&self) -> bool {
        self.mass > 0.0
    }
}

impl Default for Payload {
    fn default() -> Self {
        Self::none()
    }
}

/// Serialized form of [`SystemModel`]; limits default when omitted.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelDocument {
    base: BaseBody,
    links: Vec<LinkParams>,
    #[serde(default)]
    payload: Payload,
    #[serde(default)]
    joint_limits: Option<Vec<(f64, f64)>>,
    #[serde(default)]
    rate_limits: Option<Vec<f64>>,
    #[serde(default)]
    torque_limits: Option<Vec<f64>>,
}

pub const DEFAULT_JOINT_LIMIT: f64 = 2.0 * std::f64::consts::PI;
pub const DEFAULT_RATE_LIMIT: f64 = 1.0;
pub const DEFAULT_TORQUE_LIMIT: f64 = 200.0;

/// Immutable description of base, arm and payload. Total mass is cached at
/// construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "ModelDocument", into = "ModelDocument")]
pub struct SystemModel {
    base: BaseBody,
    links: Vec<LinkParams>,
    payload: Payload,
    joint_limits: Vec<(f64, f64)>,
    rate_limits: Vec<f64>,
    torque_limits: Vec<f64>,
    total_mass: f64,
}

impl From<ModelDocument> for SystemModel {
    fn from(doc: ModelDocument) -> Self {
        let n = doc.links.len();
        let mut model = SystemModel::new(doc.base, doc.links, doc.payload);
        if let Some(l) = doc.joint_limits {
            model.joint_limits = l;
        }
        if let Some(l) = doc.rate_limits {
            model.rate_limits = l;
        }
        if let Some(l) = doc.torque_limits {
            model.torque_limits = l;
        }
        debug_assert_eq!(model.links.len(), n);
        model
    }
}

impl From<SystemModel> for ModelDocument {
    fn from(m: SystemModel) -> Self {
        ModelDocument {
            base: m.base,
            links: m.links,
            payload: m.payload,
            joint_limits: Some(m.joint_limits),
            rate_limits: Some(m.rate_limits),
            torque_limits: Some(m.torque_limits),
        }
    }
}

impl SystemModel {
    pub fn new(base: BaseBody, links: Vec<LinkParams>, payload: Payload) -> Self {
        let n = links.len();
        let total_mass = compute_total_mass(&base, &links, &payload);
        Self {
            base,
            links,
            payload,
            joint_limits: vec![(-DEFAULT_JOINT_LIMIT, DEFAULT_JOINT_LIMIT); n],
            rate_limits: vec![DEFAULT_RATE_LIMIT; n],
            torque_limits: vec![DEFAULT_TORQUE_LIMIT; n],
            total_mass,
        }
    }

    pub fn with_joint_limits(mut self, limits: Vec<(f64, f64)>) -> Self {
        self.joint_limits = limits;
        self
    }

    pub fn with_rate_limits(mut self, limits: Vec<f64>) -> Self {
        self.rate_limits = limits;
        self
    }

    pub fn with_torque_limits(mut self, limits: Vec<f64>) -> Self {
        self.torque_limits = limits;
        self
    }

    pub fn with_payload(self, payload: Payload) -> Self {
        let mut out = Self::new(self.base, self.links, payload);
        out.joint_limits = self.joint_limits;
        out.rate_limits = self.rate_limits;
        out.torque_limits = self.torque_limits;
        out
    }

    pub fn with_base(self, base: BaseBody) -> Self {
        let mut out = Self::new(base, self.links, self.payload);
        out.joint_limits = self.joint_limits;
        out.rate_limits = self.rate_limits;
        out.torque_limits = self.torque_limits;
        out
    }

    /// Same model with every mass and inertia multiplied by `factor`.
    pub fn mass_scaled(&self, factor: f64) -> Self {
        let base = BaseBody { mass: self.base.mass * factor, inertia: self.base.inertia.scaled(factor), ..self.base };
        let links = self
            .links
            .iter()
            .map(|l| LinkParams { mass: l.mass * factor, inertia: l.inertia.scaled(factor), ..*l })
            .collect();
        let payload =
            Payload { mass: self.payload.mass * factor, inertia: self.payload.inertia.scaled(factor), ..self.payload };
        let mut out = Self::new(base, links, payload);
        out.joint_limits = self.joint_limits.clone();
        out.rate_limits = self.rate_limits.clone();
        out.torque_limits = self.torque_limits.clone();
        out
    }

    pub fn base(&self) -> &BaseBody {
        &self.base
    }

    pub fn links(&self) -> &[LinkParams] {
        &self.links
    }

    pub fn payload(&self) -> &Payload {
        &self.payload
    }

    pub fn joint_limits(&self) -> &[(f64, f64)] {
        &self.joint_limits
    }

    pub fn rate_limits(&self) -> &[f64] {
        &self.rate_limits
    }

    pub fn torque_limits(&self) -> &[f64] {
        &self.torque_limits
    }

    /// Number of joints.
    pub fn dof(&self) -> usize {
        self.links.len()
    }

    /// m_T = m_0 + Σ m_i + m_payload.
    pub fn total_mass(&self) -> f64 {
        self.total_mass
    }

    /// Arm mass without base or payload.
    pub fn arm_mass(&self) -> f64 {
        self.links.iter().map(|l| l.mass).sum()
    }
}

fn compute_total_mass(base: &BaseBody, links: &[LinkParams], payload: &Payload) -> f64 {
    base.mass + links.iter().map(|l| l.mass).sum::<f64>() + payload.mass
}

/// Free-function form of [`SystemModel::total_mass`].
pub fn total_mass(model: &SystemModel) -> f64 {
    model.total_mass()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub field: String,
    pub value: String,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {} (got {})", self.field, self.message, self.value)
    }
}

/// Outcome of [`validate_model`]; empty means valid.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn push(&mut self, field: impl Into<String>, value: impl Into<String>, message: impl Into<String>) {
        self.violations.push(Violation { field: field.into(), value: value.into(), message: message.into() });
    }

    pub fn into_result(self) -> Result<()> {
        if self.is_valid() {
            Ok(())
        } else {
            Err(Error::InvalidModel(self))
        }
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.violations.is_empty() {
            return write!(f, "no violations");
        }
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                write!(f, "; ")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

fn check_vector(field: &str, v: &Vector3<f64>, report: &mut ValidationReport) {
    if v.iter().any(|x| !x.is_finite()) {
        report.push(field, format!("{:?}", v.as_slice()), "entries must be finite");
    }
}

fn check_mass(field: &str, mass: f64, allow_zero: bool, report: &mut ValidationReport) {
    let ok = mass.is_finite() && if allow_zero { mass >= 0.0 } else { mass > 0.0 };
    if !ok {
        let rule = if allow_zero { "mass must be >= 0" } else { "mass must be > 0" };
        report.push(field, mass.to_string(), rule);
    }
}

/// Checks every model invariant and lists the violations. Links are reported
/// 1-based (`links[1]` is the first link, matching joint numbering).
pub fn validate_model(model: &SystemModel) -> ValidationReport {
    let mut report = ValidationReport::default();
    let n = model.dof();

    check_mass("base.mass", model.base.mass, false, &mut report);
    model.base.inertia.check("base.inertia", &mut report);
    check_vector("base.mount_offset", &model.base.mount_offset, &mut report);

    if n == 0 {
        report.push("links", "0", "at least one link is required");
    }
    for (k, link) in model.links.iter().enumerate() {
        let name = format!("links[{}]", k + 1);
        let dh = &link.dh;
        if ![dh.a, dh.alpha, dh.d, dh.theta_offset].iter().all(|v| v.is_finite()) {
            report.push(format!("{name}.dh"), format!("{dh:?}"), "DH parameters must be finite");
        } else if dh.a < 0.0 {
            report.push(format!("{name}.dh.a"), dh.a.to_string(), "link length must be >= 0");
        }
        check_mass(&format!("{name}.mass"), link.mass, false, &mut report);
        link.inertia.check(&format!("{name}.inertia"), &mut report);
        check_vector(&format!("{name}.com_offset"), &link.com_offset, &mut report);
        check_vector(&format!("{name}.link_vector"), &link.link_vector, &mut report);
        check_vector(&format!("{name}.com_to_tip"), &link.com_to_tip, &mut report);

        let scale = link.link_vector.amax().max(1.0);
        let mismatch = (link.com_offset + link.com_to_tip - link.link_vector).amax();
        if mismatch > VECTOR_TOL * scale {
            report.push(
                format!("{name}.com_to_tip"),
                format!("mismatch {mismatch:e}"),
                "com_offset + com_to_tip must equal link_vector",
            );
        }
        let dh_mismatch = (dh.link_vector() - link.link_vector).amax();
        if dh_mismatch > VECTOR_TOL * scale {
            report.push(
                format!("{name}.link_vector"),
                format!("{:?}", link.link_vector.as_slice()),
                format!("link_vector must equal the DH offset {:?}", dh.link_vector().as_slice()),
            );
        }
    }

    check_mass("payload.mass", model.payload.mass, true, &mut report);
    if model.payload.is_present() {
        model.payload.inertia.check("payload.inertia", &mut report);
    }
    check_vector("payload.grasp_offset", &model.payload.grasp_offset, &mut report);

    if !(model.total_mass > 0.0) {
        report.push("total_mass", model.total_mass.to_string(), "total mass must be > 0");
    }

    if model.joint_limits.len() != n {
        report.push("joint_limits", model.joint_limits.len().to_string(), format!("expected {n} entries"));
    }
    for (k, (lo, hi)) in model.joint_limits.iter().enumerate() {
        if !(lo < hi) {
            report.push(format!("joint_limits[{}]", k + 1), format!("({lo}, {hi})"), "min must be < max");
        }
    }
    if model.rate_limits.len() != n {
        report.push("rate_limits", model.rate_limits.len().to_string(), format!("expected {n} entries"));
    }
    for (k, r) in model.rate_limits.iter().enumerate() {
        if !(*r > 0.0) {
            report.push(format!("rate_limits[{}]", k + 1), r.to_string(), "rate limit must be > 0");
        }
    }
    if model.torque_limits.len() != n {
        report.push("torque_limits", model.torque_limits.len().to_string(), format!("expected {n} entries"));
    }
    for (k, r) in model.torque_limits.iter().enumerate() {
        if !(*r > 0.0) {
            report.push(format!("torque_limits[{}]", k + 1), r.to_string(), "torque limit must be > 0");
        }
    }
    report
}

/// Time-varying part of the system. Values are replaced, never mutated in place
/// by library operations.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemState {
    pub t: f64,
    /// Base CoM position r_c0, inertial frame (m).
    pub base_position: Vector3<f64>,
    /// Base attitude, equivalent to the direction-cosine matrix R_0.
    pub base_attitude: UnitQuaternion<f64>,
    /// Base CoM velocity, inertial frame (m/s).
    pub base_lin_velocity: Vector3<f64>,
    /// Base angular velocity, base frame (rad/s).
    pub base_ang_velocity: Vector3<f64>,
    pub joint_angles: DVector<f64>,
    pub joint_rates: DVector<f64>,
}

impl SystemState {
    /// Base at the origin with identity attitude, everything at rest.
    pub fn at_rest(joint_angles: DVector<f64>) -> Self {
        let n = joint_angles.len();
        Self {
            t: 0.0,
            base_position: Vector3::zeros(),
            base_attitude: UnitQuaternion::identity(),
            base_lin_velocity: Vector3::zeros(),
            base_ang_velocity: Vector3::zeros(),
            joint_angles,
            joint_rates: DVector::zeros(n),
        }
    }

    pub fn base_rotation(&self) -> Matrix3<f64> {
        *self.base_attitude.to_rotation_matrix().matrix()
    }

    /// Base angular velocity in the inertial frame.
    pub fn base_ang_velocity_inertial(&self) -> Vector3<f64> {
        self.base_attitude * self.base_ang_velocity
    }

    /// Ensures the state fits `model` and the attitude is a unit quaternion.
    pub fn check(&self, model: &SystemModel) -> Result<()> {
        let n = model.dof();
        if self.joint_angles.len() != n || self.joint_rates.len() != n {
            return Err(Error::StateMismatch(format!(
                "model has {n} joints but state carries {} angles and {} rates",
                self.joint_angles.len(),
                self.joint_rates.len()
            )));
        }
        let norm = self.base_attitude.quaternion().norm();
        if (norm - 1.0).abs() > 1e-9 {
            return Err(Error::StateMismatch(format!("attitude quaternion norm {norm} is not 1")));
        }
        Ok(())
    }
}

/// Where a [`Wrench`] is expressed and applied.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WrenchFrame {
    /// Inertial axes, applied at the base CoM.
    Inertial,
    /// Base axes, applied at the base CoM.
    Base,
    /// Base axes, applied at the manipulator mount point.
    Mount,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Wrench {
    pub force: Vector3<f64>,
    pub torque: Vector3<f64>,
    pub frame: WrenchFrame,
}

impl Wrench {
    pub fn zero() -> Self {
        Self { force: Vector3::zeros(), torque: Vector3::zeros(), frame: WrenchFrame::Inertial }
    }

    pub fn torque_in_base(torque: Vector3<f64>) -> Self {
        Self { force: Vector3::zeros(), torque, frame: WrenchFrame::Base }
    }

    pub fn is_finite(&self) -> bool {
        self.force.iter().chain(self.torque.iter()).all(|v| v.is_finite())
    }

    /// Force and moment about the base CoM, both in inertial axes.
    pub fn at_base_com(&self, model: &SystemModel, state: &SystemState) -> (Vector3<f64>, Vector3<f64>) {
        let r0 = state.base_attitude;
        match self.frame {
            WrenchFrame::Inertial => (self.force, self.torque),
            WrenchFrame::Base => (r0 * self.force, r0 * self.torque),
            WrenchFrame::Mount => {
                let f = r0 * self.force;
                let lever = r0 * model.base().mount_offset;
                (f, r0 * self.torque + lever.cross(&f))
            }
        }
    }
}
