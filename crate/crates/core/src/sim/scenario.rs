//! Scenario documents: strict JSON, SI units, angles in radians.

use nalgebra::{DVector, Quaternion, UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::control::{AttitudeMode, ControllerGains};
use crate::model::{validate_model, SystemModel, SystemState};
use crate::{Error, Result};

const QUATERNION_TOL: f64 = 1e-9;

fn zero3() -> [f64; 3] {
    [0.0; 3]
}

fn identity_quaternion() -> [f64; 4] {
    [1.0, 0.0, 0.0, 0.0]
}

/// Initial state as written in a scenario. Attitude is `[w, x, y, z]`;
/// omitted joint rates mean rest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialState {
    #[serde(default = "zero3")]
    pub base_position: [f64; 3],
    #[serde(default = "identity_quaternion")]
    pub base_attitude: [f64; 4],
    #[serde(default = "zero3")]
    pub base_lin_velocity: [f64; 3],
    /// Body frame.
    #[serde(default = "zero3")]
    pub base_ang_velocity: [f64; 3],
    pub joint_angles: Vec<f64>,
    #[serde(default)]
    pub joint_rates: Vec<f64>,
}

impl InitialState {
    pub fn at_rest(joint_angles: Vec<f64>) -> Self {
        let n = joint_angles.len();
        Self {
            base_position: zero3(),
            base_attitude: identity_quaternion(),
            base_lin_velocity: zero3(),
            base_ang_velocity: zero3(),
            joint_angles,
            joint_rates: vec![0.0; n],
        }
    }

    pub fn to_state(&self) -> SystemState {
        let [w, x, y, z] = self.base_attitude;
        SystemState {
            t: 0.0,
            base_position: Vector3::from(self.base_position),
            base_attitude: UnitQuaternion::from_quaternion(Quaternion::new(w, x, y, z)),
            base_lin_velocity: Vector3::from(self.base_lin_velocity),
            base_ang_velocity: Vector3::from(self.base_ang_velocity),
            joint_angles: DVector::from_column_slice(&self.joint_angles),
            joint_rates: DVector::from_column_slice(&self.joint_rates),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ControllerKind {
    /// RMRC through the generalized Jacobian, computed-torque inner loop.
    RmrcGeneralized,
    /// Fixed-base RMRC that assumes the base never leaves its initial pose.
    RmrcNaive,
    /// Computed torque at the control rate along a joint-space goal.
    ComputedTorque,
    /// Computed torque re-evaluated at every integrator stage, so the joints
    /// follow the joint-space goal to integration accuracy.
    Prescribed,
    /// Sinusoidal joint torques, no feedback.
    OpenLoop,
    /// Zero joint torque.
    None,
}

/// Joint-space and task-space gains; attitude gains live in [`AttitudeConfig`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ArmGains {
    pub task_gain: f64,
    pub kp: f64,
    pub kd: f64,
    pub dls_damping: f64,
}

impl Default for ArmGains {
    fn default() -> Self {
        let g = ControllerGains::default();
        Self { task_gain: g.task_gain, kp: g.kp, kd: g.kd, dls_damping: g.dls_damping }
    }
}

/// `τ_k(t) = amplitude_k sin(2π frequency t + phase_k)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TorqueProfile {
    pub amplitude: Vec<f64>,
    /// Hz.
    pub frequency: f64,
    #[serde(default)]
    pub phase: Vec<f64>,
}

impl TorqueProfile {
    pub fn at(&self, t: f64) -> DVector<f64> {
        let w = 2.0 * std::f64::consts::PI * self.frequency;
        DVector::from_iterator(
            self.amplitude.len(),
            self.amplitude
                .iter()
                .enumerate()
                .map(|(k, a)| a * (w * t + self.phase.get(k).copied().unwrap_or(0.0)).sin()),
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControllerConfig {
    #[serde(rename = "type")]
    pub kind: ControllerKind,
    #[serde(default)]
    pub gains: ArmGains,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub torque_profile: Option<TorqueProfile>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AttitudeConfig {
    pub mode: AttitudeMode,
    /// PD gains per unit base inertia (1/s², 1/s).
    pub kp: f64,
    pub kd: f64,
    /// Actuator torque limit on the torque norm (N·m).
    pub torque_limit: f64,
    /// Target attitude `[w, x, y, z]`.
    pub target: [f64; 4],
}

impl Default for AttitudeConfig {
    fn default() -> Self {
        let g = ControllerGains::default();
        Self {
            mode: AttitudeMode::Off,
            kp: g.attitude_kp,
            kd: g.attitude_kd,
            torque_limit: g.attitude_torque_limit,
            target: identity_quaternion(),
        }
    }
}

impl AttitudeConfig {
    pub fn target_attitude(&self) -> UnitQuaternion<f64> {
        let [w, x, y, z] = self.target;
        UnitQuaternion::from_quaternion(Quaternion::new(w, x, y, z))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum Goal {
    /// Straight-line quintic move of the end effector. With `relative` the
    /// target is an offset from the initial end-effector position.
    Task {
        target: [f64; 3],
        #[serde(default)]
        relative: bool,
        move_time: f64,
    },
    /// Quintic move of the joints to `angles`.
    Joint { angles: Vec<f64>, move_time: f64 },
    /// Piecewise quintic through joint-space waypoints.
    JointCycle { waypoints: Vec<Vec<f64>>, segment_time: f64 },
    /// Stay where the run starts.
    Hold,
}

fn default_dt() -> f64 {
    1e-3
}

fn default_control_rate() -> f64 {
    100.0
}

fn default_decimation() -> usize {
    10
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// s.
    pub duration: f64,
    /// Integrator step (s).
    #[serde(default = "default_dt")]
    pub dt: f64,
    /// Control updates per second; the period must be a whole number of steps.
    #[serde(default = "default_control_rate")]
    pub control_rate: f64,
    /// Log every this many integrator steps.
    #[serde(default = "default_decimation")]
    pub log_decimation: usize,
    /// Apply the end-effector speed cap from `requirements`.
    #[serde(default)]
    pub enforce_limits: bool,
}

/// Mission requirement values carried with a scenario. Only
/// `position_accuracy` and `max_ee_speed` feed into runs; the rest is metadata.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Requirements {
    /// m.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub position_accuracy: Option<f64>,
    /// m/s.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_ee_speed: Option<f64>,
    /// m.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub forward_reach: Option<f64>,
    /// kg.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub payload_capacity: Option<f64>,
    /// N.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub force_exertion: Option<f64>,
    /// N·m.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub torque_exertion: Option<f64>,
    /// Translational and rotational compliance, stored only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub compliance: Option<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default)]
    pub name: String,
    pub model: SystemModel,
    pub initial_state: InitialState,
    pub controller: ControllerConfig,
    #[serde(default)]
    pub attitude: AttitudeConfig,
    pub goal: Goal,
    pub run: RunConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub requirements: Option<Requirements>,
}

fn field(path: &str, message: impl Into<String>) -> Error {
    Error::InvalidField { path: path.into(), message: message.into() }
}

impl ScenarioConfig {
    pub fn gains(&self) -> ControllerGains {
        let g = &self.controller.gains;
        ControllerGains {
            task_gain: g.task_gain,
            kp: g.kp,
            kd: g.kd,
            dls_damping: g.dls_damping,
            attitude_kp: self.attitude.kp,
            attitude_kd: self.attitude.kd,
            attitude_torque_limit: self.attitude.torque_limit,
        }
    }

    pub fn initial_system_state(&self) -> SystemState {
        self.initial_state.to_state()
    }

    /// Number of integrator steps in the run.
    pub fn steps(&self) -> usize {
        (self.run.duration / self.run.dt * (1.0 + 1e-12)).floor() as usize
    }

    /// Integrator steps per control period.
    pub fn steps_per_tick(&self) -> usize {
        (1.0 / (self.run.control_rate * self.run.dt)).round().max(1.0) as usize
    }

    /// End-effector speed cap in force for this run.
    pub fn speed_cap(&self) -> Option<f64> {
        if self.run.enforce_limits {
            self.requirements.as_ref().and_then(|r| r.max_ee_speed)
        } else {
            None
        }
    }

    pub fn position_accuracy(&self) -> f64 {
        self.requirements.as_ref().and_then(|r| r.position_accuracy).unwrap_or(3e-4)
    }

    /// Fills omitted joint rates with zeros.
    fn fill_defaults(&mut self) {
        if self.initial_state.joint_rates.is_empty() {
            self.initial_state.joint_rates = vec![0.0; self.initial_state.joint_angles.len()];
        }
    }

    pub fn validate(&self) -> Result<()> {
        validate_model(&self.model).into_result()?;
        let n = self.model.dof();
        let s = &self.initial_state;
        if s.joint_angles.len() != n {
            return Err(field(
                "initial_state.joint_angles",
                format!("expected {n} entries, got {}", s.joint_angles.len()),
            ));
        }
        if s.joint_rates.len() != n {
            return Err(field(
                "initial_state.joint_rates",
                format!("expected {n} entries, got {}", s.joint_rates.len()),
            ));
        }
        let qn = s.base_attitude.iter().map(|v| v * v).sum::<f64>().sqrt();
        if !((qn - 1.0).abs() <= QUATERNION_TOL) {
            return Err(field("initial_state.base_attitude", format!("quaternion norm is {qn}, expected 1")));
        }
        let tn = self.attitude.target.iter().map(|v| v * v).sum::<f64>().sqrt();
        if !((tn - 1.0).abs() <= QUATERNION_TOL) {
            return Err(field("attitude.target", format!("quaternion norm is {tn}, expected 1")));
        }
        let finite = s
            .base_position
            .iter()
            .chain(&s.base_lin_velocity)
            .chain(&s.base_ang_velocity)
            .chain(&s.joint_angles)
            .chain(&s.joint_rates)
            .all(|v| v.is_finite());
        if !finite {
            return Err(field("initial_state", "entries must be finite"));
        }

        let gains = self.gains();
        if let Err(Error::InvalidField { path, message }) = gains.validate() {
            let path = match path.as_str() {
                "attitude_kp" => "attitude.kp".to_string(),
                "attitude_kd" => "attitude.kd".to_string(),
                "attitude_torque_limit" => "attitude.torque_limit".to_string(),
                p => format!("controller.gains.{p}"),
            };
            return Err(Error::InvalidField { path, message });
        }

        let r = &self.run;
        if !(r.duration > 0.0) || !r.duration.is_finite() {
            return Err(field("run.duration", format!("must be positive, got {}", r.duration)));
        }
        if !(r.dt > 0.0) || !r.dt.is_finite() {
            return Err(field("run.dt", format!("must be positive, got {}", r.dt)));
        }
        if self.steps() == 0 {
            return Err(field("run.duration", format!("shorter than one {} s step", r.dt)));
        }
        if !(r.control_rate > 0.0) || !r.control_rate.is_finite() {
            return Err(field("run.control_rate", format!("must be positive, got {}", r.control_rate)));
        }
        let per_tick = 1.0 / (r.control_rate * r.dt);
        if per_tick < 1.0 - 1e-9 || (per_tick - per_tick.round()).abs() > 1e-9 * per_tick {
            return Err(field(
                "run.dt",
                format!("control period {} s is not a whole number of {} s steps", 1.0 / r.control_rate, r.dt),
            ));
        }
        if r.log_decimation == 0 {
            return Err(field("run.log_decimation", "must be at least 1"));
        }

        self.validate_goal(n)?;
        self.validate_controller(n)
    }

    fn validate_goal(&self, n: usize) -> Result<()> {
        let positive = |path: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(field(path, format!("must be positive, got {v}")))
            }
        };
        match &self.goal {
            Goal::Task { target, move_time, .. } => {
                if !target.iter().all(|v| v.is_finite()) {
                    return Err(field("goal.target", "entries must be finite"));
                }
                positive("goal.move_time", *move_time)
            }
            Goal::Joint { angles, move_time } => {
                if angles.len() != n {
                    return Err(field("goal.angles", format!("expected {n} entries, got {}", angles.len())));
                }
                positive("goal.move_time", *move_time)
            }
            Goal::JointCycle { waypoints, segment_time } => {
                if waypoints.len() < 2 {
                    return Err(field("goal.waypoints", "needs at least two waypoints"));
                }
                if let Some(k) = waypoints.iter().position(|w| w.len() != n) {
                    return Err(field(&format!("goal.waypoints[{k}]"), format!("expected {n} entries")));
                }
                positive("goal.segment_time", *segment_time)
            }
            Goal::Hold => Ok(()),
        }
    }

    fn validate_controller(&self, n: usize) -> Result<()> {
        let kind = self.controller.kind;
        match (kind, &self.goal) {
            (
                ControllerKind::RmrcGeneralized | ControllerKind::RmrcNaive,
                Goal::Joint { .. } | Goal::JointCycle { .. },
            ) => {
                return Err(field("goal.type", "resolved-motion rate control needs a task or hold goal"));
            }
            (ControllerKind::ComputedTorque | ControllerKind::Prescribed, Goal::Task { .. }) => {
                return Err(field("goal.type", "computed torque needs a joint, joint_cycle or hold goal"));
            }
            _ => {}
        }
        match (kind, &self.controller.torque_profile) {
            (ControllerKind::OpenLoop, None) => Err(field("controller.torque_profile", "required for open_loop")),
            (ControllerKind::OpenLoop, Some(p)) => {
                if p.amplitude.len() != n {
                    return Err(field("controller.torque_profile.amplitude", format!("expected {n} entries")));
                }
                if !p.phase.is_empty() && p.phase.len() != n {
                    return Err(field("controller.torque_profile.phase", format!("expected {n} entries")));
                }
                if !p.frequency.is_finite() || p.amplitude.iter().chain(&p.phase).any(|v| !v.is_finite()) {
                    return Err(field("controller.torque_profile", "entries must be finite"));
                }
                Ok(())
            }
            (_, Some(_)) => Err(field("controller.torque_profile", "only used by open_loop")),
            (_, None) => Ok(()),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    pub fn to_value(&self) -> Value {
        serde_json::to_value(self).expect("scenario serializes")
    }
}

fn parse_error(e: serde_json::Error) -> Error {
    Error::Parse { line: e.line(), column: e.column(), message: e.to_string() }
}

/// Parses, fills defaults and validates a scenario document.
pub fn load_scenario(source: &str) -> Result<ScenarioConfig> {
    let value: Value = serde_json::from_str(source).map_err(parse_error)?;
    scenario_from_value(value)
}

/// As [`load_scenario`], after applying `key=value` overrides.
pub fn load_scenario_with(source: &str, overrides: &[String]) -> Result<ScenarioConfig> {
    let mut value: Value = serde_json::from_str(source).map_err(parse_error)?;
    for o in overrides {
        apply_override(&mut value, o)?;
    }
    scenario_from_value(value)
}

pub fn scenario_from_value(value: Value) -> Result<ScenarioConfig> {
    let mut config: ScenarioConfig = serde_path_to_error::deserialize(value).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner().to_string();
        // serde reports a missing key at the parent path; name the key itself
        let path = match inner.strip_prefix("missing field `").and_then(|r| r.split('`').next()) {
            Some(key) if path == "." => key.to_string(),
            Some(key) => format!("{path}.{key}"),
            None => path,
        };
        Error::InvalidField { path, message: inner }
    })?;
    config.fill_defaults();
    config.validate()?;
    Ok(config)
}

/// Applies one dotted-path override such as `run.dt=0.0005` or
/// `initial_state.joint_angles.2=0.1`. The value is parsed as JSON and taken
/// as a string if that fails. Missing object keys are created.
pub fn apply_override(doc: &mut Value, assignment: &str) -> Result<()> {
    let (path, raw) = assignment
        .split_once('=')
        .ok_or_else(|| Error::InvalidArgument(format!("override `{assignment}` is not key=value")))?;
    let path = path.trim();
    if path.is_empty() {
        return Err(Error::InvalidArgument(format!("override `{assignment}` has an empty key")));
    }
    let value = serde_json::from_str(raw.trim()).unwrap_or_else(|_| Value::String(raw.trim().to_string()));
    let mut node = doc;
    for key in path.split('.') {
        node = match node {
            Value::Object(map) => map.entry(key.to_string()).or_insert(Value::Null),
            Value::Array(items) => {
                let len = items.len();
                let idx: usize = key.parse().map_err(|_| field(path, format!("`{key}` is not an array index")))?;
                items.get_mut(idx).ok_or_else(|| field(path, format!("index {idx} out of range (length {len})")))?
            }
            Value::Null => {
                *node = Value::Object(Default::default());
                match node {
                    Value::Object(map) => map.entry(key.to_string()).or_insert(Value::Null),
                    _ => unreachable!(),
                }
            }
            _ => return Err(field(path, format!("cannot descend into `{key}`"))),
        };
    }
    *node = value;
    Ok(())
}
