//! The three reference experiments: overshoot of fixed-base RMRC, net base
//! rotation from a closed joint cycle, and reaction-feedforward attitude
//! compensation.

use nalgebra::{DVector, Vector3};
use serde::Serialize;

use super::canned::{NONHOLONOMY_GOLDEN, NONHOLONOMY_TOLERANCE};
use super::run::{run, RunLog};
use super::scenario::{ControllerKind, Goal, ScenarioConfig};
use crate::control::AttitudeMode;
use crate::kinematics::ee_position_explicit;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OvershootSummary {
    pub generalized_peak: f64,
    pub naive_peak: f64,
    pub generalized_final: f64,
    pub naive_final: f64,
    /// Largest travel past the goal along the approach direction (m, ≥ 0).
    pub generalized_overshoot: f64,
    pub naive_overshoot: f64,
    pub position_accuracy: f64,
    pub claim_holds: bool,
}

#[derive(Debug, Clone)]
pub struct OvershootReport {
    pub generalized: RunLog,
    pub naive: RunLog,
    pub summary: OvershootSummary,
}

fn task_endpoints(config: &ScenarioConfig) -> Result<(Vector3<f64>, Vector3<f64>)> {
    let p0 = ee_position_explicit(&config.model, &config.initial_system_state());
    match &config.goal {
        Goal::Task { target, relative, .. } => {
            let t = Vector3::from(*target);
            Ok((p0, if *relative { p0 + t } else { t }))
        }
        _ => Err(Error::InvalidArgument("the overshoot experiment needs a task goal".into())),
    }
}

fn overshoot(log: &RunLog, start: &Vector3<f64>, goal: &Vector3<f64>) -> f64 {
    let d = goal - start;
    if d.norm() == 0.0 {
        return 0.0;
    }
    let u = d / d.norm();
    log.rows.iter().map(|r| (r.ee_position - goal).dot(&u)).fold(0.0, f64::max)
}

/// Runs the same task under generalized and naive RMRC. The claim is that
/// the naive peak tracking error exceeds the generalized one and that the
/// generalized run ends inside the position accuracy.
pub fn experiment_overshoot(base: &ScenarioConfig) -> Result<OvershootReport> {
    let (start, goal) = task_endpoints(base)?;
    let with = |kind: ControllerKind| {
        let mut c = base.clone();
        c.controller.kind = kind;
        run(&c)
    };
    let generalized = with(ControllerKind::RmrcGeneralized)?;
    let naive = with(ControllerKind::RmrcNaive)?;
    let g = &generalized.summary;
    let n = &naive.summary;
    let accuracy = base.position_accuracy();
    let summary = OvershootSummary {
        generalized_peak: g.peak_error,
        naive_peak: n.peak_error,
        generalized_final: g.final_error,
        naive_final: n.final_error,
        generalized_overshoot: overshoot(&generalized, &start, &goal),
        naive_overshoot: overshoot(&naive, &start, &goal),
        position_accuracy: accuracy,
        claim_holds: n.peak_error > g.peak_error && g.final_error < accuracy,
    };
    Ok(OvershootReport { generalized, naive, summary })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NonholonomySummary {
    /// Rotation vector from the initial to the final base attitude (rad).
    pub net_rotation: [f64; 3],
    pub net_rotation_angle: f64,
    pub com_drift: f64,
    pub base_translation: [f64; 3],
    /// Joint-angle distance between the end and the start of the run.
    pub joint_closure_error: f64,
}

#[derive(Debug, Clone)]
pub struct NonholonomyReport {
    pub log: RunLog,
    pub summary: NonholonomySummary,
}

/// Runs a closed joint cycle from rest and reports the net base rotation.
pub fn experiment_nonholonomy(config: &ScenarioConfig) -> Result<NonholonomyReport> {
    match &config.goal {
        Goal::JointCycle { waypoints, .. } => {
            if waypoints.first() != waypoints.last() {
                return Err(Error::InvalidArgument("joint cycle does not return to its first waypoint".into()));
            }
            if waypoints[0] != config.initial_state.joint_angles {
                return Err(Error::InvalidArgument("initial joint angles are not the first waypoint".into()));
            }
        }
        _ => return Err(Error::InvalidArgument("the non-holonomy experiment needs a joint_cycle goal".into())),
    }
    let s = &config.initial_state;
    let at_rest = s.joint_rates.iter().chain(&s.base_lin_velocity).chain(&s.base_ang_velocity).all(|v| *v == 0.0);
    if !at_rest {
        return Err(Error::InvalidArgument("the cycle must start at rest".into()));
    }
    let log = run(config)?;
    let initial = config.initial_system_state();
    let r = &log.summary.net_base_rotation;
    let translation = log.final_state.base_position - initial.base_position;
    let summary = NonholonomySummary {
        net_rotation: *r,
        net_rotation_angle: Vector3::from(*r).norm(),
        com_drift: log.summary.max_com_drift,
        base_translation: [translation.x, translation.y, translation.z],
        joint_closure_error: (&log.final_state.joint_angles - DVector::from_column_slice(&s.joint_angles)).norm(),
    };
    Ok(NonholonomyReport { log, summary })
}

/// The cycle followed by its exact time reverse.
pub fn time_reversed(config: &ScenarioConfig) -> Result<ScenarioConfig> {
    let Goal::JointCycle { waypoints, segment_time } = &config.goal else {
        return Err(Error::InvalidArgument("time reversal needs a joint_cycle goal".into()));
    };
    let mut there_and_back = waypoints.clone();
    there_and_back.extend(waypoints.iter().rev().skip(1).cloned());
    let mut out = config.clone();
    out.name = format!("{}-there-and-back", config.name);
    out.run.duration = segment_time * (there_and_back.len() - 1) as f64;
    out.goal = Goal::JointCycle { waypoints: there_and_back, segment_time: *segment_time };
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NonholonomyComparison {
    pub cycle: NonholonomySummary,
    pub reversed: NonholonomySummary,
    /// Signed rotation about +z of the cycle run.
    pub net_rotation_z: f64,
    pub golden: Option<f64>,
    pub golden_tolerance: f64,
    pub claim_holds: bool,
}

/// Runs a cycle and its time reverse. The claim: the cycle rotates the base by
/// more than 1e-3 rad (and matches `golden` if given), the reverse by less
/// than 1e-9 rad, and neither moves the system CoM by 1e-6 m.
pub fn nonholonomy_comparison(
    config: &ScenarioConfig,
    golden: Option<f64>,
) -> Result<(NonholonomyComparison, RunLog, RunLog)> {
    let cycle = experiment_nonholonomy(config)?;
    let reversed = experiment_nonholonomy(&time_reversed(config)?)?;
    let z = cycle.summary.net_rotation[2];
    let golden_ok = golden.is_none_or(|g| (z - g).abs() <= NONHOLONOMY_TOLERANCE);
    let claim_holds = cycle.summary.net_rotation_angle > 1e-3
        && golden_ok
        && reversed.summary.net_rotation_angle < 1e-9
        && cycle.summary.com_drift < 1e-6
        && reversed.summary.com_drift < 1e-6;
    let comparison = NonholonomyComparison {
        cycle: cycle.summary,
        reversed: reversed.summary,
        net_rotation_z: z,
        golden,
        golden_tolerance: NONHOLONOMY_TOLERANCE,
        claim_holds,
    };
    Ok((comparison, cycle.log, reversed.log))
}

/// Golden value for the canned planar cycle.
pub fn planar_cycle_golden() -> f64 {
    NONHOLONOMY_GOLDEN
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AttitudeSummary {
    pub pd_only_peak: f64,
    pub feedforward_peak: f64,
    pub pd_only_saturation_fraction: f64,
    pub feedforward_saturation_fraction: f64,
    pub claim_holds: bool,
}

#[derive(Debug, Clone)]
pub struct AttitudeReport {
    pub pd_only: RunLog,
    pub feedforward: RunLog,
    pub summary: AttitudeSummary,
}

fn with_mode(base: &ScenarioConfig, mode: AttitudeMode) -> ScenarioConfig {
    let mut c = base.clone();
    c.attitude.mode = mode;
    c
}

/// Runs the maneuver under PD-only and PD+feedforward attitude control from
/// identical initial conditions.
pub fn experiment_attitude_compensation(base: &ScenarioConfig) -> Result<AttitudeReport> {
    let pd_only = run(&with_mode(base, AttitudeMode::Pd))?;
    let feedforward = run(&with_mode(base, AttitudeMode::PdFeedforward))?;
    let p = &pd_only.summary;
    let f = &feedforward.summary;
    let summary = AttitudeSummary {
        pd_only_peak: p.peak_attitude_error,
        feedforward_peak: f.peak_attitude_error,
        pd_only_saturation_fraction: p.attitude_saturation_fraction,
        feedforward_saturation_fraction: f.attitude_saturation_fraction,
        claim_holds: f.peak_attitude_error < p.peak_attitude_error,
    };
    Ok(AttitudeReport { pd_only, feedforward, summary })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepPoint {
    pub torque_limit: f64,
    pub peak_attitude_error: f64,
    pub saturation_fraction: f64,
}

/// PD+feedforward runs of the maneuver at each attitude torque limit.
pub fn torque_limit_sweep(base: &ScenarioConfig, limits: &[f64]) -> Result<Vec<SweepPoint>> {
    limits
        .iter()
        .map(|&limit| {
            let mut c = with_mode(base, AttitudeMode::PdFeedforward);
            c.attitude.torque_limit = limit;
            let log = run(&c)?;
            Ok(SweepPoint {
                torque_limit: limit,
                peak_attitude_error: log.summary.peak_attitude_error,
                saturation_fraction: log.summary.attitude_saturation_fraction,
            })
        })
        .collect()
}
