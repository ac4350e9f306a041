//! Built-in reference scenarios. The JSON files under `scenarios/` are these
//! configs serialized.

use std::f64::consts::FRAC_PI_2;

use nalgebra::Vector3;

use super::scenario::{
    ArmGains, AttitudeConfig, ControllerConfig, ControllerKind, Goal, InitialState, Requirements, RunConfig,
    ScenarioConfig, TorqueProfile,
};
use crate::control::AttitudeMode;
use crate::model::{BaseBody, DHParams, InertiaTensor, LinkParams, Payload, SystemModel};

/// Net base rotation about +z for `planar-cycle`, from the planar Lagrangian
/// oracle integrated at tolerance 1e-13 (rad).
pub const NONHOLONOMY_GOLDEN: f64 = -0.02099976908340806;
/// Allowed deviation from [`NONHOLONOMY_GOLDEN`] (rad).
pub const NONHOLONOMY_TOLERANCE: f64 = 1e-6;

pub const CANNED: [&str; 8] = [
    "esa-dextrous",
    "free-floater-reach",
    "heavy-base-reach",
    "attitude-maneuver",
    "planar-cycle",
    "planar-cycle-reversed",
    "planar-tracking",
    "free-float-torque",
];

pub fn canned(name: &str) -> Option<ScenarioConfig> {
    Some(match name {
        "esa-dextrous" => esa_dextrous(),
        "free-floater-reach" => free_floater_reach(),
        "heavy-base-reach" => heavy_base_reach(),
        "attitude-maneuver" => attitude_maneuver(),
        "planar-cycle" => planar_cycle(),
        "planar-cycle-reversed" => planar_cycle_reversed(),
        "planar-tracking" => planar_tracking(),
        "free-float-torque" => free_float_torque(),
        _ => return None,
    })
}

/// Three shoulder joints, one elbow and a three-joint spherical wrist; the
/// joint offsets sum to a 1 m reach. Every link is 20 kg.
fn dextrous_links() -> Vec<LinkParams> {
    [
        (0.0, -FRAC_PI_2, 0.05),
        (0.0, FRAC_PI_2, 0.0),
        (0.0, -FRAC_PI_2, 0.45),
        (0.0, FRAC_PI_2, 0.0),
        (0.0, -FRAC_PI_2, 0.45),
        (0.0, FRAC_PI_2, 0.0),
        (0.0, 0.0, 0.05),
    ]
    .iter()
    .map(|&(a, alpha, d)| LinkParams::uniform(DHParams::new(a, alpha, d), 20.0, 0.05))
    .collect()
}

/// 1.5 t servicer base, 7-DOF arm, 500 kg payload.
pub fn esa_model() -> SystemModel {
    let base = BaseBody {
        mass: 1500.0,
        inertia: InertiaTensor::cuboid(1500.0, 2.0, 2.0, 2.0),
        mount_offset: Vector3::new(0.0, 0.0, 1.0),
    };
    let payload = Payload {
        mass: 500.0,
        inertia: InertiaTensor::cuboid(500.0, 0.5, 0.5, 0.5),
        grasp_offset: Vector3::new(0.0, 0.0, 0.25),
    };
    SystemModel::new(base, dextrous_links(), payload)
}

/// The same arm on a 150 kg base, comparable to the arm's 140 kg.
pub fn free_floater_model() -> SystemModel {
    let base = BaseBody {
        mass: 150.0,
        inertia: InertiaTensor::cuboid(150.0, 1.0, 1.0, 1.0),
        mount_offset: Vector3::new(0.0, 0.0, 0.5),
    };
    SystemModel::new(base, dextrous_links(), Payload::none())
}

/// Base + two links in the plane, matching the Lagrangian oracle.
pub fn planar_model() -> SystemModel {
    let base = BaseBody {
        mass: 40.0,
        inertia: InertiaTensor::diagonal(4.2, 4.2, 6.0),
        mount_offset: Vector3::new(0.5, 0.1, 0.0),
    };
    let links = vec![
        LinkParams::from_dh(
            DHParams::new(1.0, 0.0, 0.0),
            5.0,
            InertiaTensor::diagonal(0.009, 0.45, 0.45),
            Vector3::new(0.45, 0.02, 0.0),
        ),
        LinkParams::from_dh(
            DHParams::new(0.8, 0.0, 0.0),
            4.0,
            InertiaTensor::diagonal(0.005, 0.25, 0.25),
            Vector3::new(0.35, -0.01, 0.0),
        ),
    ];
    SystemModel::new(base, links, Payload::none())
}

const DEXTROUS_START: [f64; 7] = [0.0, 0.7, 0.0, -1.4, 0.0, 0.9, 0.0];

fn esa_requirements() -> Requirements {
    Requirements {
        position_accuracy: Some(3e-4),
        max_ee_speed: Some(0.1),
        forward_reach: Some(1.0),
        payload_capacity: Some(500.0),
        force_exertion: Some(200.0),
        torque_exertion: Some(20.0),
        compliance: Some([1e6, 5e4]),
    }
}

fn run(duration: f64) -> RunConfig {
    RunConfig { duration, dt: 1e-3, control_rate: 100.0, log_decimation: 10, enforce_limits: false }
}

fn controller(kind: ControllerKind) -> ControllerConfig {
    ControllerConfig { kind, gains: ArmGains::default(), torque_profile: None }
}

fn attitude(mode: AttitudeMode) -> AttitudeConfig {
    AttitudeConfig { mode, ..AttitudeConfig::default() }
}

/// 7-DOF reach with a 500 kg payload under the 0.1 m/s end-effector cap.
pub fn esa_dextrous() -> ScenarioConfig {
    ScenarioConfig {
        name: "esa-dextrous".into(),
        model: esa_model(),
        initial_state: InitialState::at_rest(DEXTROUS_START.to_vec()),
        controller: controller(ControllerKind::RmrcGeneralized),
        attitude: attitude(AttitudeMode::PdFeedforward),
        goal: Goal::Task { target: [0.15, 0.1, -0.1], relative: true, move_time: 5.0 },
        run: RunConfig { enforce_limits: true, ..run(10.0) },
        requirements: Some(esa_requirements()),
    }
}

/// Reference reach for the overshoot experiment: light base, attitude held.
pub fn free_floater_reach() -> ScenarioConfig {
    ScenarioConfig {
        name: "free-floater-reach".into(),
        model: free_floater_model(),
        initial_state: InitialState::at_rest(DEXTROUS_START.to_vec()),
        controller: controller(ControllerKind::RmrcGeneralized),
        // the locked arm is several times the base inertia; these gains keep
        // the attitude loop near critical damping
        attitude: AttitudeConfig { kp: 25.0, kd: 25.0, ..attitude(AttitudeMode::PdFeedforward) },
        goal: Goal::Task { target: [0.25, 0.15, -0.15], relative: true, move_time: 4.0 },
        run: run(8.0),
        requirements: Some(Requirements { position_accuracy: Some(3e-4), ..Requirements::default() }),
    }
}

/// `free-floater-reach` with base mass and inertia scaled by 1e9.
pub fn heavy_base_reach() -> ScenarioConfig {
    let mut config = free_floater_reach();
    let model = free_floater_model();
    let b = *model.base();
    config.name = "heavy-base-reach".into();
    config.model = model.with_base(BaseBody { mass: b.mass * 1e9, inertia: b.inertia.scaled(1e9), ..b });
    config
}

/// Fast joint-space swing for the attitude-compensation experiment.
pub fn attitude_maneuver() -> ScenarioConfig {
    ScenarioConfig {
        name: "attitude-maneuver".into(),
        model: free_floater_model(),
        initial_state: InitialState::at_rest(DEXTROUS_START.to_vec()),
        controller: controller(ControllerKind::ComputedTorque),
        attitude: attitude(AttitudeMode::PdFeedforward),
        goal: Goal::Joint { angles: vec![1.0, 0.2, 0.5, -0.8, 0.4, 0.3, 0.6], move_time: 2.0 },
        run: run(4.0),
        requirements: None,
    }
}

fn planar_waypoints() -> Vec<Vec<f64>> {
    vec![vec![0.2, 0.4], vec![1.0, 0.4], vec![1.0, 1.2], vec![0.2, 1.2], vec![0.2, 0.4]]
}

/// Closed joint-space square traversed from rest with the base left free.
pub fn planar_cycle() -> ScenarioConfig {
    ScenarioConfig {
        name: "planar-cycle".into(),
        model: planar_model(),
        initial_state: InitialState::at_rest(vec![0.2, 0.4]),
        controller: controller(ControllerKind::Prescribed),
        attitude: attitude(AttitudeMode::Off),
        goal: Goal::JointCycle { waypoints: planar_waypoints(), segment_time: 2.0 },
        run: run(8.0),
        requirements: None,
    }
}

/// Out along one diagonal and straight back.
pub fn planar_cycle_reversed() -> ScenarioConfig {
    ScenarioConfig {
        name: "planar-cycle-reversed".into(),
        goal: Goal::JointCycle { waypoints: vec![vec![0.2, 0.4], vec![1.0, 1.2], vec![0.2, 0.4]], segment_time: 2.0 },
        run: run(4.0),
        ..planar_cycle()
    }
}

/// Quintic joint move on the planar free-floater under computed torque.
pub fn planar_tracking() -> ScenarioConfig {
    ScenarioConfig {
        name: "planar-tracking".into(),
        model: planar_model(),
        initial_state: InitialState::at_rest(vec![0.3, -0.5]),
        controller: controller(ControllerKind::ComputedTorque),
        attitude: attitude(AttitudeMode::Off),
        goal: Goal::Joint { angles: vec![1.1, -1.3], move_time: 3.0 },
        run: run(4.0),
        requirements: None,
    }
}

/// Open-loop joint torques from rest, base free: the conservation run.
pub fn free_float_torque() -> ScenarioConfig {
    ScenarioConfig {
        name: "free-float-torque".into(),
        model: free_floater_model(),
        initial_state: InitialState::at_rest(DEXTROUS_START.to_vec()),
        controller: ControllerConfig {
            kind: ControllerKind::OpenLoop,
            gains: ArmGains::default(),
            torque_profile: Some(TorqueProfile {
                amplitude: vec![0.2, 0.3, 0.1, 0.25, 0.05, 0.075, 0.025],
                frequency: 0.1,
                phase: vec![0.0, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0],
            }),
        },
        attitude: attitude(AttitudeMode::Off),
        goal: Goal::Hold,
        run: run(10.0),
        requirements: None,
    }
}
