#![allow(dead_code)]

use std::path::PathBuf;

use freeflyer_core::nalgebra::{DVector, UnitQuaternion, Vector3};
use freeflyer_core::{BaseBody, DHParams, InertiaTensor, LinkParams, Payload, SystemModel, SystemState};
use serde_json::Value;

pub fn fixture() -> Value {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/planar_oracle.json");
    serde_json::from_str(&std::fs::read_to_string(path).expect("fixture present")).expect("fixture is JSON")
}

pub fn floats(v: &Value) -> Vec<f64> {
    v.as_array().expect("array").iter().map(|x| x.as_f64().expect("number")).collect()
}

fn p(params: &Value, key: &str) -> f64 {
    params[key].as_f64().unwrap_or_else(|| panic!("missing {key}"))
}

/// 3D model equivalent to the oracle's planar base + two links. Every CoM lies
/// in the plane and every inertia is principal about z, so the motion stays planar.
pub fn planar_model(params: &Value) -> SystemModel {
    let i0 = p(params, "I0");
    let base = BaseBody {
        mass: p(params, "m0"),
        inertia: InertiaTensor::diagonal(0.7 * i0, 0.7 * i0, i0),
        mount_offset: Vector3::new(p(params, "s0x"), p(params, "s0y"), 0.0),
    };
    let link = |a: &str, m: &str, i: &str, cx: &str, cy: &str| {
        let izz = p(params, i);
        LinkParams::from_dh(
            DHParams::new(p(params, a), 0.0, 0.0),
            p(params, m),
            InertiaTensor::diagonal(0.02 * izz, izz, izz),
            Vector3::new(p(params, cx), p(params, cy), 0.0),
        )
    };
    let links = vec![link("a1", "m1", "I1", "c1x", "c1y"), link("a2", "m2", "I2", "c2x", "c2y")];
    SystemModel::new(base, links, Payload::none())
}

/// Oracle coordinates `q = (x, y, φ, θ1, θ2)` and their rates.
pub fn planar_state(q: &[f64], qd: &[f64]) -> SystemState {
    SystemState {
        t: 0.0,
        base_position: Vector3::new(q[0], q[1], 0.0),
        base_attitude: UnitQuaternion::from_axis_angle(&Vector3::z_axis(), q[2]),
        base_lin_velocity: Vector3::new(qd[0], qd[1], 0.0),
        base_ang_velocity: Vector3::new(0.0, 0.0, qd[2]),
        joint_angles: DVector::from_vec(vec![q[3], q[4]]),
        joint_rates: DVector::from_vec(vec![qd[3], qd[4]]),
    }
}

/// Deterministic pseudo-random stream for tests that need many samples
/// without proptest shrinking.
pub struct Lcg(u64);

impl Lcg {
    pub fn new(seed: u64) -> Self {
        Self(seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407))
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        self.0 = self.0.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        let u = (self.0 >> 11) as f64 / (1u64 << 53) as f64;
        lo + (hi - lo) * u
    }

    pub fn vector(&mut self, n: usize, lo: f64, hi: f64) -> DVector<f64> {
        DVector::from_iterator(n, (0..n).map(|_| self.uniform(lo, hi)))
    }

    pub fn vec3(&mut self, lo: f64, hi: f64) -> Vector3<f64> {
        Vector3::new(self.uniform(lo, hi), self.uniform(lo, hi), self.uniform(lo, hi))
    }

    pub fn attitude(&mut self) -> UnitQuaternion<f64> {
        UnitQuaternion::from_euler_angles(self.uniform(-3.0, 3.0), self.uniform(-1.5, 1.5), self.uniform(-3.0, 3.0))
    }
}

/// A random 3-DOF spatial arm on a comparable base, with a payload.
pub fn random_spatial_model(rng: &mut Lcg) -> SystemModel {
    let m0 = rng.uniform(20.0, 200.0);
    let base = BaseBody {
        mass: m0,
        inertia: InertiaTensor::cuboid(m0, rng.uniform(0.5, 2.0), rng.uniform(0.5, 2.0), rng.uniform(0.5, 2.0)),
        mount_offset: rng.vec3(-1.0, 1.0),
    };
    let links = (0..3)
        .map(|_| {
            let dh = DHParams {
                a: rng.uniform(0.0, 0.8),
                alpha: rng.uniform(-3.0, 3.0),
                d: rng.uniform(-0.4, 0.4),
                theta_offset: rng.uniform(-1.0, 1.0),
            };
            let mut link = LinkParams::uniform(dh, rng.uniform(1.0, 30.0), 0.05);
            // move the CoM off the link axis
            link.com_offset += rng.vec3(-0.05, 0.05);
            link.com_to_tip = link.link_vector - link.com_offset;
            link
        })
        .collect();
    let mp = rng.uniform(0.5, 20.0);
    let payload =
        Payload { mass: mp, inertia: InertiaTensor::cuboid(mp, 0.3, 0.2, 0.4), grasp_offset: rng.vec3(-0.2, 0.2) };
    SystemModel::new(base, links, payload)
}

pub fn random_state(rng: &mut Lcg, n: usize, moving: bool) -> SystemState {
    let scale = if moving { 1.0 } else { 0.0 };
    SystemState {
        t: 0.0,
        base_position: rng.vec3(-1.0, 1.0),
        base_attitude: rng.attitude(),
        base_lin_velocity: rng.vec3(-0.3, 0.3) * scale,
        base_ang_velocity: rng.vec3(-0.3, 0.3) * scale,
        joint_angles: rng.vector(n, -3.0, 3.0),
        joint_rates: rng.vector(n, -1.0, 1.0) * scale,
    }
}
