mod common;

use common::{random_spatial_model, random_state, Lcg};
use freeflyer_core::dynamics::{
    forward_dynamics_free, inverse_dynamics_free, link_kinematics, momentum, reaction_wrench, step, BaseAcceleration,
};
use freeflyer_core::kinematics::{system_com, ChainPose};
use freeflyer_core::nalgebra::{DVector, UnitQuaternion, Vector3};
use freeflyer_core::sim::canned::free_floater_model;
use freeflyer_core::{SystemModel, SystemState, Wrench};
use proptest::prelude::*;

/// Angular momentum of the links and payload about the mount, the mount
/// velocity and the arm's linear momentum.
fn arm_about_mount(model: &SystemModel, state: &SystemState) -> (Vector3<f64>, Vector3<f64>, Vector3<f64>) {
    let pose = ChainPose::new(model, state);
    let kin = link_kinematics(model, state, &DVector::zeros(model.dof()), &BaseAcceleration::zero());
    let mount = pose.mount();
    let mut bodies: Vec<_> = model
        .links()
        .iter()
        .zip(&pose.rotations)
        .zip(&pose.link_coms)
        .map(|((l, r), c)| (l.mass, r * l.inertia.matrix() * r.transpose(), *c))
        .collect();
    let r_ee = pose.end_effector_rotation();
    let payload = model.payload();
    bodies.push((payload.mass, r_ee * payload.inertia.matrix() * r_ee.transpose(), pose.payload_com));

    let mut h = Vector3::zeros();
    let mut p = Vector3::zeros();
    for (i, (m, inertia, c)) in bodies.iter().enumerate() {
        let v = kin.com_velocity[i] * *m;
        h += inertia * kin.angular_velocity[i] + (c - mount).cross(&v);
        p += v;
    }
    let v_mount = state.base_lin_velocity + state.base_ang_velocity_inertial().cross(&(mount - state.base_position));
    (h, v_mount, p)
}

#[test]
fn inverse_forward_round_trip() {
    let mut rng = Lcg::new(21);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let model = random_spatial_model(&mut rng);
        let state = random_state(&mut rng, model.dof(), true);
        let torques = rng.vector(model.dof(), -20.0, 20.0);
        let wrench = Wrench::torque_in_base(rng.vec3(-5.0, 5.0));
        let acc = forward_dynamics_free(&model, &state, &torques, &wrench).unwrap();
        let (ne, base) = inverse_dynamics_free(&model, &state, &acc.joints, &wrench).unwrap();
        worst = worst.max((&ne.joint_torques - &torques).norm() / torques.norm());
        assert!((base.linear - acc.base.linear).norm() <= 1e-9 * acc.base.linear.norm().max(1e-9));
    }
    assert!(worst < 1e-9, "worst relative torque error {worst:e}");
}

#[test]
fn reaction_moment_is_rate_of_arm_momentum_about_mount() {
    let mut rng = Lcg::new(22);
    let h = 1e-4;
    for _ in 0..20 {
        let model = random_spatial_model(&mut rng);
        let state = random_state(&mut rng, model.dof(), true);
        let qdd = rng.vector(model.dof(), -2.0, 2.0);
        let reaction = reaction_wrench(&model, &state, &qdd).unwrap();

        // torques that produce qdd with no external wrench, held over two steps
        let (ne, _) = inverse_dynamics_free(&model, &state, &qdd, &Wrench::zero()).unwrap();
        let s1 = step(&model, &state, &ne.joint_torques, &Vector3::zeros(), h).unwrap();
        let s2 = step(&model, &s1, &ne.joint_torques, &Vector3::zeros(), h).unwrap();
        let (h0, v_mount, p_arm) = arm_about_mount(&model, &state);
        let (h1, _, _) = arm_about_mount(&model, &s1);
        let (h2, _, _) = arm_about_mount(&model, &s2);
        let dh = (h1 * 4.0 - h0 * 3.0 - h2) / (2.0 * h);

        // the mount moves, so the moment about it picks up v_m × P_arm
        let expected = -(dh + v_mount.cross(&p_arm));
        let rel = (reaction.moment - expected).norm() / expected.norm();
        assert!(rel < 1e-4, "N_r {} vs finite difference {expected}: {rel:e}", reaction.moment);
    }
}

#[test]
fn joint_power_is_kinetic_energy_rate() {
    let mut rng = Lcg::new(23);
    let h = 1e-5;
    for _ in 0..20 {
        let model = random_spatial_model(&mut rng);
        let state = random_state(&mut rng, model.dof(), true);
        let torques = rng.vector(model.dof(), -10.0, 10.0);
        let s1 = step(&model, &state, &torques, &Vector3::zeros(), h).unwrap();
        let s2 = step(&model, &s1, &torques, &Vector3::zeros(), h).unwrap();
        let ke = |s: &SystemState| momentum(&model, s).kinetic_energy;
        let rate = (ke(&s1) * 4.0 - ke(&state) * 3.0 - ke(&s2)) / (2.0 * h);
        let power = torques.dot(&state.joint_rates);
        assert!((rate - power).abs() < 1e-6 * power.abs().max(1.0), "dKE/dt {rate} vs τ·θ̇ {power}");
    }
}

#[test]
fn zero_torque_run_conserves_energy_and_momentum() {
    let model = free_floater_model();
    let mut rng = Lcg::new(24);
    let mut state = random_state(&mut rng, model.dof(), true);
    state.joint_rates *= 0.3;
    let start = momentum(&model, &state);
    let zero = DVector::zeros(model.dof());
    let mut worst_ke: f64 = 0.0;
    let mut worst_p: f64 = 0.0;
    let mut worst_l: f64 = 0.0;
    for _ in 0..10_000 {
        state = step(&model, &state, &zero, &Vector3::zeros(), 1e-3).unwrap();
        let m = momentum(&model, &state);
        worst_ke = worst_ke.max((m.kinetic_energy - start.kinetic_energy).abs() / start.kinetic_energy);
        worst_p = worst_p.max((m.linear - start.linear).norm());
        worst_l = worst_l.max((m.angular - start.angular).norm());
    }
    assert!((state.t - 10.0).abs() < 1e-9);
    assert!(worst_ke < 1e-6, "relative KE drift {worst_ke:e}");
    assert!(worst_p < 1e-9 && worst_l < 1e-9, "P drift {worst_p:e}, L drift {worst_l:e}");
}

/// State advanced along its own velocities by `h` (no dynamics).
fn drift(state: &SystemState, h: f64) -> SystemState {
    SystemState {
        base_position: state.base_position + state.base_lin_velocity * h,
        base_attitude: state.base_attitude * UnitQuaternion::from_scaled_axis(state.base_ang_velocity * h),
        joint_angles: &state.joint_angles + &state.joint_rates * h,
        ..state.clone()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn linear_momentum_is_total_mass_times_com_velocity(seed in any::<u64>()) {
        let mut rng = Lcg::new(seed);
        let model = random_spatial_model(&mut rng);
        let state = random_state(&mut rng, model.dof(), true);
        let h = 1e-6;
        let v_com = (system_com(&model, &drift(&state, h)) - system_com(&model, &drift(&state, -h))) / (2.0 * h);
        let p = momentum(&model, &state).linear;
        prop_assert!((p - v_com * model.total_mass()).norm() < 1e-6 * p.norm().max(1.0));
    }

    #[test]
    fn kinetic_energy_is_non_negative_and_quadratic(seed in any::<u64>(), k in 0.1..10.0f64) {
        let mut rng = Lcg::new(seed);
        let model = random_spatial_model(&mut rng);
        let state = random_state(&mut rng, model.dof(), true);
        let scaled = SystemState {
            base_lin_velocity: state.base_lin_velocity * k,
            base_ang_velocity: state.base_ang_velocity * k,
            joint_rates: &state.joint_rates * k,
            ..state.clone()
        };
        let ke = momentum(&model, &state).kinetic_energy;
        prop_assert!(ke >= 0.0);
        prop_assert!((momentum(&model, &scaled).kinetic_energy - k * k * ke).abs() < 1e-10 * (k * k * ke).max(1.0));
    }

    #[test]
    fn reaction_force_balances_base_acceleration(seed in any::<u64>()) {
        let mut rng = Lcg::new(seed);
        let model = random_spatial_model(&mut rng);
        let state = random_state(&mut rng, model.dof(), true);
        let qdd = rng.vector(model.dof(), -2.0, 2.0);
        let reaction = reaction_wrench(&model, &state, &qdd).unwrap();
        let (_, base) = inverse_dynamics_free(&model, &state, &qdd, &Wrench::zero()).unwrap();
        let expected = base.linear * model.base().mass;
        prop_assert!((reaction.force_on_base() - expected).norm() < 1e-9 * expected.norm().max(1.0));
    }
}
