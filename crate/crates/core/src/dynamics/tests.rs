use approx::assert_relative_eq;
use nalgebra::{DVector, UnitQuaternion, Vector3};

use super::*;
use crate::model::{BaseBody, DHParams, InertiaTensor, LinkParams, Payload, SystemModel, SystemState, Wrench};
use crate::Error;

fn spatial_arm() -> SystemModel {
    let base = BaseBody {
        mass: 120.0,
        inertia: InertiaTensor::diagonal(20.0, 24.0, 28.0),
        mount_offset: Vector3::new(0.3, -0.2, 0.6),
    };
    let links = vec![
        LinkParams::uniform(DHParams::new(0.0, -1.2, 0.3), 8.0, 0.05),
        LinkParams::uniform(DHParams::new(0.6, 0.4, 0.1), 6.0, 0.04),
        LinkParams::uniform(DHParams::new(0.5, 0.0, 0.0), 4.0, 0.03),
    ];
    let payload = Payload {
        mass: 3.0,
        inertia: InertiaTensor::diagonal(0.05, 0.06, 0.07),
        grasp_offset: Vector3::new(0.05, 0.0, 0.1),
    };
    SystemModel::new(base, links, payload)
}

fn moving_state() -> SystemState {
    SystemState {
        t: 0.0,
        base_position: Vector3::new(0.1, 0.2, -0.3),
        base_attitude: UnitQuaternion::from_euler_angles(0.2, -0.1, 0.4),
        base_lin_velocity: Vector3::new(0.05, -0.02, 0.01),
        base_ang_velocity: Vector3::new(0.03, 0.02, -0.04),
        joint_angles: DVector::from_vec(vec![0.4, -0.7, 1.1]),
        joint_rates: DVector::from_vec(vec![0.3, -0.5, 0.8]),
    }
}

#[test]
fn static_microgravity_needs_no_torque() {
    let model = spatial_arm();
    let state = SystemState::at_rest(DVector::from_vec(vec![0.4, -0.7, 1.1]));
    let r = newton_euler(&model, &state, &DVector::zeros(3), &BaseAcceleration::zero());
    assert_eq!(r.joint_torques, DVector::zeros(3));
    assert_eq!(r.total_force, Vector3::zeros());
    assert_eq!(r.total_moment, Vector3::zeros());
}

#[test]
fn sums_match_recursion() {
    let model = spatial_arm();
    let state = moving_state();
    let base = BaseAcceleration { linear: Vector3::new(0.1, 0.0, -0.2), angular: Vector3::new(0.0, 0.3, 0.1) };
    let r = newton_euler(&model, &state, &DVector::from_vec(vec![1.0, -2.0, 0.5]), &base);
    assert_eq!(r.link_forces.len(), 4);
    let sum: Vector3<f64> = r.link_forces.iter().sum();
    assert_eq!(sum, r.total_force);
    assert_relative_eq!(r.mount_force, r.total_force, max_relative = 1e-12);
    let moments: Vector3<f64> = r.link_moments.iter().sum();
    assert_eq!(moments, r.total_moment);
}

#[test]
fn principal_axis_spin_has_no_gyroscopic_moment() {
    let base =
        BaseBody { mass: 100.0, inertia: InertiaTensor::diagonal(10.0, 10.0, 10.0), mount_offset: Vector3::zeros() };
    let link = LinkParams::from_dh(
        DHParams::new(0.0, 0.0, 0.2),
        2.0,
        InertiaTensor::diagonal(0.1, 0.2, 0.3),
        Vector3::new(0.0, 0.0, 0.1),
    );
    let model = SystemModel::new(base, vec![link], Payload::none());
    let mut state = SystemState::at_rest(DVector::zeros(1));
    state.joint_rates[0] = 3.0;
    let r = newton_euler(&model, &state, &DVector::from_vec(vec![0.5]), &BaseAcceleration::zero());
    let w = Vector3::new(0.0, 0.0, 3.0);
    let iw = model.links()[0].inertia.matrix() * w;
    assert_eq!(w.cross(&iw), Vector3::zeros());
    // the only moment left is I ẇ about the spin axis
    assert_eq!(r.link_moments[0], Vector3::new(0.0, 0.0, 0.3 * 0.5));
}

#[test]
fn mass_matrix_is_symmetric_positive_definite() {
    let model = spatial_arm();
    let eom = EquationsOfMotion::assemble(&model, &moving_state());
    let h = &eom.mass_matrix;
    assert_eq!(h.nrows(), 9);
    let eig = nalgebra::SymmetricEigen::new(h.clone()).eigenvalues;
    assert!(eig.min() > 0.0);
    // the translational block is m_T I
    for i in 0..3 {
        assert_relative_eq!(h[(i, i)], model.total_mass(), max_relative = 1e-12);
    }
}

#[test]
fn zero_torque_at_rest_does_not_accelerate() {
    let model = spatial_arm();
    let state = SystemState::at_rest(DVector::from_vec(vec![0.4, -0.7, 1.1]));
    let acc = forward_dynamics_free(&model, &state, &DVector::zeros(3), &Wrench::zero()).unwrap();
    assert!(acc.joints.amax() < 1e-15);
    assert!(acc.base.linear.amax() < 1e-15);
    assert!(acc.base.angular.amax() < 1e-15);
}

#[test]
fn forward_then_inverse_recovers_torques() {
    let model = spatial_arm();
    let state = moving_state();
    let tau = DVector::from_vec(vec![2.0, -1.5, 0.7]);
    let ext = Wrench {
        force: Vector3::new(1.0, 0.0, 2.0),
        torque: Vector3::new(0.0, -3.0, 0.5),
        frame: crate::WrenchFrame::Mount,
    };
    let acc = forward_dynamics_free(&model, &state, &tau, &ext).unwrap();
    let r = newton_euler(&model, &state, &acc.joints, &acc.base);
    assert_relative_eq!(r.joint_torques, tau, max_relative = 1e-10);
    let (f, m) = ext.at_base_com(&model, &state);
    assert_relative_eq!(r.base_force, f, epsilon = 1e-9);
    assert_relative_eq!(r.base_moment, m, epsilon = 1e-9);

    let (ne, base) = inverse_dynamics_free(&model, &state, &acc.joints, &ext).unwrap();
    assert_relative_eq!(ne.joint_torques, tau, max_relative = 1e-9);
    assert_relative_eq!(base.linear, acc.base.linear, epsilon = 1e-12);
}

#[test]
fn singular_mass_matrix_is_reported() {
    let base = BaseBody { mass: 10.0, inertia: InertiaTensor::diagonal(1.0, 1.0, 1.0), mount_offset: Vector3::zeros() };
    let mut link = LinkParams::uniform(DHParams::new(0.5, 0.0, 0.0), 1.0, 0.05);
    // massless, inertia-free link: its joint has no inertia at all
    link.mass = 0.0;
    link.inertia = InertiaTensor::diagonal(0.0, 0.0, 0.0);
    let model = SystemModel::new(base, vec![link], Payload::none());
    let err =
        forward_dynamics_free(&model, &SystemState::at_rest(DVector::zeros(1)), &DVector::zeros(1), &Wrench::zero())
            .unwrap_err();
    assert!(matches!(err, Error::SingularMassMatrix { .. }), "{err}");
}

#[test]
fn momentum_of_rigid_translation() {
    let model = spatial_arm();
    let mut state = SystemState::at_rest(DVector::from_vec(vec![0.4, -0.7, 1.1]));
    let v = Vector3::new(0.2, -0.1, 0.05);
    state.base_lin_velocity = v;
    let m = momentum(&model, &state);
    assert_relative_eq!(m.linear, v * model.total_mass(), max_relative = 1e-14);
    assert!(m.angular.norm() < 1e-13);
    assert_relative_eq!(m.kinetic_energy, 0.5 * model.total_mass() * v.norm_squared(), max_relative = 1e-14);

    let rest = momentum(&model, &SystemState::at_rest(DVector::zeros(3)));
    assert_eq!(rest.linear, Vector3::zeros());
    assert_eq!(rest.angular, Vector3::zeros());
    assert_eq!(rest.kinetic_energy, 0.0);
}

#[test]
fn stationary_arm_has_no_reaction() {
    let model = spatial_arm();
    let state = SystemState::at_rest(DVector::from_vec(vec![0.4, -0.7, 1.1]));
    let r = reaction_wrench(&model, &state, &DVector::zeros(3)).unwrap();
    assert_eq!(r.moment, Vector3::zeros());
    assert_eq!(r.force_on_base(), Vector3::zeros());
}

#[test]
fn planar_swing_reacts_about_the_normal() {
    let base = BaseBody {
        mass: 50.0,
        inertia: InertiaTensor::diagonal(5.0, 6.0, 7.0),
        mount_offset: Vector3::new(0.4, 0.1, 0.0),
    };
    let link = LinkParams::uniform(DHParams::new(0.8, 0.0, 0.0), 3.0, 0.03);
    let model = SystemModel::new(base, vec![link], Payload::none());
    let mut state = SystemState::at_rest(DVector::from_vec(vec![0.6]));
    state.joint_rates[0] = 0.9;
    let r = reaction_wrench(&model, &state, &DVector::from_vec(vec![-1.3])).unwrap();
    assert!(r.moment.z.abs() > 1e-3);
    assert!(r.moment.x.abs() < 1e-14 && r.moment.y.abs() < 1e-14, "{:?}", r.moment);
    assert!(r.total_force.z.abs() < 1e-14);
}

#[test]
fn zero_torque_step_from_rest_only_advances_time() {
    let model = spatial_arm();
    let state = SystemState::at_rest(DVector::from_vec(vec![0.4, -0.7, 1.1]));
    let next = step(&model, &state, &DVector::zeros(3), &Vector3::zeros(), 1e-3).unwrap();
    assert_eq!(next.t, 1e-3);
    assert_eq!(next.joint_angles, state.joint_angles);
    assert_eq!(next.joint_rates, state.joint_rates);
    assert_eq!(next.base_position, state.base_position);
    assert_eq!(next.base_attitude, state.base_attitude);
}

#[test]
fn step_rejects_bad_inputs() {
    let model = spatial_arm();
    let state = SystemState::at_rest(DVector::zeros(3));
    assert!(matches!(step(&model, &state, &DVector::zeros(3), &Vector3::zeros(), 0.0), Err(Error::InvalidArgument(_))));
    assert!(matches!(step(&model, &state, &DVector::zeros(2), &Vector3::zeros(), 1e-3), Err(Error::StateMismatch(_))));
    let err = step(&model, &state, &DVector::from_vec(vec![0.0, f64::NAN, 0.0]), &Vector3::zeros(), 1e-3).unwrap_err();
    match err {
        Error::IntegrationFailure { t, entry } => {
            assert_eq!(t, 0.0);
            assert!(entry.starts_with("base_") || entry.starts_with("joint_"), "{entry}");
        }
        other => panic!("unexpected {other}"),
    }
}

#[test]
fn step_clamps_torques() {
    let model = spatial_arm().with_torque_limits(vec![1.0, 1.0, 1.0]);
    let state = SystemState::at_rest(DVector::from_vec(vec![0.4, -0.7, 1.1]));
    let big = step(&model, &state, &DVector::from_vec(vec![50.0, 0.0, 0.0]), &Vector3::zeros(), 1e-3).unwrap();
    let lim = step(&model, &state, &DVector::from_vec(vec![1.0, 0.0, 0.0]), &Vector3::zeros(), 1e-3).unwrap();
    assert_eq!(big, lim);
}

#[test]
fn quaternion_stays_normalised() {
    let model = spatial_arm();
    let mut state = moving_state();
    state.base_ang_velocity = Vector3::new(1.0, -2.0, 0.5);
    for _ in 0..200 {
        state =
            step(&model, &state, &DVector::from_vec(vec![1.0, 0.5, -0.2]), &Vector3::new(0.1, 0.0, 0.0), 5e-3).unwrap();
        assert!((state.base_attitude.quaternion().norm() - 1.0).abs() < 1e-9);
    }
}
