//! Newton–Euler inverse dynamics, mount reaction wrench, free-floating forward
//! dynamics, momentum and time integration.
//!
//! The plant is a free-floating base carrying a serial arm and an optional
//! payload, with no gravity. Momentum is reported, never enforced.

mod forward;
mod integrate;
mod momentum;
mod rnea;

pub use forward::{
    forward_dynamics_fixed, forward_dynamics_free, inverse_dynamics_free, momentum_consistent_base_accel,
    Accelerations, EquationsOfMotion,
};
pub use integrate::{clamp_torques, step, step_with, Actuation};
pub use momentum::{momentum, reaction_wrench, MomentumState, ReactionWrench};
pub use rnea::{link_kinematics, newton_euler, BaseAcceleration, LinkKinematics, NewtonEulerResult};

#[cfg(test)]
mod tests;
