//! Simulation and control of free-floating spacecraft-mounted manipulators.
//!
//! The crate is organised bottom-up:
//!
//! * [`model`]: base, link and payload descriptions plus validation.
//! * [`kinematics`]: DH chains, system centre of mass, barycentric link vectors,
//!   inertial end-effector position and the fixed-base / generalized Jacobians.
//! * [`dynamics`]: recursive Newton–Euler, mount reaction wrench, free-floating
//!   forward dynamics, momentum bookkeeping and RK4 integration.
//! * [`control`]: quintic interpolation, resolved-motion rate control,
//!   computed torque and reaction-feedforward attitude control.
//! * [`sim`]: scenario files, closed-loop runs, run logs, availability and the
//!   three reference experiments.
//! * [`selfcheck`]: the fast invariant suite behind `freeflyer check`.
//!
//! Everything is microgravity: no gravity, no orbital dynamics.

// `!(x > 0.0)` is how NaN gets rejected along with non-positive values
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod control;
pub mod dynamics;
pub mod kinematics;
pub mod model;
pub mod selfcheck;
pub mod sim;

pub use model::{
    BaseBody, DHParams, InertiaTensor, LinkParams, Payload, SystemModel, SystemState, ValidationReport, Wrench,
    WrenchFrame,
};

pub use nalgebra;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid model: {0}")]
    InvalidModel(ValidationReport),
    #[error("state does not match model: {0}")]
    StateMismatch(String),
    #[error("generalized mass matrix is singular (condition estimate {condition:e})")]
    SingularMassMatrix { condition: f64 },
    #[error("integration failure at t = {t} s: {entry} is not finite")]
    IntegrationFailure { t: f64, entry: String },
    #[error("scenario parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error("invalid scenario field `{path}`: {message}")]
    InvalidField { path: String, message: String },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for errors caused by bad input rather than by a failed computation.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::InvalidModel(_)
                | Error::StateMismatch(_)
                | Error::Parse { .. }
                | Error::InvalidField { .. }
                | Error::InvalidArgument(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
