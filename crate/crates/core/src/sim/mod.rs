//! Scenario loading, closed-loop runs, run logs, availability and the
//! reference experiments.

mod availability;
pub mod canned;
mod experiments;
mod run;
mod scenario;

pub use availability::{availability, format_significant, AvailabilityInputs};
pub use canned::{canned, CANNED, NONHOLONOMY_GOLDEN, NONHOLONOMY_TOLERANCE};
pub use experiments::{
    experiment_attitude_compensation, experiment_nonholonomy, experiment_overshoot, nonholonomy_comparison,
    planar_cycle_golden, time_reversed, torque_limit_sweep, AttitudeReport, AttitudeSummary, NonholonomyComparison,
    NonholonomyReport, NonholonomySummary, OvershootReport, OvershootSummary, SweepPoint,
};
pub use run::{flags, run, LogRow, RunLog, RunSummary, Tick, ASSUMPTIONS, CSV_HEADER};
pub use scenario::{
    apply_override, load_scenario, load_scenario_with, scenario_from_value, ArmGains, AttitudeConfig, ControllerConfig,
    ControllerKind, Goal, InitialState, Requirements, RunConfig, ScenarioConfig, TorqueProfile,
};
