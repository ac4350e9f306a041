//! The closed-loop simulation: RK4 plant at `dt`, controllers at the control
//! rate with zero-order hold, logging every `log_decimation` steps.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use nalgebra::{DVector, UnitQuaternion, Vector3};
use serde::Serialize;

use super::scenario::{ControllerKind, Goal, ScenarioConfig};
use crate::control::{
    attitude_command, attitude_error, computed_torque_with, interpolate, joint_accel_command, rmrc_generalized,
    rmrc_naive, AttitudeCommand, AttitudeMode, BasePose, ControllerGains, JointPath, TrajectorySetpoint,
};
use crate::dynamics::{clamp_torques, forward_dynamics_free, momentum, reaction_wrench, step_with, Actuation};
use crate::kinematics::{ee_position_explicit, system_com};
use crate::model::{SystemModel, SystemState, Wrench};
use crate::Result;

/// Bits of the `sat` column.
pub mod flags {
    pub const ATTITUDE_SATURATED: u8 = 1;
    pub const TORQUE_CLAMPED: u8 = 2;
    pub const RATE_CLAMPED: u8 = 4;
    pub const SPEED_CLAMPED: u8 = 8;
    pub const SINGULAR: u8 = 16;
}

pub const CSV_HEADER: &str = "t,px,py,pz,err,Px,Py,Pz,Lx,Ly,Lz,KE,Nrx,Nry,Nrz,att_err,sat";

/// Model assumptions echoed in every run summary.
pub const ASSUMPTIONS: [&str; 4] = [
    "microgravity: no gravity, gravity gradient or orbital dynamics",
    "rigid bodies; link compliance is not modelled",
    "ideal attitude actuator saturating on torque norm",
    "momentum is reported, never enforced",
];

#[derive(Debug, Clone, PartialEq)]
pub struct LogRow {
    pub t: f64,
    /// Inertial end-effector position p*.
    pub ee_position: Vector3<f64>,
    /// Tracking error; see [`RunSummary::error_kind`].
    pub error: f64,
    pub linear_momentum: Vector3<f64>,
    /// About the system CoM.
    pub angular_momentum: Vector3<f64>,
    pub kinetic_energy: f64,
    /// N_r held from the latest control tick.
    pub reaction_moment: Vector3<f64>,
    /// Attitude error angle (rad).
    pub attitude_error: f64,
    pub flags: u8,
    pub com: Vector3<f64>,
    pub state: SystemState,
}

/// Everything the controller decided at one control tick.
#[derive(Debug, Clone, PartialEq)]
pub struct Tick {
    pub state: SystemState,
    pub commanded_accels: DVector<f64>,
    pub joint_torques: DVector<f64>,
    pub attitude: AttitudeCommand,
    /// N_r for `commanded_accels`, inertial frame.
    pub reaction_moment: Vector3<f64>,
    pub flags: u8,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub name: String,
    pub controller: ControllerKind,
    pub attitude_mode: AttitudeMode,
    pub duration: f64,
    pub dt: f64,
    pub steps: usize,
    pub control_ticks: usize,
    pub rows: usize,
    /// `end_effector_position_m`, `joint_angle_rad` or `end_effector_drift_m`.
    pub error_kind: String,
    pub peak_error: f64,
    pub final_error: f64,
    pub peak_attitude_error: f64,
    pub final_attitude_error: f64,
    pub max_linear_momentum: f64,
    pub max_angular_momentum: f64,
    pub max_com_drift: f64,
    pub initial_kinetic_energy: f64,
    pub final_kinetic_energy: f64,
    /// Rotation vector from the initial to the final base attitude, inertial frame.
    pub net_base_rotation: [f64; 3],
    pub attitude_saturation_fraction: f64,
    pub torque_clamp_fraction: f64,
    pub singular_ticks: usize,
    pub wall_time_s: f64,
    pub assumptions: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct RunLog {
    pub rows: Vec<LogRow>,
    pub ticks: Vec<Tick>,
    pub summary: RunSummary,
    pub final_state: SystemState,
}

impl RunLog {
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "{CSV_HEADER}")?;
        for r in &self.rows {
            let vals = [
                r.t,
                r.ee_position.x,
                r.ee_position.y,
                r.ee_position.z,
                r.error,
                r.linear_momentum.x,
                r.linear_momentum.y,
                r.linear_momentum.z,
                r.angular_momentum.x,
                r.angular_momentum.y,
                r.angular_momentum.z,
                r.kinetic_energy,
                r.reaction_moment.x,
                r.reaction_moment.y,
                r.reaction_moment.z,
                r.attitude_error,
            ];
            for v in vals {
                write!(out, "{v:.16e},")?;
            }
            writeln!(out, "{}", r.flags)?;
        }
        Ok(())
    }

    pub fn csv(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("ASCII output")
    }

    pub fn summary_json(&self) -> String {
        serde_json::to_string_pretty(&self.summary).expect("summary serializes")
    }

    /// Writes `<stem>.csv` and `<stem>.summary.json` into `dir`.
    pub fn write_files(&self, dir: &Path, stem: &str) -> Result<(PathBuf, PathBuf)> {
        std::fs::create_dir_all(dir)?;
        let csv = dir.join(format!("{stem}.csv"));
        let summary = dir.join(format!("{stem}.summary.json"));
        let mut f = std::io::BufWriter::new(std::fs::File::create(&csv)?);
        self.write_csv(&mut f)?;
        f.flush()?;
        std::fs::write(&summary, self.summary_json() + "\n")?;
        Ok((csv, summary))
    }

    /// True when rows and ticks match exactly (wall time is ignored).
    pub fn same_trajectory(&self, other: &RunLog) -> bool {
        self.rows == other.rows && self.ticks == other.ticks
    }
}

enum Reference {
    Task { start: Vector3<f64>, goal: Vector3<f64>, move_time: f64 },
    Joint(JointPath),
    Drift(Vector3<f64>),
}

impl Reference {
    fn new(config: &ScenarioConfig, model: &SystemModel, initial: &SystemState) -> Result<Self> {
        let p0 = ee_position_explicit(model, initial);
        let rmrc = matches!(config.controller.kind, ControllerKind::RmrcGeneralized | ControllerKind::RmrcNaive);
        let joint = matches!(config.controller.kind, ControllerKind::ComputedTorque | ControllerKind::Prescribed);
        Ok(match &config.goal {
            Goal::Task { target, relative, move_time } => {
                let t = Vector3::from(*target);
                Reference::Task { start: p0, goal: if *relative { p0 + t } else { t }, move_time: *move_time }
            }
            Goal::Joint { angles, move_time } => Reference::Joint(JointPath::new(
                vec![initial.joint_angles.clone(), DVector::from_column_slice(angles)],
                *move_time,
            )?),
            Goal::JointCycle { waypoints, segment_time } => Reference::Joint(JointPath::new(
                waypoints.iter().map(|w| DVector::from_column_slice(w)).collect(),
                *segment_time,
            )?),
            Goal::Hold if rmrc => Reference::Task { start: p0, goal: p0, move_time: 1.0 },
            Goal::Hold if joint => Reference::Joint(JointPath::new(vec![initial.joint_angles.clone(); 2], 1.0)?),
            Goal::Hold => Reference::Drift(p0),
        })
    }

    fn kind(&self) -> &'static str {
        match self {
            Reference::Task { .. } => "end_effector_position_m",
            Reference::Joint(_) => "joint_angle_rad",
            Reference::Drift(_) => "end_effector_drift_m",
        }
    }

    fn task(&self, t: f64) -> Result<TrajectorySetpoint> {
        match self {
            Reference::Task { start, goal, move_time } => interpolate(
                &DVector::from_column_slice(start.as_slice()),
                &DVector::from_column_slice(goal.as_slice()),
                *move_time,
                t,
            ),
            Reference::Drift(p) => Ok(TrajectorySetpoint::hold(t, DVector::from_column_slice(p.as_slice()))),
            Reference::Joint(_) => unreachable!("validated: task controllers have task references"),
        }
    }

    fn error(&self, state: &SystemState, ee: &Vector3<f64>) -> Result<f64> {
        Ok(match self {
            Reference::Joint(path) => (path.sample(state.t).position - &state.joint_angles).norm(),
            _ => {
                let sp = self.task(state.t)?;
                (Vector3::new(sp.position[0], sp.position[1], sp.position[2]) - ee).norm()
            }
        })
    }
}

struct Runner<'a> {
    config: &'a ScenarioConfig,
    model: &'a SystemModel,
    gains: ControllerGains,
    target: UnitQuaternion<f64>,
    reference: Reference,
    assumed_base: BasePose,
    theta_ref: DVector<f64>,
    control_period: f64,
}

impl Runner<'_> {
    fn joint_setpoint(&mut self, state: &SystemState) -> Result<(TrajectorySetpoint, u8)> {
        let kind = self.config.controller.kind;
        match kind {
            ControllerKind::RmrcGeneralized | ControllerKind::RmrcNaive => {
                let sp = self.reference.task(state.t)?;
                let cap = self.config.speed_cap();
                let cmd = if kind == ControllerKind::RmrcGeneralized {
                    rmrc_generalized(self.model, state, &sp, &self.gains, cap)?
                } else {
                    rmrc_naive(self.model, state, &self.assumed_base, &sp, &self.gains, cap)?
                };
                let mut f = 0;
                if cmd.rate_clamped {
                    f |= flags::RATE_CLAMPED;
                }
                if cmd.speed_clamped {
                    f |= flags::SPEED_CLAMPED;
                }
                if cmd.singular {
                    f |= flags::SINGULAR;
                }
                // the rate command is integrated into a joint reference that
                // the computed-torque inner loop tracks
                let joint = TrajectorySetpoint {
                    t: state.t,
                    position: self.theta_ref.clone(),
                    velocity: cmd.rates.clone(),
                    acceleration: DVector::zeros(self.model.dof()),
                    clamped: sp.clamped,
                };
                self.theta_ref += cmd.rates * self.control_period;
                Ok((joint, f))
            }
            _ => match &self.reference {
                Reference::Joint(path) => Ok((path.sample(state.t), 0)),
                _ => unreachable!("validated: joint controllers have joint references"),
            },
        }
    }

    fn tick(&mut self, state: &SystemState) -> Result<Tick> {
        let model = self.model;
        let mode = self.config.attitude.mode;
        let kind = self.config.controller.kind;
        let (accels, setpoint, mut f) = match kind {
            ControllerKind::OpenLoop | ControllerKind::None => {
                let tau = self.open_loop_torque(state.t);
                let acc = forward_dynamics_free(model, state, &tau, &Wrench::zero())?;
                (acc.joints, None, 0)
            }
            _ => {
                let (sp, f) = self.joint_setpoint(state)?;
                (joint_accel_command(state, &sp, &self.gains), Some(sp), f)
            }
        };
        let attitude = attitude_command(model, state, &accels, mode, &self.target, &self.gains)?;
        if attitude.saturated {
            f |= flags::ATTITUDE_SATURATED;
        }
        let reaction_moment = if mode == AttitudeMode::PdFeedforward {
            -attitude.feedforward
        } else {
            reaction_wrench(model, state, &accels)?.moment
        };
        let (joint_torques, clamped) = match &setpoint {
            Some(sp) => {
                let c = computed_torque_with(model, state, sp, &self.gains, &Wrench::torque_in_base(attitude.torque))?;
                (c.torques, c.clamped)
            }
            None => clamp_torques(model, &self.open_loop_torque(state.t)),
        };
        if clamped {
            f |= flags::TORQUE_CLAMPED;
        }
        Ok(Tick { state: state.clone(), commanded_accels: accels, joint_torques, attitude, reaction_moment, flags: f })
    }

    fn open_loop_torque(&self, t: f64) -> DVector<f64> {
        match &self.config.controller.torque_profile {
            Some(p) if self.config.controller.kind == ControllerKind::OpenLoop => p.at(t),
            _ => DVector::zeros(self.model.dof()),
        }
    }

    fn advance(&self, state: &SystemState, tick: &Tick) -> Result<SystemState> {
        let dt = self.config.run.dt;
        if self.config.controller.kind == ControllerKind::Prescribed {
            let Reference::Joint(path) = &self.reference else {
                unreachable!("validated: prescribed runs have joint references")
            };
            let wrench = Wrench::torque_in_base(tick.attitude.torque);
            step_with(self.model, state, dt, |s| {
                let c = computed_torque_with(self.model, s, &path.sample(s.t), &self.gains, &wrench)?;
                Ok(Actuation { joint_torques: c.torques, base_wrench: wrench })
            })
        } else {
            let held = Actuation::new(tick.joint_torques.clone(), tick.attitude.torque);
            step_with(self.model, state, dt, |_| Ok(held.clone()))
        }
    }

    fn row(&self, state: &SystemState, tick: &Tick) -> Result<LogRow> {
        let ee = ee_position_explicit(self.model, state);
        let m = momentum(self.model, state);
        Ok(LogRow {
            t: state.t,
            ee_position: ee,
            error: self.reference.error(state, &ee)?,
            linear_momentum: m.linear,
            angular_momentum: m.angular,
            kinetic_energy: m.kinetic_energy,
            reaction_moment: tick.reaction_moment,
            attitude_error: attitude_error(&state.base_attitude, &self.target).norm(),
            flags: tick.flags,
            com: system_com(self.model, state),
            state: state.clone(),
        })
    }
}

/// Runs a scenario. Identical configs give identical rows and ticks.
pub fn run(config: &ScenarioConfig) -> Result<RunLog> {
    let started = Instant::now();
    config.validate()?;
    let model = &config.model;
    let initial = config.initial_system_state();
    let mut runner = Runner {
        config,
        model,
        gains: config.gains(),
        target: config.attitude.target_attitude(),
        reference: Reference::new(config, model, &initial)?,
        assumed_base: BasePose::of(&initial),
        theta_ref: initial.joint_angles.clone(),
        control_period: config.steps_per_tick() as f64 * config.run.dt,
    };

    let steps = config.steps();
    let per_tick = config.steps_per_tick();
    let decimation = config.run.log_decimation;
    let mut rows = Vec::with_capacity(steps / decimation + 1);
    let mut ticks: Vec<Tick> = Vec::with_capacity(steps / per_tick + 1);
    let mut state = initial.clone();
    for i in 0..=steps {
        if i < steps && i % per_tick == 0 {
            ticks.push(runner.tick(&state)?);
        }
        let tick = ticks.last().expect("first tick precedes first row");
        if i % decimation == 0 {
            rows.push(runner.row(&state, tick)?);
        }
        if i < steps {
            state = runner.advance(&state, tick)?;
            // keep time on the step grid instead of accumulating dt
            state.t = (i + 1) as f64 * config.run.dt;
        }
    }
    let summary = summarize(config, &runner.reference, &rows, &ticks, &initial, &state, started);
    Ok(RunLog { rows, ticks, summary, final_state: state })
}

fn summarize(
    config: &ScenarioConfig,
    reference: &Reference,
    rows: &[LogRow],
    ticks: &[Tick],
    initial: &SystemState,
    last: &SystemState,
    started: Instant,
) -> RunSummary {
    let max = |f: &dyn Fn(&LogRow) -> f64| rows.iter().map(f).fold(0.0, f64::max);
    let com0 = rows[0].com;
    let fraction = |bit: u8| ticks.iter().filter(|t| t.flags & bit != 0).count() as f64 / ticks.len() as f64;
    let rotation = (last.base_attitude * initial.base_attitude.inverse()).scaled_axis();
    let first = &rows[0];
    let final_row = rows.last().expect("at least one row");
    RunSummary {
        name: config.name.clone(),
        controller: config.controller.kind,
        attitude_mode: config.attitude.mode,
        duration: config.run.duration,
        dt: config.run.dt,
        steps: config.steps(),
        control_ticks: ticks.len(),
        rows: rows.len(),
        error_kind: reference.kind().to_string(),
        peak_error: max(&|r| r.error),
        final_error: final_row.error,
        peak_attitude_error: max(&|r| r.attitude_error),
        final_attitude_error: final_row.attitude_error,
        max_linear_momentum: max(&|r| r.linear_momentum.norm()),
        max_angular_momentum: max(&|r| r.angular_momentum.norm()),
        max_com_drift: max(&|r| (r.com - com0).norm()),
        initial_kinetic_energy: first.kinetic_energy,
        final_kinetic_energy: final_row.kinetic_energy,
        net_base_rotation: [rotation.x, rotation.y, rotation.z],
        attitude_saturation_fraction: fraction(flags::ATTITUDE_SATURATED),
        torque_clamp_fraction: fraction(flags::TORQUE_CLAMPED),
        singular_ticks: ticks.iter().filter(|t| t.flags & flags::SINGULAR != 0).count(),
        wall_time_s: started.elapsed().as_secs_f64(),
        assumptions: ASSUMPTIONS.iter().map(|s| s.to_string()).collect(),
    }
}
