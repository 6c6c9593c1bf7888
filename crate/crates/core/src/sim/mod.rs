//! Closed-loop simulation: an open-loop leader and any number of independent
//! followers, each under backstepping or fuzzy-adaptive backstepping.
//!
//! The whole formation is one ODE state integrated with fixed-step RK4. The
//! control law is re-evaluated at every stage, so the integrated system is
//! the continuous-time closed loop and recorded error rates are exact
//! derivatives of the recorded errors. Fuzzy gains are retuned once per step
//! and held over it.

mod law;
mod monitor;
mod report;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use law::{ControllerKind, ControllerSpec, LawOutput};
pub use monitor::{lyapunov, lyapunov_rate, LyapunovValues};
pub use report::{
    compare, percentage_decrease, CompareError, ComparisonReport, ControllerMetrics, FollowerComparison,
    FollowerSummary, RunSummary,
};

use crate::controllers::{derive_gains, ControlError, Gains};
use crate::exprlang::{EvalError, Expr};
use crate::formation::{
    desired_pose, global_error, relative_distance, to_local, FormationError, FormationSample, FrameAngles, LocalError,
    LocalErrorRate,
};
use crate::fuzzy::{FuzzyError, GainTuner};
use crate::kinematics::{
    unicycle_rate, wheel_speeds, wrap_angle, KinematicsError, Pose, RobotGeometry, VelocityCommand, WheelSpeeds,
};
use crate::ode::Rk4;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
    #[error("expression `{what}` failed: {source}")]
    Expression {
        what: String,
        #[source]
        source: EvalError,
    },
    #[error(transparent)]
    Control(#[from] ControlError),
    #[error(transparent)]
    Fuzzy(FuzzyError),
    #[error(transparent)]
    Kinematics(#[from] KinematicsError),
    #[error(transparent)]
    Formation(#[from] FormationError),
    #[error("non-finite state at t = {t} ({what})")]
    NonFinite { t: f64, what: String },
}

/// Leader pose and open-loop velocity profile.
#[derive(Debug, Clone, PartialEq)]
pub struct LeaderSpec {
    pub initial: Pose,
    pub v: Expr,
    pub omega: Expr,
}

/// Desired relative distance and bearing as functions of time.
#[derive(Debug, Clone, PartialEq)]
pub struct FormationExprs {
    pub l_d: Expr,
    pub l_d_rate: Expr,
    pub alpha_d: Expr,
    pub alpha_d_rate: Expr,
}

impl FormationExprs {
    pub fn sample(&self, t: f64) -> Result<FormationSample, SimError> {
        let ev = |e: &Expr, what: &str| {
            e.eval(t).map_err(|source| SimError::Expression {
                what: what.to_string(),
                source,
            })
        };
        Ok(FormationSample::new(
            ev(&self.l_d, "l_d")?,
            ev(&self.l_d_rate, "l_d_rate")?,
            ev(&self.alpha_d, "alpha_d")?,
            ev(&self.alpha_d_rate, "alpha_d_rate")?,
        )?)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FollowerSpec {
    pub name: String,
    pub initial: Pose,
    pub formation: FormationExprs,
    pub controller: ControllerSpec,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub leader: LeaderSpec,
    pub followers: Vec<FollowerSpec>,
    pub geometry: RobotGeometry,
    pub tuner: GainTuner,
    pub dt: f64,
    pub horizon: f64,
}

impl Scenario {
    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |m: String| Err(SimError::InvalidScenario(m));
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return bad(format!("dt must be positive, got {}", self.dt));
        }
        if !(self.horizon >= 0.0 && self.horizon.is_finite()) {
            return bad(format!("horizon must be non-negative, got {}", self.horizon));
        }
        self.geometry.validate()?;
        if self.followers.is_empty() {
            return bad("at least one follower is required".into());
        }
        if !self.leader.initial.is_finite() {
            return bad("leader initial pose is not finite".into());
        }
        for (i, f) in self.followers.iter().enumerate() {
            if self.followers[..i].iter().any(|g| g.name == f.name) {
                return bad(format!("duplicate follower name `{}`", f.name));
            }
            if !f.initial.is_finite() {
                return bad(format!("follower `{}` initial pose is not finite", f.name));
            }
            derive_gains(f.controller.k1, f.controller.k2, f.controller.k3, self.geometry.c)?;
            f.controller.saturation.validate()?;
        }
        Ok(())
    }

    /// Number of integration steps; the trace holds one more row.
    pub fn steps(&self) -> usize {
        (self.horizon / self.dt).round() as usize
    }

    /// Copy with every follower switched to `kind`.
    pub fn with_controller(&self, kind: ControllerKind) -> Scenario {
        let mut s = self.clone();
        for f in &mut s.followers {
            f.controller.kind = kind;
        }
        s
    }

    /// Copy with each follower placed exactly on its desired pose at `t = 0`.
    pub fn at_equilibrium(&self) -> Result<Scenario, SimError> {
        let mut s = self.clone();
        for f in &mut s.followers {
            let sample = f.formation.sample(0.0)?;
            f.initial = desired_pose(&self.leader.initial, &sample, self.geometry.c, f.initial.theta);
        }
        Ok(s)
    }

    pub fn leader_command(&self, t: f64) -> Result<VelocityCommand, SimError> {
        let ev = |e: &Expr, what: &str| {
            e.eval(t).map_err(|source| SimError::Expression {
                what: what.to_string(),
                source,
            })
        };
        Ok(VelocityCommand::new(
            ev(&self.leader.v, "leader.v")?,
            ev(&self.leader.omega, "leader.omega")?,
        )?)
    }
}

/// One follower's recorded quantities at one instant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FollowerRow {
    pub pose: Pose,
    pub e_hat: LocalError,
    pub e_hat_rate: LocalErrorRate,
    pub cmd: VelocityCommand,
    pub wheels: WheelSpeeds,
    pub gains: Gains,
    pub omega_d: f64,
    pub theta_d: f64,
    pub lyapunov: LyapunovValues,
    pub l_actual: f64,
    pub l_d: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub t: f64,
    pub leader: Pose,
    pub leader_cmd: VelocityCommand,
    pub followers: Vec<FollowerRow>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub follower_names: Vec<String>,
    pub kinds: Vec<ControllerKind>,
    pub dt: f64,
    pub rows: Vec<TraceRow>,
}

impl Trace {
    pub fn follower_index(&self, name: &str) -> Option<usize> {
        self.follower_names.iter().position(|n| n == name)
    }

    /// Iterator over one follower's rows, paired with their timestamps.
    pub fn follower(&self, i: usize) -> impl Iterator<Item = (f64, &FollowerRow)> + '_ {
        self.rows.iter().map(move |r| (r.t, &r.followers[i]))
    }

    /// First time the error norm drops below `fraction` of its initial
    /// value. `None` if it never does or the initial error is zero.
    pub fn settling_time(&self, i: usize, fraction: f64) -> Option<f64> {
        let e0 = self.rows.first()?.followers[i].e_hat.norm();
        if e0 == 0.0 {
            return None;
        }
        self.follower(i)
            .find(|(_, f)| f.e_hat.norm() < fraction * e0)
            .map(|(t, _)| t)
    }
}

/// Fraction of the initial error norm used for settling time.
pub const SETTLING_FRACTION: f64 = 0.01;

const LEADER_DIM: usize = 3;
const FOLLOWER_DIM: usize = 4;

struct Engine<'a> {
    scenario: &'a Scenario,
    /// Gains applied over the current step.
    gains: Vec<Gains>,
}

struct Evaluated {
    leader_cmd: VelocityCommand,
    followers: Vec<(LawOutput, LocalError, FormationSample)>,
}

impl Engine<'_> {
    fn follower_pose(y: &[f64], i: usize) -> (Pose, f64) {
        let o = LEADER_DIM + FOLLOWER_DIM * i;
        (
            Pose {
                x: y[o],
                y: y[o + 1],
                theta: y[o + 2],
            },
            y[o + 3],
        )
    }

    /// Gains for the step starting at `(t, y)`.
    fn retune(&mut self, t: f64, y: &[f64]) -> Result<(), SimError> {
        let sc = self.scenario;
        let c = sc.geometry.c;
        let leader = Pose {
            x: y[0],
            y: y[1],
            theta: y[2],
        };
        let leader_cmd = sc.leader_command(t)?;
        for (i, f) in sc.followers.iter().enumerate() {
            if f.controller.kind != ControllerKind::FuzzyAdaptive {
                continue;
            }
            let (pose, theta_d) = Self::follower_pose(y, i);
            let sample = f.formation.sample(t)?;
            let desired = desired_pose(&leader, &sample, c, theta_d);
            let e_hat = to_local(&global_error(&desired, &pose), pose.theta);
            let angles = FrameAngles::new(sample.alpha_d, leader.theta, pose.theta);
            let inputs = law::LawInputs {
                e_hat: &e_hat,
                leader_cmd: &leader_cmd,
                angles: &angles,
                sample: &sample,
                c,
            };
            self.gains[i] = law::retune(&f.controller, &sc.tuner, &self.gains[i], &inputs)?;
        }
        Ok(())
    }

    fn evaluate(&self, t: f64, y: &[f64]) -> Result<Evaluated, SimError> {
        let sc = self.scenario;
        let c = sc.geometry.c;
        let leader = Pose {
            x: y[0],
            y: y[1],
            theta: y[2],
        };
        let leader_cmd = sc.leader_command(t)?;
        let mut followers = Vec::with_capacity(sc.followers.len());
        for (i, f) in sc.followers.iter().enumerate() {
            let (pose, theta_d) = Self::follower_pose(y, i);
            let sample = f.formation.sample(t)?;
            let desired = desired_pose(&leader, &sample, c, theta_d);
            let e_hat = to_local(&global_error(&desired, &pose), pose.theta);
            let angles = FrameAngles::new(sample.alpha_d, leader.theta, pose.theta);
            let inputs = law::LawInputs {
                e_hat: &e_hat,
                leader_cmd: &leader_cmd,
                angles: &angles,
                sample: &sample,
                c,
            };
            let out = law::evaluate(&f.controller, &self.gains[i], &inputs)?;
            followers.push((out, e_hat, sample));
        }
        Ok(Evaluated { leader_cmd, followers })
    }

    fn rhs(&self, t: f64, y: &[f64], dy: &mut [f64]) -> Result<(), SimError> {
        let ev = self.evaluate(t, y)?;
        self.derivative(&ev, y, dy);
        Ok(())
    }

    fn derivative(&self, ev: &Evaluated, y: &[f64], dy: &mut [f64]) {
        let c = self.scenario.geometry.c;
        let leader = Pose {
            x: y[0],
            y: y[1],
            theta: y[2],
        };
        // The leader's tracked point obeys the same offset-point kinematics.
        let lr = unicycle_rate(&leader, &ev.leader_cmd, c);
        dy[..LEADER_DIM].copy_from_slice(&[lr.x_dot, lr.y_dot, lr.theta_dot]);
        for (i, (out, _, _)) in ev.followers.iter().enumerate() {
            let (pose, _) = Self::follower_pose(y, i);
            let r = unicycle_rate(&pose, &out.output.cmd, c);
            let o = LEADER_DIM + FOLLOWER_DIM * i;
            dy[o..o + FOLLOWER_DIM].copy_from_slice(&[r.x_dot, r.y_dot, r.theta_dot, out.output.omega_d]);
        }
    }

    /// Trace row at `(t, y)`; also writes the state derivative there.
    fn record(&self, t: f64, y: &[f64], dy: &mut [f64]) -> Result<TraceRow, SimError> {
        let sc = self.scenario;
        let c = sc.geometry.c;
        let ev = self.evaluate(t, y)?;
        self.derivative(&ev, y, dy);
        let leader = Pose {
            x: y[0],
            y: y[1],
            theta: y[2],
        };
        let mut followers = Vec::with_capacity(ev.followers.len());
        for (i, (out, e_hat, sample)) in ev.followers.iter().enumerate() {
            let (pose, theta_d) = Self::follower_pose(y, i);
            let cmd = out.output.cmd;
            let row = FollowerRow {
                pose,
                e_hat: *e_hat,
                e_hat_rate: out.rates,
                cmd,
                wheels: wheel_speeds(&cmd, &sc.geometry)?,
                gains: out.gains,
                omega_d: out.output.omega_d,
                theta_d,
                lyapunov: lyapunov(e_hat, &out.gains),
                l_actual: relative_distance(&leader, &pose, c),
                l_d: sample.l_d,
            };
            let finite = [
                cmd.v,
                cmd.omega,
                out.output.omega_d,
                e_hat.ex_hat,
                e_hat.ey_hat,
                e_hat.etheta_hat,
            ]
            .iter()
            .all(|v| v.is_finite());
            if !finite {
                return Err(SimError::NonFinite {
                    t,
                    what: format!("follower `{}`", sc.followers[i].name),
                });
            }
            followers.push(row);
        }
        Ok(TraceRow {
            t,
            leader,
            leader_cmd: ev.leader_cmd,
            followers,
        })
    }
}

/// Simulate the scenario from `t = 0` to its horizon.
pub fn run(scenario: &Scenario) -> Result<Trace, SimError> {
    scenario.validate()?;
    let c = scenario.geometry.c;
    let gains = scenario
        .followers
        .iter()
        .map(|f| derive_gains(f.controller.k1, f.controller.k2, f.controller.k3, c))
        .collect::<Result<Vec<_>, _>>()?;
    let mut engine = Engine { scenario, gains };

    let dim = LEADER_DIM + FOLLOWER_DIM * scenario.followers.len();
    let mut y = Vec::with_capacity(dim);
    let l0 = scenario.leader.initial;
    y.extend_from_slice(&[l0.x, l0.y, l0.theta]);
    for f in &scenario.followers {
        // the virtual heading starts aligned with the follower
        y.extend_from_slice(&[f.initial.x, f.initial.y, f.initial.theta, f.initial.theta]);
    }

    let n = scenario.steps();
    let dt = scenario.dt;
    let mut rk = Rk4::new(dim);
    let mut slope = vec![0.0; dim];
    let mut rows = Vec::with_capacity(n + 1);
    for k in 0..=n {
        let t = k as f64 * dt;
        engine.retune(t, &y)?;
        rows.push(engine.record(t, &y, &mut slope)?);
        if k == n {
            break;
        }
        rk.step_with_slope(t, dt, &mut y, &slope, |t, y, dy| engine.rhs(t, y, dy))?;
        if let Some(j) = y.iter().position(|v| !v.is_finite()) {
            return Err(SimError::NonFinite {
                t: (k + 1) as f64 * dt,
                what: format!("state component {j}"),
            });
        }
        wrap_headings(&mut y, scenario.followers.len());
    }

    Ok(Trace {
        follower_names: scenario.followers.iter().map(|f| f.name.clone()).collect(),
        kinds: scenario.followers.iter().map(|f| f.controller.kind).collect(),
        dt,
        rows,
    })
}

/// Rows at `row.t + s` for each offset `s`, integrating the closed loop from
/// the state recorded in `row` with every follower's gains held at their
/// recorded values. Offsets may be negative.
///
/// Fuzzy gains are piecewise constant in time, so derivative checks along a
/// fuzzy-adaptive trace are meaningful only on this frozen-gain flow.
pub fn replay_frozen(scenario: &Scenario, row: &TraceRow, offsets: &[f64]) -> Result<Vec<TraceRow>, SimError> {
    scenario.validate()?;
    if row.followers.len() != scenario.followers.len() {
        return Err(SimError::InvalidScenario(
            "row does not match the scenario's followers".into(),
        ));
    }
    let engine = Engine {
        scenario,
        gains: row.followers.iter().map(|f| f.gains).collect(),
    };
    let mut y0 = vec![row.leader.x, row.leader.y, row.leader.theta];
    for f in &row.followers {
        y0.extend_from_slice(&[f.pose.x, f.pose.y, f.pose.theta, f.theta_d]);
    }
    let mut rk = Rk4::new(y0.len());
    let mut scratch = vec![0.0; y0.len()];
    offsets
        .iter()
        .map(|&s| {
            let n = (s.abs() / scenario.dt).ceil().max(1.0) as usize;
            let h = s / n as f64;
            let mut y = y0.clone();
            for j in 0..n {
                rk.step(row.t + j as f64 * h, h, &mut y, |t, y, dy| engine.rhs(t, y, dy))?;
            }
            engine.record(row.t + s, &y, &mut scratch)
        })
        .collect()
}

fn wrap_headings(y: &mut [f64], followers: usize) {
    y[2] = wrap_angle(y[2]);
    for i in 0..followers {
        let o = LEADER_DIM + FOLLOWER_DIM * i;
        y[o + 2] = wrap_angle(y[o + 2]);
        y[o + 3] = wrap_angle(y[o + 3]);
    }
}
