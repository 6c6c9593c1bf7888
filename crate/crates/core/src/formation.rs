//! Time-varying leader-follower geometry and tracking-error dynamics.
//!
//! A follower's desired point sits at distance `l_d` and bearing `alpha_d`
//! (measured from the leader heading) from the leader's rear-axle midpoint.
//! Errors are expressed in the world frame and rotated into the follower
//! frame, where the control law is designed.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::kinematics::{angle_diff, wrap_angle, Pose, PoseRate, VelocityCommand};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FormationError {
    #[error("formation sample field `{0}` is not finite")]
    NonFinite(&'static str),
}

/// Desired relative distance and bearing, with their time derivatives.
///
/// `l_d` is signed: a negative distance places the follower on the opposite
/// side of the bearing ray.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct FormationSample {
    pub l_d: f64,
    pub l_d_rate: f64,
    pub alpha_d: f64,
    pub alpha_d_rate: f64,
}

impl FormationSample {
    pub fn new(l_d: f64, l_d_rate: f64, alpha_d: f64, alpha_d_rate: f64) -> Result<Self, FormationError> {
        let s = Self {
            l_d,
            l_d_rate,
            alpha_d,
            alpha_d_rate,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<(), FormationError> {
        for (name, v) in [
            ("l_d", self.l_d),
            ("l_d_rate", self.l_d_rate),
            ("alpha_d", self.alpha_d),
            ("alpha_d_rate", self.alpha_d_rate),
        ] {
            if !v.is_finite() {
                return Err(FormationError::NonFinite(name));
            }
        }
        Ok(())
    }
}

/// Tracking error in the world frame.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct GlobalError {
    pub ex: f64,
    pub ey: f64,
    pub etheta: f64,
}

/// Tracking error in the follower's body frame.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LocalError {
    pub ex_hat: f64,
    pub ey_hat: f64,
    pub etheta_hat: f64,
}

impl LocalError {
    pub fn norm(&self) -> f64 {
        (self.ex_hat * self.ex_hat + self.ey_hat * self.ey_hat + self.etheta_hat * self.etheta_hat).sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.ex_hat.is_finite() && self.ey_hat.is_finite() && self.etheta_hat.is_finite()
    }
}

/// Time derivative of a [`LocalError`].
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LocalErrorRate {
    pub ex_hat: f64,
    pub ey_hat: f64,
    pub etheta_hat: f64,
}

/// Relative angles between leader, follower and the desired bearing.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct FrameAngles {
    /// `alpha_d + theta_l - theta_f`
    pub gamma: f64,
    /// `theta_l - theta_f`
    pub lambda: f64,
}

impl FrameAngles {
    /// Angles are left unwrapped; they only ever enter through sin/cos.
    pub fn new(alpha_d: f64, theta_l: f64, theta_f: f64) -> Self {
        Self {
            gamma: alpha_d + theta_l - theta_f,
            lambda: theta_l - theta_f,
        }
    }
}

/// Desired follower pose for the current formation sample. The desired
/// heading is a controller state and is passed through unchanged.
pub fn desired_pose(leader: &Pose, spec: &FormationSample, c: f64, theta_d: f64) -> Pose {
    let beta = spec.alpha_d + leader.theta;
    let (sl, cl) = leader.theta.sin_cos();
    let (sb, cb) = beta.sin_cos();
    Pose::new(
        leader.x - c * cl + spec.l_d * cb,
        leader.y - c * sl + spec.l_d * sb,
        theta_d,
    )
}

/// Velocity of the desired point, with `theta_dot` set to `omega_d`.
///
/// The `c` terms of the leader kinematics cancel against those of the
/// desired-pose offset, so the result does not depend on `c`.
pub fn desired_rate(leader: &Pose, leader_cmd: &VelocityCommand, spec: &FormationSample, omega_d: f64) -> PoseRate {
    let beta = spec.alpha_d + leader.theta;
    let (sl, cl) = leader.theta.sin_cos();
    let (sb, cb) = beta.sin_cos();
    let beta_rate = spec.alpha_d_rate + leader_cmd.omega;
    PoseRate {
        x_dot: leader_cmd.v * cl + spec.l_d_rate * cb - spec.l_d * beta_rate * sb,
        y_dot: leader_cmd.v * sl + spec.l_d_rate * sb + spec.l_d * beta_rate * cb,
        theta_dot: omega_d,
    }
}

pub fn global_error(desired: &Pose, actual: &Pose) -> GlobalError {
    GlobalError {
        ex: desired.x - actual.x,
        ey: desired.y - actual.y,
        etheta: angle_diff(desired.theta, actual.theta),
    }
}

/// Rotate a world-frame error into the follower frame. The heading
/// component is not rotated.
pub fn to_local(e: &GlobalError, theta_f: f64) -> LocalError {
    let (s, c) = theta_f.sin_cos();
    LocalError {
        ex_hat: c * e.ex + s * e.ey,
        ey_hat: -s * e.ex + c * e.ey,
        etheta_hat: e.etheta,
    }
}

pub fn from_local(e_hat: &LocalError, theta_f: f64) -> GlobalError {
    let (s, c) = theta_f.sin_cos();
    GlobalError {
        ex: c * e_hat.ex_hat - s * e_hat.ey_hat,
        ey: s * e_hat.ex_hat + c * e_hat.ey_hat,
        etheta: e_hat.etheta_hat,
    }
}

/// Lateral and longitudinal feed-forward terms shared by the error dynamics
/// and the control law: `(longitudinal, lateral)` components of the desired
/// point velocity in the follower frame.
pub(crate) fn feedforward(angles: &FrameAngles, leader_cmd: &VelocityCommand, spec: &FormationSample) -> (f64, f64) {
    let (sg, cg) = angles.gamma.sin_cos();
    let (sl, cl) = angles.lambda.sin_cos();
    let rot = spec.l_d * (leader_cmd.omega + spec.alpha_d_rate);
    let longitudinal = leader_cmd.v * cl + spec.l_d_rate * cg - rot * sg;
    let lateral = leader_cmd.v * sl + spec.l_d_rate * sg + rot * cg;
    (longitudinal, lateral)
}

/// Closed-form time derivative of the follower-frame tracking error.
///
/// The lateral row carries `-c * omega_f`: the body-frame lateral velocity of
/// the offset point is `c * omega_f` (see [`crate::kinematics::unicycle_rate`]).
pub fn error_rates(
    e_hat: &LocalError,
    angles: &FrameAngles,
    leader_cmd: &VelocityCommand,
    follower_cmd: &VelocityCommand,
    spec: &FormationSample,
    omega_d: f64,
    c: f64,
) -> LocalErrorRate {
    let (longitudinal, lateral) = feedforward(angles, leader_cmd, spec);
    let wf = follower_cmd.omega;
    LocalErrorRate {
        ex_hat: wf * e_hat.ey_hat + longitudinal - follower_cmd.v,
        ey_hat: lateral - wf * e_hat.ex_hat - c * wf,
        etheta_hat: omega_d - wf,
    }
}

/// Recover the follower's world-frame velocity from local error rates by
/// undoing the frame rotation. Returns `(x_dot_f, y_dot_f)`.
pub fn remap_global_rates(
    e_hat_rate: &LocalErrorRate,
    e: &GlobalError,
    theta_f: f64,
    omega_f: f64,
    desired_rate: &PoseRate,
) -> (f64, f64) {
    let (s, c) = theta_f.sin_cos();
    let along =
        -e_hat_rate.ex_hat - omega_f * s * e.ex + omega_f * c * e.ey + c * desired_rate.x_dot + s * desired_rate.y_dot;
    let across =
        e_hat_rate.ey_hat + omega_f * c * e.ex + omega_f * s * e.ey + s * desired_rate.x_dot - c * desired_rate.y_dot;
    (c * along + s * across, s * along - c * across)
}

/// World-frame vector from the leader's axle midpoint to the follower's
/// tracked point. Its norm is the actual relative distance.
pub fn relative_offset(leader: &Pose, follower: &Pose, c: f64) -> (f64, f64) {
    let (sl, cl) = leader.theta.sin_cos();
    (follower.x - leader.x + c * cl, follower.y - leader.y + c * sl)
}

pub fn relative_distance(leader: &Pose, follower: &Pose, c: f64) -> f64 {
    let (dx, dy) = relative_offset(leader, follower, c);
    dx.hypot(dy)
}

/// Wrapped copy of the frame angles, for reporting.
pub fn wrapped(angles: &FrameAngles) -> FrameAngles {
    FrameAngles {
        gamma: wrap_angle(angles.gamma),
        lambda: wrap_angle(angles.lambda),
    }
}
