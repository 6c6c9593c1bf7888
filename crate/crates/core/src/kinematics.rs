//! Unicycle kinematics of a single differential-drive robot.
//!
//! The tracked point sits a distance `c` ahead of the rear-axle midpoint, so
//! its velocity picks up a `c * omega` component normal to the heading.

use std::convert::Infallible;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ode::Rk4;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KinematicsError {
    #[error("time step must be non-negative, got {0}")]
    NegativeStep(f64),
    #[error("invalid geometry: {0}")]
    InvalidGeometry(&'static str),
    #[error("velocity command must be finite (v = {v}, omega = {omega})")]
    NonFiniteCommand { v: f64, omega: f64 },
}

/// Wrap an angle into `(-pi, pi]`.
pub fn wrap_angle(angle: f64) -> f64 {
    let r = angle.rem_euclid(2.0 * PI);
    if r > PI {
        r - 2.0 * PI
    } else {
        r
    }
}

/// Shortest signed difference `a - b`, wrapped into `(-pi, pi]`.
pub fn angle_diff(a: f64, b: f64) -> f64 {
    wrap_angle(a - b)
}

/// Planar configuration of a robot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
}

impl Pose {
    /// Builds a pose with the heading wrapped into `(-pi, pi]`.
    pub fn new(x: f64, y: f64, theta: f64) -> Self {
        Self {
            x,
            y,
            theta: wrap_angle(theta),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.theta.is_finite()
    }
}

/// Time derivative of a [`Pose`].
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PoseRate {
    pub x_dot: f64,
    pub y_dot: f64,
    pub theta_dot: f64,
}

/// Linear and angular velocity inputs.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct VelocityCommand {
    pub v: f64,
    pub omega: f64,
}

impl VelocityCommand {
    pub fn new(v: f64, omega: f64) -> Result<Self, KinematicsError> {
        if !(v.is_finite() && omega.is_finite()) {
            return Err(KinematicsError::NonFiniteCommand { v, omega });
        }
        Ok(Self { v, omega })
    }

    pub const fn zero() -> Self {
        Self { v: 0.0, omega: 0.0 }
    }
}

/// Physical dimensions relevant to the kinematic model and wheel-speed reporting.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RobotGeometry {
    /// Offset of the controlled point ahead of the rear axle (m).
    pub c: f64,
    pub wheel_radius: f64,
    pub track_width: f64,
}

impl Default for RobotGeometry {
    fn default() -> Self {
        Self {
            c: 0.1,
            wheel_radius: 0.05,
            track_width: 0.2,
        }
    }
}

impl RobotGeometry {
    pub fn new(c: f64, wheel_radius: f64, track_width: f64) -> Result<Self, KinematicsError> {
        let g = Self {
            c,
            wheel_radius,
            track_width,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<(), KinematicsError> {
        if !(self.wheel_radius > 0.0 && self.wheel_radius.is_finite()) {
            return Err(KinematicsError::InvalidGeometry("wheel_radius must be positive"));
        }
        if !(self.track_width > 0.0 && self.track_width.is_finite()) {
            return Err(KinematicsError::InvalidGeometry("track_width must be positive"));
        }
        if !(self.c >= 0.0 && self.c.is_finite()) {
            return Err(KinematicsError::InvalidGeometry("c must be non-negative"));
        }
        Ok(())
    }
}

/// Left and right wheel angular velocities (rad/s).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct WheelSpeeds {
    pub left: f64,
    pub right: f64,
}

/// Velocity of the controlled point and heading rate for a given command.
pub fn unicycle_rate(pose: &Pose, cmd: &VelocityCommand, c: f64) -> PoseRate {
    let (s, co) = pose.theta.sin_cos();
    PoseRate {
        x_dot: cmd.v * co - c * cmd.omega * s,
        y_dot: cmd.v * s + c * cmd.omega * co,
        theta_dot: cmd.omega,
    }
}

/// One RK4 step of the unicycle model under a command held constant over `dt`.
pub fn integrate_step(pose: &Pose, cmd: &VelocityCommand, c: f64, dt: f64) -> Result<Pose, KinematicsError> {
    if dt < 0.0 || dt.is_nan() {
        return Err(KinematicsError::NegativeStep(dt));
    }
    if dt == 0.0 {
        return Ok(Pose::new(pose.x, pose.y, pose.theta));
    }
    let mut state = [pose.x, pose.y, pose.theta];
    let mut rk = Rk4::new(3);
    rk.step::<Infallible, _>(0.0, dt, &mut state, |_, y, dy| {
        let r = unicycle_rate(
            &Pose {
                x: y[0],
                y: y[1],
                theta: y[2],
            },
            cmd,
            c,
        );
        dy[0] = r.x_dot;
        dy[1] = r.y_dot;
        dy[2] = r.theta_dot;
        Ok(())
    })
    .expect("infallible");
    Ok(Pose::new(state[0], state[1], state[2]))
}

/// Differential-drive inverse kinematics from body velocities to wheel rates.
pub fn wheel_speeds(cmd: &VelocityCommand, geom: &RobotGeometry) -> Result<WheelSpeeds, KinematicsError> {
    geom.validate()?;
    let half_track = 0.5 * geom.track_width;
    Ok(WheelSpeeds {
        left: (cmd.v - cmd.omega * half_track) / geom.wheel_radius,
        right: (cmd.v + cmd.omega * half_track) / geom.wheel_radius,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn wrap_angle_range() {
        assert_eq!(wrap_angle(PI), PI);
        assert_eq!(wrap_angle(-PI), PI);
        assert_abs_diff_eq!(wrap_angle(3.0 * FRAC_PI_2), -FRAC_PI_2, epsilon = 1e-15);
        assert_abs_diff_eq!(wrap_angle(PI + 0.1), -PI + 0.1, epsilon = 1e-15);
        assert_eq!(wrap_angle(0.0), 0.0);
    }

    #[test]
    fn rate_zero_rotation() {
        let r = unicycle_rate(&Pose::new(0.0, 0.0, 0.0), &VelocityCommand { v: 1.0, omega: 0.0 }, 0.1);
        assert_eq!(
            r,
            PoseRate {
                x_dot: 1.0,
                y_dot: 0.0,
                theta_dot: 0.0
            }
        );
    }

    #[test]
    fn rate_pure_rotation_with_offset() {
        let r = unicycle_rate(
            &Pose::new(0.0, 0.0, FRAC_PI_2),
            &VelocityCommand { v: 0.0, omega: 1.0 },
            0.1,
        );
        assert_abs_diff_eq!(r.x_dot, -0.1, epsilon = 1e-15);
        assert_abs_diff_eq!(r.y_dot, 0.0, epsilon = 1e-15);
        assert_eq!(r.theta_dot, 1.0);
    }

    #[test]
    fn rate_straight_leader() {
        for c in [0.0, 0.03, 0.1, 2.0] {
            let r = unicycle_rate(
                &Pose::new(-0.05, 0.0, FRAC_PI_2),
                &VelocityCommand { v: 0.02, omega: 0.0 },
                c,
            );
            assert_abs_diff_eq!(r.x_dot, 0.0, epsilon = 1e-17);
            assert_abs_diff_eq!(r.y_dot, 0.02, epsilon = 1e-17);
            assert_eq!(r.theta_dot, 0.0);
        }
    }

    #[test]
    fn step_zero_dt_is_identity() {
        let p = Pose::new(0.3, -1.2, 2.0);
        let q = integrate_step(&p, &VelocityCommand { v: 3.0, omega: -2.0 }, 0.1, 0.0).unwrap();
        assert_eq!(p, q);
    }

    #[test]
    fn step_constant_rate_is_exact() {
        let p = Pose::new(0.0, 0.0, 0.0);
        let q = integrate_step(&p, &VelocityCommand { v: 1.0, omega: 0.0 }, 0.0, 0.1).unwrap();
        assert_abs_diff_eq!(q.x, 0.1, epsilon = 1e-15);
        assert_eq!(q.y, 0.0);
        assert_eq!(q.theta, 0.0);
    }

    #[test]
    fn step_rotation_wraps() {
        let p = Pose::new(0.0, 0.0, FRAC_PI_2);
        let q = integrate_step(&p, &VelocityCommand { v: 0.0, omega: PI }, 0.0, 1.0).unwrap();
        assert_abs_diff_eq!(q.theta, -FRAC_PI_2, epsilon = 1e-12);
    }

    #[test]
    fn step_rejects_negative_dt() {
        let p = Pose::new(0.0, 0.0, 0.0);
        assert!(matches!(
            integrate_step(&p, &VelocityCommand::zero(), 0.1, -1e-3),
            Err(KinematicsError::NegativeStep(_))
        ));
    }

    #[test]
    fn step_matches_closed_form_arc() {
        // Constant (v, omega) traces a circle; the offset point follows it rigidly.
        let (v, w, c, dt) = (0.7, 1.3, 0.1, 0.01);
        let p0 = Pose::new(0.2, -0.4, 0.3);
        let mut p = p0;
        for _ in 0..100 {
            p = integrate_step(&p, &VelocityCommand { v, omega: w }, c, dt).unwrap();
        }
        let th1 = p0.theta + w * 1.0;
        // axle midpoint = tracked point - c * heading
        let ax0 = (p0.x - c * p0.theta.cos(), p0.y - c * p0.theta.sin());
        let ax1 = (
            ax0.0 + v / w * (th1.sin() - p0.theta.sin()),
            ax0.1 - v / w * (th1.cos() - p0.theta.cos()),
        );
        assert_abs_diff_eq!(p.x, ax1.0 + c * th1.cos(), epsilon = 1e-10);
        assert_abs_diff_eq!(p.y, ax1.1 + c * th1.sin(), epsilon = 1e-10);
        assert_abs_diff_eq!(p.theta, wrap_angle(th1), epsilon = 1e-12);
    }

    #[test]
    fn wheel_speed_examples() {
        let g = RobotGeometry::new(0.1, 0.05, 0.2).unwrap();
        let w = wheel_speeds(&VelocityCommand { v: 0.1, omega: 0.5 }, &g).unwrap();
        assert_abs_diff_eq!(w.left, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(w.right, 3.0, epsilon = 1e-12);

        let s = 4.0;
        let w = wheel_speeds(
            &VelocityCommand {
                v: g.wheel_radius * s,
                omega: 0.0,
            },
            &g,
        )
        .unwrap();
        assert_abs_diff_eq!(w.left, s, epsilon = 1e-12);
        assert_abs_diff_eq!(w.right, s, epsilon = 1e-12);

        let w = wheel_speeds(&VelocityCommand { v: 0.0, omega: 2.0 }, &g).unwrap();
        assert_eq!(w.right, -w.left);
        assert!(w.right > 0.0);

        let w = wheel_speeds(&VelocityCommand::zero(), &g).unwrap();
        assert_eq!(w, WheelSpeeds { left: 0.0, right: 0.0 });
    }

    #[test]
    fn wheel_speeds_reject_bad_radius() {
        let g = RobotGeometry {
            c: 0.1,
            wheel_radius: 0.0,
            track_width: 0.2,
        };
        assert!(wheel_speeds(&VelocityCommand::zero(), &g).is_err());
        assert!(RobotGeometry::new(0.1, -0.05, 0.2).is_err());
        assert!(RobotGeometry::new(-0.1, 0.05, 0.2).is_err());
        assert!(RobotGeometry::new(0.1, 0.05, 0.0).is_err());
    }

    #[test]
    fn command_rejects_non_finite() {
        assert!(VelocityCommand::new(f64::NAN, 0.0).is_err());
        assert!(VelocityCommand::new(0.0, f64::INFINITY).is_err());
        assert!(VelocityCommand::new(1.0, -1.0).is_ok());
    }

    proptest! {
        #[test]
        fn step_halving_agrees_to_fifth_order(
            x in -5.0..5.0f64, y in -5.0..5.0f64, th in -3.0..3.0f64,
            v in -2.0..2.0f64, w in -3.0..3.0f64, c in 0.0..0.5f64,
        ) {
            let p = Pose::new(x, y, th);
            let cmd = VelocityCommand { v, omega: w };
            let dev = |dt: f64| {
                let one = integrate_step(&p, &cmd, c, dt).unwrap();
                let half = integrate_step(&p, &cmd, c, dt / 2.0).unwrap();
                let two = integrate_step(&half, &cmd, c, dt / 2.0).unwrap();
                (one.x - two.x).abs().max((one.y - two.y).abs())
            };
            let dt = 0.05f64;
            // local error ~ C dt^5 with C bounded by |v| w^4 + c w^5 (up to the RK4 constant)
            let bound = (v.abs() * w.powi(4) + c * w.abs().powi(5) + 1e-9) * dt.powi(5);
            prop_assert!(dev(dt) <= bound, "dev {} bound {}", dev(dt), bound);
        }

        #[test]
        fn straight_rate_has_speed_v(th in -4.0..4.0f64, v in -3.0..3.0f64, c in 0.0..1.0f64) {
            let r = unicycle_rate(&Pose::new(0.0, 0.0, th), &VelocityCommand { v, omega: 0.0 }, c);
            prop_assert_eq!(r.theta_dot, 0.0);
            prop_assert!(((r.x_dot.hypot(r.y_dot)) - v.abs()).abs() < 1e-12);
        }

        #[test]
        fn wheel_speeds_are_linear(
            v1 in -2.0..2.0f64, w1 in -5.0..5.0f64, v2 in -2.0..2.0f64, w2 in -5.0..5.0f64, a in -3.0..3.0f64,
        ) {
            let g = RobotGeometry::default();
            let f = |v: f64, w: f64| wheel_speeds(&VelocityCommand { v, omega: w }, &g).unwrap();
            let lhs = f(v1 + a * v2, w1 + a * w2);
            let (p, q) = (f(v1, w1), f(v2, w2));
            prop_assert!((lhs.left - (p.left + a * q.left)).abs() < 1e-9);
            prop_assert!((lhs.right - (p.right + a * q.right)).abs() < 1e-9);
        }

        #[test]
        fn headings_stay_wrapped(th in -50.0..50.0f64, w in -20.0..20.0f64, dt in 0.0..2.0f64) {
            let q = integrate_step(&Pose::new(0.0, 0.0, th), &VelocityCommand { v: 0.3, omega: w }, 0.1, dt).unwrap();
            prop_assert!(q.theta > -PI && q.theta <= PI);
        }
    }
}
