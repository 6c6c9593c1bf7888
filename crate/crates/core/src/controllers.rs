//! Backstepping formation controller.
//!
//! The linear-velocity channel cancels the longitudinal feed-forward and adds
//! `k1 * ex_hat`; the angular channel acts through the offset `c`, which is why
//! every angular quantity is divided by it. The desired angular velocity
//! drives the virtual heading `theta_d` and is chosen so that, with
//! `k4 = c k3 / (2 k2)`, the composite Lyapunov function decreases at
//! `-k1 ex^2 - k2 ey^2 - k5 eth^2`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::formation::{feedforward, FormationSample, FrameAngles, LocalError};
use crate::kinematics::{wrap_angle, VelocityCommand};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ControlError {
    #[error("controller gains must be positive (k1 = {k1}, k2 = {k2}, k3 = {k3})")]
    NonPositiveGain { k1: f64, k2: f64, k3: f64 },
    #[error("offset c must be positive, got {0}")]
    NonPositiveOffset(f64),
    #[error("time step must be non-negative, got {0}")]
    NegativeStep(f64),
    #[error("saturation limits must be positive")]
    BadSaturation,
}

/// Controller gains. `k4` and `k5` are derived and only constructible through
/// [`derive_gains`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Gains {
    k1: f64,
    k2: f64,
    k3: f64,
    k4: f64,
    k5: f64,
}

impl Gains {
    pub fn k1(&self) -> f64 {
        self.k1
    }
    pub fn k2(&self) -> f64 {
        self.k2
    }
    pub fn k3(&self) -> f64 {
        self.k3
    }
    /// Weight of the heading error in the composite Lyapunov function.
    pub fn k4(&self) -> f64 {
        self.k4
    }
    /// Heading-error decay coefficient of the Lyapunov derivative.
    pub fn k5(&self) -> f64 {
        self.k5
    }
}

pub fn derive_gains(k1: f64, k2: f64, k3: f64, c: f64) -> Result<Gains, ControlError> {
    let positive = |k: f64| k > 0.0 && k.is_finite();
    if !(positive(k1) && positive(k2) && positive(k3)) {
        return Err(ControlError::NonPositiveGain { k1, k2, k3 });
    }
    if !positive(c) {
        return Err(ControlError::NonPositiveOffset(c));
    }
    Ok(Gains {
        k1,
        k2,
        k3,
        k4: c * k3 / (2.0 * k2),
        k5: k3 * k3 / k2,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ControlOutput {
    pub cmd: VelocityCommand,
    pub omega_d: f64,
}

pub fn backstepping_command(
    e_hat: &LocalError,
    leader_cmd: &VelocityCommand,
    angles: &FrameAngles,
    spec: &FormationSample,
    gains: &Gains,
    c: f64,
) -> Result<ControlOutput, ControlError> {
    if !(c > 0.0) {
        return Err(ControlError::NonPositiveOffset(c));
    }
    let (longitudinal, lateral) = feedforward(angles, leader_cmd, spec);
    let v = longitudinal + gains.k1 * e_hat.ex_hat;
    let omega = (lateral + gains.k2 * e_hat.ey_hat + gains.k3 * e_hat.etheta_hat) / c;
    let omega_d = (lateral + 2.0 * gains.k2 * e_hat.ey_hat) / c;
    Ok(ControlOutput {
        cmd: VelocityCommand { v, omega },
        omega_d,
    })
}

/// Advance the virtual desired heading. `omega_d` is held over the step, for
/// which every Runge-Kutta scheme reduces to this update.
pub fn update_desired_heading(theta_d: f64, omega_d: f64, dt: f64) -> Result<f64, ControlError> {
    if dt < 0.0 || dt.is_nan() {
        return Err(ControlError::NegativeStep(dt));
    }
    if dt == 0.0 {
        return Ok(theta_d);
    }
    Ok(wrap_angle(theta_d + omega_d * dt))
}

/// Optional symmetric command limits. Off by default.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Saturation {
    pub max_v: Option<f64>,
    pub max_omega: Option<f64>,
}

impl Saturation {
    pub fn validate(&self) -> Result<(), ControlError> {
        for lim in [self.max_v, self.max_omega].into_iter().flatten() {
            if !(lim > 0.0) {
                return Err(ControlError::BadSaturation);
            }
        }
        Ok(())
    }

    pub fn is_active(&self) -> bool {
        self.max_v.is_some() || self.max_omega.is_some()
    }

    pub fn apply(&self, cmd: VelocityCommand) -> VelocityCommand {
        let clamp = |x: f64, lim: Option<f64>| match lim {
            Some(l) => x.clamp(-l, l),
            None => x,
        };
        VelocityCommand {
            v: clamp(cmd.v, self.max_v),
            omega: clamp(cmd.omega, self.max_omega),
        }
    }
}
