use serde::{Deserialize, Serialize};

use crate::controllers::Gains;
use crate::formation::LocalError;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LyapunovValues {
    /// Position part, `(ex^2 + ey^2) / 2`.
    pub v1: f64,
    /// Composite, `v1 + k4 * eth^2`.
    pub v2: f64,
}

pub fn lyapunov(e_hat: &LocalError, gains: &Gains) -> LyapunovValues {
    let v1 = 0.5 * (e_hat.ex_hat * e_hat.ex_hat + e_hat.ey_hat * e_hat.ey_hat);
    LyapunovValues {
        v1,
        v2: v1 + gains.k4() * e_hat.etheta_hat * e_hat.etheta_hat,
    }
}

/// Analytic `dV2/dt` along the closed loop for fixed gains.
pub fn lyapunov_rate(e_hat: &LocalError, gains: &Gains) -> f64 {
    -gains.k1() * e_hat.ex_hat.powi(2) - gains.k2() * e_hat.ey_hat.powi(2) - gains.k5() * e_hat.etheta_hat.powi(2)
}
