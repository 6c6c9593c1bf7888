//! Per-follower control law evaluation for both controller kinds.

use serde::{Deserialize, Serialize};

use crate::controllers::{backstepping_command, derive_gains, ControlError, ControlOutput, Gains, Saturation};
use crate::formation::{error_rates, FormationSample, FrameAngles, LocalError, LocalErrorRate};
use crate::fuzzy::{FuzzyError, GainTuner};
use crate::kinematics::VelocityCommand;

use super::SimError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ControllerKind {
    /// Fixed-gain backstepping.
    Backstepping,
    /// Backstepping with fuzzy-tuned gains.
    FuzzyAdaptive,
}

impl ControllerKind {
    pub fn short_name(&self) -> &'static str {
        match self {
            ControllerKind::Backstepping => "bc",
            ControllerKind::FuzzyAdaptive => "fabc",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "bc" | "backstepping" => Some(ControllerKind::Backstepping),
            "fabc" | "fuzzy" | "fuzzy_adaptive" => Some(ControllerKind::FuzzyAdaptive),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ControllerSpec {
    pub kind: ControllerKind,
    /// Fixed gains for [`ControllerKind::Backstepping`]; for the fuzzy kind
    /// they seed the first tuning step.
    pub k1: f64,
    pub k2: f64,
    pub k3: f64,
    pub saturation: Saturation,
}

impl Default for ControllerSpec {
    fn default() -> Self {
        Self {
            kind: ControllerKind::Backstepping,
            k1: 3.0,
            k2: 3.0,
            k3: 4.0,
            saturation: Saturation::default(),
        }
    }
}

/// Everything the law produces at one evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LawOutput {
    pub output: ControlOutput,
    pub gains: Gains,
    pub rates: LocalErrorRate,
}

pub(crate) struct LawInputs<'a> {
    pub e_hat: &'a LocalError,
    pub leader_cmd: &'a VelocityCommand,
    pub angles: &'a FrameAngles,
    pub sample: &'a FormationSample,
    pub c: f64,
}

impl LawInputs<'_> {
    fn command(&self, gains: &Gains, sat: &Saturation) -> Result<(ControlOutput, LocalErrorRate), ControlError> {
        let mut out = backstepping_command(self.e_hat, self.leader_cmd, self.angles, self.sample, gains, self.c)?;
        out.cmd = sat.apply(out.cmd);
        let rates = error_rates(
            self.e_hat,
            self.angles,
            self.leader_cmd,
            &out.cmd,
            self.sample,
            out.omega_d,
            self.c,
        );
        Ok((out, rates))
    }
}

/// Command under the given gains, with the resulting error rates.
pub(crate) fn evaluate(spec: &ControllerSpec, gains: &Gains, inputs: &LawInputs<'_>) -> Result<LawOutput, SimError> {
    let (output, rates) = inputs.command(gains, &spec.saturation)?;
    Ok(LawOutput {
        output,
        gains: *gains,
        rates,
    })
}

/// Fuzzy gains for the current errors. The rate inputs are the error rates
/// produced by the gains currently applied, which is what a running robot
/// observes; the result is held until the next control step. `k2` and `k3`
/// come from one system and are equal.
pub(crate) fn retune(
    spec: &ControllerSpec,
    tuner: &GainTuner,
    applied: &Gains,
    inputs: &LawInputs<'_>,
) -> Result<Gains, SimError> {
    let (_, rates) = inputs.command(applied, &spec.saturation)?;
    let tuned = tuner.tune_gains(inputs.e_hat, &rates)?;
    Ok(derive_gains(tuned.k1, tuned.k2, tuned.k3, inputs.c)?)
}

impl From<FuzzyError> for SimError {
    fn from(e: FuzzyError) -> Self {
        SimError::Fuzzy(e)
    }
}
