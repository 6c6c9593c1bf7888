use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{ControllerKind, Trace, SETTLING_FRACTION};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CompareError {
    #[error("traces are not comparable: {0}")]
    Mismatch(String),
}

/// Peak command magnitudes and convergence figures for one follower under
/// one controller.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ControllerMetrics {
    pub max_abs_left_wheel: f64,
    pub max_abs_right_wheel: f64,
    pub max_abs_v: f64,
    pub max_abs_omega: f64,
    pub settling_time: Option<f64>,
    pub initial_error_norm: f64,
    pub final_error_norm: f64,
}

impl ControllerMetrics {
    pub fn from_trace(trace: &Trace, i: usize) -> Self {
        let mut m = ControllerMetrics {
            max_abs_left_wheel: 0.0,
            max_abs_right_wheel: 0.0,
            max_abs_v: 0.0,
            max_abs_omega: 0.0,
            settling_time: trace.settling_time(i, SETTLING_FRACTION),
            initial_error_norm: trace.rows.first().map_or(0.0, |r| r.followers[i].e_hat.norm()),
            final_error_norm: trace.rows.last().map_or(0.0, |r| r.followers[i].e_hat.norm()),
        };
        for (_, f) in trace.follower(i) {
            m.max_abs_left_wheel = m.max_abs_left_wheel.max(f.wheels.left.abs());
            m.max_abs_right_wheel = m.max_abs_right_wheel.max(f.wheels.right.abs());
            m.max_abs_v = m.max_abs_v.max(f.cmd.v.abs());
            m.max_abs_omega = m.max_abs_omega.max(f.cmd.omega.abs());
        }
        m
    }
}

/// `100 (1 - fabc / bc)`, or 0 when the baseline peak is zero.
pub fn percentage_decrease(bc: f64, fabc: f64) -> f64 {
    if bc > 0.0 {
        100.0 * (1.0 - fabc / bc)
    } else {
        0.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FollowerComparison {
    pub name: String,
    pub bc: ControllerMetrics,
    pub fabc: ControllerMetrics,
    pub left_wheel_decrease_pct: f64,
    pub right_wheel_decrease_pct: f64,
    pub v_decrease_pct: f64,
    pub omega_decrease_pct: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub dt: f64,
    pub horizon: f64,
    pub settling_fraction: f64,
    pub followers: Vec<FollowerComparison>,
}

/// Compare a backstepping run against a fuzzy-adaptive run of the same
/// scenario.
pub fn compare(bc: &Trace, fabc: &Trace) -> Result<ComparisonReport, CompareError> {
    let bad = |m: &str| Err(CompareError::Mismatch(m.to_string()));
    if bc.follower_names != fabc.follower_names {
        return bad("follower names differ");
    }
    if bc.dt != fabc.dt || bc.rows.len() != fabc.rows.len() {
        return bad("time grids differ");
    }
    if bc.kinds.contains(&ControllerKind::FuzzyAdaptive) && !fabc.kinds.contains(&ControllerKind::FuzzyAdaptive) {
        return bad("controller roles are swapped");
    }
    if bc
        .rows
        .iter()
        .zip(&fabc.rows)
        .any(|(a, b)| a.leader != b.leader || a.t != b.t)
    {
        return bad("leader trajectories differ");
    }
    if let (Some(a), Some(b)) = (bc.rows.first(), fabc.rows.first()) {
        if a.followers.iter().zip(&b.followers).any(|(p, q)| p.pose != q.pose) {
            return bad("follower initial poses differ");
        }
    }

    let followers = bc
        .follower_names
        .iter()
        .enumerate()
        .map(|(i, name)| {
            let b = ControllerMetrics::from_trace(bc, i);
            let f = ControllerMetrics::from_trace(fabc, i);
            FollowerComparison {
                name: name.clone(),
                left_wheel_decrease_pct: percentage_decrease(b.max_abs_left_wheel, f.max_abs_left_wheel),
                right_wheel_decrease_pct: percentage_decrease(b.max_abs_right_wheel, f.max_abs_right_wheel),
                v_decrease_pct: percentage_decrease(b.max_abs_v, f.max_abs_v),
                omega_decrease_pct: percentage_decrease(b.max_abs_omega, f.max_abs_omega),
                bc: b,
                fabc: f,
            }
        })
        .collect();

    Ok(ComparisonReport {
        dt: bc.dt,
        horizon: bc.rows.last().map_or(0.0, |r| r.t),
        settling_fraction: SETTLING_FRACTION,
        followers,
    })
}

/// Per-follower figures printed after a single run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FollowerSummary {
    pub name: String,
    pub kind: ControllerKind,
    pub metrics: ControllerMetrics,
    /// Smallest and largest of `k1`, `k2`, `k3` over the run.
    pub gain_range: (f64, f64),
    /// Whether `k2 == k3` held exactly at every recorded step.
    pub k2_equals_k3: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub steps: usize,
    pub dt: f64,
    pub followers: Vec<FollowerSummary>,
}

impl RunSummary {
    pub fn from_trace(trace: &Trace) -> Self {
        let followers = trace
            .follower_names
            .iter()
            .enumerate()
            .map(|(i, name)| {
                let (mut lo, mut hi, mut equal) = (f64::INFINITY, f64::NEG_INFINITY, true);
                for (_, f) in trace.follower(i) {
                    let g = f.gains;
                    lo = lo.min(g.k1()).min(g.k2()).min(g.k3());
                    hi = hi.max(g.k1()).max(g.k2()).max(g.k3());
                    equal &= g.k2() == g.k3();
                }
                FollowerSummary {
                    name: name.clone(),
                    kind: trace.kinds[i],
                    metrics: ControllerMetrics::from_trace(trace, i),
                    gain_range: (lo, hi),
                    k2_equals_k3: equal,
                }
            })
            .collect();
        Self {
            steps: trace.rows.len().saturating_sub(1),
            dt: trace.dt,
            followers,
        }
    }
}

impl fmt::Display for RunSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{} steps of {} s", self.steps, self.dt)?;
        for s in &self.followers {
            let m = &s.metrics;
            writeln!(f, "follower {} ({})", s.name, s.kind.short_name())?;
            writeln!(f, "  settling time      {}", opt_time(m.settling_time))?;
            writeln!(f, "  final |e|          {:.6e}", m.final_error_norm)?;
            writeln!(f, "  max |left wheel|   {:.6} rad/s", m.max_abs_left_wheel)?;
            writeln!(f, "  max |right wheel|  {:.6} rad/s", m.max_abs_right_wheel)?;
            writeln!(f, "  max |v|            {:.6} m/s", m.max_abs_v)?;
            writeln!(f, "  max |w|            {:.6} rad/s", m.max_abs_omega)?;
            writeln!(f, "  gains in           [{:.6}, {:.6}]", s.gain_range.0, s.gain_range.1)?;
            if s.kind == ControllerKind::FuzzyAdaptive {
                let verdict = if s.k2_equals_k3 { "yes" } else { "NO" };
                writeln!(f, "  k2 == k3 at every step: {verdict}")?;
            }
        }
        Ok(())
    }
}

fn opt_time(t: Option<f64>) -> String {
    t.map_or_else(|| "never".to_string(), |t| format!("{t:.3} s"))
}

impl fmt::Display for ComparisonReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "BC vs FABC comparison (dt = {} s, T = {} s)", self.dt, self.horizon)?;
        writeln!(
            f,
            "settling: first t with |e| < {}% of |e(0)|",
            100.0 * self.settling_fraction
        )?;
        for c in &self.followers {
            writeln!(f)?;
            writeln!(f, "follower {}", c.name)?;
            writeln!(f, "  {:<24}{:>14}{:>14}{:>12}", "", "BC", "FABC", "decrease")?;
            let rows = [
                (
                    "max |left wheel| rad/s",
                    c.bc.max_abs_left_wheel,
                    c.fabc.max_abs_left_wheel,
                    c.left_wheel_decrease_pct,
                ),
                (
                    "max |right wheel| rad/s",
                    c.bc.max_abs_right_wheel,
                    c.fabc.max_abs_right_wheel,
                    c.right_wheel_decrease_pct,
                ),
                ("max |v| m/s", c.bc.max_abs_v, c.fabc.max_abs_v, c.v_decrease_pct),
                (
                    "max |w| rad/s",
                    c.bc.max_abs_omega,
                    c.fabc.max_abs_omega,
                    c.omega_decrease_pct,
                ),
            ];
            for (label, b, z, d) in rows {
                writeln!(f, "  {label:<24}{b:>14.6}{z:>14.6}{:>11.2}%", d)?;
            }
            writeln!(
                f,
                "  {:<24}{:>14}{:>14}",
                "settling time",
                opt_time(c.bc.settling_time),
                opt_time(c.fabc.settling_time)
            )?;
            writeln!(
                f,
                "  {:<24}{:>14.3e}{:>14.3e}",
                "final |e|", c.bc.final_error_norm, c.fabc.final_error_norm
            )?;
        }
        Ok(())
    }
}
