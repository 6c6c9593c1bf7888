//! Mamdani fuzzy inference and the two-system adaptive gain tuner.
//!
//! Inference uses `min` for rule conjunction, clips each output label at the
//! strongest rule that concludes it, aggregates with `max` and defuzzifies
//! with the exact centroid of the resulting piecewise-linear shape.
//!
//! The tuner runs two systems over the same rule table:
//! - `k1` from the longitudinal error and the heading-error rate,
//! - `k2 = k3` from `eth - ey` and its rate.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::formation::{LocalError, LocalErrorRate};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FuzzyError {
    #[error("membership set: {0}")]
    BadMembership(String),
    #[error("rule table: {0}")]
    BadRuleTable(String),
    #[error("gain limits must satisfy 0 < k_min < k_max (got {k_min}, {k_max})")]
    BadLimits { k_min: f64, k_max: f64 },
    #[error("input scale `{0}` must be positive")]
    BadScale(&'static str),
    #[error("aggregated output shape has zero area")]
    EmptyOutput,
}

/// Trapezoid with feet `a`, `d` and plateau `[b, c]`. A triangle has `b == c`;
/// `a == b` gives a vertical left edge (left shoulder).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Trapezoid {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl Trapezoid {
    pub fn new(a: f64, b: f64, c: f64, d: f64) -> Result<Self, FuzzyError> {
        if !(a <= b && b <= c && c <= d) || ![a, b, c, d].iter().all(|v| v.is_finite()) {
            return Err(FuzzyError::BadMembership(format!(
                "trapezoid vertices must be finite and ordered, got ({a}, {b}, {c}, {d})"
            )));
        }
        Ok(Self { a, b, c, d })
    }

    pub fn triangle(left: f64, peak: f64, right: f64) -> Result<Self, FuzzyError> {
        Self::new(left, peak, peak, right)
    }

    pub fn degree(&self, x: f64) -> f64 {
        if x >= self.b && x <= self.c {
            1.0
        } else if x > self.a && x < self.b {
            (x - self.a) / (self.b - self.a)
        } else if x > self.c && x < self.d {
            (self.d - x) / (self.d - self.c)
        } else {
            0.0
        }
    }

    pub fn peak(&self) -> f64 {
        0.5 * (self.b + self.c)
    }

    fn vertices(&self) -> [f64; 4] {
        [self.a, self.b, self.c, self.d]
    }
}

/// Ordered labelled membership functions over a closed universe.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MembershipFunctionSet {
    labels: Vec<String>,
    shapes: Vec<Trapezoid>,
    lo: f64,
    hi: f64,
}

impl MembershipFunctionSet {
    pub fn new(labels: Vec<String>, shapes: Vec<Trapezoid>, lo: f64, hi: f64) -> Result<Self, FuzzyError> {
        if labels.len() != shapes.len() || labels.is_empty() {
            return Err(FuzzyError::BadMembership("need one shape per label".into()));
        }
        if !(lo < hi) {
            return Err(FuzzyError::BadMembership(format!("empty universe [{lo}, {hi}]")));
        }
        if shapes.windows(2).any(|w| !(w[0].peak() < w[1].peak())) {
            return Err(FuzzyError::BadMembership(
                "label peaks must be strictly increasing".into(),
            ));
        }
        let set = Self { labels, shapes, lo, hi };
        if let Some(x) = set.coverage_gap() {
            return Err(FuzzyError::BadMembership(format!("no label covers x = {x}")));
        }
        Ok(set)
    }

    /// Triangles centred on `peaks`, each reaching zero at its neighbours'
    /// peaks. The outermost shapes saturate to the universe bounds.
    pub fn triangular_partition(labels: &[&str], peaks: &[f64], lo: f64, hi: f64) -> Result<Self, FuzzyError> {
        if labels.len() != peaks.len() || peaks.len() < 2 {
            return Err(FuzzyError::BadMembership(
                "need at least two peaks, one per label".into(),
            ));
        }
        if peaks.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(FuzzyError::BadMembership("peaks must be strictly increasing".into()));
        }
        if peaks[0] < lo || peaks[peaks.len() - 1] > hi {
            return Err(FuzzyError::BadMembership("peaks must lie inside the universe".into()));
        }
        let n = peaks.len();
        let mut shapes = Vec::with_capacity(n);
        for i in 0..n {
            let shape = if i == 0 {
                Trapezoid::new(lo, lo, peaks[0], peaks[1])?
            } else if i == n - 1 {
                Trapezoid::new(peaks[n - 2], peaks[n - 1], hi, hi)?
            } else {
                Trapezoid::triangle(peaks[i - 1], peaks[i], peaks[i + 1])?
            };
            shapes.push(shape);
        }
        Self::new(labels.iter().map(|s| s.to_string()).collect(), shapes, lo, hi)
    }

    /// Default input partition: five labels on `[-1, 1]`.
    pub fn default_input() -> Self {
        Self::triangular_partition(&INPUT_LABELS, &[-1.0, -0.5, 0.0, 0.5, 1.0], -1.0, 1.0)
            .expect("valid default partition")
    }

    /// Default output partition: five labels on `[0, k_max]`.
    pub fn default_output(k_max: f64) -> Result<Self, FuzzyError> {
        let peaks: Vec<f64> = [0.0, 0.25, 0.5, 0.75, 1.0].iter().map(|p| p * k_max).collect();
        Self::triangular_partition(&OUTPUT_LABELS, &peaks, 0.0, k_max)
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn shapes(&self) -> &[Trapezoid] {
        &self.shapes
    }

    pub fn universe(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    pub fn len(&self) -> usize {
        self.shapes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.shapes.is_empty()
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    /// Membership degree of each label at `x`, after clamping `x` to the universe.
    pub fn fuzzify(&self, x: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.shapes.len()];
        self.fuzzify_into(x, &mut out);
        out
    }

    fn fuzzify_into(&self, x: f64, out: &mut [f64]) {
        let x = if x.is_nan() {
            0.0f64.clamp(self.lo, self.hi)
        } else {
            x.clamp(self.lo, self.hi)
        };
        for (o, s) in out.iter_mut().zip(&self.shapes) {
            *o = s.degree(x);
        }
    }

    fn breakpoints(&self) -> Vec<f64> {
        let mut pts: Vec<f64> = self
            .shapes
            .iter()
            .flat_map(|s| s.vertices())
            .chain([self.lo, self.hi])
            .map(|p| p.clamp(self.lo, self.hi))
            .collect();
        sort_dedup(&mut pts);
        pts
    }

    /// Returns a point of the universe where every degree is zero, if any.
    fn coverage_gap(&self) -> Option<f64> {
        let pts = self.breakpoints();
        let covered = |x: f64| self.shapes.iter().any(|s| s.degree(x) > 0.0);
        for w in pts.windows(2) {
            let mid = 0.5 * (w[0] + w[1]);
            if !covered(mid) {
                return Some(mid);
            }
        }
        pts.into_iter().find(|&p| !covered(p))
    }

    /// Exact centroid of `max_j min(clip[j], mu_j(y))` over the universe.
    pub fn clipped_centroid(&self, clip: &[f64]) -> Result<f64, FuzzyError> {
        assert_eq!(clip.len(), self.shapes.len());
        // Each fired shape clipped at its height is again a trapezoid. The
        // aggregate is their upper envelope: linear between the sorted
        // vertices except where two pieces cross.
        let clipped: Vec<Clipped> = self
            .shapes
            .iter()
            .zip(clip)
            .filter(|(_, &h)| h > 0.0)
            .map(|(s, &h)| Clipped::new(s, h.min(1.0)))
            .collect();
        if clipped.is_empty() {
            return Err(FuzzyError::EmptyOutput);
        }
        let mut pts: Vec<f64> = clipped
            .iter()
            .flat_map(|c| [c.a, c.b, c.c, c.d])
            .map(|p| p.clamp(self.lo, self.hi))
            .collect();
        sort_dedup(&mut pts);

        let n = clipped.len();
        let mut lines = vec![(0.0f64, 0.0f64); n];
        let mut sub = Vec::with_capacity(2 + n * n);
        let (mut area, mut moment) = (0.0, 0.0);
        for w in pts.windows(2) {
            let (p, q) = (w[0], w[1]);
            let len = q - p;
            if len <= 0.0 {
                continue;
            }
            let mut any = false;
            for (line, c) in lines.iter_mut().zip(&clipped) {
                *line = (c.right_limit(p), c.left_limit(q));
                any |= line.0 > 0.0 || line.1 > 0.0;
            }
            if !any {
                continue;
            }
            sub.clear();
            sub.push(p);
            for j in 0..n {
                for k in (j + 1)..n {
                    let dp = lines[j].0 - lines[k].0;
                    let dq = lines[j].1 - lines[k].1;
                    if dp * dq < 0.0 {
                        sub.push(p + len * dp / (dp - dq));
                    }
                }
            }
            sub.push(q);
            if sub.len() > 3 {
                sub.sort_by(f64::total_cmp);
            }
            let agg = |y: f64| {
                let t = (y - p) / len;
                lines.iter().map(|&(a, b)| a + (b - a) * t).fold(0.0f64, f64::max)
            };
            let mut fu = lines.iter().map(|l| l.0).fold(0.0f64, f64::max);
            let last = sub.len() - 1;
            for (i, s) in sub.windows(2).enumerate() {
                let (u, v) = (s[0], s[1]);
                let fv = if i + 1 == last {
                    lines.iter().map(|l| l.1).fold(0.0f64, f64::max)
                } else {
                    agg(v)
                };
                let du = v - u;
                if du > 0.0 {
                    area += 0.5 * (fu + fv) * du;
                    moment += du / 6.0 * (fu * (2.0 * u + v) + fv * (u + 2.0 * v));
                }
                fu = fv;
            }
        }
        if !(area > 0.0) {
            return Err(FuzzyError::EmptyOutput);
        }
        Ok(moment / area)
    }
}

/// A trapezoid cut at height `h`, with one-sided limits so that vertical
/// edges are handled exactly.
struct Clipped {
    a: f64,
    b: f64,
    c: f64,
    d: f64,
    h: f64,
}

impl Clipped {
    fn new(s: &Trapezoid, h: f64) -> Self {
        Self {
            a: s.a,
            b: s.a + h * (s.b - s.a),
            c: s.d - h * (s.d - s.c),
            d: s.d,
            h,
        }
    }

    fn right_limit(&self, x: f64) -> f64 {
        if x < self.a || x >= self.d {
            0.0
        } else if x < self.b {
            self.h * (x - self.a) / (self.b - self.a)
        } else if x < self.c {
            self.h
        } else {
            self.h * (self.d - x) / (self.d - self.c)
        }
    }

    fn left_limit(&self, x: f64) -> f64 {
        if x <= self.a || x > self.d {
            0.0
        } else if x <= self.b {
            self.h * (x - self.a) / (self.b - self.a)
        } else if x <= self.c {
            self.h
        } else {
            self.h * (self.d - x) / (self.d - self.c)
        }
    }
}

fn sort_dedup(v: &mut Vec<f64>) {
    v.sort_by(f64::total_cmp);
    v.dedup();
}

pub const INPUT_LABELS: [&str; 5] = ["nb", "ns", "z", "ps", "pb"];
pub const OUTPUT_LABELS: [&str; 5] = ["z", "ps", "pm", "pb", "pvb"];

/// Output label index for every (error-rate label, error label) pair.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RuleTable {
    /// `cells[rate][error]`
    cells: Vec<Vec<usize>>,
}

/// Rows are the error-rate label, columns the error label.
const GAIN_RULES: [[&str; 5]; 5] = [
    ["z", "z", "ps", "ps", "pm"],
    ["z", "ps", "ps", "pm", "pm"],
    ["z", "z", "ps", "pm", "pb"],
    ["z", "pm", "pb", "pb", "pvb"],
    ["pm", "pb", "pb", "pvb", "pvb"],
];

impl Default for RuleTable {
    fn default() -> Self {
        let rows: Vec<Vec<&str>> = GAIN_RULES.iter().map(|r| r.to_vec()).collect();
        Self::from_labels(&rows, &INPUT_LABELS, &INPUT_LABELS, &OUTPUT_LABELS).expect("valid default table")
    }
}

impl RuleTable {
    pub fn new(cells: Vec<Vec<usize>>) -> Self {
        Self { cells }
    }

    /// Build from label names; every cell must name a known output label.
    pub fn from_labels<S: AsRef<str>>(
        rows: &[Vec<S>],
        error_labels: &[&str],
        rate_labels: &[&str],
        output_labels: &[&str],
    ) -> Result<Self, FuzzyError> {
        if rows.len() != rate_labels.len() {
            return Err(FuzzyError::BadRuleTable(format!(
                "expected {} rows, got {}",
                rate_labels.len(),
                rows.len()
            )));
        }
        let mut cells = Vec::with_capacity(rows.len());
        for (i, row) in rows.iter().enumerate() {
            if row.len() != error_labels.len() {
                return Err(FuzzyError::BadRuleTable(format!(
                    "row {} has {} cells, expected {}",
                    rate_labels[i],
                    row.len(),
                    error_labels.len()
                )));
            }
            let mut out = Vec::with_capacity(row.len());
            for cell in row {
                let name = cell.as_ref().trim();
                let idx = output_labels
                    .iter()
                    .position(|l| *l == name)
                    .ok_or_else(|| FuzzyError::BadRuleTable(format!("unknown output label `{name}`")))?;
                out.push(idx);
            }
            cells.push(out);
        }
        Ok(Self { cells })
    }

    pub fn cells(&self) -> &[Vec<usize>] {
        &self.cells
    }

    pub fn get(&self, error: usize, rate: usize) -> usize {
        self.cells[rate][error]
    }

    /// Check that the table covers every label pair and names valid outputs.
    pub fn validate(&self, n_error: usize, n_rate: usize, n_out: usize) -> Result<(), FuzzyError> {
        if self.cells.len() != n_rate {
            return Err(FuzzyError::BadRuleTable(format!(
                "table has {} rows, rate input has {} labels",
                self.cells.len(),
                n_rate
            )));
        }
        for (i, row) in self.cells.iter().enumerate() {
            if row.len() != n_error {
                return Err(FuzzyError::BadRuleTable(format!("row {i} is not total")));
            }
            if let Some(&bad) = row.iter().find(|&&c| c >= n_out) {
                return Err(FuzzyError::BadRuleTable(format!("row {i} names output {bad}")));
            }
        }
        Ok(())
    }

    /// Output rank never decreases as the error label increases.
    pub fn is_monotone_in_error(&self) -> bool {
        self.cells.iter().all(|row| row.windows(2).all(|w| w[0] <= w[1]))
    }

    /// Output rank never decreases as the rate label increases.
    pub fn is_monotone_in_rate(&self) -> bool {
        self.cells
            .windows(2)
            .all(|w| w[0].iter().zip(&w[1]).all(|(a, b)| a <= b))
    }
}

/// Normalized inputs of one fuzzy system.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct TunerInputs {
    pub e: f64,
    pub edot: f64,
}

/// Clamp range of every tuned gain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GainLimits {
    pub k_min: f64,
    pub k_max: f64,
}

impl Default for GainLimits {
    fn default() -> Self {
        Self { k_min: 0.1, k_max: 5.0 }
    }
}

impl GainLimits {
    pub fn validate(&self) -> Result<(), FuzzyError> {
        if !(self.k_min > 0.0 && self.k_min < self.k_max && self.k_max.is_finite()) {
            return Err(FuzzyError::BadLimits {
                k_min: self.k_min,
                k_max: self.k_max,
            });
        }
        Ok(())
    }
}

/// Single-output Mamdani inference followed by clamping to `limits`.
pub fn infer_defuzzify(
    inputs: &TunerInputs,
    rules: &RuleTable,
    error_mfs: &MembershipFunctionSet,
    rate_mfs: &MembershipFunctionSet,
    out_mfs: &MembershipFunctionSet,
    limits: &GainLimits,
) -> Result<f64, FuzzyError> {
    rules.validate(error_mfs.len(), rate_mfs.len(), out_mfs.len())?;
    let raw = mamdani(inputs, rules, error_mfs, rate_mfs, out_mfs)?;
    Ok(raw.clamp(limits.k_min, limits.k_max))
}

fn mamdani(
    inputs: &TunerInputs,
    rules: &RuleTable,
    error_mfs: &MembershipFunctionSet,
    rate_mfs: &MembershipFunctionSet,
    out_mfs: &MembershipFunctionSet,
) -> Result<f64, FuzzyError> {
    let mut mu_e = [0.0f64; 16];
    let mut mu_r = [0.0f64; 16];
    let (ne, nr, no) = (error_mfs.len(), rate_mfs.len(), out_mfs.len());
    let mut mu_e_vec;
    let mut mu_r_vec;
    let (mu_e, mu_r): (&mut [f64], &mut [f64]) = if ne <= 16 && nr <= 16 {
        (&mut mu_e[..ne], &mut mu_r[..nr])
    } else {
        mu_e_vec = vec![0.0; ne];
        mu_r_vec = vec![0.0; nr];
        (&mut mu_e_vec[..], &mut mu_r_vec[..])
    };
    error_mfs.fuzzify_into(inputs.e, mu_e);
    rate_mfs.fuzzify_into(inputs.edot, mu_r);

    let mut clip = vec![0.0f64; no];
    for (ri, &wr) in mu_r.iter().enumerate() {
        if wr <= 0.0 {
            continue;
        }
        for (ei, &we) in mu_e.iter().enumerate() {
            let w = we.min(wr);
            if w > 0.0 {
                let o = rules.cells[ri][ei];
                clip[o] = clip[o].max(w);
            }
        }
    }
    out_mfs.clipped_centroid(&clip)
}

/// Which error rate feeds the `k1` system alongside the longitudinal error.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum K1RateInput {
    /// Heading-error rate.
    #[default]
    Heading,
    /// Longitudinal-error rate (classic PD pairing).
    Longitudinal,
}

/// Divisors applied to raw errors and rates before clamping to `[-1, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InputScaling {
    /// Longitudinal error (m).
    pub ex: f64,
    /// `eth - ey` (mixed, treated as a length).
    pub e_yth: f64,
    /// Heading-error rate (rad/s).
    pub etheta_rate: f64,
    /// Longitudinal-error rate (m/s), used with [`K1RateInput::Longitudinal`].
    pub ex_rate: f64,
    /// Rate of `eth - ey`.
    pub e_yth_rate: f64,
}

impl Default for InputScaling {
    fn default() -> Self {
        Self {
            ex: 0.3,
            e_yth: 0.3,
            etheta_rate: DEFAULT_RATE_SCALE,
            ex_rate: DEFAULT_RATE_SCALE,
            e_yth_rate: DEFAULT_RATE_SCALE,
        }
    }
}

const DEFAULT_RATE_SCALE: f64 = 20.0;

impl InputScaling {
    pub fn validate(&self) -> Result<(), FuzzyError> {
        for (name, v) in [
            ("ex", self.ex),
            ("e_yth", self.e_yth),
            ("etheta_rate", self.etheta_rate),
            ("ex_rate", self.ex_rate),
            ("e_yth_rate", self.e_yth_rate),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(FuzzyError::BadScale(name));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TunedGains {
    pub k1: f64,
    pub k2: f64,
    pub k3: f64,
}

/// The two-system gain tuner. Immutable once built.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GainTuner {
    error_mfs: MembershipFunctionSet,
    rate_mfs: MembershipFunctionSet,
    output_mfs: MembershipFunctionSet,
    rules: RuleTable,
    limits: GainLimits,
    scaling: InputScaling,
    k1_rate: K1RateInput,
}

impl Default for GainTuner {
    fn default() -> Self {
        let limits = GainLimits::default();
        Self {
            error_mfs: MembershipFunctionSet::default_input(),
            rate_mfs: MembershipFunctionSet::default_input(),
            output_mfs: MembershipFunctionSet::default_output(limits.k_max).expect("valid default"),
            rules: RuleTable::default(),
            limits,
            scaling: InputScaling::default(),
            k1_rate: K1RateInput::Heading,
        }
    }
}

impl GainTuner {
    pub fn new(
        error_mfs: MembershipFunctionSet,
        rate_mfs: MembershipFunctionSet,
        output_mfs: MembershipFunctionSet,
        rules: RuleTable,
        limits: GainLimits,
        scaling: InputScaling,
        k1_rate: K1RateInput,
    ) -> Result<Self, FuzzyError> {
        rules.validate(error_mfs.len(), rate_mfs.len(), output_mfs.len())?;
        limits.validate()?;
        scaling.validate()?;
        Ok(Self {
            error_mfs,
            rate_mfs,
            output_mfs,
            rules,
            limits,
            scaling,
            k1_rate,
        })
    }

    pub fn limits(&self) -> GainLimits {
        self.limits
    }

    pub fn scaling(&self) -> InputScaling {
        self.scaling
    }

    pub fn k1_rate_input(&self) -> K1RateInput {
        self.k1_rate
    }

    pub fn rules(&self) -> &RuleTable {
        &self.rules
    }

    pub fn output_mfs(&self) -> &MembershipFunctionSet {
        &self.output_mfs
    }

    /// Run one system on already-normalized inputs.
    pub fn infer(&self, inputs: &TunerInputs) -> Result<f64, FuzzyError> {
        let raw = mamdani(inputs, &self.rules, &self.error_mfs, &self.rate_mfs, &self.output_mfs)?;
        Ok(raw.clamp(self.limits.k_min, self.limits.k_max))
    }

    pub fn k1_inputs(&self, e_hat: &LocalError, rate: &LocalErrorRate) -> TunerInputs {
        let edot = match self.k1_rate {
            K1RateInput::Heading => rate.etheta_hat / self.scaling.etheta_rate,
            K1RateInput::Longitudinal => rate.ex_hat / self.scaling.ex_rate,
        };
        TunerInputs {
            e: e_hat.ex_hat / self.scaling.ex,
            edot,
        }
    }

    pub fn k23_inputs(&self, e_hat: &LocalError, rate: &LocalErrorRate) -> TunerInputs {
        TunerInputs {
            e: (e_hat.etheta_hat - e_hat.ey_hat) / self.scaling.e_yth,
            edot: (rate.etheta_hat - rate.ey_hat) / self.scaling.e_yth_rate,
        }
    }

    /// Gains for the given errors and error rates. `k2` and `k3` come from the
    /// same system and are always equal.
    pub fn tune_gains(&self, e_hat: &LocalError, rate: &LocalErrorRate) -> Result<TunedGains, FuzzyError> {
        let k1 = self.infer(&self.k1_inputs(e_hat, rate))?;
        let k23 = self.infer(&self.k23_inputs(e_hat, rate))?;
        Ok(TunedGains { k1, k2: k23, k3: k23 })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    /// Brute-force centroid on a dense grid (midpoint rule).
    fn grid_centroid(set: &MembershipFunctionSet, clip: &[f64]) -> f64 {
        let (lo, hi) = set.universe();
        let n = 200_000;
        let h = (hi - lo) / n as f64;
        let (mut a, mut m) = (0.0, 0.0);
        for i in 0..n {
            let y = lo + (i as f64 + 0.5) * h;
            let f = set
                .shapes()
                .iter()
                .zip(clip)
                .map(|(s, &c)| c.min(s.degree(y)))
                .fold(0.0, f64::max);
            a += f * h;
            m += f * y * h;
        }
        m / a
    }

    fn one_hot(n: usize, i: usize) -> Vec<f64> {
        let mut v = vec![0.0; n];
        v[i] = 1.0;
        v
    }

    #[test]
    fn fuzzify_peak_midpoint_and_saturation() {
        let set = MembershipFunctionSet::default_input();
        assert_eq!(set.fuzzify(0.5), one_hot(5, 3));
        let mid = set.fuzzify(0.25);
        assert_abs_diff_eq!(mid[2], 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(mid[3], 0.5, epsilon = 1e-15);
        assert_eq!(set.fuzzify(7.0), one_hot(5, 4));
        assert_eq!(set.fuzzify(-3.0), one_hot(5, 0));
        assert_eq!(set.fuzzify(-1.0), one_hot(5, 0));
    }

    #[test]
    fn membership_set_rejects_gaps_and_unsorted() {
        let t = |a, b, c| Trapezoid::triangle(a, b, c).unwrap();
        let gap = MembershipFunctionSet::new(
            vec!["a".into(), "b".into()],
            vec![t(-1.0, -1.0, -0.2), t(0.2, 1.0, 1.0)],
            -1.0,
            1.0,
        );
        assert!(matches!(gap, Err(FuzzyError::BadMembership(_))));
        let unsorted = MembershipFunctionSet::new(
            vec!["a".into(), "b".into()],
            vec![t(0.0, 1.0, 1.0), t(-1.0, -1.0, 1.0)],
            -1.0,
            1.0,
        );
        assert!(unsorted.is_err());
        assert!(Trapezoid::new(0.0, 1.0, 0.5, 2.0).is_err());
    }

    #[test]
    fn default_table_cells() {
        let t = RuleTable::default();
        let idx = |l: &str| INPUT_LABELS.iter().position(|x| *x == l).unwrap();
        let out = |l: &str| OUTPUT_LABELS.iter().position(|x| *x == l).unwrap();
        assert_eq!(t.get(idx("z"), idx("z")), out("ps"));
        assert_eq!(t.get(idx("nb"), idx("nb")), out("z"));
        assert_eq!(t.get(idx("pb"), idx("pb")), out("pvb"));
        assert_eq!(t.get(idx("pb"), idx("nb")), out("pm"));
        assert_eq!(t.get(idx("nb"), idx("pb")), out("pm"));
        assert!(t.validate(5, 5, 5).is_ok());
        assert!(t.is_monotone_in_error());
        // one cell (rate ns vs z at error ns) breaks monotonicity along the rate axis
        assert!(!t.is_monotone_in_rate());
    }

    #[test]
    fn malformed_tables_are_rejected() {
        let short = RuleTable::new(vec![vec![0; 5]; 4]);
        assert!(matches!(short.validate(5, 5, 5), Err(FuzzyError::BadRuleTable(_))));
        let ragged = RuleTable::new(vec![vec![0; 5], vec![0; 5], vec![0; 3], vec![0; 5], vec![0; 5]]);
        assert!(ragged.validate(5, 5, 5).is_err());
        let bad_label = RuleTable::new(vec![vec![7; 5]; 5]);
        assert!(bad_label.validate(5, 5, 5).is_err());
        let rows = vec![vec!["z", "z", "ps", "ps", "huge"]; 5];
        assert!(RuleTable::from_labels(&rows, &INPUT_LABELS, &INPUT_LABELS, &OUTPUT_LABELS).is_err());

        let set = MembershipFunctionSet::default_input();
        let out = MembershipFunctionSet::default_output(5.0).unwrap();
        let r = infer_defuzzify(
            &TunerInputs::default(),
            &short,
            &set,
            &set,
            &out,
            &GainLimits::default(),
        );
        assert!(r.is_err());
    }

    #[test]
    fn exact_centroid_matches_grid() {
        let out = MembershipFunctionSet::default_output(5.0).unwrap();
        for clip in [
            vec![1.0, 0.0, 0.0, 0.0, 0.0],
            vec![0.0, 1.0, 0.0, 0.0, 0.0],
            vec![0.0, 0.0, 0.0, 0.0, 1.0],
            vec![0.3, 0.7, 0.0, 0.0, 0.0],
            vec![0.2, 0.5, 0.9, 0.1, 0.4],
            vec![0.0, 0.0, 0.35, 0.35, 0.0],
            vec![1.0, 1.0, 1.0, 1.0, 1.0],
        ] {
            let exact = out.clipped_centroid(&clip).unwrap();
            let grid = grid_centroid(&out, &clip);
            assert_abs_diff_eq!(exact, grid, epsilon = 1e-6);
        }
        assert!(out.clipped_centroid(&[0.0; 5]).is_err());
    }

    #[test]
    fn label_centroids() {
        let g = 5.0;
        let out = MembershipFunctionSet::default_output(g).unwrap();
        // half triangle [0, g/4] peaking at 0
        assert_abs_diff_eq!(out.clipped_centroid(&one_hot(5, 0)).unwrap(), g / 12.0, epsilon = 1e-12);
        assert_abs_diff_eq!(out.clipped_centroid(&one_hot(5, 1)).unwrap(), 0.25 * g, epsilon = 1e-12);
        assert_abs_diff_eq!(
            out.clipped_centroid(&one_hot(5, 4)).unwrap(),
            g - g / 12.0,
            epsilon = 1e-12
        );
    }

    #[test]
    fn rule_cells_through_engine() {
        let set = MembershipFunctionSet::default_input();
        let out = MembershipFunctionSet::default_output(5.0).unwrap();
        let rules = RuleTable::default();
        let lim = GainLimits::default();
        let run =
            |e: f64, edot: f64| infer_defuzzify(&TunerInputs { e, edot }, &rules, &set, &set, &out, &lim).unwrap();
        // (z, z) -> ps: centroid of the ps triangle
        assert_abs_diff_eq!(run(0.0, 0.0), 1.25, epsilon = 1e-12);
        // (nb, nb) -> z: centroid of the z shoulder, above k_min so unclamped
        assert_abs_diff_eq!(run(-1.0, -1.0), 5.0 / 12.0, epsilon = 1e-12);
        // (pb, pb) -> pvb
        assert_abs_diff_eq!(run(1.0, 1.0), 5.0 - 5.0 / 12.0, epsilon = 1e-12);
        assert_abs_diff_eq!(run(3.0, 9.0), 5.0 - 5.0 / 12.0, epsilon = 1e-12);
    }

    #[test]
    fn clamp_to_limits() {
        let set = MembershipFunctionSet::default_input();
        let out = MembershipFunctionSet::default_output(5.0).unwrap();
        let rules = RuleTable::default();
        let tight = GainLimits { k_min: 1.0, k_max: 2.0 };
        let r = infer_defuzzify(&TunerInputs { e: -1.0, edot: -1.0 }, &rules, &set, &set, &out, &tight).unwrap();
        assert_eq!(r, 1.0);
        let r = infer_defuzzify(&TunerInputs { e: 1.0, edot: 1.0 }, &rules, &set, &set, &out, &tight).unwrap();
        assert_eq!(r, 2.0);
        assert!(GainLimits { k_min: 0.0, k_max: 1.0 }.validate().is_err());
        assert!(GainLimits { k_min: 2.0, k_max: 1.0 }.validate().is_err());
    }

    #[test]
    fn tuner_zero_inputs_give_zz_output() {
        let tuner = GainTuner::default();
        let g = tuner
            .tune_gains(&LocalError::default(), &LocalErrorRate::default())
            .unwrap();
        assert_abs_diff_eq!(g.k1, 1.25, epsilon = 1e-12);
        assert_eq!(g.k2, g.k3);
        assert_abs_diff_eq!(g.k2, 1.25, epsilon = 1e-12);
    }

    #[test]
    fn tuner_saturated_inputs_reach_top_label() {
        let tuner = GainTuner::default();
        let e = LocalError {
            ex_hat: 10.0,
            ey_hat: -10.0,
            etheta_hat: 10.0,
        };
        let r = LocalErrorRate {
            ex_hat: 0.0,
            ey_hat: -1e3,
            etheta_hat: 1e3,
        };
        let g = tuner.tune_gains(&e, &r).unwrap();
        let top = 5.0 - 5.0 / 12.0;
        assert_abs_diff_eq!(g.k1, top, epsilon = 1e-12);
        assert_abs_diff_eq!(g.k2, top, epsilon = 1e-12);
        assert_eq!(g.k2, g.k3);
    }

    #[test]
    fn k1_pairing_switch() {
        let tuner = GainTuner::default();
        let pd = GainTuner {
            k1_rate: K1RateInput::Longitudinal,
            ..tuner.clone()
        };
        let e = LocalError {
            ex_hat: 0.1,
            ey_hat: 0.0,
            etheta_hat: 0.0,
        };
        let r = LocalErrorRate {
            ex_hat: -5.0,
            ey_hat: 0.0,
            etheta_hat: 5.0,
        };
        assert!(tuner.k1_inputs(&e, &r).edot > 0.0);
        assert!(pd.k1_inputs(&e, &r).edot < 0.0);
    }

    #[test]
    fn scaling_validation() {
        let bad = InputScaling {
            e_yth_rate: 0.0,
            ..InputScaling::default()
        };
        assert_eq!(bad.validate(), Err(FuzzyError::BadScale("e_yth_rate")));
    }

    proptest! {
        #[test]
        fn degrees_bounded_and_covering(x in -3.0..3.0f64) {
            let set = MembershipFunctionSet::default_input();
            let mu = set.fuzzify(x);
            prop_assert!(mu.iter().all(|&m| (0.0..=1.0).contains(&m)));
            let s: f64 = mu.iter().sum();
            prop_assert!(s > 0.0 && s <= 2.0);
            prop_assert!(mu.iter().filter(|&&m| m > 0.0).count() <= 2);
        }

        #[test]
        fn output_within_limits(e in -5.0..5.0f64, edot in -5.0..5.0f64) {
            let tuner = GainTuner::default();
            let k = tuner.infer(&TunerInputs { e, edot }).unwrap();
            prop_assert!((0.1..=5.0).contains(&k));
            // bit-identical on repeat
            prop_assert_eq!(k.to_bits(), tuner.infer(&TunerInputs { e, edot }).unwrap().to_bits());
        }

        #[test]
        fn monotone_in_error_between_label_peaks(peak in 0usize..5, i in 0usize..4) {
            // Clipping a shoulder shifts its centroid, so the surface is only
            // monotone when sampled at the label peaks.
            let tuner = GainTuner::default();
            let edot = -1.0 + 0.5 * peak as f64;
            let k = |e: f64| tuner.infer(&TunerInputs { e, edot }).unwrap();
            let lo = -1.0 + 0.5 * i as f64;
            prop_assert!(k(lo + 0.5) >= k(lo) - 1e-12);
        }

        #[test]
        fn exact_centroid_agrees_with_grid(c0 in 0.0..1.0f64, c1 in 0.0..1.0f64, c2 in 0.0..1.0f64, c3 in 0.0..1.0f64, c4 in 0.01..1.0f64) {
            let out = MembershipFunctionSet::default_output(5.0).unwrap();
            let clip = [c0, c1, c2, c3, c4];
            let exact = out.clipped_centroid(&clip).unwrap();
            let grid = grid_centroid(&out, &clip);
            prop_assert!((exact - grid).abs() < 1e-5);
        }
    }
}
