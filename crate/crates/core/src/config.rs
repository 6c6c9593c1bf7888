//! Scenario files: `[section]` headers with `key = value` lines.
//!
//! Sections are `sim`, `leader`, `fuzzy`, and per follower `follower.<name>`,
//! `formation.<name>` and optionally `controller.<name>`. Every numeric value
//! is an expression; time profiles may use `t`, all other values must be
//! constant. `#` and `;` start comments.

use std::fmt;
use std::path::Path;

use crate::controllers::{derive_gains, Saturation};
use crate::exprlang::{check_rate_consistency, Expr, RATE_CHECK_TOLERANCE};
use crate::fuzzy::{
    GainLimits, GainTuner, InputScaling, K1RateInput, MembershipFunctionSet, RuleTable, INPUT_LABELS, OUTPUT_LABELS,
};
use crate::kinematics::{Pose, RobotGeometry};
use crate::sim::{ControllerKind, ControllerSpec, FollowerSpec, FormationExprs, LeaderSpec, Scenario};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Severity {
    Error,
    Warning,
}

/// A located message about a scenario file.
#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostic {
    pub severity: Severity,
    /// 1-based line number, when the message refers to one line.
    pub line: Option<usize>,
    pub section: Option<String>,
    pub key: Option<String>,
    /// Byte offset inside the value, for expression errors.
    pub offset: Option<usize>,
    pub message: String,
}

impl Diagnostic {
    fn error(message: impl Into<String>) -> Self {
        Self {
            severity: Severity::Error,
            line: None,
            section: None,
            key: None,
            offset: None,
            message: message.into(),
        }
    }

    fn warning(message: impl Into<String>) -> Self {
        Self {
            severity: Severity::Warning,
            ..Self::error(message)
        }
    }

    fn at_line(mut self, line: usize) -> Self {
        self.line = Some(line);
        self
    }

    fn in_section(mut self, section: &str) -> Self {
        self.section = Some(section.to_string());
        self
    }

    fn for_key(mut self, key: &str) -> Self {
        self.key = Some(key.to_string());
        self
    }

    pub fn is_error(&self) -> bool {
        self.severity == Severity::Error
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sev = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        write!(f, "{sev}")?;
        if let Some(l) = self.line {
            write!(f, " (line {l})")?;
        }
        if let Some(s) = &self.section {
            write!(f, " [{s}]")?;
        }
        if let Some(k) = &self.key {
            write!(f, " {k}")?;
        }
        if let Some(o) = self.offset {
            write!(f, " at offset {o}")?;
        }
        write!(f, ": {}", self.message)
    }
}

/// All errors found while loading a scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub diagnostics: Vec<Diagnostic>,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, d) in self.diagnostics.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{d}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ConfigError {}

impl From<Diagnostic> for ConfigError {
    fn from(d: Diagnostic) -> Self {
        Self { diagnostics: vec![d] }
    }
}

struct Entry {
    key: String,
    value: String,
    line: usize,
    used: std::cell::Cell<bool>,
}

struct Section {
    name: String,
    line: usize,
    entries: Vec<Entry>,
}

fn strip_comment(line: &str) -> &str {
    match line.find(['#', ';']) {
        Some(i) => &line[..i],
        None => line,
    }
}

fn split_sections(text: &str, diags: &mut Vec<Diagnostic>) -> Vec<Section> {
    let mut sections: Vec<Section> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = strip_comment(raw).trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('[') {
            let Some(name) = rest.strip_suffix(']') else {
                diags.push(Diagnostic::error("unterminated section header").at_line(line_no));
                continue;
            };
            let name = name.trim().to_string();
            if sections.iter().any(|s| s.name == name) {
                diags.push(
                    Diagnostic::error("duplicate section")
                        .at_line(line_no)
                        .in_section(&name),
                );
            }
            sections.push(Section {
                name,
                line: line_no,
                entries: Vec::new(),
            });
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            diags.push(Diagnostic::error("expected `key = value`").at_line(line_no));
            continue;
        };
        let key = key.trim().to_string();
        let Some(section) = sections.last_mut() else {
            diags.push(
                Diagnostic::error("key outside any section")
                    .at_line(line_no)
                    .for_key(&key),
            );
            continue;
        };
        if key.is_empty() {
            diags.push(
                Diagnostic::error("empty key")
                    .at_line(line_no)
                    .in_section(&section.name),
            );
            continue;
        }
        if section.entries.iter().any(|e| e.key == key) {
            diags.push(
                Diagnostic::error("duplicate key")
                    .at_line(line_no)
                    .in_section(&section.name)
                    .for_key(&key),
            );
            continue;
        }
        section.entries.push(Entry {
            key,
            value: value.trim().to_string(),
            line: line_no,
            used: std::cell::Cell::new(false),
        });
    }
    sections
}

/// Typed access to one section's entries, recording errors as it goes.
struct Reader<'a> {
    section: &'a Section,
    diags: &'a mut Vec<Diagnostic>,
}

impl<'a> Reader<'a> {
    fn entry(&self, key: &str) -> Option<&'a Entry> {
        let e = self.section.entries.iter().find(|e| e.key == key)?;
        e.used.set(true);
        Some(e)
    }

    fn err(&mut self, entry: Option<&Entry>, key: &str, msg: impl Into<String>) {
        let mut d = Diagnostic::error(msg).in_section(&self.section.name).for_key(key);
        d.line = Some(entry.map_or(self.section.line, |e| e.line));
        self.diags.push(d);
    }

    fn expr(&mut self, key: &str) -> Option<Expr> {
        let e = self.entry(key)?;
        match Expr::parse(&e.value) {
            Ok(x) => Some(x),
            Err(pe) => {
                let mut d = Diagnostic::error(pe.to_string())
                    .at_line(e.line)
                    .in_section(&self.section.name)
                    .for_key(key);
                d.offset = Some(pe.offset());
                self.diags.push(d);
                None
            }
        }
    }

    fn required_expr(&mut self, key: &str) -> Option<Expr> {
        if self.entry(key).is_none() {
            self.err(None, key, "missing required key");
            return None;
        }
        self.expr(key)
    }

    fn constant(&mut self, key: &str) -> Option<f64> {
        let x = self.expr(key)?;
        let entry = self.entry(key);
        if !x.is_constant() {
            self.err(entry, key, "value must not depend on t");
            return None;
        }
        match x.eval(0.0) {
            Ok(v) => Some(v),
            Err(e) => {
                self.err(entry, key, e.to_string());
                None
            }
        }
    }

    fn constant_or(&mut self, key: &str, default: f64) -> Option<f64> {
        if self.entry(key).is_none() {
            return Some(default);
        }
        self.constant(key)
    }

    fn required_constant(&mut self, key: &str) -> Option<f64> {
        if self.entry(key).is_none() {
            self.err(None, key, "missing required key");
            return None;
        }
        self.constant(key)
    }

    fn word(&mut self, key: &str) -> Option<(&'a Entry, String)> {
        let e = self.entry(key)?;
        Some((e, e.value.to_ascii_lowercase()))
    }

    fn unknown_keys(&mut self) {
        for e in &self.section.entries {
            if !e.used.get() {
                self.diags.push(
                    Diagnostic::error("unknown key")
                        .at_line(e.line)
                        .in_section(&self.section.name)
                        .for_key(&e.key),
                );
            }
        }
    }
}

/// Parse scenario text. On failure every problem found is reported.
pub fn parse_scenario(text: &str) -> Result<Scenario, ConfigError> {
    let mut diags = Vec::new();
    let sections = split_sections(text, &mut diags);
    let find = |name: &str| sections.iter().find(|s| s.name == name);

    for s in &sections {
        let known = matches!(s.name.as_str(), "sim" | "leader" | "fuzzy")
            || ["follower.", "formation.", "controller."]
                .iter()
                .any(|p| s.name.strip_prefix(p).is_some_and(|n| !n.is_empty()));
        if !known {
            diags.push(Diagnostic::error("unknown section").at_line(s.line).in_section(&s.name));
        }
    }

    // [sim]
    let (mut dt, mut horizon, mut geometry) = (None, None, None);
    match find("sim") {
        None => diags.push(Diagnostic::error("missing section").in_section("sim")),
        Some(s) => {
            let mut r = Reader {
                section: s,
                diags: &mut diags,
            };
            dt = r.constant_or("dt", 1e-3);
            horizon = r.required_constant("horizon");
            let c = r.constant_or("c", RobotGeometry::default().c);
            let wr = r.constant_or("wheel_radius", RobotGeometry::default().wheel_radius);
            let tw = r.constant_or("track_width", RobotGeometry::default().track_width);
            if let (Some(c), Some(wr), Some(tw)) = (c, wr, tw) {
                match RobotGeometry::new(c, wr, tw) {
                    Ok(g) => geometry = Some(g),
                    Err(e) => {
                        let key = if !(c > 0.0) {
                            "c"
                        } else if !(wr > 0.0) {
                            "wheel_radius"
                        } else {
                            "track_width"
                        };
                        let entry = r.entry(key);
                        r.err(entry, key, e.to_string());
                    }
                }
            }
            if let Some(v) = dt.filter(|v| !(*v > 0.0)) {
                let entry = r.entry("dt");
                r.err(entry, "dt", format!("dt must be positive, got {v}"));
                dt = None;
            }
            if let Some(v) = horizon.filter(|v| !(*v >= 0.0)) {
                let entry = r.entry("horizon");
                r.err(entry, "horizon", format!("horizon must be non-negative, got {v}"));
                horizon = None;
            }
            r.unknown_keys();
        }
    }

    // [leader]
    let mut leader = None;
    match find("leader") {
        None => diags.push(Diagnostic::error("missing section").in_section("leader")),
        Some(s) => {
            let mut r = Reader {
                section: s,
                diags: &mut diags,
            };
            let x = r.constant_or("x", 0.0);
            let y = r.constant_or("y", 0.0);
            let th = r.constant_or("theta", 0.0);
            let v = r.required_expr("v");
            let w = r.required_expr("omega");
            r.unknown_keys();
            if let (Some(x), Some(y), Some(th), Some(v), Some(omega)) = (x, y, th, v, w) {
                leader = Some(LeaderSpec {
                    initial: Pose::new(x, y, th),
                    v,
                    omega,
                });
            }
        }
    }

    let tuner = match find("fuzzy") {
        None => Some(GainTuner::default()),
        Some(s) => parse_fuzzy(s, &mut diags),
    };

    let mut followers = Vec::new();
    for s in sections.iter().filter(|s| s.name.starts_with("follower.")) {
        let name = &s.name["follower.".len()..];
        if let Some(f) = parse_follower(name, s, &sections, geometry.map_or(0.1, |g| g.c), &mut diags) {
            followers.push(f);
        }
    }
    for s in &sections {
        for prefix in ["formation.", "controller."] {
            if let Some(name) = s.name.strip_prefix(prefix) {
                if !name.is_empty() && find(&format!("follower.{name}")).is_none() {
                    diags.push(
                        Diagnostic::error(format!("no matching [follower.{name}] section"))
                            .at_line(s.line)
                            .in_section(&s.name),
                    );
                }
            }
        }
    }
    if !sections.iter().any(|s| s.name.starts_with("follower.")) {
        diags.push(Diagnostic::error("at least one [follower.<name>] section is required"));
    }

    if !diags.is_empty() {
        return Err(ConfigError { diagnostics: diags });
    }
    match (leader, geometry, tuner, dt, horizon) {
        (Some(leader), Some(geometry), Some(tuner), Some(dt), Some(horizon)) => Ok(Scenario {
            leader,
            followers,
            geometry,
            tuner,
            dt,
            horizon,
        }),
        _ => Err(Diagnostic::error("incomplete scenario").into()),
    }
}

fn parse_follower(
    name: &str,
    section: &Section,
    sections: &[Section],
    c: f64,
    diags: &mut Vec<Diagnostic>,
) -> Option<FollowerSpec> {
    let mut r = Reader { section, diags };
    let x = r.required_constant("x");
    let y = r.required_constant("y");
    let th = r.required_constant("theta");
    r.unknown_keys();

    let formation_name = format!("formation.{name}");
    let formation = match sections.iter().find(|s| s.name == formation_name) {
        None => {
            diags.push(Diagnostic::error("missing section").in_section(&formation_name));
            None
        }
        Some(s) => {
            let mut r = Reader { section: s, diags };
            let l_d = r.required_expr("l_d");
            let alpha_d = r.required_expr("alpha_d");
            let rate = |r: &mut Reader, key: &str, value: &Option<Expr>| {
                if r.entry(key).is_some() {
                    return r.expr(key);
                }
                match value {
                    Some(v) if v.is_constant() => Some(Expr::Num(0.0)),
                    Some(_) => {
                        r.err(None, key, "required when the value depends on t");
                        None
                    }
                    None => None,
                }
            };
            let l_d_rate = rate(&mut r, "l_d_rate", &l_d);
            let alpha_d_rate = rate(&mut r, "alpha_d_rate", &alpha_d);
            r.unknown_keys();
            match (l_d, l_d_rate, alpha_d, alpha_d_rate) {
                (Some(l_d), Some(l_d_rate), Some(alpha_d), Some(alpha_d_rate)) => Some(FormationExprs {
                    l_d,
                    l_d_rate,
                    alpha_d,
                    alpha_d_rate,
                }),
                _ => None,
            }
        }
    };

    let controller_name = format!("controller.{name}");
    let controller = match sections.iter().find(|s| s.name == controller_name) {
        None => Some(ControllerSpec::default()),
        Some(s) => {
            let mut r = Reader { section: s, diags };
            let d = ControllerSpec::default();
            let kind = match r.word("kind") {
                None => Some(d.kind),
                Some((e, w)) => match ControllerKind::parse(&w) {
                    Some(k) => Some(k),
                    None => {
                        r.err(
                            Some(e),
                            "kind",
                            format!("unknown controller `{w}` (expected bc or fabc)"),
                        );
                        None
                    }
                },
            };
            let k1 = r.constant_or("k1", d.k1);
            let k2 = r.constant_or("k2", d.k2);
            let k3 = r.constant_or("k3", d.k3);
            let max_v = if r.entry("max_v").is_some() {
                r.constant("max_v").map(Some)
            } else {
                Some(None)
            };
            let max_omega = if r.entry("max_omega").is_some() {
                r.constant("max_omega").map(Some)
            } else {
                Some(None)
            };
            let mut out = None;
            if let (Some(kind), Some(k1), Some(k2), Some(k3), Some(max_v), Some(max_omega)) =
                (kind, k1, k2, k3, max_v, max_omega)
            {
                let saturation = Saturation { max_v, max_omega };
                if let Err(e) = derive_gains(k1, k2, k3, c) {
                    let key = [("k1", k1), ("k2", k2), ("k3", k3)]
                        .into_iter()
                        .find(|(_, v)| !(*v > 0.0))
                        .map_or("k1", |(k, _)| k);
                    let entry = r.entry(key);
                    r.err(entry, key, e.to_string());
                } else if let Err(e) = saturation.validate() {
                    let key = if max_v.is_some_and(|v| !(v > 0.0)) {
                        "max_v"
                    } else {
                        "max_omega"
                    };
                    let entry = r.entry(key);
                    r.err(entry, key, e.to_string());
                } else {
                    out = Some(ControllerSpec {
                        kind,
                        k1,
                        k2,
                        k3,
                        saturation,
                    });
                }
            }
            r.unknown_keys();
            out
        }
    };

    Some(FollowerSpec {
        name: name.to_string(),
        initial: Pose::new(x?, y?, th?),
        formation: formation?,
        controller: controller?,
    })
}

fn parse_fuzzy(section: &Section, diags: &mut Vec<Diagnostic>) -> Option<GainTuner> {
    let mut r = Reader { section, diags };
    let dl = GainLimits::default();
    let ds = InputScaling::default();
    let k_min = r.constant_or("k_min", dl.k_min);
    let k_max = r.constant_or("k_max", dl.k_max);
    let ex = r.constant_or("error_scale_x", ds.ex);
    let e_yth = r.constant_or("error_scale_yth", ds.e_yth);
    let etheta_rate = r.constant_or("rate_scale_theta", ds.etheta_rate);
    let ex_rate = r.constant_or("rate_scale_x", ds.ex_rate);
    let e_yth_rate = r.constant_or("rate_scale_yth", ds.e_yth_rate);
    let k1_rate = match r.word("k1_rate") {
        None => Some(K1RateInput::default()),
        Some((_, w)) if w == "heading" => Some(K1RateInput::Heading),
        Some((_, w)) if w == "longitudinal" => Some(K1RateInput::Longitudinal),
        Some((e, w)) => {
            r.err(
                Some(e),
                "k1_rate",
                format!("unknown rate input `{w}` (expected heading or longitudinal)"),
            );
            None
        }
    };

    // optional rule rows, one per rate label: `rules.ns = z ps ps pm pm`
    let mut rows: Vec<Vec<String>> = RuleTable::default()
        .cells()
        .iter()
        .map(|row| row.iter().map(|&o| OUTPUT_LABELS[o].to_string()).collect())
        .collect();
    for (i, label) in INPUT_LABELS.iter().enumerate() {
        if let Some(e) = r.entry(&format!("rules.{label}")) {
            rows[i] = e.value.split_whitespace().map(str::to_string).collect();
        }
    }
    let rules = match RuleTable::from_labels(&rows, &INPUT_LABELS, &INPUT_LABELS, &OUTPUT_LABELS) {
        Ok(t) => Some(t),
        Err(e) => {
            r.err(None, "rules", e.to_string());
            None
        }
    };
    r.unknown_keys();

    let (k_min, k_max, ex, e_yth, etheta_rate, ex_rate, e_yth_rate, k1_rate, rules) = (
        k_min?,
        k_max?,
        ex?,
        e_yth?,
        etheta_rate?,
        ex_rate?,
        e_yth_rate?,
        k1_rate?,
        rules?,
    );
    let limits = GainLimits { k_min, k_max };
    let built = MembershipFunctionSet::default_output(k_max).and_then(|out| {
        GainTuner::new(
            MembershipFunctionSet::default_input(),
            MembershipFunctionSet::default_input(),
            out,
            rules,
            limits,
            InputScaling {
                ex,
                e_yth,
                etheta_rate,
                ex_rate,
                e_yth_rate,
            },
            k1_rate,
        )
    });
    match built {
        Ok(t) => Some(t),
        Err(e) => {
            diags.push(
                Diagnostic::error(e.to_string())
                    .at_line(section.line)
                    .in_section("fuzzy"),
            );
            None
        }
    }
}

/// Read and parse a scenario file.
pub fn load_scenario(path: &Path) -> Result<Scenario, ConfigError> {
    let text =
        std::fs::read_to_string(path).map_err(|e| Diagnostic::error(format!("cannot read {}: {e}", path.display())))?;
    parse_scenario(&text)
}

/// Samples per second used when checking time profiles over the horizon.
const CHECK_RATE_HZ: f64 = 100.0;

/// Checks that need evaluation over the horizon: every time profile must be
/// defined on `[0, T]` (errors), and each supplied rate must match the
/// numerical derivative of its value (warnings).
pub fn check_scenario(scenario: &Scenario) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    let t1 = scenario.horizon;
    let samples = ((t1 * CHECK_RATE_HZ).ceil() as usize).max(100);
    let defined = |e: &Expr| -> Result<(), String> {
        for k in 0..=samples {
            let t = t1 * k as f64 / samples as f64;
            e.eval(t).map_err(|err| err.to_string())?;
        }
        Ok(())
    };
    for (key, e) in [("v", &scenario.leader.v), ("omega", &scenario.leader.omega)] {
        if let Err(m) = defined(e) {
            out.push(Diagnostic::error(m).in_section("leader").for_key(key));
        }
    }
    for f in &scenario.followers {
        let section = format!("formation.{}", f.name);
        let fx = &f.formation;
        let mut ok = true;
        for (key, e) in [
            ("l_d", &fx.l_d),
            ("l_d_rate", &fx.l_d_rate),
            ("alpha_d", &fx.alpha_d),
            ("alpha_d_rate", &fx.alpha_d_rate),
        ] {
            if let Err(m) = defined(e) {
                out.push(Diagnostic::error(m).in_section(&section).for_key(key));
                ok = false;
            }
        }
        if !ok {
            continue;
        }
        for (key, value, rate) in [
            ("l_d_rate", &fx.l_d, &fx.l_d_rate),
            ("alpha_d_rate", &fx.alpha_d, &fx.alpha_d_rate),
        ] {
            match check_rate_consistency(value, rate, 0.0, t1, samples) {
                Ok(c) if !c.passes(RATE_CHECK_TOLERANCE) => out.push(
                    Diagnostic::warning(format!(
                        "rate does not match the derivative of its value: relative error {:.3e} (worst at t = {})",
                        c.relative_error(),
                        c.worst_t
                    ))
                    .in_section(&section)
                    .for_key(key),
                ),
                Ok(_) => {}
                // the finite-difference stencil can step just outside [0, T]
                Err(e) => out.push(
                    Diagnostic::warning(format!("rate check could not evaluate the value: {e}"))
                        .in_section(&section)
                        .for_key(key),
                ),
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "
[sim]
horizon = 1
[leader]
v = 1
omega = 0
[follower.a]
x = 0.5
y = 0
theta = 0
[formation.a]
l_d = 0.5
alpha_d = pi
";

    #[test]
    fn minimal_file_gets_defaults() {
        let s = parse_scenario(MINIMAL).unwrap();
        assert_eq!(s.dt, 1e-3);
        assert_eq!(s.geometry, RobotGeometry::default());
        assert_eq!(s.followers.len(), 1);
        assert_eq!(s.followers[0].controller, ControllerSpec::default());
        assert_eq!(s.followers[0].formation.l_d_rate, Expr::Num(0.0));
        assert!(check_scenario(&s).is_empty());
    }

    #[test]
    fn zero_gain_is_located() {
        let text = format!("{MINIMAL}[controller.a]\nk2 = 0\n");
        let err = parse_scenario(&text).unwrap_err();
        let d = &err.diagnostics[0];
        assert!(d.message.contains("controller gains must be positive"), "{d}");
        assert_eq!(d.section.as_deref(), Some("controller.a"));
        assert_eq!(d.key.as_deref(), Some("k2"));
        assert_eq!(d.line, Some(15));
    }

    #[test]
    fn expression_error_carries_offset() {
        let text = MINIMAL.replace("l_d = 0.5", "l_d = 0.5 + sin(");
        let err = parse_scenario(&text).unwrap_err();
        let d = &err.diagnostics[0];
        assert_eq!(d.key.as_deref(), Some("l_d"));
        assert_eq!(d.offset, Some(10));
    }

    #[test]
    fn unknown_key_and_section() {
        let text = format!("{MINIMAL}[leader.b]\n");
        let text = text.replace("omega = 0", "omega = 0\nspeed = 3");
        let err = parse_scenario(&text).unwrap_err();
        let msgs: Vec<String> = err.diagnostics.iter().map(|d| d.to_string()).collect();
        assert!(
            msgs.iter().any(|m| m.contains("[leader] speed: unknown key")),
            "{msgs:?}"
        );
        assert!(
            msgs.iter().any(|m| m.contains("[leader.b]: unknown section")),
            "{msgs:?}"
        );
    }

    #[test]
    fn time_varying_value_needs_rate() {
        let text = MINIMAL.replace("l_d = 0.5", "l_d = 0.5 + 0.1*sin(t)");
        let err = parse_scenario(&text).unwrap_err();
        assert_eq!(err.diagnostics[0].key.as_deref(), Some("l_d_rate"));
    }

    #[test]
    fn constant_keys_reject_t() {
        let text = MINIMAL.replace("x = 0.5", "x = t");
        let err = parse_scenario(&text).unwrap_err();
        assert!(err.diagnostics[0].message.contains("must not depend on t"));
    }

    #[test]
    fn rate_mismatch_is_a_warning() {
        let text = MINIMAL.replace("l_d = 0.5", "l_d = 0.5 + 0.1*sin(t)\nl_d_rate = 0.101*cos(t)");
        let s = parse_scenario(&text).unwrap();
        let d = check_scenario(&s);
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].severity, Severity::Warning);
        assert_eq!(d[0].key.as_deref(), Some("l_d_rate"));
    }

    #[test]
    fn undefined_profile_is_an_error() {
        let text = MINIMAL.replace("v = 1", "v = 1/(t-0.5)");
        let s = parse_scenario(&text).unwrap();
        let d = check_scenario(&s);
        assert!(d.iter().any(|d| d.is_error() && d.key.as_deref() == Some("v")));
    }

    #[test]
    fn fuzzy_rules_override() {
        let text = format!("{MINIMAL}[fuzzy]\nrules.z = z z z z z\nrate_scale_yth = 5\n");
        let s = parse_scenario(&text).unwrap();
        assert_eq!(s.tuner.rules().cells()[2], vec![0; 5]);
        assert_eq!(s.tuner.scaling().e_yth_rate, 5.0);
        let bad = format!("{MINIMAL}[fuzzy]\nrules.z = z z\n");
        assert!(parse_scenario(&bad).is_err());
    }

    #[test]
    fn comments_and_structure_errors() {
        let text = format!("# head\n{MINIMAL}; trailing\n[sim\n");
        let err = parse_scenario(&text).unwrap_err();
        assert!(err.diagnostics.iter().any(|d| d.message.contains("unterminated")));
        let err = parse_scenario("x = 1\n").unwrap_err();
        assert!(err
            .diagnostics
            .iter()
            .any(|d| d.message.contains("outside any section")));
    }
}
