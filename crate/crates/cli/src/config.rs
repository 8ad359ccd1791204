//! Experiment configuration: a flat `key = value` file, overridden by flags.
//!
//! Grammar, one entry per line, order-insensitive:
//!
//! ```text
//! # comment
//! command   = fpe            # fpe | mc | compare | zakai | signal
//! alpha     = 0.2, 0.6       # list => one run per value
//! lambda    = 0.01
//! c_alpha   = 0.3            # optional, default normalization otherwise
//! drift     = bistable       # zero | bistable | comma-separated coefficients
//! domain    = -4, 4          # bounded absorbing domain (a, b)
//! half_width = 8             # or: truncated whole line [-L, L]
//! grid      = 400            # J
//! dt        = 1e-4           # optional, else safety_factor * stability bound
//! safety_factor = 0.9
//! t_final   = 1.6
//! snapshots = 0.4, 0.8, 1.6  # default: t_final
//! initial   = gaussian(40, 0)
//! seed      = 7
//! paths     = 100000
//! epsilon   = 0.02           # default: half the physical grid spacing
//! mc_dt     = 1e-3
//! observation = cos          # cos | zero | coefficients of h
//! x0 = -1
//! y0 = -1
//! observations = obs.csv     # zakai: recorded path instead of a simulation
//! out       = out/difalp
//! ```
//!
//! Keys may also be spelled with dashes (`t-final`).

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use serde_json::{json, Value};
use tempered_fpe::{DriftSpec, Error, ObservationModel, Result};

pub const KEYS: &[&str] = &[
    "command",
    "alpha",
    "lambda",
    "c_alpha",
    "drift",
    "domain",
    "half_width",
    "grid",
    "dt",
    "safety_factor",
    "t_final",
    "snapshots",
    "initial",
    "seed",
    "paths",
    "epsilon",
    "mc_dt",
    "observation",
    "x0",
    "y0",
    "observations",
    "out",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Fpe,
    Mc,
    Compare,
    Zakai,
    Signal,
}

impl Command {
    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "fpe" => Command::Fpe,
            "mc" => Command::Mc,
            "compare" => Command::Compare,
            "zakai" => Command::Zakai,
            "signal" => Command::Signal,
            _ => return None,
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Command::Fpe => "fpe",
            Command::Mc => "mc",
            Command::Compare => "compare",
            Command::Zakai => "zakai",
            Command::Signal => "signal",
        }
    }

    fn needs_grid(&self) -> bool {
        !matches!(self, Command::Signal)
    }

    fn allows_sweep(&self) -> bool {
        matches!(self, Command::Fpe | Command::Mc | Command::Compare)
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Domain {
    /// Bounded domain `(a, b)` with absorption outside.
    Interval { a: f64, b: f64 },
    /// Truncation `[-L, L]` of the whole line.
    HalfWidth(f64),
}

/// Raw key/value pairs, later entries overriding earlier ones.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RawConfig {
    entries: BTreeMap<String, String>,
}

impl RawConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut raw = RawConfig::default();
        let mut problems = Vec::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                problems.push(format!("line {}: expected `key = value`", n + 1));
                continue;
            };
            let key = normalize_key(key);
            if raw.entries.contains_key(&key) {
                problems.push(format!("line {}: duplicate key `{key}`", n + 1));
            }
            raw.entries.insert(key, value.trim().to_string());
        }
        if problems.is_empty() {
            Ok(raw)
        } else {
            Err(Error::Config(problems))
        }
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            Error::Io(std::io::Error::new(
                e.kind(),
                format!("cannot read config {}: {e}", path.display()),
            ))
        })?;
        Self::parse(&text)
    }

    pub fn set(&mut self, key: &str, value: impl Into<String>) {
        let key = normalize_key(key);
        // the two domain forms exclude each other; the newer one wins
        match key.as_str() {
            "domain" => {
                self.entries.remove("half_width");
            }
            "half_width" => {
                self.entries.remove("domain");
            }
            _ => {}
        }
        self.entries.insert(key, value.into());
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    pub fn entries(&self) -> &BTreeMap<String, String> {
        &self.entries
    }
}

fn normalize_key(key: &str) -> String {
    key.trim().to_ascii_lowercase().replace('-', "_")
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub command: Command,
    pub alpha: Vec<f64>,
    pub lambda: Vec<f64>,
    pub c_alpha: Option<f64>,
    pub drift: DriftSpec,
    pub drift_label: String,
    pub domain: Option<Domain>,
    pub grid: usize,
    pub dt: Option<f64>,
    pub safety_factor: f64,
    pub t_final: f64,
    pub snapshots: Vec<f64>,
    /// `p(x, 0) = sqrt(a/pi) exp(-a (x - b)^2)`.
    pub initial: (f64, f64),
    pub seed: u64,
    pub paths: usize,
    pub epsilon: Option<f64>,
    pub mc_dt: f64,
    pub observation: ObservationModel,
    pub observation_label: String,
    pub x0: f64,
    pub y0: f64,
    pub observations: Option<PathBuf>,
    pub out: PathBuf,
    /// The key/value pairs this config was resolved from.
    pub raw: RawConfig,
}

/// Collects every violation before failing.
struct Resolver<'a> {
    raw: &'a RawConfig,
    problems: Vec<String>,
}

impl<'a> Resolver<'a> {
    fn text(&self, key: &str) -> Option<&'a str> {
        self.raw.get(key).filter(|v| !v.is_empty())
    }

    fn number(&mut self, key: &str) -> Option<f64> {
        let text = self.text(key)?;
        match text.parse::<f64>() {
            Ok(v) if v.is_finite() => Some(v),
            _ => {
                self.problems.push(format!("{key}: `{text}` is not a finite number"));
                None
            }
        }
    }

    fn integer(&mut self, key: &str) -> Option<u64> {
        let text = self.text(key)?;
        match text.parse::<u64>() {
            Ok(v) => Some(v),
            Err(_) => {
                self.problems.push(format!("{key}: `{text}` is not a non-negative integer"));
                None
            }
        }
    }

    fn list(&mut self, key: &str) -> Option<Vec<f64>> {
        let text = self.text(key)?.to_string();
        match parse_list(&text) {
            Some(v) => Some(v),
            None => {
                self.problems.push(format!("{key}: `{text}` is not a comma-separated list of numbers"));
                None
            }
        }
    }
}

fn parse_list(text: &str) -> Option<Vec<f64>> {
    let v: Option<Vec<f64>> = text
        .split(',')
        .map(|s| s.trim().parse::<f64>().ok().filter(|x| x.is_finite()))
        .collect();
    v.filter(|v| !v.is_empty())
}

fn parse_gaussian(text: &str) -> Option<(f64, f64)> {
    let inner = text.trim().strip_prefix("gaussian(")?.strip_suffix(')')?;
    match parse_list(inner)?.as_slice() {
        &[a, b] => Some((a, b)),
        _ => None,
    }
}

impl ExperimentConfig {
    pub fn resolve(raw: &RawConfig) -> Result<Self> {
        let mut r = Resolver {
            raw,
            problems: Vec::new(),
        };

        for key in raw.entries().keys() {
            if !KEYS.contains(&key.as_str()) {
                r.problems.push(format!("unknown key `{key}`"));
            }
        }

        let command = match r.text("command") {
            None => {
                r.problems.push("command is required (fpe, mc, compare, zakai, signal)".into());
                Command::Fpe
            }
            Some(c) => Command::parse(c).unwrap_or_else(|| {
                r.problems.push(format!("command: unknown command `{c}`"));
                Command::Fpe
            }),
        };

        let alpha = r.list("alpha").unwrap_or_default();
        if r.text("alpha").is_none() {
            r.problems.push("alpha is required".into());
        }
        for &a in &alpha {
            if !(a > 0.0 && a < 2.0 && a != 1.0) {
                r.problems.push(format!("alpha must lie in (0,1)∪(1,2) (got {a})"));
            }
        }
        let lambda = r.list("lambda").unwrap_or_default();
        if r.text("lambda").is_none() {
            r.problems.push("lambda is required".into());
        }
        for &l in &lambda {
            if !(l > 0.0) {
                r.problems.push(format!("lambda must be > 0 (got {l})"));
            }
        }
        if !command.allows_sweep() && (alpha.len() > 1 || lambda.len() > 1) {
            r.problems.push(format!("{command} takes a single alpha and lambda"));
        }

        let c_alpha = r.number("c_alpha");
        if let Some(c) = c_alpha {
            if !(c > 0.0) {
                r.problems.push(format!("c_alpha must be > 0 (got {c})"));
            }
        }

        let drift_label = r.text("drift").unwrap_or("zero").to_string();
        let drift = match drift_label.as_str() {
            "zero" => DriftSpec::Zero,
            "bistable" => DriftSpec::bistable(),
            other => match parse_list(other) {
                Some(c) => DriftSpec::polynomial(c).unwrap_or(DriftSpec::Zero),
                None => {
                    r.problems.push(format!(
                        "drift: `{other}` is neither zero, bistable nor a coefficient list"
                    ));
                    DriftSpec::Zero
                }
            },
        };

        let domain = match (r.text("domain"), r.text("half_width")) {
            (Some(_), Some(_)) => {
                r.problems.push("give either domain or half_width, not both".into());
                None
            }
            (Some(_), None) => match r.list("domain").as_deref() {
                Some(&[a, b]) if a < b => Some(Domain::Interval { a, b }),
                Some(&[a, b]) => {
                    r.problems.push(format!("domain ({a}, {b}) must satisfy a < b"));
                    None
                }
                Some(_) => {
                    r.problems.push("domain takes two numbers `a, b`".into());
                    None
                }
                None => None,
            },
            (None, Some(_)) => match r.number("half_width") {
                Some(l) if l > 0.0 => Some(Domain::HalfWidth(l)),
                Some(l) => {
                    r.problems.push(format!("half_width must be > 0 (got {l})"));
                    None
                }
                None => None,
            },
            (None, None) => None,
        };
        if domain.is_none() && command.needs_grid() && r.text("domain").is_none() && r.text("half_width").is_none() {
            r.problems.push(format!("{command} needs domain or half_width"));
        }

        let grid = r.integer("grid").unwrap_or(200) as usize;
        if grid < 2 {
            r.problems.push(format!("grid J must be >= 2 (got {grid})"));
        }

        let dt = r.number("dt");
        if let Some(dt) = dt {
            if !(dt > 0.0) {
                r.problems.push(format!("dt must be > 0 (got {dt})"));
            }
        }
        let safety_factor = r.number("safety_factor").unwrap_or(0.9);
        if !(safety_factor > 0.0 && safety_factor <= 1.0) {
            r.problems.push(format!("safety_factor must lie in (0, 1] (got {safety_factor})"));
        }

        let t_final = r.number("t_final");
        let needs_t_final = !(command == Command::Zakai && r.text("observations").is_some());
        if t_final.is_none() && r.text("t_final").is_none() && needs_t_final {
            r.problems.push("t_final is required".into());
        }
        let t_final = t_final.unwrap_or(0.0);
        if !(t_final >= 0.0) {
            r.problems.push(format!("t_final must be >= 0 (got {t_final})"));
        }

        let snapshots = r.list("snapshots").unwrap_or_else(|| vec![t_final]);
        if snapshots.windows(2).any(|w| !(w[1] > w[0])) {
            r.problems.push("snapshots must be strictly increasing".into());
        }
        if snapshots.iter().any(|&t| t < 0.0) {
            r.problems.push("snapshots must be >= 0".into());
        }
        if needs_t_final && snapshots.iter().any(|&t| t > t_final * (1.0 + 1e-12)) {
            r.problems.push(format!("snapshots must not exceed t_final = {t_final}"));
        }

        let initial = match r.text("initial") {
            None => (40.0, 0.0),
            Some(text) => match parse_gaussian(text) {
                Some((a, b)) if a > 0.0 => (a, b),
                _ => {
                    r.problems.push(format!("initial: `{text}` is not gaussian(a, b) with a > 0"));
                    (40.0, 0.0)
                }
            },
        };

        let seed = r.integer("seed").unwrap_or(0);
        let paths = r.integer("paths").unwrap_or(100_000) as usize;
        if paths == 0 {
            r.problems.push("paths must be >= 1".into());
        }
        let epsilon = r.number("epsilon");
        if let Some(e) = epsilon {
            if !(e > 0.0 && e < 1.0) {
                r.problems.push(format!("epsilon must lie in (0, 1) (got {e})"));
            }
        }
        let mc_dt = r.number("mc_dt").unwrap_or(1e-3);
        if !(mc_dt > 0.0) {
            r.problems.push(format!("mc_dt must be > 0 (got {mc_dt})"));
        }

        let observation_label = r.text("observation").unwrap_or("cos").to_string();
        let observation = match observation_label.as_str() {
            "cos" => ObservationModel::Cosine,
            "zero" => ObservationModel::Polynomial(vec![0.0]),
            other => match parse_list(other) {
                Some(c) => ObservationModel::Polynomial(c),
                None => {
                    r.problems.push(format!(
                        "observation: `{other}` is neither cos, zero nor a coefficient list"
                    ));
                    ObservationModel::Cosine
                }
            },
        };
        let x0 = r.number("x0").unwrap_or(-1.0);
        let y0 = r.number("y0").unwrap_or(-1.0);
        let observations = r.text("observations").map(PathBuf::from);
        if observations.is_some() && command != Command::Zakai {
            r.problems.push("observations is only used by zakai".into());
        }
        let out = PathBuf::from(r.text("out").unwrap_or("out"));

        if !r.problems.is_empty() {
            return Err(Error::Config(r.problems));
        }
        Ok(Self {
            command,
            alpha,
            lambda,
            c_alpha,
            drift,
            drift_label,
            domain,
            grid,
            dt,
            safety_factor,
            t_final,
            snapshots,
            initial,
            seed,
            paths,
            epsilon,
            mc_dt,
            observation,
            observation_label,
            x0,
            y0,
            observations,
            out,
            raw: raw.clone(),
        })
    }

    /// Every setting after defaults were applied, for `meta.json`.
    pub fn to_json(&self) -> Value {
        let domain = match self.domain {
            Some(Domain::Interval { a, b }) => json!({"mode": "bounded-absorbing", "a": a, "b": b}),
            Some(Domain::HalfWidth(l)) => json!({"mode": "truncated-infinite", "half_width": l}),
            None => Value::Null,
        };
        json!({
            "command": self.command.name(),
            "alpha": self.alpha,
            "lambda": self.lambda,
            "c_alpha": self.c_alpha,
            "drift": self.drift_label,
            "drift_coefficients": self.drift.coefficients(),
            "domain": domain,
            "grid": self.grid,
            "dt": self.dt,
            "safety_factor": self.safety_factor,
            "t_final": self.t_final,
            "snapshots": self.snapshots,
            "initial": {"kind": "gaussian", "a": self.initial.0, "b": self.initial.1},
            "seed": self.seed,
            "paths": self.paths,
            "epsilon": self.epsilon,
            "mc_dt": self.mc_dt,
            "observation": self.observation_label,
            "x0": self.x0,
            "y0": self.y0,
            "observations": self.observations.as_ref().map(|p| p.display().to_string()),
            "out": self.out.display().to_string(),
            "verbatim": self.raw.entries(),
        })
    }
}
