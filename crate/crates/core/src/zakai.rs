//! Nonlinear filtering with the nonlocal Zakai equation
//! `dp = A* p dt + h(x) p dY`.
//!
//! Each step predicts with one explicit step of the Fokker–Planck operator
//! `A*` and then corrects pointwise with `exp(h(x) dY - h(x)^2 dt / 2)`. The
//! exponential form keeps the unnormalized density non-negative.

use std::io::{Read, Write};

use rand_distr::{Distribution, StandardNormal};

use crate::drift::DriftSpec;
use crate::error::{Error, Result};
use crate::grid::{total_mass, DensityField, DomainMap, Grid1D};
use crate::levy::TemperedStableParams;
use crate::mc::{stream_rng, IncrementSampler};
use crate::solver::{FpeSolver, SolverConfig};

/// Unnormalized masses below this are treated as underflow.
pub const MASS_FLOOR: f64 = 1e-300;

/// Observation function `h` in `dY = h(X) dt + dW`.
#[derive(Debug, Clone, PartialEq)]
pub enum ObservationModel {
    Cosine,
    /// Ascending coefficients; constant `c` is `Polynomial(vec![c])`.
    Polynomial(Vec<f64>),
}

impl ObservationModel {
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            ObservationModel::Cosine => x.cos(),
            ObservationModel::Polynomial(c) => c.iter().rev().fold(0.0, |acc, &k| acc * x + k),
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, ObservationModel::Polynomial(c) if c.iter().all(|&v| v == 0.0))
    }
}

/// Uniformly spaced observation record.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationPath {
    pub times: Vec<f64>,
    /// `increments[n] = Y(t_{n+1}) - Y(t_n)`.
    pub increments: Vec<f64>,
    /// Hidden signal at each time, when known.
    pub truth: Option<Vec<f64>>,
    pub y0: f64,
}

impl ObservationPath {
    pub fn validate(&self) -> Result<()> {
        let mut v = Vec::new();
        if self.times.is_empty() {
            v.push("observation path has no times".to_string());
        } else if self.increments.len() != self.times.len() - 1 {
            v.push(format!(
                "{} increments for {} times",
                self.increments.len(),
                self.times.len()
            ));
        }
        if self.times.windows(2).any(|w| !(w[1] > w[0])) {
            v.push("observation times must be strictly increasing".to_string());
        }
        if let Some(truth) = &self.truth {
            if truth.len() != self.times.len() {
                v.push("hidden truth length differs from times".to_string());
            }
        }
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::Observation(v.join("; ")))
        }
    }

    /// Step between observations, checked to be uniform to 1e-9 relative.
    pub fn step(&self) -> Result<Option<f64>> {
        self.validate()?;
        if self.times.len() < 2 {
            return Ok(None);
        }
        let dt = (self.times[self.times.len() - 1] - self.times[0]) / self.increments.len() as f64;
        let uniform = self
            .times
            .windows(2)
            .all(|w| ((w[1] - w[0]) - dt).abs() <= 1e-9 * dt);
        if !uniform {
            return Err(Error::Observation("observation times are not uniform".to_string()));
        }
        Ok(Some(dt))
    }

    /// `Y(t_n)` reconstructed from `y0` and the increments.
    pub fn observations(&self) -> Vec<f64> {
        let mut y = Vec::with_capacity(self.times.len());
        let mut acc = self.y0;
        y.push(acc);
        for d in &self.increments {
            acc += d;
            y.push(acc);
        }
        y
    }

    /// CSV with columns `t,dY[,X_truth]`; the first row has an empty `dY`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["t", "dY"];
        if self.truth.is_some() {
            header.push("X_truth");
        }
        w.write_record(&header)?;
        for (n, &t) in self.times.iter().enumerate() {
            let mut row = vec![fmt_float(t)];
            row.push(if n == 0 {
                String::new()
            } else {
                fmt_float(self.increments[n - 1])
            });
            if let Some(truth) = &self.truth {
                row.push(fmt_float(truth[n]));
            }
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads `t` and `dY` columns (any order, extra columns ignored). A blank
    /// or missing first `dY` is allowed; `X_truth` or `X` is picked up as
    /// the hidden signal; `Y`, when present, supplies `y0`.
    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(input);
        let headers = r.headers()?.clone();
        let col = |name: &str| headers.iter().position(|h| h.trim() == name);
        let t_col = col("t").ok_or_else(|| Error::Observation("missing column t".into()))?;
        let dy_col = col("dY").ok_or_else(|| Error::Observation("missing column dY".into()))?;
        let x_col = col("X_truth").or_else(|| col("X"));
        let y_col = col("Y");

        let parse = |s: &str, what: &str, line: usize| -> Result<f64> {
            s.trim().parse::<f64>().map_err(|_| {
                Error::Observation(format!("row {line}: cannot parse {what} from {s:?}"))
            })
        };

        let mut times = Vec::new();
        let mut increments = Vec::new();
        let mut truth = Vec::new();
        let mut y0 = 0.0;
        for (n, rec) in r.records().enumerate() {
            let rec = rec?;
            let line = n + 2;
            times.push(parse(rec.get(t_col).unwrap_or(""), "t", line)?);
            let dy = rec.get(dy_col).unwrap_or("").trim();
            if n == 0 {
                if let Some(yc) = y_col {
                    y0 = parse(rec.get(yc).unwrap_or(""), "Y", line)?;
                }
                if !dy.is_empty() && parse(dy, "dY", line)? != 0.0 {
                    return Err(Error::Observation(
                        "first row must not carry an increment".to_string(),
                    ));
                }
            } else {
                increments.push(parse(dy, "dY", line)?);
            }
            if let Some(xc) = x_col {
                truth.push(parse(rec.get(xc).unwrap_or(""), "X", line)?);
            }
        }
        let path = ObservationPath {
            times,
            increments,
            truth: x_col.map(|_| truth),
            y0,
        };
        path.validate()?;
        Ok(path)
    }
}

fn fmt_float(v: f64) -> String {
    format!("{v:.16e}")
}

/// Noise switches for test fixtures; both on for real simulations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSwitches {
    pub signal: bool,
    pub observation: bool,
}

impl Default for NoiseSwitches {
    fn default() -> Self {
        Self {
            signal: true,
            observation: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SignalObservationConfig {
    pub params: TemperedStableParams,
    pub drift: DriftSpec,
    pub observation: ObservationModel,
    pub x0: f64,
    pub y0: f64,
    pub dt: f64,
    pub t_final: f64,
    pub epsilon: f64,
    pub seed: u64,
    pub noise: NoiseSwitches,
}

/// Euler simulation of the signal `dX = f(X) dt + dL` and observation
/// `dY = h(X) dt + dW`. Signal jumps use stream 0 of the seed, the
/// observation noise stream 1.
pub fn simulate_signal_observation(cfg: &SignalObservationConfig) -> Result<ObservationPath> {
    if !(cfg.dt > 0.0) || !(cfg.t_final >= 0.0) {
        return Err(Error::Config(vec![format!(
            "need dt > 0 and t_final >= 0 (got dt = {}, t_final = {})",
            cfg.dt, cfg.t_final
        )]));
    }
    let n = FpeSolver::step_plan(cfg.t_final, cfg.dt).0 as usize;
    let sampler = if cfg.noise.signal {
        Some(IncrementSampler::new(&cfg.params, cfg.epsilon, cfg.dt)?)
    } else {
        None
    };
    let mut signal_rng = stream_rng(cfg.seed, 0);
    let mut obs_rng = stream_rng(cfg.seed, 1);
    let sqrt_dt = cfg.dt.sqrt();

    let mut times = Vec::with_capacity(n + 1);
    let mut truth = Vec::with_capacity(n + 1);
    let mut increments = Vec::with_capacity(n);
    let mut x = cfg.x0;
    times.push(0.0);
    truth.push(x);
    for step in 0..n {
        let mut dy = cfg.observation.eval(x) * cfg.dt;
        if cfg.noise.observation {
            let z: f64 = StandardNormal.sample(&mut obs_rng);
            dy += sqrt_dt * z;
        }
        let jump = sampler.as_ref().map_or(0.0, |s| s.sample(&mut signal_rng));
        x += cfg.drift.eval(x) * cfg.dt + jump;
        if !x.is_finite() {
            return Err(Error::NonFinite("simulate_signal_observation"));
        }
        times.push((step + 1) as f64 * cfg.dt);
        truth.push(x);
        increments.push(dy);
    }
    Ok(ObservationPath {
        times,
        increments,
        truth: Some(truth),
        y0: cfg.y0,
    })
}

/// Prediction–correction integrator for the Zakai equation on one grid.
#[derive(Debug, Clone)]
pub struct ZakaiFilter {
    solver: FpeSolver,
    /// `h(x_j)` at physical node positions.
    obs_values: Vec<f64>,
    observes_nothing: bool,
}

impl ZakaiFilter {
    pub fn new(cfg: SolverConfig, observation: &ObservationModel, map: &DomainMap) -> Result<Self> {
        let solver = FpeSolver::new(cfg)?;
        let grid = *solver.grid();
        let obs_values = (0..grid.len())
            .map(|p| observation.eval(map.to_physical(grid.x(p))))
            .collect::<Vec<_>>();
        if obs_values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Config(vec![
                "observation function is not finite on the grid".to_string(),
            ]));
        }
        Ok(Self {
            solver,
            obs_values,
            observes_nothing: observation.is_zero(),
        })
    }

    pub fn solver(&self) -> &FpeSolver {
        &self.solver
    }

    pub fn grid(&self) -> &Grid1D {
        self.solver.grid()
    }

    /// Multiplies by `exp(h dY - h^2 dt / 2)` in place.
    pub fn correct(&self, field: &mut DensityField, dy: f64, dt: f64) {
        if self.observes_nothing {
            return;
        }
        for (p, &h) in field.values.iter_mut().zip(&self.obs_values) {
            *p *= (h * dy - 0.5 * h * h * dt).exp();
        }
    }

    pub fn step(&self, field: &DensityField, dy: f64) -> Result<DensityField> {
        let dt = self.solver.config().dt;
        let mut next = self.solver.step(field, dt)?;
        self.correct(&mut next, dy, dt);
        if next.values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("zakai_step"));
        }
        Ok(next)
    }

    /// Runs through the whole path, recording the unnormalized and the
    /// normalized field at every requested snapshot time (each snapshot is
    /// taken at the observation time nearest to it).
    pub fn run(
        &self,
        initial: &DensityField,
        path: &ObservationPath,
        snapshot_times: &[f64],
    ) -> Result<FilterOutput> {
        let dt = self.solver.config().dt;
        if let Some(step) = path.step()? {
            if (step - dt).abs() > 1e-9 * dt {
                return Err(Error::Config(vec![format!(
                    "observation step {step} differs from solver dt {dt}"
                )]));
            }
        }
        let t0 = path.times[0];
        let mut wanted: Vec<usize> = snapshot_times
            .iter()
            .map(|&t| (((t - t0) / dt).round().max(0.0) as usize).min(path.increments.len()))
            .collect();
        wanted.sort_unstable();
        wanted.dedup();

        let grid = *self.grid();
        let mut out = FilterOutput::default();
        let mut state = initial.clone();
        state.time = t0;
        let mut next_snap = wanted.iter().peekable();
        let record = |state: &DensityField, n: usize, out: &mut FilterOutput| -> Result<()> {
            let mass = total_mass(&grid, state);
            if !(mass >= MASS_FLOOR) {
                return Err(Error::DegenerateMass {
                    time: state.time,
                    mass,
                });
            }
            out.step_indices.push(n);
            out.normalizers.push(mass);
            out.unnormalized.push(state.clone());
            out.posterior.push(DensityField {
                values: state.values.iter().map(|v| v / mass).collect(),
                time: state.time,
            });
            Ok(())
        };

        if next_snap.peek() == Some(&&0) {
            record(&state, 0, &mut out)?;
            next_snap.next();
        }
        for (n, &dy) in path.increments.iter().enumerate() {
            state = self.step(&state, dy)?;
            state.time = path.times[n + 1];
            if next_snap.peek() == Some(&&(n + 1)) {
                record(&state, n + 1, &mut out)?;
                next_snap.next();
            }
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct FilterOutput {
    pub unnormalized: Vec<DensityField>,
    pub posterior: Vec<DensityField>,
    /// Total mass of the unnormalized field at each snapshot.
    pub normalizers: Vec<f64>,
    pub step_indices: Vec<usize>,
}

/// One prediction–correction step (identity domain map).
pub fn zakai_step(
    cfg: &SolverConfig,
    observation: &ObservationModel,
    field: &DensityField,
    dy: f64,
) -> Result<DensityField> {
    ZakaiFilter::new(cfg.clone(), observation, &DomainMap::IDENTITY)?.step(field, dy)
}

/// Filters the whole path; the initial field and the final field are
/// always among the snapshots.
pub fn run_filter(
    cfg: &SolverConfig,
    observation: &ObservationModel,
    initial: &DensityField,
    path: &ObservationPath,
) -> Result<FilterOutput> {
    let filter = ZakaiFilter::new(cfg.clone(), observation, &DomainMap::IDENTITY)?;
    let times = [path.times[0], *path.times.last().unwrap_or(&path.times[0])];
    filter.run(initial, path, &times)
}
