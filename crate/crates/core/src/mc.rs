//! Monte-Carlo simulation of `dX = f(X) dt + dL` and histogram comparison
//! against finite-difference densities.
//!
//! Increments of the tempered stable process are drawn as a compound Poisson
//! process of jumps longer than `eps` plus a centred Gaussian standing in for
//! the jumps shorter than `eps` (variance `dt * int_{|y|<=eps} y^2 nu(dy)`).
//! Long jumps are sampled from the untempered Pareto tail and accepted with
//! probability `exp(-lambda (|y| - eps))`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};
use rayon::prelude::*;

use crate::drift::DriftSpec;
use crate::error::{Error, Result};
use crate::grid::{total_mass, DensityField, DomainMap, Grid1D};
use crate::levy::TemperedStableParams;

/// Deterministic generator for stream `stream` under `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Initial law of the paths.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitialState {
    Point(f64),
    /// Density `sqrt(a/pi) exp(-a (x - b)^2)`, i.e. `N(b, 1/(2a))`.
    Gaussian { a: f64, b: f64 },
}

impl InitialState {
    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            InitialState::Point(x) => x,
            InitialState::Gaussian { a, b } => {
                let z: f64 = StandardNormal.sample(rng);
                b + z / (2.0 * a).sqrt()
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct McConfig {
    pub params: TemperedStableParams,
    pub drift: DriftSpec,
    pub n_paths: usize,
    pub dt: f64,
    pub t_final: f64,
    /// Small-jump threshold `eps`.
    pub epsilon: f64,
    pub seed: u64,
    pub initial: InitialState,
    /// Open interval outside which paths are killed, matching the
    /// absorbing problem. `None` simulates on the whole line.
    pub absorbing: Option<(f64, f64)>,
}

impl McConfig {
    pub fn validate(&self) -> Result<()> {
        let mut v = Vec::new();
        let p = &self.params;
        if !crate::levy::valid_alpha(p.alpha) {
            v.push(format!("alpha must lie in (0,1)∪(1,2) (got {})", p.alpha));
        }
        if !(p.lambda > 0.0) {
            v.push(format!("lambda must be > 0 (got {})", p.lambda));
        }
        if !(p.c_alpha >= 0.0) {
            v.push(format!("c_alpha must be >= 0 (got {})", p.c_alpha));
        }
        if self.n_paths == 0 {
            v.push("paths must be >= 1".to_string());
        }
        if !(self.dt > 0.0) {
            v.push(format!("mc dt must be > 0 (got {})", self.dt));
        }
        if !(self.t_final >= 0.0) {
            v.push(format!("t_final must be >= 0 (got {})", self.t_final));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            v.push(format!("epsilon must lie in (0, 1) (got {})", self.epsilon));
        }
        if let Some((a, b)) = self.absorbing {
            if !(a < b) {
                v.push(format!("absorbing interval ({a}, {b}) must satisfy a < b"));
            }
        }
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(v))
        }
    }

    /// Number of uniform steps and their length; the horizon is split into
    /// `ceil(t_final / dt)` equal steps.
    pub fn steps(&self) -> (usize, f64) {
        if self.t_final == 0.0 {
            return (0, self.dt);
        }
        let n = (self.t_final / self.dt - 1e-9).ceil().max(1.0) as usize;
        (n, self.t_final / n as f64)
    }
}

/// One increment together with the number of long jumps it contains.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Increment {
    pub value: f64,
    pub jumps: u64,
}

/// Sampler for increments over a fixed time step.
#[derive(Debug, Clone)]
pub struct IncrementSampler {
    alpha: f64,
    lambda: f64,
    epsilon: f64,
    jump_rate: f64,
    small_sd: f64,
    poisson: Option<Poisson<f64>>,
}

impl IncrementSampler {
    pub fn new(params: &TemperedStableParams, epsilon: f64, dt: f64) -> Result<Self> {
        if !(epsilon > 0.0) || !(dt > 0.0) {
            return Err(Error::domain(
                "sample_increment",
                format!("need eps > 0 and dt > 0 (got eps = {epsilon}, dt = {dt})"),
            ));
        }
        let jump_rate = params.large_jump_rate(epsilon)?;
        let small_var = if params.c_alpha == 0.0 {
            0.0
        } else {
            params.small_jump_variance(epsilon)?
        };
        let mean_jumps = jump_rate * dt;
        let poisson = if mean_jumps > 0.0 {
            Some(Poisson::new(mean_jumps).map_err(|e| {
                Error::domain("sample_increment", format!("poisson rate {mean_jumps}: {e}"))
            })?)
        } else {
            None
        };
        Ok(Self {
            alpha: params.alpha,
            lambda: params.lambda,
            epsilon,
            jump_rate,
            small_sd: (small_var * dt).sqrt(),
            poisson,
        })
    }

    /// Rate of jumps longer than `eps` per unit time.
    pub fn jump_rate(&self) -> f64 {
        self.jump_rate
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.sample_counted(rng).value
    }

    pub fn sample_counted<R: Rng + ?Sized>(&self, rng: &mut R) -> Increment {
        let jumps = match &self.poisson {
            Some(p) => p.sample(rng) as u64,
            None => 0,
        };
        let mut value = 0.0;
        for _ in 0..jumps {
            value += self.jump(rng);
        }
        if self.small_sd > 0.0 {
            let z: f64 = StandardNormal.sample(rng);
            value += self.small_sd * z;
        }
        Increment { value, jumps }
    }

    fn jump<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        loop {
            // 1 - U lies in (0, 1]
            let u = 1.0 - rng.random::<f64>();
            let size = self.epsilon * u.powf(-1.0 / self.alpha);
            let accept = rng.random::<f64>() < (-self.lambda * (size - self.epsilon)).exp();
            if accept {
                return if rng.random::<bool>() { size } else { -size };
            }
        }
    }
}

/// Draws one increment over `dt`. Builds a fresh sampler; use
/// [`IncrementSampler`] directly when drawing many.
pub fn sample_increment<R: Rng + ?Sized>(
    params: &TemperedStableParams,
    dt: f64,
    epsilon: f64,
    rng: &mut R,
) -> Result<f64> {
    Ok(IncrementSampler::new(params, epsilon, dt)?.sample(rng))
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathEnsemble {
    /// Terminal positions of the paths that stayed finite, in path order.
    pub terminal: Vec<f64>,
    /// Paths killed on leaving the absorbing interval.
    pub absorbed: usize,
    /// Paths dropped because they became non-finite.
    pub non_finite: usize,
}

enum PathEnd {
    Alive(f64),
    Absorbed,
    NonFinite,
}

/// Euler scheme `X_{n+1} = X_n + f(X_n) dt + dL_n`, path `i` driven by
/// stream `i` of the seed. Results do not depend on the thread count.
pub fn simulate_paths(cfg: &McConfig) -> Result<PathEnsemble> {
    cfg.validate()?;
    let (steps, dt) = cfg.steps();
    let sampler = IncrementSampler::new(&cfg.params, cfg.epsilon, dt)?;
    let drift = &cfg.drift;
    let zero_drift = drift.is_zero();

    let inside = |x: f64| cfg.absorbing.is_none_or(|(a, b)| x > a && x < b);

    let ends: Vec<PathEnd> = (0..cfg.n_paths)
        .into_par_iter()
        .with_min_len(256)
        .map(|path| {
            let mut rng = stream_rng(cfg.seed, path as u64);
            let mut x = cfg.initial.draw(&mut rng);
            if !inside(x) {
                return PathEnd::Absorbed;
            }
            for _ in 0..steps {
                let f = if zero_drift { 0.0 } else { drift.eval(x) };
                x += f * dt + sampler.sample(&mut rng);
                if !x.is_finite() {
                    return PathEnd::NonFinite;
                }
                if !inside(x) {
                    return PathEnd::Absorbed;
                }
            }
            PathEnd::Alive(x)
        })
        .collect();

    let mut terminal = Vec::with_capacity(ends.len());
    let (mut absorbed, mut non_finite) = (0, 0);
    for end in ends {
        match end {
            PathEnd::Alive(x) => terminal.push(x),
            PathEnd::Absorbed => absorbed += 1,
            PathEnd::NonFinite => non_finite += 1,
        }
    }
    if non_finite > 0 {
        log_warning(non_finite, cfg.n_paths);
    }
    Ok(PathEnsemble {
        terminal,
        absorbed,
        non_finite,
    })
}

fn log_warning(dropped: usize, total: usize) {
    eprintln!("warning: {dropped} of {total} Monte-Carlo paths became non-finite and were dropped");
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalDensity {
    pub field: DensityField,
    /// Fraction of samples outside `[x_{-J}, x_J]`.
    pub escaped_fraction: f64,
    /// Sample count per node (interior cells `[x_j - h/2, x_j + h/2)`,
    /// half-cells at the two ends).
    pub counts: Vec<u64>,
}

/// Histogram density on the grid cells, in physical units via `map`.
/// `map.scale * total_mass` equals the retained fraction.
pub fn empirical_density(
    samples: &[f64],
    grid: &Grid1D,
    map: &DomainMap,
) -> Result<EmpiricalDensity> {
    if samples.is_empty() {
        return Err(Error::Config(vec![
            "empirical density needs at least one sample".to_string(),
        ]));
    }
    let h = grid.h();
    let (lo, hi) = grid.active_range();
    let (x_lo, x_hi) = (grid.x(lo), grid.x(hi));
    let mut counts = vec![0_u64; grid.len()];
    let mut escaped = 0_u64;
    for &s in samples {
        let xc = map.to_computational(s);
        if !(xc >= x_lo && xc <= x_hi) {
            escaped += 1;
            continue;
        }
        let j = (xc / h + 0.5).floor() as i64;
        let pos = grid.position(j).clamp(lo, hi);
        counts[pos] += 1;
    }
    let n = samples.len() as f64;
    let width = map.scale * h;
    let values = counts
        .iter()
        .enumerate()
        .map(|(pos, &c)| {
            let cell = if pos == lo || pos == hi { 0.5 * width } else { width };
            c as f64 / (n * cell)
        })
        .collect();
    Ok(EmpiricalDensity {
        field: DensityField { values, time: 0.0 },
        escaped_fraction: escaped as f64 / n,
        counts,
    })
}

/// `h * sum |P_j - Q_j|` in computational units (multiply by the map scale
/// for physical units).
pub fn l1_distance(grid: &Grid1D, p: &DensityField, q: &DensityField) -> Result<f64> {
    p.check_aligned(grid)?;
    q.check_aligned(grid)?;
    Ok(grid.h()
        * p.values
            .iter()
            .zip(&q.values)
            .map(|(a, b)| (a - b).abs())
            .sum::<f64>())
}

/// Retained mass of an empirical density in physical units.
pub fn retained_mass(grid: &Grid1D, map: &DomainMap, density: &EmpiricalDensity) -> f64 {
    map.scale * total_mass(grid, &density.field)
}
