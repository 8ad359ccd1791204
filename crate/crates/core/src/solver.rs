//! Explicit finite-difference solver for the nonlocal Fokker–Planck equation
//!
//! ```text
//! dp/dt = -(f p)' + C_alpha p.v. int (p(x+y) - p(x)) e^(-lambda|y|) |y|^(-1-alpha) dy
//! ```
//!
//! The jump integral is discretized with the punched-hole trapezoidal rule;
//! the missing neighbourhood of `y = 0` is restored by the second difference
//! with coefficient `C_h = -C_alpha zeta(alpha-1) h^(2-alpha)`. Drift uses
//! global Lax–Friedrichs splitting `(fP)^± = (fP ± M P)/2`, upwinded.

use rayon::prelude::*;

use crate::drift::DriftSpec;
use crate::error::{Error, Result};
use crate::grid::{DensityField, DomainMap, Grid1D};
use crate::levy::TemperedStableParams;
use crate::special::{riemann_zeta, tempered_tail_weight};

/// Growth factor over the initial maximum treated as a blow-up.
pub const INSTABILITY_GROWTH: f64 = 1e6;

/// Nodes per rayon task; keeps scheduling overhead negligible on small grids.
const NODES_PER_TASK: usize = 64;

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub params: TemperedStableParams,
    pub grid: Grid1D,
    pub drift: DriftSpec,
    pub dt: f64,
    pub t_final: f64,
    /// Fraction of the stability bound used by [`auto_dt`].
    pub safety_factor: f64,
}

impl SolverConfig {
    /// Builds a config whose time step is `safety_factor` times the tighter
    /// of the diffusive and advective stability bounds.
    pub fn with_auto_dt(
        params: TemperedStableParams,
        grid: Grid1D,
        drift: DriftSpec,
        t_final: f64,
        safety_factor: f64,
    ) -> Result<Self> {
        let dt = auto_dt(&params, &grid, &drift, safety_factor)?;
        let cfg = Self {
            params,
            grid,
            drift,
            dt,
            t_final,
            safety_factor,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let mut v = self.params.violations();
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            v.push(format!("dt must be > 0 (got {})", self.dt));
        }
        if !(self.t_final >= 0.0 && self.t_final.is_finite()) {
            v.push(format!("t_final must be >= 0 (got {})", self.t_final));
        }
        if !(self.safety_factor > 0.0 && self.safety_factor <= 1.0) {
            v.push(format!(
                "safety_factor must lie in (0, 1] (got {})",
                self.safety_factor
            ));
        }
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(v))
        }
    }

    /// Stability bound for this configuration (no safety factor applied).
    pub fn stability_bound(&self) -> Result<f64> {
        stability_bound(&self.params, &self.grid, &self.drift)
    }
}

/// A problem posed on `(a, b)` rewritten on the standard domain `(-1, 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct StandardProblem {
    pub params: TemperedStableParams,
    pub drift: DriftSpec,
    pub map: DomainMap,
}

/// Rescales `(a, b)` to `(-1, 1)`: `lambda~ = s lambda`,
/// `C~ = s^-alpha C_alpha`, `f~(y) = f(s y + c) / s` with `s = (b-a)/2`,
/// `c = (a+b)/2`. Solutions map back through `u(y, t) = p(s y + c, t)`.
pub fn transform_to_standard(
    a: f64,
    b: f64,
    params: &TemperedStableParams,
    drift: &DriftSpec,
) -> Result<StandardProblem> {
    let map = DomainMap::from_interval(a, b)?;
    let s = map.scale;
    let params = TemperedStableParams {
        alpha: params.alpha,
        lambda: s * params.lambda,
        c_alpha: s.powf(-params.alpha) * params.c_alpha,
    };
    let drift = if s == 1.0 && map.shift == 0.0 {
        drift.clone()
    } else {
        drift.rescaled(s, map.shift)
    };
    Ok(StandardProblem { params, drift, map })
}

#[derive(Debug, Clone, PartialEq)]
pub struct FluxSplit {
    pub plus: Vec<f64>,
    pub minus: Vec<f64>,
    /// `M = max |f(x_j)|` over the nodes `-J..=J`.
    pub max_speed: f64,
}

/// `M = max |f|` over the nodes that can carry density.
pub fn max_drift_speed(drift: &DriftSpec, grid: &Grid1D) -> f64 {
    if drift.is_zero() {
        return 0.0;
    }
    let (lo, hi) = grid.active_range();
    (lo..=hi)
        .map(|p| drift.eval(grid.x(p)).abs())
        .fold(0.0, f64::max)
}

/// Global Lax–Friedrichs splitting `(f P ± M P) / 2`.
pub fn flux_split(drift: &DriftSpec, grid: &Grid1D, field: &DensityField) -> Result<FluxSplit> {
    field.check_aligned(grid)?;
    let m = max_drift_speed(drift, grid);
    let (plus, minus) = field
        .values
        .iter()
        .enumerate()
        .map(|(p, &v)| {
            let f = drift.eval(grid.x(p));
            (0.5 * (f * v + m * v), 0.5 * (f * v - m * v))
        })
        .unzip();
    Ok(FluxSplit {
        plus,
        minus,
        max_speed: m,
    })
}

/// Largest explicit Euler step for which the drift-free absorbing scheme
/// obeys the discrete maximum principle:
/// `h^alpha / (2 C_alpha (1 + 1/alpha - zeta(alpha - 1)))`.
pub fn max_stable_dt(params: &TemperedStableParams, h: f64) -> Result<f64> {
    let v = params.violations();
    if !v.is_empty() {
        return Err(Error::Config(v));
    }
    if !(h > 0.0) {
        return Err(Error::Config(vec![format!("h must be > 0 (got {h})")]));
    }
    let alpha = params.alpha;
    let zeta = riemann_zeta(alpha - 1.0)?;
    Ok(h.powf(alpha) / (2.0 * params.c_alpha * (1.0 + 1.0 / alpha - zeta)))
}

/// Advective bound `h / (2M)` for the upwinded split fluxes (infinite when `M = 0`).
pub fn advective_dt(max_speed: f64, h: f64) -> f64 {
    if max_speed > 0.0 {
        h / (2.0 * max_speed)
    } else {
        f64::INFINITY
    }
}

/// `min(max_stable_dt, advective_dt)`.
pub fn stability_bound(
    params: &TemperedStableParams,
    grid: &Grid1D,
    drift: &DriftSpec,
) -> Result<f64> {
    let mp = max_stable_dt(params, grid.h())?;
    Ok(mp.min(advective_dt(max_drift_speed(drift, grid), grid.h())))
}

pub fn auto_dt(
    params: &TemperedStableParams,
    grid: &Grid1D,
    drift: &DriftSpec,
    safety_factor: f64,
) -> Result<f64> {
    Ok(safety_factor * stability_bound(params, grid, drift)?)
}

/// Semi-discrete operator with all grid-dependent coefficients precomputed.
/// Immutable once built; one instance can serve any number of fields.
#[derive(Debug, Clone)]
pub struct FpeSolver {
    cfg: SolverConfig,
    /// Kernel weights `e^(-lambda |x_k|) |x_k|^(-1-alpha)` for offsets
    /// `k = -K..=K` (`K = hi - lo`), zero at `k = 0`.
    weights: Vec<f64>,
    /// `C_alpha (W1(x_j) + W2(x_j))` per stored node; zero when unbounded.
    killing: Vec<f64>,
    /// `f(x_j) + M` and `f(x_j) - M`, halved.
    flux_plus: Vec<f64>,
    flux_minus: Vec<f64>,
    max_speed: f64,
    /// `C_h / h^2`.
    diffusion: f64,
    /// `C_alpha h`.
    jump_scale: f64,
    bound: f64,
}

impl FpeSolver {
    pub fn new(cfg: SolverConfig) -> Result<Self> {
        cfg.validate()?;
        let grid = cfg.grid;
        let p = cfg.params;
        let h = grid.h();
        let (lo, hi) = grid.active_range();
        let span = hi - lo;

        let mut weights = vec![0.0; 2 * span + 1];
        for k in 1..=span {
            let r = k as f64 * h;
            let w = (-p.lambda * r).exp() * r.powf(-1.0 - p.alpha);
            weights[span + k] = w;
            weights[span - k] = w;
        }

        let mut killing = vec![0.0; grid.len()];
        if grid.is_bounded() {
            for (pos, kill) in killing.iter_mut().enumerate().take(hi).skip(lo + 1) {
                let x = grid.x(pos);
                *kill = p.c_alpha
                    * (tempered_tail_weight(p.alpha, p.lambda, 1.0 + x)?
                        + tempered_tail_weight(p.alpha, p.lambda, 1.0 - x)?);
            }
        }

        let max_speed = max_drift_speed(&cfg.drift, &grid);
        let (flux_plus, flux_minus) = (0..grid.len())
            .map(|pos| {
                let f = cfg.drift.eval(grid.x(pos));
                (0.5 * (f + max_speed), 0.5 * (f - max_speed))
            })
            .unzip();

        let zeta = riemann_zeta(p.alpha - 1.0)?;
        let c_h = -p.c_alpha * zeta * h.powf(2.0 - p.alpha);
        let bound = stability_bound(&p, &grid, &cfg.drift)?;

        Ok(Self {
            cfg,
            weights,
            killing,
            flux_plus,
            flux_minus,
            max_speed,
            diffusion: c_h / (h * h),
            jump_scale: p.c_alpha * h,
            bound,
        })
    }

    pub fn config(&self) -> &SolverConfig {
        &self.cfg
    }

    pub fn grid(&self) -> &Grid1D {
        &self.cfg.grid
    }

    pub fn max_speed(&self) -> f64 {
        self.max_speed
    }

    /// `min(max_stable_dt, advective_dt)` for this grid.
    pub fn stability_bound(&self) -> f64 {
        self.bound
    }

    /// `C_alpha (W1 + W2)` at each stored node.
    pub fn killing_rates(&self) -> &[f64] {
        &self.killing
    }

    /// `dP_j/dt` at every stored node; nodes with `|j| >= J` get 0.
    pub fn rhs(&self, field: &DensityField) -> Result<Vec<f64>> {
        field.check_aligned(&self.cfg.grid)?;
        let mut out = vec![0.0; field.values.len()];
        self.rhs_into(&field.values, &mut out);
        Ok(out)
    }

    pub fn rhs_into(&self, values: &[f64], out: &mut [f64]) {
        let (lo, hi) = self.cfg.grid.active_range();
        out[..=lo].fill(0.0);
        out[hi..].fill(0.0);
        if hi - lo < 2 {
            return;
        }
        out[lo + 1..hi]
            .par_iter_mut()
            .with_min_len(NODES_PER_TASK)
            .enumerate()
            .for_each(|(offset, slot)| {
                *slot = self.node_rhs(values, lo + 1 + offset);
            });
    }

    fn node_rhs(&self, v: &[f64], pos: usize) -> f64 {
        let (lo, hi) = self.cfg.grid.active_range();
        let span = hi - lo;
        let pj = v[pos];

        let second = self.diffusion * (v[pos + 1] - 2.0 * pj + v[pos - 1]);

        let flux = if self.max_speed > 0.0 {
            let h = self.cfg.grid.h();
            let fp = self.flux_plus[pos] * pj - self.flux_plus[pos - 1] * v[pos - 1];
            let fm = self.flux_minus[pos + 1] * v[pos + 1] - self.flux_minus[pos] * pj;
            (fp + fm) / h
        } else {
            0.0
        };

        // weight for target i sits at weights[span + i - pos]
        let w = &self.weights[span + lo - pos..=span + hi - pos];
        let p = &v[lo..=hi];
        let n = p.len();
        let inner = weighted_differences(&p[1..n - 1], &w[1..n - 1], pj);
        let ends = 0.5 * (w[0] * (p[0] - pj) + w[n - 1] * (p[n - 1] - pj));

        second - flux - self.killing[pos] * pj + self.jump_scale * (inner + ends)
    }

    /// One explicit Euler step of length `dt`.
    pub fn step(&self, field: &DensityField, dt: f64) -> Result<DensityField> {
        field.check_aligned(&self.cfg.grid)?;
        let mut rate = vec![0.0; field.values.len()];
        self.rhs_into(&field.values, &mut rate);
        let mut next = DensityField {
            values: field
                .values
                .iter()
                .zip(&rate)
                .map(|(&p, &r)| p + dt * r)
                .collect(),
            time: field.time + dt,
        };
        if self.cfg.grid.is_bounded() {
            next.zero_exterior(&self.cfg.grid);
        }
        if next.values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("step_euler"));
        }
        Ok(next)
    }

    /// Number of full steps and the trailing partial step needed to cover
    /// `span` with steps of `dt`.
    pub(crate) fn step_plan(span: f64, dt: f64) -> (u64, f64) {
        if span <= 0.0 {
            return (0, 0.0);
        }
        let ratio = span / dt;
        let full = (ratio + 1e-9).floor();
        let rest = span - full * dt;
        let rest = if rest > 1e-9 * dt { rest } else { 0.0 };
        (full as u64, rest)
    }

    /// Advances `initial` through each snapshot time and returns a copy of
    /// the field at every one. The step before each snapshot is shortened so
    /// the snapshot lands exactly.
    pub fn solve(
        &self,
        initial: &DensityField,
        snapshot_times: &[f64],
    ) -> Result<Vec<DensityField>> {
        initial.check_aligned(&self.cfg.grid)?;
        let mut violations = Vec::new();
        if snapshot_times.windows(2).any(|w| w[1] < w[0]) {
            violations.push("snapshot times must be sorted".to_string());
        }
        if let Some(&t) = snapshot_times.iter().find(|&&t| t < initial.time) {
            violations.push(format!(
                "snapshot time {t} precedes the initial time {}",
                initial.time
            ));
        }
        if let Some(&t) = snapshot_times
            .iter()
            .find(|&&t| t > self.cfg.t_final * (1.0 + 1e-12))
        {
            violations.push(format!(
                "snapshot time {t} exceeds t_final {}",
                self.cfg.t_final
            ));
        }
        if !violations.is_empty() {
            return Err(Error::Config(violations));
        }

        let limit = INSTABILITY_GROWTH * initial.max().abs().max(f64::MIN_POSITIVE);
        let dt = self.cfg.dt;
        let mut state = initial.clone();
        let mut rate = vec![0.0; state.values.len()];
        let mut out = Vec::with_capacity(snapshot_times.len());

        for &target in snapshot_times {
            let start = state.time;
            let (full, rest) = Self::step_plan(target - start, dt);
            for n in 0..full {
                self.advance(&mut state, &mut rate, dt, limit)?;
                state.time = start + (n + 1) as f64 * dt;
            }
            if rest > 0.0 {
                self.advance(&mut state, &mut rate, rest, limit)?;
            }
            state.time = target;
            out.push(state.clone());
        }
        Ok(out)
    }

    fn advance(
        &self,
        state: &mut DensityField,
        rate: &mut [f64],
        dt: f64,
        limit: f64,
    ) -> Result<()> {
        self.rhs_into(&state.values, rate);
        let mut worst = 0.0_f64;
        let mut finite = true;
        for (p, &r) in state.values.iter_mut().zip(rate.iter()) {
            *p += dt * r;
            finite &= p.is_finite();
            worst = worst.max(p.abs());
        }
        if self.cfg.grid.is_bounded() {
            state.zero_exterior(&self.cfg.grid);
        }
        if !finite || worst > limit {
            return Err(Error::Instability {
                time: state.time + dt,
                dt,
                bound: self.bound,
                detail: if finite {
                    format!("density magnitude {worst:e} exceeds {limit:e}")
                } else {
                    "non-finite density".to_string()
                },
            });
        }
        Ok(())
    }
}

/// `sum w_i (p_i - pj)`, with independent partial sums so the loop vectorizes.
/// Summation order is fixed, so the result is reproducible.
fn weighted_differences(p: &[f64], w: &[f64], pj: f64) -> f64 {
    const LANES: usize = 8;
    let mut acc = [0.0_f64; LANES];
    let pc = p.chunks_exact(LANES);
    let wc = w.chunks_exact(LANES);
    let (pr, wr) = (pc.remainder(), wc.remainder());
    for (pp, ww) in pc.zip(wc) {
        for l in 0..LANES {
            acc[l] += ww[l] * (pp[l] - pj);
        }
    }
    let mut tail = 0.0;
    for (&a, &b) in pr.iter().zip(wr) {
        tail += b * (a - pj);
    }
    let pairs = [
        acc[0] + acc[4],
        acc[1] + acc[5],
        acc[2] + acc[6],
        acc[3] + acc[7],
    ];
    (pairs[0] + pairs[2]) + (pairs[1] + pairs[3]) + tail
}

fn require_mode(cfg: &SolverConfig, bounded: bool, op: &str) -> Result<()> {
    if cfg.grid.is_bounded() != bounded {
        let want = if bounded {
            "BoundedAbsorbing"
        } else {
            "TruncatedInfinite"
        };
        return Err(Error::Config(vec![format!(
            "{op} requires a {want} grid, got {:?}",
            cfg.grid.mode()
        )]));
    }
    Ok(())
}

/// Semi-discrete right-hand side on the standard absorbing domain.
pub fn rhs_bounded(cfg: &SolverConfig, field: &DensityField) -> Result<Vec<f64>> {
    require_mode(cfg, true, "rhs_bounded")?;
    FpeSolver::new(cfg.clone())?.rhs(field)
}

/// Semi-discrete right-hand side on the truncated line; no killing term.
pub fn rhs_unbounded(cfg: &SolverConfig, field: &DensityField) -> Result<Vec<f64>> {
    require_mode(cfg, false, "rhs_unbounded")?;
    FpeSolver::new(cfg.clone())?.rhs(field)
}

pub fn step_euler(cfg: &SolverConfig, field: &DensityField) -> Result<DensityField> {
    FpeSolver::new(cfg.clone())?.step(field, cfg.dt)
}

pub fn solve(
    cfg: &SolverConfig,
    initial: &DensityField,
    snapshot_times: &[f64],
) -> Result<Vec<DensityField>> {
    FpeSolver::new(cfg.clone())?.solve(initial, snapshot_times)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::total_mass;
    use approx::assert_relative_eq;

    fn spike_config(bounded: bool) -> SolverConfig {
        let grid = if bounded {
            Grid1D::bounded(8).unwrap()
        } else {
            Grid1D::truncated(8, 1.0).unwrap()
        };
        SolverConfig {
            params: TemperedStableParams::new(0.5, 0.01, 1.0).unwrap(),
            grid,
            drift: DriftSpec::Zero,
            dt: 1e-3,
            t_final: 1.0,
            safety_factor: 0.9,
        }
    }

    // Straight-line mpmath evaluation of the scheme (tail weights through the
    // Whittaker W function) for a unit spike at x = 0, nodes j = -8..=8.
    const SPIKE_BOUNDED: [f64; 17] = [
        0.0,
        1.211_121_862_238_070_986,
        1.528_096_905_674_893_894_4,
        2.011_248_038_115_373_359_4,
        2.814_320_285_609_536_736_4,
        4.338_349_080_380_346_182_6,
        7.980_024_979_179_680_992_3,
        27.303_078_697_724_502_773,
        -122.010_144_940_127_856_97,
        27.303_078_697_724_502_773,
        7.980_024_979_179_680_992_3,
        4.338_349_080_380_346_182_6,
        2.814_320_285_609_536_736_4,
        2.011_248_038_115_373_359_4,
        1.528_096_905_674_893_894_4,
        1.211_121_862_238_070_986,
        0.0,
    ];
    const SPIKE_CENTER_UNBOUNDED: f64 = -95.362_529_531_593_977_902;

    #[test]
    fn transform_examples() {
        let p = TemperedStableParams::new(1.5, 0.01, 1.0).unwrap();
        let id = transform_to_standard(-1.0, 1.0, &p, &DriftSpec::bistable()).unwrap();
        assert_eq!(id.params, p);
        assert_eq!(id.drift, DriftSpec::bistable());

        let t = transform_to_standard(-4.0, 4.0, &p, &DriftSpec::Zero).unwrap();
        assert_relative_eq!(t.params.lambda, 0.04, max_relative = 1e-15);
        assert_relative_eq!(t.params.c_alpha, 0.125, max_relative = 1e-15);
        assert!(transform_to_standard(1.0, -1.0, &p, &DriftSpec::Zero).is_err());
    }

    #[test]
    fn flux_split_examples() {
        let g = Grid1D::truncated(20, 2.0).unwrap();
        let field = DensityField::from_fn(&g, |x| (-x * x).exp());
        let zero = flux_split(&DriftSpec::Zero, &g, &field).unwrap();
        assert_eq!(zero.max_speed, 0.0);
        assert!(zero.plus.iter().chain(&zero.minus).all(|&v| v == 0.0));

        let split = flux_split(&DriftSpec::bistable(), &g, &field).unwrap();
        assert_relative_eq!(split.max_speed, 6.0, max_relative = 1e-15);

        let doubled = DensityField {
            values: field.values.iter().map(|v| 2.0 * v).collect(),
            time: 0.0,
        };
        let split2 = flux_split(&DriftSpec::bistable(), &g, &doubled).unwrap();
        for (a, b) in split.plus.iter().zip(&split2.plus) {
            assert_eq!(2.0 * a, *b);
        }
        for (a, b) in split.minus.iter().zip(&split2.minus) {
            assert_eq!(2.0 * a, *b);
        }
    }

    #[test]
    fn spike_rhs_bounded_matches_oracle() {
        let cfg = spike_config(true);
        let field = DensityField::delta(&cfg.grid);
        let rhs = rhs_bounded(&cfg, &field).unwrap();
        let (lo, hi) = cfg.grid.active_range();
        for (pos, want) in (lo..=hi).zip(SPIKE_BOUNDED) {
            assert_relative_eq!(rhs[pos], want, max_relative = 1e-12, epsilon = 1e-13);
        }
        assert!(rhs[..lo].iter().chain(&rhs[hi + 1..]).all(|&v| v == 0.0));
    }

    #[test]
    fn spike_rhs_unbounded_matches_oracle() {
        let cfg = spike_config(false);
        let field = DensityField::delta(&cfg.grid);
        let rhs = rhs_unbounded(&cfg, &field).unwrap();
        for (pos, &want) in SPIKE_BOUNDED.iter().enumerate() {
            let want = if pos == 8 { SPIKE_CENTER_UNBOUNDED } else { want };
            assert_relative_eq!(rhs[pos], want, max_relative = 1e-12, epsilon = 1e-13);
        }
    }

    #[test]
    fn step_matches_oracle_composition() {
        let cfg = spike_config(true);
        let field = DensityField::delta(&cfg.grid);
        let next = step_euler(&cfg, &field).unwrap();
        let (lo, _) = cfg.grid.active_range();
        for (i, want) in SPIKE_BOUNDED.iter().enumerate() {
            let pos = lo + i;
            let expect = field.values[pos] + cfg.dt * want;
            assert_relative_eq!(next.values[pos], expect, max_relative = 1e-12, epsilon = 1e-13);
        }
        assert_eq!(next.time, cfg.dt);
    }

    #[test]
    fn mode_mismatch_is_rejected() {
        let cfg = spike_config(true);
        let field = DensityField::zeros(&cfg.grid);
        assert!(matches!(rhs_unbounded(&cfg, &field), Err(Error::Config(_))));
        let cfg = spike_config(false);
        let field = DensityField::zeros(&cfg.grid);
        assert!(matches!(rhs_bounded(&cfg, &field), Err(Error::Config(_))));
    }

    #[test]
    fn zero_field_and_zero_step() {
        let mut cfg = spike_config(true);
        let zero = DensityField::zeros(&cfg.grid);
        assert!(rhs_bounded(&cfg, &zero).unwrap().iter().all(|&v| v == 0.0));
        assert_eq!(step_euler(&cfg, &zero).unwrap().values, zero.values);

        cfg.dt = 1e-3;
        let solver = FpeSolver::new(cfg.clone()).unwrap();
        let field = DensityField::delta(&cfg.grid);
        assert_eq!(solver.step(&field, 0.0).unwrap().values, field.values);
    }

    #[test]
    fn literal_constant_fixture_leaves_only_killing() {
        // Every P_{j+k} = c: differences cancel, leaving -C (W1 + W2) c.
        let cfg = spike_config(true);
        let solver = FpeSolver::new(cfg.clone()).unwrap();
        let c = 0.7;
        let values = vec![c; cfg.grid.len()];
        let mut out = vec![0.0; values.len()];
        solver.rhs_into(&values, &mut out);
        let (lo, hi) = cfg.grid.active_range();
        for pos in lo + 1..hi {
            let want = -solver.killing_rates()[pos] * c;
            assert_relative_eq!(out[pos], want, max_relative = 1e-14);
        }
    }

    #[test]
    fn max_stable_dt_examples() {
        let p = TemperedStableParams::new(1.5, 0.01, 1.0).unwrap();
        let dt = max_stable_dt(&p, 0.1).unwrap();
        assert_relative_eq!(dt, 0.005_056_373_914_204_077, max_relative = 1e-12);
        let half = max_stable_dt(&p, 0.05).unwrap();
        assert_relative_eq!(half / dt, 2.0_f64.powf(-1.5), max_relative = 1e-14);
        for i in 1..200 {
            let alpha = i as f64 * 0.01;
            if alpha == 1.0 {
                continue;
            }
            let q = TemperedStableParams::new(alpha, 0.3, 0.8).unwrap();
            assert!(max_stable_dt(&q, 0.01).unwrap() > 0.0);
        }
    }

    #[test]
    fn step_plan_lands_exactly() {
        assert_eq!(FpeSolver::step_plan(0.5, 1e-5), (50_000, 0.0));
        assert_eq!(FpeSolver::step_plan(0.0, 1e-3), (0, 0.0));
        let (full, rest) = FpeSolver::step_plan(1.0, 0.3);
        assert_eq!(full, 3);
        assert_relative_eq!(rest, 0.1, max_relative = 1e-12);
    }

    #[test]
    fn solve_zero_horizon_returns_initial() {
        let cfg = spike_config(false);
        let p0 = DensityField::gaussian(&cfg.grid, &DomainMap::IDENTITY, 40.0, 0.0);
        let out = solve(&cfg, &p0, &[0.0]).unwrap();
        assert_eq!(out, vec![p0]);
    }

    #[test]
    fn solve_rejects_bad_snapshots() {
        let cfg = spike_config(false);
        let p0 = DensityField::zeros(&cfg.grid);
        assert!(solve(&cfg, &p0, &[0.5, 0.2]).is_err());
        assert!(solve(&cfg, &p0, &[2.0]).is_err());
    }

    #[test]
    fn oversized_step_reports_instability() {
        let mut cfg = spike_config(true);
        cfg.params = TemperedStableParams::new(1.5, 0.01, 1.0).unwrap();
        let bound = max_stable_dt(&cfg.params, cfg.grid.h()).unwrap();
        cfg.dt = 50.0 * bound;
        cfg.t_final = 1000.0 * bound;
        let p0 = DensityField::from_fn(&cfg.grid, |x| 1.0 - x * x);
        match solve(&cfg, &p0, &[cfg.t_final]) {
            Err(Error::Instability { dt, bound: b, .. }) => {
                assert_eq!(dt, cfg.dt);
                assert_relative_eq!(b, bound, max_relative = 1e-15);
            }
            other => panic!("expected instability, got {other:?}"),
        }
    }

    #[test]
    fn absorbing_mass_decreases() {
        let p = TemperedStableParams::with_default_normalization(1.2, 0.1).unwrap();
        let grid = Grid1D::bounded(32).unwrap();
        let cfg = SolverConfig::with_auto_dt(p, grid, DriftSpec::Zero, 0.5, 0.9).unwrap();
        let solver = FpeSolver::new(cfg.clone()).unwrap();
        let mut field = DensityField::from_fn(&grid, |x| (1.0 - x * x).max(0.0));
        let mut mass = total_mass(&grid, &field);
        for _ in 0..200 {
            field = solver.step(&field, cfg.dt).unwrap();
            let m = total_mass(&grid, &field);
            assert!(m <= mass);
            mass = m;
        }
    }
}
