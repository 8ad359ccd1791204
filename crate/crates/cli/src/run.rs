//! Pipelines behind each command and the files they write.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde_json::{json, Value};
use tempered_fpe::solver::{advective_dt, max_drift_speed, INSTABILITY_GROWTH};
use tempered_fpe::zakai::NoiseSwitches;
use tempered_fpe::{
    empirical_density, l1_distance, max_stable_dt, simulate_paths, simulate_signal_observation,
    total_mass, transform_to_standard, DensityField, DomainMap, Error, FpeSolver, Grid1D,
    InitialState, McConfig, ObservationPath, Result, SignalObservationConfig, SolverConfig,
    TemperedStableParams, ZakaiFilter, VERSION,
};

use crate::config::{Command, Domain, ExperimentConfig};

/// The discretized problem for one `(alpha, lambda)` pair.
#[derive(Debug, Clone)]
pub struct Setup {
    /// Parameters in physical coordinates.
    pub params: TemperedStableParams,
    pub grid: Grid1D,
    pub map: DomainMap,
    pub solver: SolverConfig,
}

impl Setup {
    pub fn new(cfg: &ExperimentConfig, alpha: f64, lambda: f64, t_final: f64) -> Result<Self> {
        let params = match cfg.c_alpha {
            Some(c) => TemperedStableParams::new(alpha, lambda, c)?,
            None => TemperedStableParams::with_default_normalization(alpha, lambda)?,
        };
        let (grid, map, std_params, drift) = match cfg.domain {
            Some(Domain::Interval { a, b }) => {
                let std = transform_to_standard(a, b, &params, &cfg.drift)?;
                (Grid1D::bounded(cfg.grid)?, std.map, std.params, std.drift)
            }
            Some(Domain::HalfWidth(l)) => (
                Grid1D::truncated(cfg.grid, l)?,
                DomainMap::IDENTITY,
                params,
                cfg.drift.clone(),
            ),
            None => return Err(Error::Config(vec!["a domain is required".into()])),
        };
        let solver = match cfg.dt {
            Some(dt) => {
                let s = SolverConfig {
                    params: std_params,
                    grid,
                    drift,
                    dt,
                    t_final,
                    safety_factor: cfg.safety_factor,
                };
                s.validate()?;
                s
            }
            None => SolverConfig::with_auto_dt(std_params, grid, drift, t_final, cfg.safety_factor)?,
        };
        Ok(Self {
            params,
            grid,
            map,
            solver,
        })
    }

    pub fn initial(&self, cfg: &ExperimentConfig) -> DensityField {
        let mut f = DensityField::gaussian(&self.grid, &self.map, cfg.initial.0, cfg.initial.1);
        if self.grid.is_bounded() {
            f.zero_exterior(&self.grid);
        }
        f
    }

    /// Physical spacing.
    pub fn h(&self) -> f64 {
        self.map.scale * self.grid.h()
    }

    pub fn mass(&self, field: &DensityField) -> f64 {
        self.map.scale * total_mass(&self.grid, field)
    }

    fn stability_json(&self) -> Result<Value> {
        let s = &self.solver;
        let mp = max_stable_dt(&s.params, s.grid.h())?;
        let adv = advective_dt(max_drift_speed(&s.drift, &s.grid), s.grid.h());
        let bound = mp.min(adv);
        Ok(json!({
            "max_stable_dt": mp,
            "advective_dt": finite_or_null(adv),
            "bound": bound,
            "dt": s.dt,
            "dt_over_bound": s.dt / bound,
            "safety_factor": s.safety_factor,
            "instability_growth_threshold": INSTABILITY_GROWTH,
        }))
    }

    fn warn_if_unstable(&self) -> Result<()> {
        let bound = self.solver.stability_bound()?;
        if self.solver.dt > bound {
            eprintln!(
                "warning: dt = {:e} exceeds the stability bound {:e}",
                self.solver.dt, bound
            );
        }
        Ok(())
    }

    fn run_json(&self) -> Value {
        json!({
            "alpha": self.params.alpha,
            "lambda": self.params.lambda,
            "c_alpha": self.params.c_alpha,
            "mode": self.grid.mode().label(),
            "grid_J": self.grid.j_half_span(),
            "h": self.h(),
            "map": {"scale": self.map.scale, "shift": self.map.shift},
            "computational": {
                "lambda": self.solver.params.lambda,
                "c_alpha": self.solver.params.c_alpha,
                "drift_coefficients": self.solver.drift.coefficients(),
            },
        })
    }

    fn epsilon(&self, cfg: &ExperimentConfig) -> f64 {
        cfg.epsilon.unwrap_or(0.5 * self.h())
    }

    /// Monte-Carlo histogram at `t`, normalized by all paths that stayed
    /// finite so absorbed paths show up as lost mass.
    pub fn monte_carlo(&self, cfg: &ExperimentConfig, t: f64) -> Result<McSnapshot> {
        let absorbing = match cfg.domain {
            Some(Domain::Interval { a, b }) => Some((a, b)),
            _ => None,
        };
        let mc = McConfig {
            params: self.params,
            drift: cfg.drift.clone(),
            n_paths: cfg.paths,
            dt: cfg.mc_dt,
            t_final: t,
            epsilon: self.epsilon(cfg),
            seed: cfg.seed,
            initial: InitialState::Gaussian {
                a: cfg.initial.0,
                b: cfg.initial.1,
            },
            absorbing,
        };
        let ens = simulate_paths(&mc)?;
        let finite = cfg.paths - ens.non_finite;
        let mut field = if ens.terminal.is_empty() {
            DensityField::zeros(&self.grid)
        } else {
            let hist = empirical_density(&ens.terminal, &self.grid, &self.map)?;
            let keep = ens.terminal.len() as f64 / finite.max(1) as f64;
            let mut f = hist.field;
            f.values.iter_mut().for_each(|v| *v *= keep);
            f
        };
        field.time = t;
        let retained = self.mass(&field);
        // fraction of finite paths that ended beyond the grid
        let (lo, hi) = self.grid.active_range();
        let outside = ens
            .terminal
            .iter()
            .map(|&x| self.map.to_computational(x))
            .filter(|&xc| !(xc >= self.grid.x(lo) && xc <= self.grid.x(hi)))
            .count();
        let escaped = outside as f64 / finite.max(1) as f64;
        Ok(McSnapshot {
            field,
            meta: json!({
                "t": t,
                "paths": cfg.paths,
                "mc_dt": cfg.mc_dt,
                "epsilon": mc.epsilon,
                "seed": cfg.seed,
                "absorbed": ens.absorbed,
                "non_finite": ens.non_finite,
                "escaped_fraction": escaped,
                "retained_mass": retained,
            }),
        })
    }
}

pub struct McSnapshot {
    pub field: DensityField,
    pub meta: Value,
}

fn finite_or_null(v: f64) -> Value {
    if v.is_finite() {
        json!(v)
    } else {
        Value::Null
    }
}

/// Float format shared by every CSV: 17 significant digits.
pub fn fmt_float(v: f64) -> String {
    format!("{v:.16e}")
}

/// `x,p` over the nodes that carry density, in physical coordinates.
pub fn write_density(path: &Path, setup: &Setup, field: &DensityField) -> Result<()> {
    let (lo, hi) = setup.grid.active_range();
    let mut out = String::from("x,p\n");
    for pos in lo..=hi {
        let x = setup.map.to_physical(setup.grid.x(pos));
        out.push_str(&fmt_float(x));
        out.push(',');
        out.push_str(&fmt_float(field.values[pos]));
        out.push('\n');
    }
    fs::write(path, out)?;
    Ok(())
}

/// `t,X,Y,dY` (`X` only when the signal is known); the first `dY` is blank.
pub fn write_path(path: &Path, obs: &ObservationPath) -> Result<()> {
    let mut out = String::from(if obs.truth.is_some() { "t,X,Y,dY\n" } else { "t,Y,dY\n" });
    let ys = obs.observations();
    for (n, &t) in obs.times.iter().enumerate() {
        out.push_str(&fmt_float(t));
        out.push(',');
        if let Some(x) = &obs.truth {
            out.push_str(&fmt_float(x[n]));
            out.push(',');
        }
        out.push_str(&fmt_float(ys[n]));
        out.push(',');
        if n > 0 {
            out.push_str(&fmt_float(obs.increments[n - 1]));
        }
        out.push('\n');
    }
    fs::write(path, out)?;
    Ok(())
}

/// Time as it appears in file names, rounded to 9 decimals.
fn time_label(t: f64) -> f64 {
    (t * 1e9).round() / 1e9
}

fn density_name(kind: Option<&str>, alpha: f64, lambda: f64, t: f64) -> String {
    let t = time_label(t);
    match kind {
        Some(k) => format!("density_{k}_a{alpha}_l{lambda}_t{t}.csv"),
        None => format!("density_a{alpha}_l{lambda}_t{t}.csv"),
    }
}

/// Result of a successful run: the metadata written to `meta.json` and the
/// files produced, relative to the output directory.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub meta: Value,
    pub files: Vec<PathBuf>,
}

struct Writer<'a> {
    dir: &'a Path,
    files: Vec<PathBuf>,
}

impl Writer<'_> {
    fn path(&mut self, name: String) -> PathBuf {
        let p = self.dir.join(&name);
        self.files.push(PathBuf::from(name));
        p
    }
}

pub fn execute(cfg: &ExperimentConfig) -> Result<Outcome> {
    let start = Instant::now();
    fs::create_dir_all(&cfg.out)?;
    let mut w = Writer {
        dir: &cfg.out,
        files: Vec::new(),
    };
    let runs = match cfg.command {
        Command::Fpe | Command::Mc | Command::Compare => sweep(cfg, &mut w)?,
        Command::Zakai => vec![zakai(cfg, &mut w)?],
        Command::Signal => vec![signal(cfg, &mut w)?],
    };
    let meta = json!({
        "command": cfg.command.name(),
        "version": VERSION,
        "config": cfg.to_json(),
        "runs": runs,
        "files": w.files.iter().map(|p| p.display().to_string()).collect::<Vec<_>>(),
        "wall_clock_seconds": start.elapsed().as_secs_f64(),
    });
    let mut text = serde_json::to_string_pretty(&meta).map_err(std::io::Error::other)?;
    text.push('\n');
    let meta_path = cfg.out.join("meta.json");
    fs::File::create(&meta_path)?.write_all(text.as_bytes())?;
    let files = w.files;
    Ok(Outcome { meta, files })
}

fn sweep(cfg: &ExperimentConfig, w: &mut Writer<'_>) -> Result<Vec<Value>> {
    let mut runs = Vec::new();
    for &alpha in &cfg.alpha {
        for &lambda in &cfg.lambda {
            let setup = Setup::new(cfg, alpha, lambda, cfg.t_final)?;
            let mut run = setup.run_json();
            let mut snaps = Vec::new();

            let fd = if cfg.command == Command::Mc {
                None
            } else {
                setup.warn_if_unstable()?;
                run["stability"] = setup.stability_json()?;
                let solver = FpeSolver::new(setup.solver.clone())?;
                let p0 = setup.initial(cfg);
                run["initial_mass"] = json!(setup.mass(&p0));
                Some(solver.solve(&p0, &cfg.snapshots)?)
            };

            for (k, &t) in cfg.snapshots.iter().enumerate() {
                let mut snap = json!({"t": t});
                if let Some(fd) = &fd {
                    let kind = (cfg.command == Command::Compare).then_some("fd");
                    let file = w.path(density_name(kind, alpha, lambda, t));
                    write_density(&file, &setup, &fd[k])?;
                    snap["mass"] = json!(setup.mass(&fd[k]));
                }
                if cfg.command != Command::Fpe {
                    let mc = setup.monte_carlo(cfg, t)?;
                    let kind = (cfg.command == Command::Compare).then_some("mc");
                    let file = w.path(density_name(kind, alpha, lambda, t));
                    write_density(&file, &setup, &mc.field)?;
                    if let Some(fd) = &fd {
                        let l1 = setup.map.scale * l1_distance(&setup.grid, &fd[k], &mc.field)?;
                        snap["l1_fd_mc"] = json!(l1);
                        println!("alpha={alpha} lambda={lambda} t={t}: L1(fd, mc) = {l1:.6}");
                    }
                    snap["monte_carlo"] = mc.meta;
                }
                snaps.push(snap);
            }
            run["snapshots"] = json!(snaps);
            runs.push(run);
        }
    }
    Ok(runs)
}

fn zakai(cfg: &ExperimentConfig, w: &mut Writer<'_>) -> Result<Value> {
    let (alpha, lambda) = (cfg.alpha[0], cfg.lambda[0]);
    let recorded = match &cfg.observations {
        Some(p) => {
            let file = fs::File::open(p).map_err(|e| {
                Error::Io(std::io::Error::new(
                    e.kind(),
                    format!("cannot read observations {}: {e}", p.display()),
                ))
            })?;
            Some(ObservationPath::read_csv(file)?)
        }
        None => None,
    };

    let (setup, obs) = match recorded {
        Some(obs) => {
            let t_end = *obs.times.last().unwrap_or(&0.0);
            let mut local = cfg.clone();
            if let Some(step) = obs.step()? {
                if let Some(dt) = cfg.dt {
                    if (dt - step).abs() > 1e-9 * step {
                        return Err(Error::Config(vec![format!(
                            "dt = {dt} conflicts with the observation step {step}"
                        )]));
                    }
                }
                local.dt = Some(step);
            }
            (Setup::new(&local, alpha, lambda, t_end)?, obs)
        }
        None => {
            let setup = Setup::new(cfg, alpha, lambda, cfg.t_final)?;
            let sig = SignalObservationConfig {
                params: setup.params,
                drift: cfg.drift.clone(),
                observation: cfg.observation.clone(),
                x0: cfg.x0,
                y0: cfg.y0,
                dt: setup.solver.dt,
                t_final: cfg.t_final,
                epsilon: setup.epsilon(cfg),
                seed: cfg.seed,
                noise: NoiseSwitches::default(),
            };
            let obs = simulate_signal_observation(&sig)?;
            (setup, obs)
        }
    };
    let t0 = obs.times[0];
    let t_end = *obs.times.last().unwrap_or(&t0);
    let snapshots: Vec<f64> = if cfg.raw.get("snapshots").is_some() {
        cfg.snapshots.clone()
    } else {
        vec![t_end]
    };
    // snapshots snap to the nearest observation time
    let slack = setup.solver.dt;
    if let Some(&t) = snapshots.iter().find(|&&t| t < t0 || t > t_end + slack) {
        return Err(Error::Config(vec![format!(
            "snapshot {t} lies outside the observation window [{t0}, {t_end}]"
        )]));
    }

    setup.warn_if_unstable()?;
    let filter = ZakaiFilter::new(setup.solver.clone(), &cfg.observation, &setup.map)?;
    let p0 = setup.initial(cfg);
    let out = filter.run(&p0, &obs, &snapshots)?;

    write_path(&w.path("path.csv".into()), &obs)?;
    let mut snaps = Vec::new();
    for k in 0..out.posterior.len() {
        let t = out.unnormalized[k].time;
        let label = time_label(t);
        let mut post = out.posterior[k].clone();
        post.values.iter_mut().for_each(|v| *v /= setup.map.scale);
        write_density(&w.path(format!("density_posterior_t{label}.csv")), &setup, &post)?;
        write_density(
            &w.path(format!("density_unnormalized_t{label}.csv")),
            &setup,
            &out.unnormalized[k],
        )?;
        let n = out.step_indices[k];
        snaps.push(json!({
            "t": t,
            "step": n,
            "normalizer": setup.mass(&out.unnormalized[k]),
            "posterior_mass": setup.mass(&post),
            "truth": obs.truth.as_ref().map(|x| x[n]),
        }));
    }
    let mut run = setup.run_json();
    run["stability"] = setup.stability_json()?;
    run["observation"] = json!({
        "model": cfg.observation_label,
        "source": cfg.observations.as_ref().map_or("simulated".to_string(), |p| p.display().to_string()),
        "steps": obs.increments.len(),
        "epsilon": cfg.observations.is_none().then(|| setup.epsilon(cfg)),
    });
    run["snapshots"] = json!(snaps);
    Ok(run)
}

fn signal(cfg: &ExperimentConfig, w: &mut Writer<'_>) -> Result<Value> {
    let (alpha, lambda) = (cfg.alpha[0], cfg.lambda[0]);
    let params = match cfg.c_alpha {
        Some(c) => TemperedStableParams::new(alpha, lambda, c)?,
        None => TemperedStableParams::with_default_normalization(alpha, lambda)?,
    };
    let dt = cfg.dt.unwrap_or(cfg.mc_dt);
    let epsilon = cfg.epsilon.unwrap_or(0.01);
    let sig = SignalObservationConfig {
        params,
        drift: cfg.drift.clone(),
        observation: cfg.observation.clone(),
        x0: cfg.x0,
        y0: cfg.y0,
        dt,
        t_final: cfg.t_final,
        epsilon,
        seed: cfg.seed,
        noise: NoiseSwitches::default(),
    };
    let obs = simulate_signal_observation(&sig)?;
    write_path(&w.path("path.csv".into()), &obs)?;
    Ok(json!({
        "alpha": alpha,
        "lambda": lambda,
        "c_alpha": params.c_alpha,
        "dt": dt,
        "epsilon": epsilon,
        "steps": obs.increments.len(),
        "final": {
            "t": obs.times.last(),
            "X": obs.truth.as_ref().and_then(|x| x.last()),
            "Y": obs.observations().last(),
        },
    }))
}
