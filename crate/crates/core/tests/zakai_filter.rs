use proptest::prelude::*;
use tempered_fpe::zakai::NoiseSwitches;
use tempered_fpe::{
    max_stable_dt, run_filter, simulate_signal_observation, solve, total_mass, zakai_step,
    DensityField, DomainMap, DriftSpec, Grid1D, ObservationModel, ObservationPath,
    SignalObservationConfig, SolverConfig, TemperedStableParams, ZakaiFilter,
};

fn scenario(dt: f64, seed: u64) -> SignalObservationConfig {
    SignalObservationConfig {
        params: TemperedStableParams::with_default_normalization(1.5, 0.01).unwrap(),
        drift: DriftSpec::bistable(),
        observation: ObservationModel::Cosine,
        x0: -1.0,
        y0: -1.0,
        dt,
        t_final: 1.0,
        epsilon: 0.01,
        seed,
        noise: NoiseSwitches::default(),
    }
}

fn filter_config() -> SolverConfig {
    let params = TemperedStableParams::with_default_normalization(1.5, 0.01).unwrap();
    let grid = Grid1D::truncated(100, 4.0).unwrap();
    SolverConfig::with_auto_dt(params, grid, DriftSpec::bistable(), 1.0, 0.9).unwrap()
}

#[test]
fn silent_observation_without_noise_is_constant() {
    let mut cfg = scenario(1e-3, 1);
    cfg.observation = ObservationModel::Polynomial(vec![0.0]);
    cfg.noise.observation = false;
    let path = simulate_signal_observation(&cfg).unwrap();
    assert!(path.increments.iter().all(|&d| d == 0.0));
    assert!(path.observations().iter().all(|&y| y == -1.0));
    assert_eq!(path.times.len(), 1001);
}

#[test]
fn signal_paths_are_deterministic() {
    let a = simulate_signal_observation(&scenario(1e-3, 9)).unwrap();
    let b = simulate_signal_observation(&scenario(1e-3, 9)).unwrap();
    let c = simulate_signal_observation(&scenario(1e-3, 10)).unwrap();
    assert_eq!(a, b);
    assert_ne!(a.increments, c.increments);
}

#[test]
fn observation_csv_round_trips() {
    let path = simulate_signal_observation(&scenario(1e-2, 4)).unwrap();
    let mut buf = Vec::new();
    path.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf.clone()).unwrap();
    assert!(text.starts_with("t,dY,X_truth\n"));
    let back = ObservationPath::read_csv(&buf[..]).unwrap();
    assert_eq!(back.times, path.times);
    assert_eq!(back.increments, path.increments);
    assert_eq!(back.truth, path.truth);
}

#[test]
fn malformed_observation_csv_is_rejected() {
    assert!(ObservationPath::read_csv("t,dY\n0,\n0.1,abc\n".as_bytes()).is_err());
    assert!(ObservationPath::read_csv("t,dY\n0,\n0,0.1\n".as_bytes()).is_err());
    assert!(ObservationPath::read_csv("time,dY\n0,\n".as_bytes()).is_err());
}

#[test]
fn silent_filter_reproduces_solve_exactly() {
    let cfg = filter_config();
    let mut sig = scenario(cfg.dt, 3);
    sig.t_final = 0.5;
    let path = simulate_signal_observation(&sig).unwrap();
    let p0 = DensityField::gaussian(&cfg.grid, &DomainMap::IDENTITY, 40.0, 0.0);
    let silent = ObservationModel::Polynomial(vec![0.0]);
    let out = run_filter(&cfg, &silent, &p0, &path).unwrap();
    let t_end = *path.times.last().unwrap();
    let reference = solve(&cfg, &p0, &[t_end]).unwrap();
    assert_eq!(out.unnormalized.last().unwrap().values, reference[0].values);
}

#[test]
fn empty_path_returns_initial_field() {
    let cfg = filter_config();
    let p0 = DensityField::gaussian(&cfg.grid, &DomainMap::IDENTITY, 40.0, 0.0);
    let path = ObservationPath {
        times: vec![0.0],
        increments: vec![],
        truth: None,
        y0: 0.0,
    };
    let out = run_filter(&cfg, &ObservationModel::Cosine, &p0, &path).unwrap();
    assert_eq!(out.unnormalized.len(), 1);
    assert_eq!(out.unnormalized[0].values, p0.values);
    let m = total_mass(&cfg.grid, &p0);
    assert_eq!(out.normalizers, vec![m]);
    assert!((total_mass(&cfg.grid, &out.posterior[0]) - 1.0).abs() < 1e-12);
}

#[test]
fn paper_scenario_posterior_is_a_density() {
    let cfg = filter_config();
    let path = simulate_signal_observation(&scenario(cfg.dt, 2024)).unwrap();
    let p0 = DensityField::gaussian(&cfg.grid, &DomainMap::IDENTITY, 40.0, 0.0);
    let filter = ZakaiFilter::new(cfg.clone(), &ObservationModel::Cosine, &DomainMap::IDENTITY).unwrap();
    let out = filter.run(&p0, &path, &[0.0, 0.25, 0.5, 0.75, 1.0]).unwrap();
    assert_eq!(out.posterior.len(), 5);
    for post in &out.posterior {
        assert!(post.values.iter().all(|v| v.is_finite() && *v >= 0.0));
        assert!((total_mass(&cfg.grid, post) - 1.0).abs() < 1e-10);
    }
}

#[test]
fn mismatched_observation_step_is_rejected() {
    let cfg = filter_config();
    let path = simulate_signal_observation(&scenario(cfg.dt * 2.0, 1)).unwrap();
    let p0 = DensityField::gaussian(&cfg.grid, &DomainMap::IDENTITY, 40.0, 0.0);
    assert!(run_filter(&cfg, &ObservationModel::Cosine, &p0, &path).is_err());
}

#[test]
fn vanishing_mass_reports_degenerate_mass() {
    let cfg = filter_config();
    let p0 = DensityField::gaussian(&cfg.grid, &DomainMap::IDENTITY, 40.0, 0.0);
    let n = 20;
    let path = ObservationPath {
        times: (0..=n).map(|k| k as f64 * cfg.dt).collect(),
        increments: vec![-1e4; n],
        truth: None,
        y0: 0.0,
    };
    let err = run_filter(&cfg, &ObservationModel::Polynomial(vec![1.0]), &p0, &path).unwrap_err();
    assert_eq!(err.class(), "degenerate-mass");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn zakai_steps_keep_positivity(
        alpha in prop_oneof![0.2..0.95_f64, 1.05..1.9_f64],
        lambda in 0.01..1.0_f64,
        values in prop::collection::vec(0.0..1.0_f64, 81),
        dys in prop::collection::vec(-0.5..0.5_f64, 10),
    ) {
        let params = TemperedStableParams::with_default_normalization(alpha, lambda).unwrap();
        let grid = Grid1D::truncated(40, 4.0).unwrap();
        let dt = max_stable_dt(&params, grid.h()).unwrap();
        let cfg = SolverConfig { params, grid, drift: DriftSpec::Zero, dt, t_final: 1.0, safety_factor: 1.0 };
        let mut f = DensityField { values, time: 0.0 };
        for dy in dys {
            f = zakai_step(&cfg, &ObservationModel::Cosine, &f, dy).unwrap();
            prop_assert!(f.min() >= 0.0);
        }
    }

    #[test]
    fn correction_factors_compose(
        c in -3.0..3.0_f64,
        dy1 in -1.0..1.0_f64,
        dy2 in -1.0..1.0_f64,
        values in prop::collection::vec(0.0..1.0_f64, 201),
    ) {
        let cfg = filter_config();
        let obs = ObservationModel::Polynomial(vec![c, 0.3]);
        let filter = ZakaiFilter::new(cfg.clone(), &obs, &DomainMap::IDENTITY).unwrap();
        let base = DensityField { values: values.clone(), time: 0.0 };
        let dt = cfg.dt;
        let mut twice = base.clone();
        filter.correct(&mut twice, dy1, dt);
        filter.correct(&mut twice, dy2, dt);
        let mut once = base;
        filter.correct(&mut once, dy1 + dy2, 2.0 * dt);
        for (a, b) in twice.values.iter().zip(&once.values) {
            prop_assert!((a - b).abs() <= 1e-13 * a.abs().max(b.abs()));
        }
    }

    #[test]
    fn identity_correction_for_constant_observation(
        c in -3.0..3.0_f64,
        values in prop::collection::vec(0.0..1.0_f64, 201),
    ) {
        let cfg = filter_config();
        let filter = ZakaiFilter::new(cfg.clone(), &ObservationModel::Polynomial(vec![c]), &DomainMap::IDENTITY).unwrap();
        let mut f = DensityField { values: values.clone(), time: 0.0 };
        filter.correct(&mut f, 0.5 * c * cfg.dt, cfg.dt);
        prop_assert_eq!(f.values, values);
    }
}
