use std::f64::consts::PI;

use spdelab::grid::{Grid, NodeField};
use spdelab::monotone::{ScalarGraph, VectorGraph};
use spdelab::noise::{MultiplicativeNoise, Sigma, SpectralHS};
use spdelab::solver::{
    apply_a_lambda, continuous_dependence_experiment, run_multiplicative_picard, run_path, run_paths, NoiseModel,
    PicardConfig, SolverConfig, TimeScheme,
};

fn p3_config(g: Grid, noise: NoiseModel) -> SolverConfig {
    let x0 = NodeField::from_fn(g, |x, _| (PI * x).sin());
    let mut cfg = SolverConfig::new(VectorGraph::p_power(1, 3.0).unwrap(), ScalarGraph::sign(), noise, x0);
    cfg.t_final = 0.02;
    cfg.paths = 4;
    cfg.seed = 3;
    cfg
}

#[test]
fn zero_is_a_fixed_point() {
    let g = Grid::dirichlet_1d(15).unwrap();
    for scheme in [TimeScheme::Splitting, TimeScheme::Implicit] {
        let mut cfg = p3_config(g, NoiseModel::Additive(SpectralHS::zero(g)));
        cfg.x0 = NodeField::zeros(g);
        cfg.scheme = scheme;
        let rec = run_path(&cfg, 0).unwrap();
        assert!(rec.states.iter().all(|s| s.values().iter().all(|v| *v == 0.0)));
        assert_eq!(rec.ledger.pathwise_residual(), 0.0);
    }
}

#[test]
fn runs_are_deterministic_per_seed() {
    let g = Grid::dirichlet_1d(15).unwrap();
    let cfg = p3_config(g, NoiseModel::Additive(SpectralHS::power_law(g, 3, 0.5, 1.0).unwrap()));
    let a = run_paths(&cfg).unwrap();
    let b = run_paths(&cfg).unwrap();
    for (x, y) in a.iter().zip(&b) {
        assert_eq!(x.terminal, y.terminal);
    }
    let mut other = cfg.clone();
    other.seed = 4;
    assert_ne!(run_paths(&other).unwrap()[0].terminal, a[0].terminal);
}

#[test]
fn deterministic_decay_is_monotone() {
    let g = Grid::dirichlet_1d(31).unwrap();
    let cfg = p3_config(g, NoiseModel::Additive(SpectralHS::zero(g)));
    let rec = run_path(&cfg, 0).unwrap();
    let norms: Vec<f64> = rec.states.iter().map(|s| s.norm_sq()).collect();
    assert!(norms.windows(2).all(|w| w[1] <= w[0]));
}

#[test]
fn a_lambda_is_monotone() {
    let g = Grid::periodic_1d(16).unwrap();
    let u = NodeField::from_fn(g, |x, _| (2.0 * PI * x).sin());
    let v = NodeField::from_fn(g, |x, _| 0.3 * (4.0 * PI * x).cos() + 0.1);
    let (gamma, beta) = (VectorGraph::p_power(1, 3.0).unwrap(), ScalarGraph::sign());
    let au = apply_a_lambda(&gamma, &beta, 0.05, &u).unwrap();
    let av = apply_a_lambda(&gamma, &beta, 0.05, &v).unwrap();
    assert!(au.sub(&av).dot(&u.sub(&v)) >= 0.0);
}

#[test]
fn identical_inputs_are_at_distance_zero() {
    let g = Grid::dirichlet_1d(15).unwrap();
    let cfg = p3_config(g, NoiseModel::Additive(SpectralHS::power_law(g, 2, 0.5, 1.0).unwrap()));
    let rep = continuous_dependence_experiment(&cfg, &cfg).unwrap();
    assert_eq!(rep.distance, 0.0);
    assert_eq!(rep.ratio, None);
}

#[test]
fn picard_with_constant_sigma_needs_one_effective_iteration() {
    let g = Grid::dirichlet_1d(15).unwrap();
    let m = MultiplicativeNoise::new(SpectralHS::new(g, vec![0.5, 0.2]).unwrap(), Sigma::constant(1.0));
    let mut cfg = p3_config(g, NoiseModel::Multiplicative(m));
    cfg.dt = 1e-2;
    cfg.t_final = 0.5;
    cfg.paths = 2;
    let (_, rep) = run_multiplicative_picard(&cfg, &PicardConfig { tau: Some(0.1), ..PicardConfig::default() }).unwrap();
    assert!(rep.intervals.iter().all(|i| i.effective_iterations <= 1));
}

#[test]
fn picard_contracts_for_lipschitz_noise() {
    let g = Grid::dirichlet_1d(15).unwrap();
    let m = MultiplicativeNoise::new(SpectralHS::new(g, vec![0.5, 0.2]).unwrap(), Sigma::clip(1.0));
    let lb = m.lipschitz_constant();
    let mut cfg = p3_config(g, NoiseModel::Multiplicative(m));
    cfg.dt = 1e-2;
    cfg.t_final = 1.0;
    cfg.paths = 2;
    let (_, rep) = run_multiplicative_picard(&cfg, &PicardConfig::default()).unwrap();
    assert!(rep.schedule.tau * lb <= 0.5 + 1e-12);
    assert!(rep.max_factor() < 1.0 / 2f64.sqrt());
    assert!(rep.max_iterations() <= 50);
}

#[test]
fn invalid_configs_are_rejected() {
    let g = Grid::dirichlet_1d(15).unwrap();
    let mut cfg = p3_config(g, NoiseModel::Additive(SpectralHS::zero(g)));
    cfg.lambda = 0.0;
    assert!(cfg.validate().is_err());
    cfg.lambda = 0.01;
    cfg.dt = 0.03;
    assert!(cfg.validate().is_err());
}
