use std::f64::consts::PI;

use spdelab::diagnostics::{apriori_report, ito_residual_expectation, smoothed_ito_check, MeanEstimate};
use spdelab::grid::{Grid, NodeField};
use spdelab::monotone::{ScalarGraph, VectorGraph};
use spdelab::noise::SpectralHS;
use spdelab::solver::{run_path, run_paths, NoiseModel, Recording, SolverConfig};

fn config(noise_amp: f64) -> SolverConfig {
    let g = Grid::dirichlet_1d(15).unwrap();
    let x0 = NodeField::from_fn(g, |x, _| (PI * x).sin());
    let noise = if noise_amp == 0.0 { SpectralHS::zero(g) } else { SpectralHS::power_law(g, 3, noise_amp, 1.0).unwrap() };
    let mut cfg = SolverConfig::new(VectorGraph::p_power(1, 3.0).unwrap(), ScalarGraph::sign(), NoiseModel::Additive(noise), x0);
    cfg.t_final = 0.02;
    cfg
}

#[test]
fn zero_solution_has_an_empty_ledger() {
    let mut cfg = config(0.0);
    cfg.x0 = NodeField::zeros(cfg.grid);
    let rec = run_path(&cfg, 0).unwrap();
    for row in rec.ledger.rows() {
        let r = row.to_record();
        // Everything but time and dt vanishes.
        assert!(r[2..].iter().all(|v| *v == 0.0), "{r:?}");
    }
    let est = apriori_report(&rec).unwrap();
    assert_eq!(est.sup_l2, 0.0);
}

#[test]
fn pathwise_ledger_closes_to_second_order() {
    // The residual is O(dt²) per step, so it should drop ~4x per halving at fixed T.
    let mut res = Vec::new();
    for dt in [1e-3, 5e-4] {
        let mut cfg = config(0.0);
        cfg.dt = dt;
        res.push(run_path(&cfg, 0).unwrap().ledger.pathwise_residual().abs());
    }
    assert!(res[1] < res[0] / 1.5, "{res:?}");
}

#[test]
fn smoothed_check_at_zero_delta_reproduces_the_raw_ledger() {
    let mut cfg = config(0.5);
    cfg.recording = Recording::full();
    let rec = run_path(&cfg, 0).unwrap();
    let chk = smoothed_ito_check(&rec, 0.0, 2).unwrap();
    assert_eq!(chk.energy_residual.to_bits(), chk.raw_energy_residual.to_bits());
    assert!(smoothed_ito_check(&rec, 1e-3, 2).unwrap().energy_residual.is_finite());
}

#[test]
fn smoothed_check_needs_full_records() {
    let cfg = config(0.5);
    let rec = run_path(&cfg, 0).unwrap();
    assert!(smoothed_ito_check(&rec, 1e-3, 2).is_err());
}

#[test]
fn expectation_residual_is_small() {
    let mut cfg = config(0.5);
    cfg.paths = 200;
    cfg.lambda = 0.1;
    cfg.recording = Recording::terminal();
    let recs = run_paths(&cfg).unwrap();
    let rep = ito_residual_expectation(recs.iter().map(|r| &r.ledger)).unwrap();
    assert!(rep.residual.within(3.0, 40.0 * cfg.dt), "{rep:?}");
    assert!(rep.martingale.within(3.0, 0.0), "{rep:?}");
}

#[test]
fn mean_estimate_matches_textbook_formula() {
    let est = MeanEstimate::from_samples(&[1.0, 2.0, 3.0, 4.0]).unwrap();
    assert_eq!(est.mean, 2.5);
    assert!((est.standard_error - (5.0f64 / 12.0).sqrt()).abs() < 1e-15);
    assert!(MeanEstimate::from_samples(&[1.0]).is_err());
}
