use std::f64::consts::PI;

use proptest::prelude::*;
use spdelab::grid::{commutation_residual, divergence, gradient, laplacian, EdgeField, EllipticSmoother, Grid, NodeField};

fn grids() -> Vec<Grid> {
    vec![
        Grid::dirichlet_1d(15).unwrap(),
        Grid::periodic_1d(16).unwrap(),
        Grid::dirichlet_2d(7).unwrap(),
        Grid::periodic_2d(8).unwrap(),
    ]
}

fn node_field(g: Grid, vals: &[f64]) -> NodeField {
    NodeField::from_values(g, vals.iter().cycle().take(g.node_count()).copied().collect()).unwrap()
}

fn edge_field(g: Grid, vals: &[f64]) -> EdgeField {
    EdgeField::from_values(g, vals.iter().cycle().take(g.edge_len()).copied().collect()).unwrap()
}

proptest! {
    #[test]
    fn divergence_is_minus_the_adjoint_of_gradient(
        u in prop::collection::vec(-1.0..1.0f64, 1..40),
        v in prop::collection::vec(-1.0..1.0f64, 1..40),
    ) {
        for g in grids() {
            let (u, v) = (node_field(g, &u), edge_field(g, &v));
            let lhs = gradient(&u).dot(&v);
            let rhs = -u.dot(&divergence(&v));
            prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + lhs.abs()), "{lhs} vs {rhs}");
        }
    }

    #[test]
    fn smoother_contracts_the_l2_norm(u in prop::collection::vec(-1.0..1.0f64, 1..40), delta in 0.0..0.1f64) {
        for g in grids() {
            let u = node_field(g, &u);
            let s = EllipticSmoother::new(g, delta, 2).unwrap();
            prop_assert!(s.apply(&u).unwrap().norm_sq() <= u.norm_sq() * (1.0 + 1e-12));
        }
    }
}

#[test]
fn laplacian_of_a_sine_mode() {
    // −Δ_h sin(mπx) = (4/h²) sin²(mπh/2) sin(mπx) on Dirichlet nodes.
    let g = Grid::dirichlet_1d(31).unwrap();
    let h = g.h();
    for m in 1..4 {
        let u = NodeField::from_fn(g, |x, _| (m as f64 * PI * x).sin());
        let mu = 4.0 / (h * h) * (m as f64 * PI * h / 2.0).sin().powi(2);
        let lap = laplacian(&u);
        let err = lap.add(&u.scaled(mu)).norm_sq().sqrt();
        assert!(err <= 1e-10 * mu, "mode {m}: {err}");
    }
}

#[test]
fn smoother_inverts_the_helmholtz_operator() {
    for g in grids() {
        let u = NodeField::from_fn(g, |x, y| (3.0 * x).sin() + x * y);
        let s = EllipticSmoother::new(g, 0.05, 1).unwrap();
        let w = s.apply(&u).unwrap();
        let back = w.sub(&laplacian(&w).scaled(0.05));
        assert!(back.sub(&u).norm_sq().sqrt() <= 1e-10, "{g:?}");
    }
}

#[test]
fn smoother_commutes_with_divergence_on_periodic_grids() {
    for g in [Grid::periodic_1d(16).unwrap(), Grid::periodic_2d(8).unwrap()] {
        let u = NodeField::from_fn(g, |x, y| (2.0 * PI * x).cos() * (1.0 + y));
        let v = gradient(&u.map(|t| t * t));
        let s = EllipticSmoother::new(g, 0.02, 2).unwrap();
        let (a, b) = commutation_residual(&s, &v, &u).unwrap();
        assert!(a <= 1e-12 && b <= 1e-12, "{a} {b}");
    }
}

#[test]
fn zero_delta_is_the_identity() {
    let g = Grid::dirichlet_2d(5).unwrap();
    let u = NodeField::from_fn(g, |x, y| x - y * y);
    assert_eq!(EllipticSmoother::new(g, 0.0, 3).unwrap().apply(&u).unwrap(), u);
}

#[test]
fn invalid_grids_are_rejected() {
    assert!(Grid::dirichlet_1d(0).is_err());
    assert!(EllipticSmoother::new(Grid::dirichlet_1d(4).unwrap(), -1.0, 1).is_err());
    assert!(EllipticSmoother::new(Grid::dirichlet_1d(4).unwrap(), 0.1, 0).is_err());
}
