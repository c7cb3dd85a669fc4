use proptest::prelude::*;
use spdelab::monotone::{leray_lions_check, LerayLionsParams, ScalarGraph, VectorGraph};

fn graphs() -> Vec<ScalarGraph> {
    vec![
        ScalarGraph::zero(),
        ScalarGraph::identity(),
        ScalarGraph::sign(),
        ScalarGraph::linear(2.0).unwrap(),
        ScalarGraph::power(3.0).unwrap(),
        ScalarGraph::power(1.5).unwrap(),
        ScalarGraph::polynomial_odd(vec![1.0, 0.0, 1.0]).unwrap(),
        ScalarGraph::relay(1.0).unwrap(),
    ]
}

proptest! {
    #[test]
    fn resolvent_is_nonexpansive(x in -4.0..4.0f64, y in -4.0..4.0f64, d in 0.01..1.0f64) {
        for g in graphs() {
            let (jx, jy) = (g.resolvent(d, x).unwrap(), g.resolvent(d, y).unwrap());
            prop_assert!((jx - jy).abs() <= (x - y).abs() * (1.0 + 1e-12) + 1e-14, "{}", g.name());
        }
    }

    #[test]
    fn resolvent_lands_in_the_inclusion(x in -4.0..4.0f64, d in 0.01..1.0f64) {
        // x − J x ∈ δ β(J x)
        for g in graphs() {
            let j = g.resolvent(d, x).unwrap();
            let v = g.value(j);
            let r = (x - j) / d;
            prop_assert!(r >= v.lo - 1e-9 * (1.0 + r.abs()) && r <= v.hi + 1e-9 * (1.0 + r.abs()), "{}: {r} not in {v:?}", g.name());
        }
    }

    #[test]
    fn yosida_is_lipschitz_and_monotone(x in -4.0..4.0f64, y in -4.0..4.0f64, d in 0.01..1.0f64) {
        for g in graphs() {
            let (bx, by) = (g.yosida(d, x).unwrap(), g.yosida(d, y).unwrap());
            prop_assert!((bx - by) * (x - y) >= -1e-12);
            prop_assert!((bx - by).abs() <= (x - y).abs() / d * (1.0 + 1e-9) + 1e-12, "{}", g.name());
        }
    }

    #[test]
    fn fenchel_young_inequality(y in -3.0..3.0f64, r in -3.0..3.0f64) {
        for g in graphs() {
            let p = g.potential();
            prop_assert!(p.eval(y) + p.conjugate(r) - r * y >= -1e-9, "{}", g.name());
        }
    }

    #[test]
    fn vector_resolvent_is_nonexpansive(a in prop::array::uniform2(-3.0..3.0f64), b in prop::array::uniform2(-3.0..3.0f64), d in 0.01..1.0f64) {
        for g in [VectorGraph::identity(2).unwrap(), VectorGraph::p_power(2, 3.0).unwrap(), VectorGraph::p_power(2, 1.5).unwrap()] {
            let (ja, jb) = (g.resolvent(d, &a).unwrap(), g.resolvent(d, &b).unwrap());
            let dist = |u: &[f64], v: &[f64]| u.iter().zip(v).map(|(s, t)| (s - t).powi(2)).sum::<f64>().sqrt();
            prop_assert!(dist(&ja, &jb) <= dist(&a, &b) * (1.0 + 1e-10) + 1e-14);
        }
    }
}

#[test]
fn fenchel_equality_on_the_graph() {
    for g in graphs() {
        for y in [-2.0, -0.5, 0.3, 1.7] {
            let r = g.selection(y);
            let p = g.potential();
            assert!((p.eval(y) + p.conjugate(r) - r * y).abs() <= 1e-8, "{} at {y}", g.name());
        }
    }
}

#[test]
fn closed_form_resolvents() {
    let id = ScalarGraph::identity();
    let sign = ScalarGraph::sign();
    for (x, d) in [(1.0, 0.5), (-0.2, 0.3), (0.2, 0.3)] {
        assert!((id.resolvent(d, x).unwrap() - x / (1.0 + d)).abs() < 1e-15);
        let soft = x.signum() * (x.abs() - d).max(0.0);
        assert!((sign.resolvent(d, x).unwrap() - soft).abs() < 1e-14);
    }
}

#[test]
fn leray_lions_declarations() {
    let ll3 = LerayLionsParams::new(3.0, 1.0, 1.0, 0.0).unwrap();
    assert!(leray_lions_check(&VectorGraph::p_power(2, 3.0).unwrap(), &ll3, 2000, 10.0).pass);
    let ll2 = LerayLionsParams::new(2.0, 1.0, 1.0, 0.0).unwrap();
    let rep = leray_lions_check(&VectorGraph::radial_exp(2, ll2).unwrap(), &ll2, 2000, 3.0);
    assert!(!rep.pass);
    assert!(rep.witness.is_some());
}

#[test]
fn bad_parameters_are_rejected() {
    assert!(ScalarGraph::power(0.5).is_err());
    assert!(ScalarGraph::linear(-1.0).is_err());
    assert!(LerayLionsParams::new(0.5, 1.0, 1.0, 0.0).is_err());
    assert!(ScalarGraph::identity().resolvent(-1.0, 0.0).is_err());
}
