use std::f64::consts::PI;

use proptest::prelude::*;
use spdelab::grid::{Grid, NodeField};
use spdelab::noise::{certify_constants, Basis, MultiplicativeNoise, Sigma, SpectralHS, WienerSampler};

#[test]
fn increments_are_reproducible_and_order_free() {
    let s = WienerSampler::new(42, 1e-3).unwrap();
    let late = s.increment(3, 17, 4);
    let _ = s.increment(0, 0, 4);
    assert_eq!(s.increment(3, 17, 4), late);
    assert_eq!(&s.increment(3, 17, 6)[..4], &late[..]);
    assert_ne!(WienerSampler::new(43, 1e-3).unwrap().increment(3, 17, 4), late);
}

#[test]
fn increments_have_variance_dt() {
    let dt = 0.01;
    let s = WienerSampler::new(1, dt).unwrap();
    let xs: Vec<f64> = (0..20_000).map(|k| s.increment(k, 0, 1)[0]).collect();
    let m = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / m;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (m - 1.0);
    assert!(mean.abs() <= 4.0 * (dt / m).sqrt(), "mean {mean}");
    // SE of the sample variance is dt·√(2/m).
    assert!((var - dt).abs() <= 4.0 * dt * (2.0 / m).sqrt(), "var {var}");
}

#[test]
fn zero_dt_gives_zero_increments() {
    assert_eq!(WienerSampler::new(5, 0.0).unwrap().increment(0, 0, 3), vec![0.0; 3]);
    assert!(WienerSampler::new(5, -1.0).is_err());
}

#[test]
fn dirichlet_basis_matches_sine_modes() {
    let g = Grid::dirichlet_1d(31).unwrap();
    let b = Basis::for_grid(&g, 5).unwrap();
    let h = g.h();
    for m in 0..5 {
        let k = (m + 1) as f64;
        let mu = 4.0 / (h * h) * (k * PI * h / 2.0).sin().powi(2);
        assert!((b.eigenvalues()[m] - mu).abs() <= 1e-10 * mu);
        for (i, v) in b.field(m).iter().enumerate() {
            assert!((v - 2f64.sqrt() * (k * PI * g.coord(i)).sin()).abs() < 1e-12);
        }
    }
}

#[test]
fn basis_is_orthonormal() {
    for g in [Grid::dirichlet_1d(15).unwrap(), Grid::periodic_1d(16).unwrap(), Grid::dirichlet_2d(6).unwrap(), Grid::periodic_2d(6).unwrap()] {
        let b = Basis::for_grid(&g, 8).unwrap();
        for i in 0..8 {
            for j in 0..8 {
                let dot: f64 = g.weight() * b.field(i).iter().zip(b.field(j)).map(|(x, y)| x * y).sum::<f64>();
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((dot - want).abs() < 1e-12, "{g:?} ({i},{j}) = {dot}");
            }
        }
    }
}

#[test]
fn smoothing_scales_each_mode() {
    let g = Grid::dirichlet_1d(15).unwrap();
    let b = SpectralHS::new(g, vec![1.0, 0.5, 0.25]).unwrap();
    let s = b.smooth(0.01, 2).unwrap();
    for (m, (c, mu)) in s.coeffs().iter().zip(b.eigenvalues()).enumerate() {
        assert!((c - b.coeffs()[m] / (1.0 + 0.01 * mu).powi(2)).abs() < 1e-15);
    }
    let want = s.coeffs().iter().zip(b.coeffs()).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    assert!((b.hs_distance(&s).unwrap() - want).abs() < 1e-15);
    assert_eq!(b.smooth(0.0, 3).unwrap().coeffs(), b.coeffs());
}

proptest! {
    #[test]
    fn multiplicative_noise_respects_its_lipschitz_constant(
        u in prop::collection::vec(-3.0..3.0f64, 15),
        v in prop::collection::vec(-3.0..3.0f64, 15),
    ) {
        let g = Grid::dirichlet_1d(15).unwrap();
        for sigma in [Sigma::clip(1.0), Sigma::sine(0.5), Sigma::tanh(2.0)] {
            let m = MultiplicativeNoise::new(SpectralHS::new(g, vec![0.5, 0.2]).unwrap(), sigma);
            let (x, y) = (NodeField::from_values(g, u.clone()).unwrap(), NodeField::from_values(g, v.clone()).unwrap());
            let d = m.hs_distance(&x, &y).unwrap();
            prop_assert!(d <= m.lipschitz_constant() * x.sub(&y).norm_sq().sqrt() * (1.0 + 1e-12) + 1e-15);
        }
    }
}

#[test]
fn certified_constants_stay_below_declared_ones() {
    let g = Grid::dirichlet_1d(31).unwrap();
    let m = MultiplicativeNoise::new(SpectralHS::new(g, vec![0.5, 0.2]).unwrap(), Sigma::clip(1.0));
    let rep = certify_constants(&m, 200, 9).unwrap();
    assert!(rep.empirical_l <= rep.declared_l * (1.0 + 1e-12));
    assert!(rep.empirical_r <= rep.declared_r * (1.0 + 1e-12));
}
