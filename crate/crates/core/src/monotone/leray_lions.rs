use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::vector::{norm, VectorGraph};
use crate::{Error, Result};

/// Growth/coercivity constants: `|y| ≤ D₁(1 + |r|^{p−1})` and
/// `y·r ≥ K|r|^p − D₂` for every `y ∈ γ(r)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LerayLionsParams {
    pub p: f64,
    pub q: f64,
    pub k: f64,
    pub d1: f64,
    pub d2: f64,
}

impl Default for LerayLionsParams {
    fn default() -> Self {
        LerayLionsParams { p: 2.0, q: 2.0, k: 1.0, d1: 1.0, d2: 0.0 }
    }
}

impl LerayLionsParams {
    pub fn new(p: f64, k: f64, d1: f64, d2: f64) -> Result<Self> {
        if !(p >= 2.0) || !p.is_finite() {
            return Err(Error::invalid("leray_lions.p", format!("need p ≥ 2, got {p}")));
        }
        if !(k > 0.0) {
            return Err(Error::invalid("leray_lions.k", format!("need K > 0, got {k}")));
        }
        if !(d1 > 0.0) {
            return Err(Error::invalid("leray_lions.d1", format!("need D1 > 0, got {d1}")));
        }
        if !(d2 >= 0.0) {
            return Err(Error::invalid("leray_lions.d2", format!("need D2 ≥ 0, got {d2}")));
        }
        Ok(LerayLionsParams { p, q: p / (p - 1.0), k, d1, d2 })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LerayLionsReport {
    pub pass: bool,
    /// First sample point at which a condition failed.
    pub witness: Option<Vec<f64>>,
    pub samples: usize,
    /// max over samples of |y| / (D₁(1 + |r|^{p−1})).
    pub worst_growth_ratio: f64,
    /// min over samples of y·r − (K|r|^p − D₂).
    pub worst_coercivity_margin: f64,
}

const RELATIVE_SLACK: f64 = 1e-12;
const SAMPLER_SEED: u64 = 0x4c4c_5f63_6865_636b;

/// Samples `sample_count` points uniformly in the ball of the given radius,
/// plus axis points at several radii and the origin, and checks both
/// Leray–Lions inequalities at every extreme element of γ(r).
pub fn leray_lions_check(
    graph: &VectorGraph,
    params: &LerayLionsParams,
    sample_count: usize,
    radius: f64,
) -> LerayLionsReport {
    let d = graph.dim();
    let mut points: Vec<Vec<f64>> = vec![vec![0.0; d]];
    for frac in [1e-3, 0.1, 0.5, 1.0] {
        for axis in 0..d {
            for sgn in [1.0, -1.0] {
                let mut e = vec![0.0; d];
                e[axis] = sgn * frac * radius;
                points.push(e);
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(SAMPLER_SEED);
    for _ in 0..sample_count.max(1) {
        // Rejection sampling in the cube keeps the ball uniform.
        loop {
            let r: Vec<f64> = (0..d).map(|_| rng.random_range(-radius..=radius)).collect();
            if norm(&r) <= radius {
                points.push(r);
                break;
            }
        }
    }

    let mut report = LerayLionsReport {
        pass: true,
        witness: None,
        samples: points.len(),
        worst_growth_ratio: 0.0,
        worst_coercivity_margin: f64::INFINITY,
    };
    for r in &points {
        let nr = norm(r);
        let growth_bound = params.d1 * (1.0 + nr.powf(params.p - 1.0));
        let coercive_floor = params.k * nr.powf(params.p) - params.d2;
        let elems = match graph.extreme_elements(r) {
            Ok(e) => e,
            Err(_) => {
                report.pass = false;
                report.witness.get_or_insert_with(|| r.clone());
                continue;
            }
        };
        for y in elems {
            let ny = norm(&y);
            let dot: f64 = y.iter().zip(r).map(|(a, b)| a * b).sum();
            report.worst_growth_ratio = report.worst_growth_ratio.max(ny / growth_bound);
            let margin = dot - coercive_floor;
            report.worst_coercivity_margin = report.worst_coercivity_margin.min(margin);
            let scale = 1.0 + dot.abs() + coercive_floor.abs();
            let ok = ny <= growth_bound * (1.0 + RELATIVE_SLACK) && margin >= -RELATIVE_SLACK * scale;
            if !ok {
                report.pass = false;
                report.witness.get_or_insert_with(|| r.clone());
            }
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn p_power_passes() {
        let g = VectorGraph::p_power(2, 3.0).unwrap();
        let ll = LerayLionsParams::new(3.0, 1.0, 1.0, 0.0).unwrap();
        let rep = leray_lions_check(&g, &ll, 10_000, 10.0);
        assert!(rep.pass, "{rep:?}");
        assert!(rep.worst_growth_ratio <= 1.0);
    }

    #[test]
    fn identity_passes_at_p2() {
        let g = VectorGraph::identity(1).unwrap();
        let rep = leray_lions_check(&g, g.leray_lions(), 1000, 5.0);
        assert!(rep.pass);
    }

    #[test]
    fn exponential_fails_with_witness() {
        let ll = LerayLionsParams::new(2.0, 1.0, 1.0, 0.0).unwrap();
        let g = VectorGraph::radial_exp(2, ll).unwrap();
        let rep = leray_lions_check(&g, &ll, 10_000, 3.0);
        assert!(!rep.pass);
        let w = rep.witness.unwrap();
        let r = norm(&w);
        assert!(r.exp() - 1.0 > 1.0 + r, "witness {w:?} does not violate growth");
    }

    #[test]
    fn conjugate_exponent() {
        let ll = LerayLionsParams::new(3.0, 1.0, 1.0, 0.0).unwrap();
        assert!((1.0 / ll.p + 1.0 / ll.q - 1.0).abs() < 1e-15);
        assert!(LerayLionsParams::new(1.5, 1.0, 1.0, 0.0).is_err());
    }
}
