use super::field::{euclid, EdgeField, NodeField, Norm};
use crate::{Error, Result};

/// Forward differences on edge cells; Dirichlet ghosts are zero.
pub fn gradient(u: &NodeField) -> EdgeField {
    let g = *u.grid();
    let m = g.cells_per_axis() as isize;
    let inv_h = 1.0 / g.h();
    let v = u.values();
    let at = |i: isize, j: isize| g.node_index(i, j).map_or(0.0, |k| v[k]);
    let mut out = EdgeField::zeros(g);
    let o = out.values_mut();
    match g.dim() {
        1 => {
            for k in 0..m {
                o[k as usize] = (at(k, 0) - at(k - 1, 0)) * inv_h;
            }
        }
        _ => {
            for l in 0..m {
                for k in 0..m {
                    let c = (k + m * l) as usize;
                    let corner = at(k - 1, l - 1);
                    o[2 * c] = (at(k, l - 1) - corner) * inv_h;
                    o[2 * c + 1] = (at(k - 1, l) - corner) * inv_h;
                }
            }
        }
    }
    out
}

/// `div = −∇ᵀ` in the weighted inner products.
pub fn divergence(v: &EdgeField) -> NodeField {
    let g = *v.grid();
    let m = g.cells_per_axis() as isize;
    let inv_h = 1.0 / g.h();
    let w = v.values();
    let mut out = NodeField::zeros(g);
    let o = out.values_mut();
    let mut scatter = |i: isize, j: isize, val: f64| {
        if let Some(k) = g.node_index(i, j) {
            o[k] += val;
        }
    };
    match g.dim() {
        1 => {
            for k in 0..m {
                let val = w[k as usize] * inv_h;
                scatter(k, 0, -val);
                scatter(k - 1, 0, val);
            }
        }
        _ => {
            for l in 0..m {
                for k in 0..m {
                    let c = (k + m * l) as usize;
                    let vx = w[2 * c] * inv_h;
                    let vy = w[2 * c + 1] * inv_h;
                    scatter(k, l - 1, -vx);
                    scatter(k - 1, l, -vy);
                    scatter(k - 1, l - 1, vx + vy);
                }
            }
        }
    }
    out
}

/// `Δu = div(∇u)`.
pub fn laplacian(u: &NodeField) -> NodeField {
    divergence(&gradient(u))
}

pub(crate) enum FieldRef<'a> {
    Node(&'a NodeField),
    Edge(&'a EdgeField),
}

/// Weighted discrete norms. Edge fields use the pointwise Euclidean magnitude
/// per cell; `W1p` is only defined for node fields.
pub(crate) fn norms(field: &FieldRef<'_>, which: Norm) -> Result<f64> {
    let (weight, mags): (f64, Vec<f64>) = match (field, which) {
        (FieldRef::Node(u), Norm::W1p(p)) => return norms(&FieldRef::Edge(&gradient(u)), Norm::Lp(p)),
        (FieldRef::Edge(_), Norm::W1p(_)) => {
            return Err(Error::invalid("norm", "W1p is defined for node fields only"));
        }
        (FieldRef::Node(u), _) => (u.grid().weight(), u.values().iter().map(|v| v.abs()).collect()),
        (FieldRef::Edge(e), _) => {
            let d = e.grid().dim();
            (e.grid().weight(), e.values().chunks(d).map(euclid).collect())
        }
    };
    match which {
        Norm::Linf => Ok(mags.iter().fold(0.0, |a: f64, b| a.max(*b))),
        Norm::L2 => Ok((weight * mags.iter().map(|m| m * m).sum::<f64>()).sqrt()),
        Norm::Lp(p) => {
            if !(p >= 1.0) {
                return Err(Error::invalid("norm.p", format!("need p ≥ 1, got {p}")));
            }
            Ok((weight * mags.iter().map(|m| m.powf(p)).sum::<f64>()).powf(1.0 / p))
        }
        Norm::W1p(_) => unreachable!(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use std::f64::consts::PI;

    #[test]
    fn gradient_example() {
        let g = Grid::dirichlet_1d(3).unwrap();
        let u = NodeField::from_values(g, vec![1.0, 2.0, 1.0]).unwrap();
        assert_eq!(gradient(&u).values(), &[4.0, 4.0, -4.0, -4.0]);
        assert!(gradient(&NodeField::zeros(g)).values().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn constant_on_periodic_has_zero_gradient() {
        for g in [Grid::periodic_1d(16).unwrap(), Grid::periodic_2d(8).unwrap()] {
            let u = NodeField::from_fn(g, |_, _| 3.5);
            assert!(gradient(&u).values().iter().all(|v| *v == 0.0));
            assert!(laplacian(&u).values().iter().all(|v| *v == 0.0));
        }
    }

    #[test]
    fn linear_in_index_periodic_laplacian_vanishes_in_the_interior() {
        // A periodic grid cannot hold a global linear field; the stencil is
        // zero wherever the three-point window does not wrap.
        let g = Grid::periodic_1d(12).unwrap();
        let u = NodeField::from_fn(g, |x, _| 2.0 * x + 1.0);
        let l = laplacian(&u);
        for i in 1..11 {
            assert!(l.values()[i].abs() < 1e-9, "{}", l.values()[i]);
        }
    }

    #[test]
    fn sine_is_an_eigenfield() {
        let g = Grid::dirichlet_1d(31).unwrap();
        let h = g.h();
        let mu1 = 4.0 / (h * h) * (PI * h / 2.0).sin().powi(2);
        let u = NodeField::from_fn(g, |x, _| (PI * x).sin());
        let lu = laplacian(&u);
        for (a, b) in lu.values().iter().zip(u.values()) {
            assert!((a + mu1 * b).abs() < 1e-10 * mu1);
        }
    }

    #[test]
    fn two_d_laplacian_is_five_point() {
        let g = Grid::dirichlet_2d(5).unwrap();
        let vals: Vec<f64> = (0..25).map(|i| ((i * 7) % 11) as f64 - 5.0).collect();
        let u = NodeField::from_values(g, vals.clone()).unwrap();
        let lu = laplacian(&u);
        let h2 = g.h() * g.h();
        let at = |i: isize, j: isize| if (0..5).contains(&i) && (0..5).contains(&j) { vals[(i + 5 * j) as usize] } else { 0.0 };
        for j in 0..5isize {
            for i in 0..5isize {
                let s = (at(i + 1, j) + at(i - 1, j) + at(i, j + 1) + at(i, j - 1) - 4.0 * at(i, j)) / h2;
                assert!((lu.values()[(i + 5 * j) as usize] - s).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn unit_field_norms() {
        let g = Grid::dirichlet_1d(99).unwrap();
        let u = NodeField::from_fn(g, |_, _| 1.0);
        assert!((u.norm(Norm::L2).unwrap() - 0.99f64.sqrt()).abs() < 1e-14);
        assert_eq!(u.norm(Norm::Linf).unwrap(), 1.0);
        let z = NodeField::zeros(g);
        for which in [Norm::L2, Norm::Lp(3.0), Norm::Linf, Norm::W1p(2.0)] {
            assert_eq!(z.norm(which).unwrap(), 0.0);
        }
        assert!(gradient(&u).norm(Norm::W1p(2.0)).is_err());
        assert!(u.norm(Norm::Lp(0.5)).is_err());
    }
}
