use std::sync::Arc;

use super::leray_lions::LerayLionsParams;
use super::potential::Potential;
use super::scalar::{ScalarFn, ScalarGraph};
use crate::{Error, Result};

#[derive(Clone, Debug)]
pub enum VectorKind {
    /// γ(r) = r.
    Identity,
    /// γ(r) = g(|r|) r/|r| for a scalar profile g (odd extension, g(0) ∋ 0).
    Radial { profile: ScalarGraph },
    /// γ(r)ᵢ = gᵢ(rᵢ).
    Diagonal { components: Vec<ScalarGraph> },
}

/// Maximal monotone graph γ on ℝᵈ. Only the kinds whose resolvent reduces to
/// scalar solves exist; there is no general d-dimensional variant.
#[derive(Clone, Debug)]
pub struct VectorGraph {
    name: String,
    dim: usize,
    kind: VectorKind,
    leray_lions: LerayLionsParams,
}

impl VectorGraph {
    pub fn identity(dim: usize) -> Result<Self> {
        check_dim(dim)?;
        Ok(VectorGraph {
            name: "identity".into(),
            dim,
            kind: VectorKind::Identity,
            leray_lions: LerayLionsParams::new(2.0, 1.0, 1.0, 0.0)?,
        })
    }

    /// p-Laplace flux γ(r) = |r|^{p−2} r.
    pub fn p_power(dim: usize, p: f64) -> Result<Self> {
        let profile = ScalarGraph::power(p)?;
        let ll = LerayLionsParams::new(p.max(2.0), 1.0, 1.0, 0.0)?;
        let mut g = Self::radial(dim, profile, ll)?;
        g.name = format!("p_power(p={p})");
        Ok(g)
    }

    /// γ(r) = (e^{|r|} − 1) r/|r|, whose growth is not polynomial.
    pub fn radial_exp(dim: usize, declared: LerayLionsParams) -> Result<Self> {
        let f: ScalarFn = Arc::new(|s: f64| s.signum() * (s.abs().exp() - 1.0));
        let slope: ScalarFn = Arc::new(|s: f64| s.abs().exp());
        let pot = Potential::new(|y: f64| y.abs().exp() - 1.0 - y.abs(), true);
        let profile = ScalarGraph::custom("exp", f, Some(slope), pot)?;
        let mut g = Self::radial(dim, profile, declared)?;
        g.name = "radial_exp".into();
        Ok(g)
    }

    pub fn radial(dim: usize, profile: ScalarGraph, leray_lions: LerayLionsParams) -> Result<Self> {
        check_dim(dim)?;
        let name = format!("radial({})", profile.name());
        Ok(VectorGraph { name, dim, kind: VectorKind::Radial { profile }, leray_lions })
    }

    pub fn diagonal(components: Vec<ScalarGraph>, leray_lions: LerayLionsParams) -> Result<Self> {
        let dim = components.len();
        check_dim(dim)?;
        let names: Vec<&str> = components.iter().map(|c| c.name()).collect();
        let name = format!("diagonal({})", names.join(", "));
        Ok(VectorGraph { name, dim, kind: VectorKind::Diagonal { components }, leray_lions })
    }

    pub fn with_leray_lions(mut self, ll: LerayLionsParams) -> Self {
        self.leray_lions = ll;
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> &VectorKind {
        &self.kind
    }

    pub fn leray_lions(&self) -> &LerayLionsParams {
        &self.leray_lions
    }

    fn check_len(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: x.len() });
        }
        Ok(())
    }

    /// Minimal-norm selection of γ(r).
    pub fn selection(&self, r: &[f64]) -> Result<Vec<f64>> {
        self.check_len(r)?;
        Ok(match &self.kind {
            VectorKind::Identity => r.to_vec(),
            VectorKind::Radial { profile } => {
                let n = norm(r);
                if n == 0.0 {
                    vec![0.0; self.dim]
                } else {
                    let s = profile.selection(n) / n;
                    r.iter().map(|v| s * v).collect()
                }
            }
            VectorKind::Diagonal { components } => components.iter().zip(r).map(|(g, v)| g.selection(*v)).collect(),
        })
    }

    /// Extreme points of γ(r): the elements maximising |y| and minimising y·r.
    /// For single-valued graphs both coincide with the selection.
    pub fn extreme_elements(&self, r: &[f64]) -> Result<Vec<Vec<f64>>> {
        self.check_len(r)?;
        Ok(match &self.kind {
            VectorKind::Identity => vec![r.to_vec()],
            VectorKind::Radial { profile } => {
                let n = norm(r);
                let v = profile.value(n);
                if n == 0.0 {
                    // γ(0) is the ball of radius max|g(0)|; take an axis point.
                    let rad = v.lo.abs().max(v.hi.abs());
                    let mut e = vec![0.0; self.dim];
                    e[0] = rad;
                    vec![e]
                } else {
                    [v.lo, v.hi].iter().map(|s| r.iter().map(|c| s * c / n).collect()).collect()
                }
            }
            VectorKind::Diagonal { components } => {
                let mut out = vec![Vec::with_capacity(self.dim)];
                for (g, v) in components.iter().zip(r) {
                    let iv = g.value(*v);
                    let ends = if iv.is_point() { vec![iv.lo] } else { vec![iv.lo, iv.hi] };
                    out = out
                        .into_iter()
                        .flat_map(|prefix| {
                            ends.iter().map(move |e| {
                                let mut p = prefix.clone();
                                p.push(*e);
                                p
                            })
                        })
                        .collect();
                }
                out
            }
        })
    }

    /// Whether `y ∈ γ(r)` up to `tol` (Euclidean distance to the set).
    pub fn contains(&self, r: &[f64], y: &[f64], tol: f64) -> Result<bool> {
        self.check_len(r)?;
        self.check_len(y)?;
        Ok(match &self.kind {
            VectorKind::Identity => dist(r, y) <= tol,
            VectorKind::Radial { profile } => {
                let n = norm(r);
                let v = profile.value(n);
                if n == 0.0 {
                    norm(y) <= v.lo.abs().max(v.hi.abs()) + tol
                } else {
                    // Distance from y to the segment {s r/|r| : s ∈ [lo, hi]}.
                    let along: f64 = y.iter().zip(r).map(|(a, b)| a * b).sum::<f64>() / n;
                    let s = along.clamp(v.lo, v.hi);
                    let proj: Vec<f64> = r.iter().map(|c| s * c / n).collect();
                    dist(&proj, y) <= tol
                }
            }
            VectorKind::Diagonal { components } => {
                let d2: f64 = components
                    .iter()
                    .zip(r.iter().zip(y))
                    .map(|(g, (ri, yi))| {
                        let v = g.value(*ri);
                        let e = (v.lo - yi).max(yi - v.hi).max(0.0);
                        e * e
                    })
                    .sum();
                d2.sqrt() <= tol
            }
        })
    }

    /// `J_δ x = (I + δγ)⁻¹ x`.
    pub fn resolvent(&self, delta: f64, x: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.dim];
        self.resolvent_into(delta, x, &mut out)?;
        Ok(out)
    }

    /// Allocation-free form of [`VectorGraph::resolvent`].
    pub fn resolvent_into(&self, delta: f64, x: &[f64], out: &mut [f64]) -> Result<()> {
        self.check_len(x)?;
        if let Some(v) = x.iter().find(|v| !v.is_finite()) {
            return Err(Error::invalid("x", format!("resolvent argument must be finite, got {v}")));
        }
        match &self.kind {
            VectorKind::Identity => {
                super::scalar::check_delta(delta)?;
                for (o, v) in out.iter_mut().zip(x) {
                    *o = v / (1.0 + delta);
                }
            }
            VectorKind::Radial { profile } => {
                let n = norm(x);
                if n == 0.0 {
                    super::scalar::check_delta(delta)?;
                    out.fill(0.0);
                } else {
                    let s = profile.resolvent(delta, n)? / n;
                    for (o, v) in out.iter_mut().zip(x) {
                        *o = s * v;
                    }
                }
            }
            VectorKind::Diagonal { components } => {
                for ((o, g), v) in out.iter_mut().zip(components).zip(x) {
                    *o = g.resolvent(delta, *v)?;
                }
            }
        }
        Ok(())
    }

    /// `J_δ x` into `out` and its Jacobian (row-major `d×d`) into `jac`.
    pub fn resolvent_jacobian_into(&self, delta: f64, x: &[f64], out: &mut [f64], jac: &mut [f64]) -> Result<()> {
        let d = self.dim;
        if jac.len() != d * d {
            return Err(Error::DimensionMismatch { expected: d * d, found: jac.len() });
        }
        self.resolvent_into(delta, x, out)?;
        jac.fill(0.0);
        match &self.kind {
            VectorKind::Identity => {
                for i in 0..d {
                    jac[i * d + i] = 1.0 / (1.0 + delta);
                }
            }
            VectorKind::Radial { profile } => {
                let s = norm(x);
                let (rho, drho) = profile.resolvent_with_derivative(delta, s)?;
                if s == 0.0 {
                    for i in 0..d {
                        jac[i * d + i] = drho;
                    }
                } else {
                    let ratio = rho / s;
                    for i in 0..d {
                        for k in 0..d {
                            let proj = x[i] * x[k] / (s * s);
                            let id = if i == k { 1.0 } else { 0.0 };
                            jac[i * d + k] = drho * proj + ratio * (id - proj);
                        }
                    }
                }
            }
            VectorKind::Diagonal { components } => {
                for (i, (g, v)) in components.iter().zip(x).enumerate() {
                    jac[i * d + i] = g.resolvent_with_derivative(delta, *v)?.1;
                }
            }
        }
        Ok(())
    }

    /// `γ_δ x = (x − J_δ x)/δ`, an element of γ(J_δ x).
    pub fn yosida(&self, delta: f64, x: &[f64]) -> Result<Vec<f64>> {
        let j = self.resolvent(delta, x)?;
        Ok(x.iter().zip(&j).map(|(a, b)| (a - b) / delta).collect())
    }

    /// Potential k(r) with ∂k = γ.
    pub fn potential(&self, r: &[f64]) -> f64 {
        match &self.kind {
            VectorKind::Identity => 0.5 * r.iter().map(|v| v * v).sum::<f64>(),
            VectorKind::Radial { profile } => profile.potential().eval(norm(r)),
            VectorKind::Diagonal { components } => components.iter().zip(r).map(|(g, v)| g.potential().eval(*v)).sum(),
        }
    }
}

fn check_dim(dim: usize) -> Result<()> {
    if dim == 0 {
        return Err(Error::invalid("dimension", "vector graphs need d ≥ 1"));
    }
    Ok(())
}

pub(crate) fn norm(x: &[f64]) -> f64 {
    match x {
        [a] => a.abs(),
        [a, b] => a.hypot(*b),
        _ => x.iter().map(|v| v * v).sum::<f64>().sqrt(),
    }
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_resolvent() {
        let g = VectorGraph::identity(2).unwrap();
        assert_eq!(g.resolvent(1.0, &[2.0, 0.0]).unwrap(), vec![1.0, 0.0]);
        let y = g.yosida(0.5, &[3.0, -1.5]).unwrap();
        assert!((y[0] - 2.0).abs() < 1e-15 && (y[1] + 1.0).abs() < 1e-15);
    }

    #[test]
    fn p_power_resolvent_examples() {
        let g = VectorGraph::p_power(2, 3.0).unwrap();
        let j = g.resolvent(1.0, &[2.0, 0.0]).unwrap();
        assert!((j[0] - 1.0).abs() < 1e-13 && j[1] == 0.0);
        let y = g.yosida(1.0, &[2.0, 0.0]).unwrap();
        assert!((y[0] - 1.0).abs() < 1e-13);

        let g2 = VectorGraph::p_power(2, 2.0).unwrap();
        let j = g2.resolvent(0.5, &[3.0, 4.0]).unwrap();
        assert!((j[0] - 2.0).abs() < 1e-13 && (j[1] - 8.0 / 3.0).abs() < 1e-13);
    }

    #[test]
    fn yosida_at_origin_vanishes() {
        for g in [
            VectorGraph::identity(2).unwrap(),
            VectorGraph::p_power(2, 3.0).unwrap(),
            VectorGraph::diagonal(vec![ScalarGraph::sign(), ScalarGraph::identity()], LerayLionsParams::default())
                .unwrap(),
        ] {
            assert_eq!(g.yosida(0.3, &[0.0, 0.0]).unwrap(), vec![0.0, 0.0]);
        }
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let g = VectorGraph::identity(2).unwrap();
        assert!(matches!(g.resolvent(1.0, &[1.0]), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn radial_sign_profile_contains_ball_at_origin() {
        let g = VectorGraph::radial(2, ScalarGraph::sign(), LerayLionsParams::default()).unwrap();
        assert!(g.contains(&[0.0, 0.0], &[0.6, 0.6], 0.0).unwrap());
        assert!(!g.contains(&[0.0, 0.0], &[0.8, 0.8], 0.0).unwrap());
        // |x| ≤ δ collapses to the origin.
        assert_eq!(g.resolvent(0.5, &[0.3, 0.3]).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let graphs = [
            VectorGraph::identity(2).unwrap(),
            VectorGraph::p_power(2, 3.0).unwrap(),
            VectorGraph::p_power(2, 4.0).unwrap(),
        ];
        let x = [0.7, -1.3];
        for g in &graphs {
            let (mut out, mut jac) = (vec![0.0; 2], vec![0.0; 4]);
            g.resolvent_jacobian_into(0.3, &x, &mut out, &mut jac).unwrap();
            assert_eq!(out, g.resolvent(0.3, &x).unwrap());
            for k in 0..2 {
                let h = 1e-6;
                let mut xp = x;
                let mut xm = x;
                xp[k] += h;
                xm[k] -= h;
                let (jp, jm) = (g.resolvent(0.3, &xp).unwrap(), g.resolvent(0.3, &xm).unwrap());
                for i in 0..2 {
                    let fd = (jp[i] - jm[i]) / (2.0 * h);
                    assert!((fd - jac[i * 2 + k]).abs() < 1e-6, "{} ({i},{k}): {fd} vs {}", g.name(), jac[i * 2 + k]);
                }
            }
        }
    }

    #[test]
    fn scalar_derivative_on_flat_part() {
        let s = ScalarGraph::sign();
        assert_eq!(s.resolvent_with_derivative(0.5, 0.2).unwrap(), (0.0, 0.0));
        let (r, d) = s.resolvent_with_derivative(0.5, 2.0).unwrap();
        assert!((r - 1.5).abs() < 1e-12 && (d - 1.0).abs() < 1e-12);
    }
}
