//! Backward Euler for the full operator: solve `u + dt·A_λ(u) = x` by a
//! damped semismooth Newton method with matrix-free conjugate gradients.

use crate::grid::{divergence, gradient, EdgeField, NodeField};
use crate::monotone::{ScalarGraph, VectorGraph};
use crate::{Error, Result};

const NEWTON_TOLERANCE: f64 = 1e-11;
const MAX_NEWTON: usize = 60;
const CG_TOLERANCE: f64 = 1e-12;

struct Linearisation {
    residual: NodeField,
    /// Per-cell `d×d` flux derivative `Dγ_λ + λI`.
    flux_jac: Vec<f64>,
    /// Nodewise `β_λ'`.
    reaction_slope: Vec<f64>,
}

pub(crate) struct ImplicitSolve<'a> {
    pub gamma: &'a VectorGraph,
    pub beta: &'a ScalarGraph,
    pub lambda: f64,
    pub dt: f64,
}

impl ImplicitSolve<'_> {
    fn residual(&self, u: &NodeField, x: &NodeField, with_jacobian: bool) -> Result<Linearisation> {
        let grid = *u.grid();
        let d = grid.dim();
        let lam = self.lambda;
        let grad = gradient(u);
        let mut flux = EdgeField::zeros(grid);
        let mut flux_jac = if with_jacobian { vec![0.0; grid.cell_count() * d * d] } else { Vec::new() };
        let mut j = vec![0.0; d];
        let mut dj = vec![0.0; d * d];
        for (c, (g, f)) in grad.values().chunks(d).zip(flux.values_mut().chunks_mut(d)).enumerate() {
            if with_jacobian {
                self.gamma.resolvent_jacobian_into(lam, g, &mut j, &mut dj)?;
                let k = &mut flux_jac[c * d * d..(c + 1) * d * d];
                for a in 0..d {
                    for b in 0..d {
                        let id = if a == b { 1.0 } else { 0.0 };
                        k[a * d + b] = (id - dj[a * d + b]) / lam + lam * id;
                    }
                }
            } else {
                self.gamma.resolvent_into(lam, g, &mut j)?;
            }
            for ((f, g), j) in f.iter_mut().zip(g).zip(&j) {
                *f = (g - j) / lam + lam * g;
            }
        }
        let mut residual = u.sub(x);
        residual.axpy(-self.dt, &divergence(&flux));
        let mut reaction_slope = if with_jacobian { vec![0.0; grid.node_count()] } else { Vec::new() };
        for (i, (r, v)) in residual.values_mut().iter_mut().zip(u.values()).enumerate() {
            let (res, dres) = self.beta.resolvent_with_derivative(lam, *v)?;
            *r += self.dt * (v - res) / lam;
            if with_jacobian {
                reaction_slope[i] = (1.0 - dres) / lam;
            }
        }
        Ok(Linearisation { residual, flux_jac, reaction_slope })
    }

    fn apply_jacobian(&self, lin: &Linearisation, v: &NodeField) -> NodeField {
        let d = v.grid().dim();
        let gv = gradient(v);
        let mut kg = EdgeField::zeros(*v.grid());
        for (c, (g, o)) in gv.values().chunks(d).zip(kg.values_mut().chunks_mut(d)).enumerate() {
            let k = &lin.flux_jac[c * d * d..(c + 1) * d * d];
            for a in 0..d {
                o[a] = (0..d).map(|b| k[a * d + b] * g[b]).sum();
            }
        }
        let mut out = v.clone();
        out.axpy(-self.dt, &divergence(&kg));
        for ((o, s), vi) in out.values_mut().iter_mut().zip(&lin.reaction_slope).zip(v.values()) {
            *o += self.dt * s * vi;
        }
        out
    }

    /// Conjugate gradients on the symmetric positive definite Newton system.
    fn newton_direction(&self, lin: &Linearisation) -> Result<NodeField> {
        let b = lin.residual.scaled(-1.0);
        let mut x = NodeField::zeros(*b.grid());
        let mut r = b.clone();
        let mut p = r.clone();
        let mut rr = r.norm_sq();
        let target = CG_TOLERANCE * CG_TOLERANCE * rr;
        for _ in 0..10 * b.values().len() + 50 {
            if rr <= target || rr == 0.0 {
                return Ok(x);
            }
            let ap = self.apply_jacobian(lin, &p);
            let pap = p.dot(&ap);
            if !(pap > 0.0) {
                return Err(Error::SolverBreakdown(format!("Newton system lost positivity (pAp = {pap})")));
            }
            let alpha = rr / pap;
            x.axpy(alpha, &p);
            r.axpy(-alpha, &ap);
            let next = r.norm_sq();
            p = r.add(&p.scaled(next / rr));
            rr = next;
        }
        Err(Error::SolverBreakdown("conjugate gradients did not converge in the Newton step".into()))
    }

    /// `u` with `u + dt·A_λ(u) = x`.
    pub fn solve(&self, x: &NodeField, guess: NodeField) -> Result<NodeField> {
        let scale = 1.0 + x.norm_sq().sqrt();
        let mut u = guess;
        let mut lin = self.residual(&u, x, true)?;
        let mut norm = lin.residual.norm_sq().sqrt();
        for _ in 0..MAX_NEWTON {
            if norm <= NEWTON_TOLERANCE * scale {
                return Ok(u);
            }
            let dir = self.newton_direction(&lin)?;
            let mut t = 1.0;
            loop {
                let mut trial = u.clone();
                trial.axpy(t, &dir);
                let trial_lin = self.residual(&trial, x, false)?;
                let trial_norm = trial_lin.residual.norm_sq().sqrt();
                if trial_norm <= (1.0 - 1e-4 * t) * norm || t < 1e-6 {
                    u = trial;
                    break;
                }
                t *= 0.5;
            }
            lin = self.residual(&u, x, true)?;
            norm = lin.residual.norm_sq().sqrt();
        }
        if norm <= NEWTON_TOLERANCE * scale {
            return Ok(u);
        }
        Err(Error::SolverBreakdown(format!("implicit step did not converge (residual {norm:e})")))
    }
}
