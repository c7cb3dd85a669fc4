//! Maximal monotone graph calculus.
//!
//! A [`ScalarGraph`] β on ℝ and a [`VectorGraph`] γ on ℝᵈ are everywhere
//! defined, contain the origin (0 ∈ β(0)) and are subdifferentials of convex
//! potentials. Multivalued values are closed intervals; the reported selection
//! is always the element of minimal norm.
//!
//! For δ > 0 the resolvent `R_δ = (I + δβ)⁻¹` is computed by a guarded
//! bracketing root search with Newton polishing, and the Yosida approximation
//! is `β_δ = (I − R_δ)/δ`.

mod interval;
mod leray_lions;
mod potential;
mod root;
mod scalar;
mod vector;

pub use interval::Interval;
pub use leray_lions::{leray_lions_check, LerayLionsParams, LerayLionsReport};
pub use potential::Potential;
pub use scalar::{JumpPoint, ScalarFn, ScalarGraph, ScalarKind};
pub use vector::{VectorGraph, VectorKind};
pub(crate) use vector::norm as vector_norm;

use crate::Result;

/// `(I + δβ)⁻¹ x`.
pub fn resolvent_scalar(graph: &ScalarGraph, delta: f64, x: f64) -> Result<f64> {
    graph.resolvent(delta, x)
}

/// `(x − R_δ x)/δ`.
pub fn yosida_scalar(graph: &ScalarGraph, delta: f64, x: f64) -> Result<f64> {
    graph.yosida(delta, x)
}

/// `(I + δγ)⁻¹ x`.
pub fn resolvent_vector(graph: &VectorGraph, delta: f64, x: &[f64]) -> Result<Vec<f64>> {
    graph.resolvent(delta, x)
}

/// `(x − J_δ x)/δ`.
pub fn yosida_vector(graph: &VectorGraph, delta: f64, x: &[f64]) -> Result<Vec<f64>> {
    graph.yosida(delta, x)
}

/// `j*(r) = sup_y { r y − j(y) }`, possibly `+∞`.
pub fn conjugate_eval(potential: &Potential, r: f64) -> f64 {
    potential.conjugate(r)
}

/// Moreau envelope `j_λ(x) = |x − R_λ x|²/(2λ) + j(R_λ x)` of the potential
/// attached to `graph`.
pub fn moreau_envelope(graph: &ScalarGraph, lambda: f64, x: f64) -> Result<f64> {
    graph.moreau_envelope(lambda, x)
}
