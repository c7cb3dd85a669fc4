//! Numerical toolkit for doubly nonlinear stochastic diffusion equations
//!
//! ```text
//! dX − div γ(∇X) dt + β(X) dt ∋ B(t, X) dW,   X = 0 on ∂D,   X(0) = X₀
//! ```
//!
//! The crate is organised bottom-up:
//!
//! * [`monotone`]: maximal monotone graphs on ℝ and ℝᵈ, their resolvents,
//!   Yosida approximations, convex potentials, conjugates and Moreau envelopes.
//! * [`grid`]: a uniform finite-difference mesh whose gradient and divergence
//!   are exact negative adjoints, plus the elliptic smoother `(I − δΔ)⁻ᵏ`.
//! * [`noise`]: truncated spectral Hilbert–Schmidt operators, reproducible
//!   Wiener increments and Nemytskii-type multiplicative noise.
//! * [`solver`]: semi-implicit time stepping of the λ-regularized equation and
//!   the Picard loop for multiplicative noise.
//! * [`diagnostics`]: Itô energy ledgers and a-priori estimate reports.

pub mod diagnostics;
pub mod error;
pub mod grid;
pub mod monotone;
pub mod noise;
pub mod solver;

pub use error::{Error, Result};
