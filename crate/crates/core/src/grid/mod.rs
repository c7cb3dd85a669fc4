//! Uniform finite-difference mesh on the unit interval or square.
//!
//! Nodes carry scalar fields ([`NodeField`]); discrete gradients live on
//! "edge cells" ([`EdgeField`]), one d-vector of forward differences per cell.
//! On a Dirichlet grid with `n` interior nodes per axis there are `n + 1`
//! cells per axis and ghost nodes outside the interior are zero; on a periodic
//! grid there are `n` nodes and `n` cells per axis and indices wrap.
//!
//! Divergence is defined as the exact negative adjoint of the gradient in the
//! `hᵈ`-weighted inner products, so `⟨−div v, u⟩ = ⟨v, ∇u⟩` holds up to
//! rounding for every pair of fields, and `Δ = div ∘ ∇` is the standard
//! 3-point (1D) or 5-point (2D) stencil.

mod field;
mod linear;
mod ops;
mod smoother;

pub use field::{EdgeField, NodeField, Norm};
pub use linear::HelmholtzSolver;
pub use ops::{divergence, gradient, laplacian};
pub use smoother::{commutation_defects, commutation_residual, default_smoothing_power, EllipticSmoother};

pub(crate) use linear::Lattice;

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Boundary {
    DirichletZero,
    /// Only meant for commutation and testing-formula checks.
    Periodic,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    dim: usize,
    n: usize,
    h: f64,
    boundary: Boundary,
}

impl Grid {
    /// `n` interior nodes per axis (Dirichlet, `h = 1/(n+1)`) or `n` nodes per
    /// axis (periodic, `h = 1/n`).
    pub fn new(dim: usize, n: usize, boundary: Boundary) -> Result<Self> {
        if !(1..=2).contains(&dim) {
            return Err(Error::invalid("grid.dimension", format!("only 1 or 2 supported, got {dim}")));
        }
        let min_n = if boundary == Boundary::Periodic { 2 } else { 1 };
        if n < min_n {
            return Err(Error::invalid("grid.n", format!("need at least {min_n} nodes per axis, got {n}")));
        }
        let h = match boundary {
            Boundary::DirichletZero => 1.0 / (n as f64 + 1.0),
            Boundary::Periodic => 1.0 / n as f64,
        };
        Ok(Grid { dim, n, h, boundary })
    }

    pub fn dirichlet_1d(n: usize) -> Result<Self> {
        Self::new(1, n, Boundary::DirichletZero)
    }

    pub fn periodic_1d(n: usize) -> Result<Self> {
        Self::new(1, n, Boundary::Periodic)
    }

    pub fn dirichlet_2d(n: usize) -> Result<Self> {
        Self::new(2, n, Boundary::DirichletZero)
    }

    pub fn periodic_2d(n: usize) -> Result<Self> {
        Self::new(2, n, Boundary::Periodic)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    pub fn is_periodic(&self) -> bool {
        self.boundary == Boundary::Periodic
    }

    /// Quadrature weight `hᵈ`.
    pub fn weight(&self) -> f64 {
        self.h.powi(self.dim as i32)
    }

    pub fn node_count(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    /// Edge cells per axis.
    pub fn cells_per_axis(&self) -> usize {
        match self.boundary {
            Boundary::DirichletZero => self.n + 1,
            Boundary::Periodic => self.n,
        }
    }

    pub fn cell_count(&self) -> usize {
        self.cells_per_axis().pow(self.dim as u32)
    }

    /// Number of scalar entries of an edge field.
    pub fn edge_len(&self) -> usize {
        self.cell_count() * self.dim
    }

    /// Physical coordinate of node `i` along one axis.
    pub fn coord(&self, i: usize) -> f64 {
        match self.boundary {
            Boundary::DirichletZero => (i as f64 + 1.0) * self.h,
            Boundary::Periodic => i as f64 * self.h,
        }
    }

    /// Coordinates of the node with flat index `idx`.
    pub fn node_coords(&self, idx: usize) -> [f64; 2] {
        match self.dim {
            1 => [self.coord(idx), 0.0],
            _ => [self.coord(idx % self.n), self.coord(idx / self.n)],
        }
    }

    /// Flat index of node `(i, j)`, or `None` for a Dirichlet ghost.
    #[inline]
    pub(crate) fn node_index(&self, i: isize, j: isize) -> Option<usize> {
        let n = self.n as isize;
        let (i, j) = match self.boundary {
            Boundary::Periodic => (i.rem_euclid(n), j.rem_euclid(n)),
            Boundary::DirichletZero => {
                if i < 0 || i >= n || j < 0 || j >= n {
                    return None;
                }
                (i, j)
            }
        };
        Some((i + n * j) as usize)
    }

    pub(crate) fn node_lattice(&self) -> Lattice {
        Lattice { dim: self.dim, m: self.n, h: self.h, periodic: self.is_periodic() }
    }

    pub(crate) fn edge_lattice(&self) -> Lattice {
        Lattice { dim: self.dim, m: self.cells_per_axis(), h: self.h, periodic: self.is_periodic() }
    }

    /// Smallest and largest eigenvalue of `−Δ_h` bounds: `λ_max ≤ 4d/h²`.
    pub fn inverse_inequality_constant(&self) -> f64 {
        4.0 * self.dim as f64 / (self.h * self.h)
    }
}
