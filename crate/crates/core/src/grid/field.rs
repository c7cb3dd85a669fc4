use super::Grid;
use crate::{Error, Result};

/// Discrete norm selector. All norms carry the quadrature weight `hᵈ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Norm {
    L2,
    Lp(f64),
    Linf,
    /// `‖∇u‖_{Lᵖ}`, the W^{1,p}_0 norm under the Poincaré convention.
    W1p(f64),
}

/// Scalar values at the nodes (interior nodes for Dirichlet grids).
#[derive(Debug, Clone, PartialEq)]
pub struct NodeField {
    grid: Grid,
    values: Vec<f64>,
}

/// One d-vector per edge cell, stored cell-major: `values[cell·d + axis]`.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeField {
    grid: Grid,
    values: Vec<f64>,
}

macro_rules! field_common {
    ($ty:ident, $len:ident) => {
        impl $ty {
            pub fn zeros(grid: Grid) -> Self {
                $ty { grid, values: vec![0.0; grid.$len()] }
            }

            pub fn from_values(grid: Grid, values: Vec<f64>) -> Result<Self> {
                if values.len() != grid.$len() {
                    return Err(Error::DimensionMismatch { expected: grid.$len(), found: values.len() });
                }
                Ok($ty { grid, values })
            }

            pub fn grid(&self) -> &Grid {
                &self.grid
            }

            pub fn values(&self) -> &[f64] {
                &self.values
            }

            pub fn values_mut(&mut self) -> &mut [f64] {
                &mut self.values
            }

            pub fn into_values(self) -> Vec<f64> {
                self.values
            }

            pub fn is_finite(&self) -> bool {
                self.values.iter().all(|v| v.is_finite())
            }

            /// Weighted inner product `hᵈ Σ aᵢ bᵢ`.
            pub fn dot(&self, other: &Self) -> f64 {
                debug_assert_eq!(self.values.len(), other.values.len());
                self.grid.weight() * self.values.iter().zip(&other.values).map(|(a, b)| a * b).sum::<f64>()
            }

            pub fn norm_sq(&self) -> f64 {
                self.dot(self)
            }

            pub fn scaled(&self, s: f64) -> Self {
                $ty { grid: self.grid, values: self.values.iter().map(|v| s * v).collect() }
            }

            /// `self += a·other`.
            pub fn axpy(&mut self, a: f64, other: &Self) {
                for (x, y) in self.values.iter_mut().zip(&other.values) {
                    *x += a * y;
                }
            }

            pub fn sub(&self, other: &Self) -> Self {
                $ty {
                    grid: self.grid,
                    values: self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect(),
                }
            }

            pub fn add(&self, other: &Self) -> Self {
                $ty {
                    grid: self.grid,
                    values: self.values.iter().zip(&other.values).map(|(a, b)| a + b).collect(),
                }
            }
        }
    };
}

field_common!(NodeField, node_count);
field_common!(EdgeField, edge_len);

impl NodeField {
    /// Samples `f(x, y)` at the nodes (`y = 0` in 1D).
    pub fn from_fn(grid: Grid, f: impl Fn(f64, f64) -> f64) -> Self {
        let values = (0..grid.node_count())
            .map(|i| {
                let [x, y] = grid.node_coords(i);
                f(x, y)
            })
            .collect();
        NodeField { grid, values }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        NodeField { grid: self.grid, values: self.values.iter().map(|v| f(*v)).collect() }
    }

    /// Pointwise product.
    pub fn mul(&self, other: &NodeField) -> NodeField {
        NodeField { grid: self.grid, values: self.values.iter().zip(&other.values).map(|(a, b)| a * b).collect() }
    }

    pub fn norm(&self, which: Norm) -> Result<f64> {
        super::ops::norms(&super::ops::FieldRef::Node(self), which)
    }
}

impl EdgeField {
    /// Vector of cell `c`.
    pub fn cell(&self, c: usize) -> &[f64] {
        let d = self.grid.dim();
        &self.values[c * d..(c + 1) * d]
    }

    /// Pointwise Euclidean magnitudes, one per cell.
    pub fn magnitudes(&self) -> Vec<f64> {
        let d = self.grid.dim();
        self.values.chunks(d).map(euclid).collect()
    }

    pub fn norm(&self, which: Norm) -> Result<f64> {
        super::ops::norms(&super::ops::FieldRef::Edge(self), which)
    }
}

#[inline]
pub(crate) fn euclid(x: &[f64]) -> f64 {
    match x {
        [a] => a.abs(),
        [a, b] => a.hypot(*b),
        _ => x.iter().map(|v| v * v).sum::<f64>().sqrt(),
    }
}
