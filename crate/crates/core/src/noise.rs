//! Noise: truncated spectral Hilbert–Schmidt operators, reproducible Wiener
//! increments and Nemytskii-type multiplicative noise.
//!
//! The cylindrical Wiener process is realised on the span of the first `M`
//! eigenfields `e_m` of the discrete Laplacian, and `B dW = Σ b_m ΔW_m e_m`.

use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, Mutex, OnceLock};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::grid::{Boundary, EllipticSmoother, Grid, NodeField};
use crate::{Error, Result};

/// Orthonormal eigenfields of `−Δ_h` with their eigenvalues, sorted ascending.
#[derive(Debug)]
pub struct Basis {
    fields: Vec<Vec<f64>>,
    eigenvalues: Vec<f64>,
    sup_norms: Vec<f64>,
}

type BasisKey = (usize, usize, Boundary, usize);

fn basis_cache() -> &'static Mutex<HashMap<BasisKey, Arc<Basis>>> {
    static CACHE: OnceLock<Mutex<HashMap<BasisKey, Arc<Basis>>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// One-axis eigenpairs (values at the `n` nodes of the axis, eigenvalue).
fn axis_modes(grid: &Grid) -> Vec<(Vec<f64>, f64)> {
    let n = grid.n();
    let h = grid.h();
    let pi = std::f64::consts::PI;
    let sym = |theta: f64| 4.0 / (h * h) * theta.sin().powi(2);
    match grid.boundary() {
        Boundary::DirichletZero => (1..=n)
            .map(|m| {
                let v = (0..n).map(|i| 2f64.sqrt() * (m as f64 * pi * grid.coord(i)).sin()).collect();
                (v, sym(m as f64 * pi * h / 2.0))
            })
            .collect(),
        Boundary::Periodic => {
            let mut out = vec![(vec![1.0; n], 0.0)];
            for k in 1..=n / 2 {
                let mu = sym(pi * k as f64 / n as f64);
                let w = 2.0 * pi * k as f64;
                if 2 * k == n {
                    out.push(((0..n).map(|i| (w * grid.coord(i)).cos()).collect(), mu));
                } else {
                    out.push(((0..n).map(|i| 2f64.sqrt() * (w * grid.coord(i)).cos()).collect(), mu));
                    out.push(((0..n).map(|i| 2f64.sqrt() * (w * grid.coord(i)).sin()).collect(), mu));
                }
            }
            out
        }
    }
}

impl Basis {
    /// First `modes` eigenpairs for `grid`; computed once per (grid, modes).
    pub fn for_grid(grid: &Grid, modes: usize) -> Result<Arc<Basis>> {
        if modes > grid.node_count() {
            return Err(Error::invalid(
                "noise.modes",
                format!("at most {} modes exist on this grid, requested {modes}", grid.node_count()),
            ));
        }
        let key = (grid.dim(), grid.n(), grid.boundary(), modes);
        if let Some(b) = basis_cache().lock().unwrap().get(&key) {
            return Ok(b.clone());
        }
        let axis = axis_modes(grid);
        let mut pairs: Vec<(Vec<f64>, f64)> = match grid.dim() {
            1 => axis,
            _ => {
                let n = grid.n();
                let mut idx: Vec<(usize, usize)> =
                    (0..axis.len()).flat_map(|b| (0..axis.len()).map(move |a| (a, b))).collect();
                idx.sort_by(|p, q| {
                    (axis[p.0].1 + axis[p.1].1).total_cmp(&(axis[q.0].1 + axis[q.1].1)).then((p.0 + p.1).cmp(&(q.0 + q.1)))
                });
                idx.truncate(modes);
                idx.into_iter()
                    .map(|(a, b)| {
                        let mut v = vec![0.0; n * n];
                        for j in 0..n {
                            for i in 0..n {
                                v[i + n * j] = axis[a].0[i] * axis[b].0[j];
                            }
                        }
                        (v, axis[a].1 + axis[b].1)
                    })
                    .collect()
            }
        };
        pairs.truncate(modes);
        let sup_norms = pairs.iter().map(|(v, _)| v.iter().fold(0.0, |a: f64, b| a.max(b.abs()))).collect();
        let (fields, eigenvalues) = pairs.into_iter().unzip();
        let basis = Arc::new(Basis { fields, eigenvalues, sup_norms });
        basis_cache().lock().unwrap().insert(key, basis.clone());
        Ok(basis)
    }

    pub fn len(&self) -> usize {
        self.fields.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fields.is_empty()
    }

    pub fn field(&self, m: usize) -> &[f64] {
        &self.fields[m]
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn sup_norms(&self) -> &[f64] {
        &self.sup_norms
    }
}

/// Diagonal Hilbert–Schmidt operator `B ξ = Σ b_m ξ_m e_m`.
#[derive(Debug, Clone)]
pub struct SpectralHS {
    grid: Grid,
    coeffs: Vec<f64>,
    basis: Arc<Basis>,
}

impl SpectralHS {
    pub fn new(grid: Grid, coeffs: Vec<f64>) -> Result<Self> {
        if let Some(c) = coeffs.iter().find(|c| !c.is_finite()) {
            return Err(Error::invalid("noise.coefficients", format!("coefficients must be finite, got {c}")));
        }
        let basis = Basis::for_grid(&grid, coeffs.len())?;
        Ok(SpectralHS { grid, coeffs, basis })
    }

    /// `b_m = c·m^{−a}` for `m = 1..=modes`.
    pub fn power_law(grid: Grid, modes: usize, amplitude: f64, decay: f64) -> Result<Self> {
        let coeffs = (1..=modes).map(|m| amplitude * (m as f64).powf(-decay)).collect();
        Self::new(grid, coeffs)
    }

    pub fn zero(grid: Grid) -> Self {
        Self::new(grid, Vec::new()).expect("empty operator is valid")
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn modes(&self) -> usize {
        self.coeffs.len()
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn basis(&self) -> &Basis {
        &self.basis
    }

    pub fn eigenvalues(&self) -> &[f64] {
        self.basis.eigenvalues()
    }

    pub fn basis_field(&self, m: usize) -> NodeField {
        NodeField::from_values(self.grid, self.basis.field(m).to_vec()).expect("basis fields match the grid")
    }

    /// `‖B‖_HS = (Σ b_m²)^{1/2}`.
    pub fn hs_norm(&self) -> f64 {
        self.coeffs.iter().map(|b| b * b).sum::<f64>().sqrt()
    }

    /// `Σ b_m ξ_m e_m`.
    pub fn apply(&self, xi: &[f64]) -> Result<NodeField> {
        if xi.len() != self.modes() {
            return Err(Error::DimensionMismatch { expected: self.modes(), found: xi.len() });
        }
        let mut out = vec![0.0; self.grid.node_count()];
        for (m, (b, x)) in self.coeffs.iter().zip(xi).enumerate() {
            let s = b * x;
            if s != 0.0 {
                for (o, e) in out.iter_mut().zip(self.basis.field(m)) {
                    *o += s * e;
                }
            }
        }
        NodeField::from_values(self.grid, out)
    }

    /// `B^ε = (I − εΔ)^{−k} B`, i.e. `b_m/(1 + ε μ_m)^k`.
    pub fn smooth(&self, eps: f64, k: usize) -> Result<SpectralHS> {
        if !(eps >= 0.0) || !eps.is_finite() {
            return Err(Error::invalid("eps", format!("smoothing parameter must be ≥ 0, got {eps}")));
        }
        let coeffs = self
            .coeffs
            .iter()
            .zip(self.basis.eigenvalues())
            .map(|(b, mu)| if eps == 0.0 { *b } else { b / (1.0 + eps * mu).powi(k as i32) })
            .collect();
        Ok(SpectralHS { grid: self.grid, coeffs, basis: self.basis.clone() })
    }

    /// `‖B − B'‖_HS`; operators of different length are zero padded.
    pub fn hs_distance(&self, other: &SpectralHS) -> Result<f64> {
        if self.grid != other.grid {
            return Err(Error::Incompatible("noise operators live on different grids".into()));
        }
        let m = self.modes().max(other.modes());
        let get = |c: &[f64], i: usize| c.get(i).copied().unwrap_or(0.0);
        Ok((0..m).map(|i| (get(&self.coeffs, i) - get(&other.coeffs, i)).powi(2)).sum::<f64>().sqrt())
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Counter-based Brownian increments: each `(seed, path, step)` owns an
/// independent ChaCha stream, so increments never depend on call order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WienerSampler {
    seed: u64,
    dt: f64,
}

impl WienerSampler {
    /// `dt = 0` is accepted and yields zero increments.
    pub fn new(seed: u64, dt: f64) -> Result<Self> {
        if !(dt >= 0.0) || !dt.is_finite() {
            return Err(Error::invalid("dt", format!("time step must be ≥ 0, got {dt}")));
        }
        Ok(WienerSampler { seed, dt })
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    fn stream(&self, path: u64, step: u64) -> ChaCha8Rng {
        let key = splitmix64(splitmix64(splitmix64(self.seed) ^ path) ^ step.wrapping_mul(0xd605_bbb5_8c8a_bbc5));
        ChaCha8Rng::seed_from_u64(key)
    }

    /// `M` independent `N(0, dt)` draws. Mode `m` is the `m`-th draw of the
    /// `(path, step)` stream, so a longer request extends a shorter one.
    pub fn increment(&self, path: usize, step: usize, modes: usize) -> Vec<f64> {
        if self.dt == 0.0 {
            return vec![0.0; modes];
        }
        let sd = self.dt.sqrt();
        let mut rng = self.stream(path as u64, step as u64);
        (0..modes).map(|_| sd * rng.sample::<f64, _>(StandardNormal)).collect()
    }
}

/// Scalar noise intensity `σ` with declared Lipschitz constant and bound.
#[derive(Clone)]
pub struct Sigma {
    name: String,
    f: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    lipschitz: f64,
    bound: f64,
}

impl fmt::Debug for Sigma {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Sigma")
            .field("name", &self.name)
            .field("lipschitz", &self.lipschitz)
            .field("bound", &self.bound)
            .finish()
    }
}

impl Sigma {
    pub fn custom(
        name: impl Into<String>,
        f: impl Fn(f64) -> f64 + Send + Sync + 'static,
        lipschitz: f64,
        bound: f64,
    ) -> Result<Self> {
        if !(lipschitz >= 0.0 && bound >= 0.0) || !lipschitz.is_finite() || !bound.is_finite() {
            return Err(Error::invalid("sigma", "declared constants must be finite and ≥ 0"));
        }
        Ok(Sigma { name: name.into(), f: Arc::new(f), lipschitz, bound })
    }

    /// `s·clamp(x, −1, 1)`.
    pub fn clip(scale: f64) -> Self {
        let s = scale.abs();
        Sigma { name: format!("clip(scale={scale})"), f: Arc::new(move |x: f64| scale * x.clamp(-1.0, 1.0)), lipschitz: s, bound: s }
    }

    /// `s·sin(x)`.
    pub fn sine(scale: f64) -> Self {
        let s = scale.abs();
        Sigma { name: format!("sine(scale={scale})"), f: Arc::new(move |x: f64| scale * x.sin()), lipschitz: s, bound: s }
    }

    /// `s·tanh(x)`.
    pub fn tanh(scale: f64) -> Self {
        let s = scale.abs();
        Sigma { name: format!("tanh(scale={scale})"), f: Arc::new(move |x: f64| scale * x.tanh()), lipschitz: s, bound: s }
    }

    pub fn constant(c: f64) -> Self {
        Sigma { name: format!("constant({c})"), f: Arc::new(move |_| c), lipschitz: 0.0, bound: c.abs() }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn eval(&self, x: f64) -> f64 {
        (self.f)(x)
    }

    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    pub fn bound(&self) -> f64 {
        self.bound
    }
}

/// `B(x)u = σ(x)·(B₀u)` pointwise.
#[derive(Debug, Clone)]
pub struct MultiplicativeNoise {
    base: SpectralHS,
    sigma: Sigma,
}

impl MultiplicativeNoise {
    pub fn new(base: SpectralHS, sigma: Sigma) -> Self {
        MultiplicativeNoise { base, sigma }
    }

    pub fn base(&self) -> &SpectralHS {
        &self.base
    }

    pub fn sigma(&self) -> &Sigma {
        &self.sigma
    }

    /// `L_B = lip(σ)·(Σ b_m² ‖e_m‖²_∞)^{1/2}`.
    pub fn lipschitz_constant(&self) -> f64 {
        let s: f64 = self.base.coeffs().iter().zip(self.base.basis().sup_norms()).map(|(b, e)| b * b * e * e).sum();
        self.sigma.lipschitz() * s.sqrt()
    }

    /// `R_B = bound(σ)·‖B₀‖_HS`.
    pub fn growth_constant(&self) -> f64 {
        self.sigma.bound() * self.base.hs_norm()
    }

    /// `σ(x)` evaluated nodewise.
    pub fn intensity(&self, x: &NodeField) -> NodeField {
        x.map(|v| self.sigma.eval(v))
    }

    /// `B(x)ξ`.
    pub fn apply(&self, x: &NodeField, xi: &[f64]) -> Result<NodeField> {
        Ok(self.intensity(x).mul(&self.base.apply(xi)?))
    }

    /// `‖B(x)‖²_HS = Σ b_m² ‖σ(x) e_m‖²`, optionally after smoothing each column.
    pub fn hs_norm_sq_at(&self, x: &NodeField, smoother: Option<&EllipticSmoother>) -> Result<f64> {
        self.weighted_columns(&self.intensity(x), smoother)
    }

    /// `‖B(x₁) − B(x₂)‖_HS`.
    pub fn hs_distance(&self, x1: &NodeField, x2: &NodeField) -> Result<f64> {
        let diff = self.intensity(x1).sub(&self.intensity(x2));
        Ok(self.weighted_columns(&diff, None)?.sqrt())
    }

    fn weighted_columns(&self, s: &NodeField, smoother: Option<&EllipticSmoother>) -> Result<f64> {
        let mut total = 0.0;
        for (m, b) in self.base.coeffs().iter().enumerate() {
            if *b == 0.0 {
                continue;
            }
            let col = s.mul(&self.base.basis_field(m));
            let col = match smoother {
                Some(sm) => sm.apply(&col)?,
                None => col,
            };
            total += b * b * col.norm_sq();
        }
        Ok(total)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CertificationReport {
    pub empirical_l: f64,
    pub empirical_r: f64,
    pub declared_l: f64,
    pub declared_r: f64,
    pub samples: usize,
}

/// Empirical maxima of `‖B(x₁) − B(x₂)‖/‖x₁ − x₂‖` and `‖B(x)‖/(1 + ‖x‖)`
/// over random fields, checked against the declared `L_B`, `R_B`.
pub fn certify_constants(noise: &MultiplicativeNoise, sample_count: usize, seed: u64) -> Result<CertificationReport> {
    if sample_count < 2 {
        return Err(Error::invalid("sample_count", "need at least 2 samples"));
    }
    let grid = *noise.base().grid();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scales = [0.05, 0.3, 1.0, 3.0];
    let gaps = [1e-4, 1e-2, 0.3, 2.0];
    let random_field = |amp: f64, rng: &mut ChaCha8Rng| {
        let v = (0..grid.node_count()).map(|_| amp * rng.sample::<f64, _>(StandardNormal)).collect();
        NodeField::from_values(grid, v).expect("length matches")
    };
    let mut report = CertificationReport {
        empirical_l: 0.0,
        empirical_r: 0.0,
        declared_l: noise.lipschitz_constant(),
        declared_r: noise.growth_constant(),
        samples: sample_count,
    };
    for s in 0..sample_count {
        let x1 = random_field(scales[s % scales.len()], &mut rng);
        let mut x2 = x1.clone();
        x2.axpy(1.0, &random_field(gaps[(s / scales.len()) % gaps.len()], &mut rng));
        let dx = x1.sub(&x2).norm_sq().sqrt();
        if dx > 0.0 {
            report.empirical_l = report.empirical_l.max(noise.hs_distance(&x1, &x2)? / dx);
        }
        for x in [&x1, &x2] {
            let r = noise.hs_norm_sq_at(x, None)?.sqrt() / (1.0 + x.norm_sq().sqrt());
            report.empirical_r = report.empirical_r.max(r);
        }
    }
    let zero = NodeField::zeros(grid);
    report.empirical_r = report.empirical_r.max(noise.hs_norm_sq_at(&zero, None)?.sqrt());

    let slack = 1.0 + 1e-6;
    if report.empirical_l > report.declared_l * slack {
        return Err(Error::CertificationFailed { which: "L_B", declared: report.declared_l, empirical: report.empirical_l });
    }
    if report.empirical_r > report.declared_r * slack {
        return Err(Error::CertificationFailed { which: "R_B", declared: report.declared_r, empirical: report.empirical_r });
    }
    Ok(report)
}
