//! Time integration of the λ-regularised equation
//!
//! ```text
//! dX − div(γ_λ(∇X) + λ∇X) dt + β_λ(X) dt = B^ε dW
//! ```
//!
//! by a three-stage splitting. Writing `γ_λ(r) = (r − J_λ r)/λ`, one step is
//!
//! 1. `w = Xⁿ − (dt/λ)·div J_λ(∇Xⁿ)` (explicit, `J_λ` is nonexpansive),
//! 2. `v = (I − dt(1/λ + λ)Δ)⁻¹ w` (implicit, linear),
//! 3. `u = (I + dt β_λ)⁻¹ v = (λv + dt R_{λ+dt} v)/(λ + dt)` (nodewise, exact),
//!
//! followed by `Xⁿ⁺¹ = u + B^ε ΔWⁿ`.
//!
//! The splitting error grows like `dt/λ`, so small-λ studies can switch to
//! [`TimeScheme::Implicit`], which solves `u + dt·A_λ(u) = Xⁿ` by Newton's method.

mod implicit;
mod picard;
mod study;

pub use picard::{run_multiplicative_picard, ContractionReport, IntervalReport, PicardConfig, PicardSchedule};
pub use study::{
    continuous_dependence_experiment, convergence_study, simulate, sup_mean_distance, ConvergenceTable,
    DependenceReport, StudyRow,
};

use rayon::prelude::*;

use crate::diagnostics::{ledger_row, EnergyLedger, LedgerRow, StepFields, StepScalars};
use crate::grid::{default_smoothing_power, divergence, gradient, EdgeField, EllipticSmoother, Grid, HelmholtzSolver, NodeField};
use crate::monotone::{ScalarGraph, VectorGraph};
use crate::noise::{MultiplicativeNoise, SpectralHS, WienerSampler};
use crate::{Error, Result};

#[derive(Debug, Clone)]
pub enum NoiseModel {
    Additive(SpectralHS),
    Multiplicative(MultiplicativeNoise),
}

impl NoiseModel {
    pub fn grid(&self) -> &Grid {
        match self {
            NoiseModel::Additive(b) => b.grid(),
            NoiseModel::Multiplicative(m) => m.base().grid(),
        }
    }

    pub fn modes(&self) -> usize {
        match self {
            NoiseModel::Additive(b) => b.modes(),
            NoiseModel::Multiplicative(m) => m.base().modes(),
        }
    }

    pub fn is_additive(&self) -> bool {
        matches!(self, NoiseModel::Additive(_))
    }
}

/// What a trajectory keeps besides its ledger.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Recording {
    /// Keep `Xⁿ` every this many steps; 0 keeps only the initial and final states.
    pub state_every: usize,
    /// Keep η, flux, ξ, pre-noise state and noise field of every step.
    pub fields: bool,
}

impl Recording {
    pub fn full() -> Self {
        Recording { state_every: 1, fields: true }
    }

    pub fn terminal() -> Self {
        Recording { state_every: 0, fields: false }
    }
}

impl Default for Recording {
    fn default() -> Self {
        Recording { state_every: 1, fields: false }
    }
}

pub const DEFAULT_LAMBDA: f64 = 1e-2;

/// Deterministic part of a step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TimeScheme {
    /// Explicit `J_λ` flux, implicit linear diffusion, exact reaction step.
    #[default]
    Splitting,
    /// Backward Euler on the whole of `A_λ`.
    Implicit,
}

#[derive(Debug, Clone)]
pub struct SolverConfig {
    pub grid: Grid,
    pub lambda: f64,
    pub eps: f64,
    /// Power `k` of the noise smoothing `(I − εΔ)⁻ᵏ`.
    pub smoothing_power: usize,
    pub dt: f64,
    pub t_final: f64,
    pub paths: usize,
    pub gamma: VectorGraph,
    pub beta: ScalarGraph,
    pub noise: NoiseModel,
    pub x0: NodeField,
    pub seed: u64,
    pub recording: Recording,
    pub scheme: TimeScheme,
}

impl SolverConfig {
    /// Defaults: λ = 1e−2, ε = 0, `k` from the dimension and the flux exponent,
    /// dt = 1e−3, T = 0.1, one path, seed 0.
    pub fn new(gamma: VectorGraph, beta: ScalarGraph, noise: NoiseModel, x0: NodeField) -> Self {
        let grid = *x0.grid();
        SolverConfig {
            grid,
            lambda: DEFAULT_LAMBDA,
            eps: 0.0,
            smoothing_power: default_smoothing_power(grid.dim(), gamma.leray_lions().p),
            dt: 1e-3,
            t_final: 0.1,
            paths: 1,
            gamma,
            beta,
            noise,
            x0,
            seed: 0,
            recording: Recording::default(),
            scheme: TimeScheme::Splitting,
        }
    }

    pub fn steps(&self) -> usize {
        (self.t_final / self.dt).round() as usize
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda > 0.0 && self.lambda < 1.0) {
            return Err(Error::invalid("lambda", format!("must lie in (0, 1), got {}", self.lambda)));
        }
        if !(self.eps >= 0.0) || !self.eps.is_finite() {
            return Err(Error::invalid("eps", format!("must be finite and ≥ 0, got {}", self.eps)));
        }
        if self.smoothing_power == 0 {
            return Err(Error::invalid("smoothing_power", "must be positive"));
        }
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(Error::invalid("dt", format!("must be positive, got {}", self.dt)));
        }
        if !(self.t_final > 0.0) || !self.t_final.is_finite() {
            return Err(Error::invalid("t_final", format!("must be positive, got {}", self.t_final)));
        }
        let steps = self.steps();
        if steps == 0 || (steps as f64 * self.dt - self.t_final).abs() > 1e-9 * self.t_final {
            return Err(Error::invalid("dt", format!("dt = {} does not divide T = {}", self.dt, self.t_final)));
        }
        if self.paths == 0 {
            return Err(Error::invalid("paths", "need at least one path"));
        }
        if self.gamma.dim() != self.grid.dim() {
            return Err(Error::DimensionMismatch { expected: self.grid.dim(), found: self.gamma.dim() });
        }
        if *self.x0.grid() != self.grid || *self.noise.grid() != self.grid {
            return Err(Error::Incompatible("initial datum, noise and config must share one grid".into()));
        }
        if !self.x0.is_finite() {
            return Err(Error::invalid("x0", "initial datum must be finite"));
        }
        Ok(())
    }

    /// Additive operator actually used, `B^ε`.
    pub fn effective_additive(&self) -> Result<Option<SpectralHS>> {
        match &self.noise {
            NoiseModel::Additive(b) => Ok(Some(b.smooth(self.eps, self.smoothing_power)?)),
            NoiseModel::Multiplicative(_) => Ok(None),
        }
    }
}

/// `A_λ u = −div(γ_λ(∇u) + λ∇u) + β_λ(u)`.
pub fn apply_a_lambda(gamma: &VectorGraph, beta: &ScalarGraph, lambda: f64, u: &NodeField) -> Result<NodeField> {
    if !u.is_finite() {
        return Err(Error::invalid("u", "argument must be finite"));
    }
    let grad = gradient(u);
    let d = u.grid().dim();
    let mut flux = EdgeField::zeros(*u.grid());
    for (g, o) in grad.values().chunks(d).zip(flux.values_mut().chunks_mut(d)) {
        let y = gamma.yosida(lambda, g)?;
        for ((o, y), g) in o.iter_mut().zip(y).zip(g) {
            *o = y + lambda * g;
        }
    }
    let mut out = divergence(&flux).scaled(-1.0);
    for (o, x) in out.values_mut().iter_mut().zip(u.values()) {
        *o += beta.yosida(lambda, *x)?;
    }
    Ok(out)
}

/// Everything produced by one step.
#[derive(Debug, Clone)]
pub struct StepOutput {
    pub next: NodeField,
    /// Gradient the flux is evaluated at: `∇Xⁿ` (splitting) or `∇u` (implicit).
    pub grad: EdgeField,
    /// `γ_λ` of `grad`.
    pub eta: EdgeField,
    /// Effective flux `F` with `u − Xⁿ = dt(div F − ξ)`:
    /// `(1/λ + λ)∇v − J_λ(∇Xⁿ)/λ` for the splitting, `η + λ∇u` for the implicit scheme.
    pub flux: EdgeField,
    /// `β_λ(u)`
    pub xi: NodeField,
    /// `u`, the state before the noise is added.
    pub pre_noise: NodeField,
    pub noise: NodeField,
    pub increments: Vec<f64>,
    pub row: LedgerRow,
}

struct Deterministic {
    grad: EdgeField,
    eta: EdgeField,
    flux: EdgeField,
    xi: NodeField,
    pre_noise: NodeField,
    conjugate: f64,
    envelope: f64,
    flux_p: f64,
}

enum Stage {
    /// After the linear solve; the reaction step is still to come.
    Linear(NodeField),
    /// Fully updated pre-noise state.
    Final(NodeField),
}

/// Prepared one-step map for a config.
#[derive(Debug)]
pub struct Stepper<'a> {
    cfg: &'a SolverConfig,
    implicit: HelmholtzSolver,
    additive: Option<SpectralHS>,
    smoother: Option<EllipticSmoother>,
    sampler: WienerSampler,
}

impl<'a> Stepper<'a> {
    pub fn new(cfg: &'a SolverConfig) -> Result<Self> {
        cfg.validate()?;
        let c = 1.0 / cfg.lambda + cfg.lambda;
        let implicit = HelmholtzSolver::new(cfg.grid.node_lattice(), cfg.dt * c)?;
        let additive = cfg.effective_additive()?;
        let smoother = match (&cfg.noise, cfg.eps > 0.0) {
            (NoiseModel::Multiplicative(_), true) => Some(EllipticSmoother::new(cfg.grid, cfg.eps, cfg.smoothing_power)?),
            _ => None,
        };
        Ok(Stepper { cfg, implicit, additive, smoother, sampler: WienerSampler::new(cfg.seed, cfg.dt)? })
    }

    pub fn config(&self) -> &SolverConfig {
        self.cfg
    }

    pub fn sampler(&self) -> &WienerSampler {
        &self.sampler
    }

    /// `J_λ(grad)` and `∫|J_λ(grad)|ᵖ`.
    fn flux_resolvent(&self, grad: &EdgeField) -> Result<(EdgeField, f64)> {
        let cfg = self.cfg;
        let d = cfg.grid.dim();
        let p = cfg.gamma.leray_lions().p;
        let mut j = EdgeField::zeros(cfg.grid);
        let mut flux_p = 0.0;
        for (g, o) in grad.values().chunks(d).zip(j.values_mut().chunks_mut(d)) {
            cfg.gamma.resolvent_into(cfg.lambda, g, o)?;
            flux_p += crate::monotone::vector_norm(o).powf(p);
        }
        Ok((j, flux_p * cfg.grid.weight()))
    }

    fn deterministic(&self, x: &NodeField) -> Result<Deterministic> {
        let cfg = self.cfg;
        let (lam, dt) = (cfg.lambda, cfg.dt);
        let grid = cfg.grid;

        let (grad, j, flux_p, flux, pre) = match cfg.scheme {
            TimeScheme::Splitting => {
                let grad = gradient(x);
                let (j, flux_p) = self.flux_resolvent(&grad)?;
                let mut w = x.clone();
                w.axpy(-dt / lam, &divergence(&j));
                let v = NodeField::from_values(grid, self.implicit.solve(w.values())?)?;
                let mut flux = gradient(&v).scaled(1.0 / lam + lam);
                flux.axpy(-1.0 / lam, &j);
                (grad, j, flux_p, flux, Stage::Linear(v))
            }
            TimeScheme::Implicit => {
                let solve = implicit::ImplicitSolve { gamma: &cfg.gamma, beta: &cfg.beta, lambda: lam, dt };
                let u = solve.solve(x, x.clone())?;
                let grad = gradient(&u);
                let (j, flux_p) = self.flux_resolvent(&grad)?;
                let mut flux = grad.sub(&j).scaled(1.0 / lam);
                flux.axpy(lam, &grad);
                (grad, j, flux_p, flux, Stage::Final(u))
            }
        };
        let eta = grad.sub(&j).scaled(1.0 / lam);

        let pot = cfg.beta.potential();
        let mut u = vec![0.0; grid.node_count()];
        let mut xi = vec![0.0; grid.node_count()];
        let (mut conjugate, mut envelope) = (0.0, 0.0);
        for (i, (ui, xii)) in u.iter_mut().zip(xi.iter_mut()).enumerate() {
            let r = match &pre {
                // R_λ(u) = R_{λ+dt}(v), so ξ = (u − r)/λ lies in β(r).
                Stage::Linear(v) => {
                    let vi = v.values()[i];
                    let r = cfg.beta.resolvent(lam + dt, vi)?;
                    *ui = (lam * vi + dt * r) / (lam + dt);
                    r
                }
                Stage::Final(done) => {
                    *ui = done.values()[i];
                    cfg.beta.resolvent(lam, *ui)?
                }
            };
            let range = cfg.beta.value(r);
            *xii = ((*ui - r) / lam).clamp(range.lo, range.hi);
            conjugate += pot.conjugate(*xii);
            envelope += (*ui - r) * (*ui - r) / (2.0 * lam) + pot.eval(r);
        }
        Ok(Deterministic {
            grad,
            eta,
            flux,
            xi: NodeField::from_values(grid, xi)?,
            pre_noise: NodeField::from_values(grid, u)?,
            conjugate: conjugate * grid.weight(),
            envelope: envelope * grid.weight(),
            flux_p,
        })
    }

    /// Noise field and `½ E‖N‖²` for step `step`. Multiplicative noise is
    /// evaluated at `frozen` (the Picard iterate, or the current state).
    fn noise(&self, increments: &[f64], frozen: &NodeField) -> Result<(NodeField, f64)> {
        let dt = self.cfg.dt;
        match (&self.cfg.noise, &self.additive) {
            (NoiseModel::Additive(_), Some(b)) => Ok((b.apply(increments)?, 0.5 * b.hs_norm().powi(2) * dt)),
            (NoiseModel::Multiplicative(m), _) => {
                let field = m.apply(frozen, increments)?;
                let field = match &self.smoother {
                    Some(s) => s.apply(&field)?,
                    None => field,
                };
                Ok((field, 0.5 * m.hs_norm_sq_at(frozen, self.smoother.as_ref())? * dt))
            }
            _ => unreachable!("additive noise always has an effective operator"),
        }
    }

    /// One step from `x` with given Wiener increments. `frozen` selects where
    /// multiplicative noise is evaluated (defaults to `x`).
    pub fn advance(&self, x: &NodeField, step: usize, increments: Vec<f64>, frozen: Option<&NodeField>) -> Result<StepOutput> {
        if increments.len() != self.cfg.noise.modes() {
            return Err(Error::DimensionMismatch { expected: self.cfg.noise.modes(), found: increments.len() });
        }
        let det = self.deterministic(x)?;
        let (noise, ito) = self.noise(&increments, frozen.unwrap_or(x))?;
        let next = det.pre_noise.add(&noise);
        let row = ledger_row(
            StepFields { next: &next, grad: &det.grad, eta: &det.eta, xi: &det.xi, pre_noise: &det.pre_noise, noise: &noise },
            StepScalars {
                time: (step + 1) as f64 * self.cfg.dt,
                dt: self.cfg.dt,
                lambda: self.cfg.lambda,
                ito_correction: ito,
                conjugate: det.conjugate,
                envelope: det.envelope,
                flux_p: det.flux_p,
            },
        );
        Ok(StepOutput {
            next,
            grad: det.grad,
            eta: det.eta,
            flux: det.flux,
            xi: det.xi,
            pre_noise: det.pre_noise,
            noise,
            increments,
            row,
        })
    }

    /// Increments of `(path, step)` from the config's sampler.
    pub fn increments(&self, path: usize, step: usize) -> Vec<f64> {
        self.sampler.increment(path, step, self.cfg.noise.modes())
    }

    /// One additive-noise step with given increments.
    pub fn step_additive(&self, state: &NodeField, dw: &[f64]) -> Result<NodeField> {
        if !self.cfg.noise.is_additive() {
            return Err(Error::Incompatible("step_additive needs additive noise".into()));
        }
        Ok(self.advance(state, 0, dw.to_vec(), None)?.next)
    }
}

/// Convenience wrapper around [`Stepper::step_additive`].
pub fn step_additive(cfg: &SolverConfig, state: &NodeField, dw: &[f64]) -> Result<NodeField> {
    Stepper::new(cfg)?.step_additive(state, dw)
}

/// One path: times and states (as selected by [`Recording`]), per-step
/// fields when requested, Wiener increments and the energy ledger.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRecord {
    pub path: usize,
    pub dt: f64,
    pub lambda: f64,
    /// Leray–Lions exponent `p` of the flux graph.
    pub flux_exponent: f64,
    pub times: Vec<f64>,
    pub states: Vec<NodeField>,
    pub grad: Vec<EdgeField>,
    pub eta: Vec<EdgeField>,
    pub flux: Vec<EdgeField>,
    pub xi: Vec<NodeField>,
    pub pre_noise: Vec<NodeField>,
    pub noise: Vec<NodeField>,
    pub increments: Vec<Vec<f64>>,
    pub initial: NodeField,
    pub terminal: NodeField,
    pub ledger: EnergyLedger,
}

impl TrajectoryRecord {
    pub(crate) fn start(cfg: &SolverConfig, path: usize) -> Self {
        TrajectoryRecord {
            path,
            dt: cfg.dt,
            lambda: cfg.lambda,
            flux_exponent: cfg.gamma.leray_lions().p,
            times: vec![0.0],
            states: vec![cfg.x0.clone()],
            grad: Vec::new(),
            eta: Vec::new(),
            flux: Vec::new(),
            xi: Vec::new(),
            pre_noise: Vec::new(),
            noise: Vec::new(),
            increments: Vec::new(),
            initial: cfg.x0.clone(),
            terminal: cfg.x0.clone(),
            ledger: EnergyLedger::new(0.5 * cfg.x0.norm_sq()),
        }
    }

    pub(crate) fn push(&mut self, out: StepOutput, step: usize, total: usize, rec: Recording) {
        self.ledger.update(out.row);
        let keep = if rec.state_every == 0 { step + 1 == total } else { (step + 1) % rec.state_every == 0 || step + 1 == total };
        if keep {
            self.times.push(out.row.time);
            self.states.push(out.next.clone());
        }
        if rec.fields {
            self.grad.push(out.grad);
            self.eta.push(out.eta);
            self.flux.push(out.flux);
            self.xi.push(out.xi);
            self.pre_noise.push(out.pre_noise);
            self.noise.push(out.noise);
        }
        self.increments.push(out.increments);
        self.terminal = out.next;
    }

    pub fn steps(&self) -> usize {
        self.ledger.rows().len()
    }
}

/// Integrate one path. Multiplicative noise is evaluated at the current
/// state (the fixed point of the Picard loop).
pub fn run_path(cfg: &SolverConfig, path: usize) -> Result<TrajectoryRecord> {
    let stepper = Stepper::new(cfg)?;
    run_path_with(&stepper, path)
}

fn run_path_with(stepper: &Stepper<'_>, path: usize) -> Result<TrajectoryRecord> {
    let cfg = stepper.config();
    let total = cfg.steps();
    let mut rec = TrajectoryRecord::start(cfg, path);
    let mut x = cfg.x0.clone();
    for step in 0..total {
        let out = stepper.advance(&x, step, stepper.increments(path, step), None)?;
        if !out.next.is_finite() {
            return Err(Error::NonFinite { path, step });
        }
        x = out.next.clone();
        rec.push(out, step, total, cfg.recording);
    }
    Ok(rec)
}

/// [`run_path`] restricted to additive noise.
pub fn run_path_additive(cfg: &SolverConfig, path: usize) -> Result<TrajectoryRecord> {
    if !cfg.noise.is_additive() {
        return Err(Error::Incompatible("multiplicative noise goes through the Picard loop".into()));
    }
    run_path(cfg, path)
}

/// All paths of an additive-noise config, in parallel, ordered by path.
pub fn run_paths(cfg: &SolverConfig) -> Result<Vec<TrajectoryRecord>> {
    if !cfg.noise.is_additive() {
        return Err(Error::Incompatible("multiplicative noise goes through the Picard loop".into()));
    }
    let stepper = Stepper::new(cfg)?;
    (0..cfg.paths).into_par_iter().map(|p| run_path_with(&stepper, p)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::monotone::LerayLionsParams;
    use std::f64::consts::PI;

    fn heat(grid: Grid, lambda: f64) -> SolverConfig {
        let x0 = NodeField::from_fn(grid, |x, _| (PI * x).sin());
        let mut cfg = SolverConfig::new(
            VectorGraph::identity(grid.dim()).unwrap(),
            ScalarGraph::zero(),
            NoiseModel::Additive(SpectralHS::zero(grid)),
            x0,
        );
        cfg.lambda = lambda;
        cfg
    }

    #[test]
    fn defaults_and_validation() {
        let g = Grid::dirichlet_1d(15).unwrap();
        let mut cfg = heat(g, 0.01);
        assert_eq!(cfg.lambda, 1e-2);
        assert_eq!(cfg.eps, 0.0);
        assert_eq!(cfg.smoothing_power, 2);
        assert_eq!(cfg.steps(), 100);
        cfg.validate().unwrap();
        cfg.lambda = 0.0;
        assert!(cfg.validate().is_err());
        cfg.lambda = 0.1;
        cfg.dt = 0.03;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn a_lambda_zero_and_eigenfield() {
        let g = Grid::dirichlet_1d(31).unwrap();
        let gamma = VectorGraph::identity(1).unwrap();
        let lam = 0.1;
        let z = apply_a_lambda(&gamma, &ScalarGraph::zero(), lam, &NodeField::zeros(g)).unwrap();
        assert!(z.values().iter().all(|v| *v == 0.0));
        let e = NodeField::from_fn(g, |x, _| (PI * x).sin());
        let mu = 4.0 / (g.h() * g.h()) * (PI * g.h() / 2.0).sin().powi(2);
        let a = apply_a_lambda(&gamma, &ScalarGraph::zero(), lam, &e).unwrap();
        let expect = e.scaled((1.0 / (1.0 + lam) + lam) * mu);
        assert!(a.sub(&expect).norm_sq().sqrt() < 1e-10);
    }

    #[test]
    fn one_step_eigen_factor() {
        let g = Grid::dirichlet_1d(31).unwrap();
        let lam = 0.2;
        let mut cfg = heat(g, lam);
        cfg.dt = 1e-2;
        cfg.t_final = 1e-2;
        let mu = 4.0 / (g.h() * g.h()) * (PI * g.h() / 2.0).sin().powi(2);
        let a = cfg.dt * mu;
        let factor = (1.0 + a / (lam * (1.0 + lam))) / (1.0 + a * (1.0 / lam + lam));
        let next = step_additive(&cfg, &cfg.x0, &[]).unwrap();
        assert!(next.sub(&cfg.x0.scaled(factor)).norm_sq().sqrt() < 1e-12);
        let zero = step_additive(&cfg, &NodeField::zeros(g), &[]).unwrap();
        assert!(zero.values().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn sign_reaction_on_constant_state() {
        // Constant state on a periodic grid: no diffusion, only the reaction step.
        let g = Grid::periodic_1d(8).unwrap();
        let x0 = NodeField::from_fn(g, |_, _| 0.2);
        let mut cfg = SolverConfig::new(
            VectorGraph::identity(1).unwrap(),
            ScalarGraph::sign(),
            NoiseModel::Additive(SpectralHS::zero(g)),
            x0,
        );
        cfg.lambda = 0.5;
        cfg.dt = 0.5;
        cfg.t_final = 0.5;
        // (λ·0.2 + dt·R₁(0.2))/(λ + dt) with R₁(0.2) = 0.
        let next = step_additive(&cfg, &cfg.x0, &[]).unwrap();
        assert!(next.values().iter().all(|v| (v - 0.1).abs() < 1e-15));
    }

    #[test]
    fn zero_is_fixed_point() {
        let g = Grid::dirichlet_1d(15).unwrap();
        let gamma = VectorGraph::p_power(1, 3.0).unwrap();
        for beta in [ScalarGraph::sign(), ScalarGraph::power(3.0).unwrap(), ScalarGraph::relay(1.0).unwrap()] {
            let cfg = SolverConfig::new(gamma.clone(), beta, NoiseModel::Additive(SpectralHS::zero(g)), NodeField::zeros(g));
            let rec = run_path_additive(&cfg, 0).unwrap();
            assert!(rec.states.iter().all(|s| s.values().iter().all(|v| *v == 0.0)));
            assert!(rec.ledger.rows().iter().all(|r| r.residual == 0.0 && r.kinetic == 0.0));
        }
    }

    #[test]
    fn recording_modes() {
        let g = Grid::dirichlet_1d(7).unwrap();
        let mut cfg = heat(g, 0.1);
        cfg.recording = Recording::terminal();
        let rec = run_path(&cfg, 0).unwrap();
        assert_eq!(rec.states.len(), 2);
        assert_eq!(rec.times, vec![0.0, cfg.t_final]);
        assert!(rec.eta.is_empty());
        cfg.recording = Recording { state_every: 30, fields: true };
        let rec = run_path(&cfg, 0).unwrap();
        assert_eq!(rec.times.len(), 1 + 3 + 1);
        assert_eq!(rec.eta.len(), 100);
        assert_eq!(rec.terminal, *rec.states.last().unwrap());
    }

    #[test]
    fn determinism_and_path_order() {
        let g = Grid::dirichlet_1d(15).unwrap();
        let mut cfg = SolverConfig::new(
            VectorGraph::p_power(1, 3.0).unwrap(),
            ScalarGraph::sign(),
            NoiseModel::Additive(SpectralHS::power_law(g, 4, 0.5, 1.0).unwrap()),
            NodeField::zeros(g),
        );
        cfg.paths = 4;
        cfg.seed = 9;
        let a = run_paths(&cfg).unwrap();
        let b = run_paths(&cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a[2], run_path(&cfg, 2).unwrap());
        assert_ne!(a[0].terminal, a[1].terminal);
    }

    #[test]
    fn multiplicative_rejected_by_additive_runner() {
        let g = Grid::dirichlet_1d(7).unwrap();
        let m = MultiplicativeNoise::new(SpectralHS::new(g, vec![0.5]).unwrap(), crate::noise::Sigma::clip(1.0));
        let cfg = SolverConfig::new(
            VectorGraph::identity(1).unwrap().with_leray_lions(LerayLionsParams::default()),
            ScalarGraph::zero(),
            NoiseModel::Multiplicative(m),
            NodeField::zeros(g),
        );
        assert!(matches!(run_path_additive(&cfg, 0), Err(Error::Incompatible(_))));
        assert!(run_path(&cfg, 0).is_ok());
    }
}
