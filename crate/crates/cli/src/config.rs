//! Experiment configuration: TOML schema, defaults and validation.
//!
//! Parsing happens in two stages. Deserialization rejects unknown keys and
//! unknown kinds (with the key path in the message); [`ExperimentConfig::resolve`]
//! then checks ranges, fills every default that depends on other fields and
//! returns a config whose re-serialization parses back to itself.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use spdelab::grid::{default_smoothing_power, Boundary, Grid, NodeField};
use spdelab::monotone::{LerayLionsParams, ScalarGraph, VectorGraph};
use spdelab::noise::{MultiplicativeNoise, Sigma, SpectralHS};
use spdelab::solver::{NoiseModel, PicardConfig, Recording, SolverConfig, TimeScheme};

use crate::error::CliError;
use crate::SCHEMA_VERSION;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    Simulate,
    Picard,
    Convergence,
    Depend,
    Verify,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::Picard => "picard",
            Command::Convergence => "convergence",
            Command::Depend => "depend",
            Command::Verify => "verify",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub command: Command,
    #[serde(default)]
    pub grid: GridSpec,
    #[serde(default)]
    pub gamma: GammaSpec,
    #[serde(default)]
    pub beta: BetaSpec,
    #[serde(default)]
    pub noise: NoiseSpec,
    #[serde(default)]
    pub initial: FieldSpec,
    #[serde(default)]
    pub solver: SolverSpec,
    #[serde(default)]
    pub output: OutputSpec,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle: Option<OracleSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub picard: Option<PicardSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub convergence: Option<ConvergenceSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub depend: Option<DependSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verify: Option<VerifySpec>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryKind {
    Dirichlet,
    Periodic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSpec {
    pub dim: usize,
    pub n: usize,
    pub boundary: BoundaryKind,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec { dim: 1, n: 63, boundary: BoundaryKind::Dirichlet }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GammaKind {
    Identity,
    PPower,
    RadialExp,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GammaSpec {
    pub kind: GammaKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    /// Declared growth and coercivity constants; filled from the graph when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub leray_lions: Option<LerayLionsSpec>,
}

impl Default for GammaSpec {
    fn default() -> Self {
        GammaSpec { kind: GammaKind::Identity, p: None, leray_lions: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LerayLionsSpec {
    pub p: f64,
    pub k: f64,
    pub d1: f64,
    pub d2: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BetaKind {
    Zero,
    Identity,
    Linear,
    Power,
    Sign,
    Relay,
    Polynomial,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BetaSpec {
    pub kind: BetaKind,
    /// Slope for `linear` and `relay`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
    /// Exponent for `power`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    /// Odd-power coefficients for `polynomial`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub coefficients: Option<Vec<f64>>,
}

impl Default for BetaSpec {
    fn default() -> Self {
        BetaSpec { kind: BetaKind::Zero, c: None, p: None, coefficients: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseKind {
    None,
    Additive,
    Multiplicative,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseSpec {
    pub kind: NoiseKind,
    /// Explicit mode coefficients; overrides the power law when present.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub coefficients: Option<Vec<f64>>,
    /// Power law `amplitude · m^(−decay)` over `modes` modes.
    pub modes: usize,
    pub amplitude: f64,
    pub decay: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma: Option<SigmaSpec>,
}

impl Default for NoiseSpec {
    fn default() -> Self {
        NoiseSpec { kind: NoiseKind::None, coefficients: None, modes: 1, amplitude: 1.0, decay: 1.0, sigma: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SigmaKind {
    Clip,
    Sine,
    Tanh,
    Constant,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SigmaSpec {
    pub kind: SigmaKind,
    pub scale: f64,
}

impl Default for SigmaSpec {
    fn default() -> Self {
        SigmaSpec { kind: SigmaKind::Clip, scale: 1.0 }
    }
}

impl SigmaSpec {
    pub fn build(&self) -> Sigma {
        match self.kind {
            SigmaKind::Clip => Sigma::clip(self.scale),
            SigmaKind::Sine => Sigma::sine(self.scale),
            SigmaKind::Tanh => Sigma::tanh(self.scale),
            SigmaKind::Constant => Sigma::constant(self.scale),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldKind {
    Zero,
    /// `amplitude · Π sin(mode·π·x)` on Dirichlet grids, `sin(2·mode·π·x)` on periodic ones.
    Sine,
    Constant,
    /// `amplitude · Π 4x(1 − x)`.
    Bump,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FieldSpec {
    pub kind: FieldKind,
    pub amplitude: f64,
    pub mode: usize,
}

impl Default for FieldSpec {
    fn default() -> Self {
        FieldSpec { kind: FieldKind::Zero, amplitude: 1.0, mode: 1 }
    }
}

impl FieldSpec {
    pub fn build(&self, grid: Grid) -> NodeField {
        let a = self.amplitude;
        let m = self.mode as f64;
        let freq = if grid.is_periodic() { 2.0 * m * PI } else { m * PI };
        let two_d = grid.dim() == 2;
        match self.kind {
            FieldKind::Zero => NodeField::zeros(grid),
            FieldKind::Constant => NodeField::from_fn(grid, |_, _| a),
            FieldKind::Sine => NodeField::from_fn(grid, |x, y| {
                let s = (freq * x).sin();
                a * if two_d { s * (freq * y).sin() } else { s }
            }),
            FieldKind::Bump => NodeField::from_fn(grid, |x, y| {
                let b = 4.0 * x * (1.0 - x);
                a * if two_d { b * 4.0 * y * (1.0 - y) } else { b }
            }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchemeKind {
    Splitting,
    Implicit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSpec {
    pub lambda: f64,
    pub eps: f64,
    /// Noise smoothing power; filled from the dimension and flux exponent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub smoothing_power: Option<usize>,
    pub dt: f64,
    pub t_final: f64,
    pub paths: usize,
    pub seed: u64,
    pub scheme: SchemeKind,
    /// Keep every `record_every`-th state; 0 keeps only the terminal one.
    pub record_every: usize,
}

impl Default for SolverSpec {
    fn default() -> Self {
        SolverSpec {
            lambda: spdelab::solver::DEFAULT_LAMBDA,
            eps: 0.0,
            smoothing_power: None,
            dt: 1e-3,
            t_final: 0.1,
            paths: 1,
            seed: 0,
            scheme: SchemeKind::Splitting,
            record_every: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSpec {
    /// Used when `--out` is not given.
    pub dir: String,
    /// Number of paths written to ledger.csv and trajectory.csv.
    pub ledger_paths: usize,
    pub trajectory_paths: usize,
}

impl Default for OutputSpec {
    fn default() -> Self {
        OutputSpec { dir: "out".into(), ledger_paths: 1, trajectory_paths: 1 }
    }
}

/// Thresholds for the checks each command reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub nonnegativity: f64,
    pub heat_error: f64,
    pub rate_min: f64,
    pub rate_max: f64,
    pub sigmas: f64,
    /// Constant `C` in the allowance `C·dt` of the expected energy residual.
    pub energy_dt_constant: f64,
    pub contraction_slack: f64,
    pub dependence_bound: f64,
    pub uniqueness: f64,
    pub duality: f64,
    pub commutation: f64,
    pub fenchel_young: f64,
    pub fenchel_equality: f64,
    pub resolvent_identity: f64,
    pub monotonicity: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            nonnegativity: 1e-12,
            heat_error: 1e-3,
            rate_min: 1.6,
            rate_max: 2.6,
            sigmas: 3.0,
            energy_dt_constant: 40.0,
            contraction_slack: 0.05,
            dependence_bound: 1.5,
            uniqueness: 1e-12,
            duality: 1e-13,
            commutation: 1e-12,
            fenchel_young: 1e-10,
            fenchel_equality: 1e-8,
            resolvent_identity: 1e-10,
            monotonicity: 1e-12,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OracleKind {
    /// Deterministic one-mode decay.
    Heat,
    /// Linear equation driven by one noise mode.
    OrnsteinUhlenbeck,
    /// Expected energy balance under dt refinement.
    Energy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleSpec {
    pub kind: OracleKind,
    /// Number of time steps compared: dt, dt/2, dt/4, ...
    #[serde(default = "default_levels")]
    pub levels: usize,
}

fn default_levels() -> usize {
    3
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PicardSpec {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tau: Option<f64>,
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Also rerun with τ/2 and require a smaller worst factor.
    pub halving_check: bool,
    /// Also rerun with σ constant and require one effective iteration per interval.
    pub constant_sigma_check: bool,
}

impl Default for PicardSpec {
    fn default() -> Self {
        let d = PicardConfig::default();
        PicardSpec {
            tau: None,
            tolerance: d.tolerance,
            max_iterations: d.max_iterations,
            halving_check: false,
            constant_sigma_check: false,
        }
    }
}

impl PicardSpec {
    pub fn build(&self) -> PicardConfig {
        PicardConfig { tau: self.tau, tolerance: self.tolerance, max_iterations: self.max_iterations }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConvergenceSpec {
    pub lambdas: Vec<f64>,
    pub epsilons: Vec<f64>,
}

impl Default for ConvergenceSpec {
    fn default() -> Self {
        ConvergenceSpec { lambdas: vec![1e-1, 1e-2, 1e-3], epsilons: Vec::new() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DependSpec {
    /// Direction of the initial-datum perturbation.
    pub perturbation: FieldSpec,
    pub scales: Vec<f64>,
    /// Relative perturbations of the noise amplitude (additive noise only).
    pub noise_scales: Vec<f64>,
    /// Also compare against the same run without noise.
    pub remove_noise: bool,
}

impl Default for DependSpec {
    fn default() -> Self {
        DependSpec {
            perturbation: FieldSpec { kind: FieldKind::Sine, amplitude: 1.0, mode: 3 },
            scales: vec![1e-1, 1e-2, 1e-3],
            noise_scales: Vec::new(),
            remove_noise: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifySpec {
    /// Random samples per graph in the monotone checks.
    pub samples: usize,
    /// Random field pairs per configuration in the operator checks.
    pub pairs: usize,
    pub seed: u64,
}

impl Default for VerifySpec {
    fn default() -> Self {
        VerifySpec { samples: 10_000, pairs: 1_000, seed: 7 }
    }
}

/// Parses and resolves a TOML document.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, CliError> {
    let de = toml::Deserializer::parse(text).map_err(|e| CliError::config("<document>", e.to_string()))?;
    let raw: ExperimentConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let key = e.path().to_string();
        let key = if key == "." { "<document>".to_string() } else { key };
        CliError::config(key, e.into_inner().message().to_string())
    })?;
    raw.resolve()
}

fn finite_positive(key: &str, v: f64) -> Result<(), CliError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(CliError::config(key, format!("must be positive and finite, got {v}")))
    }
}

fn finite_nonnegative(key: &str, v: f64) -> Result<(), CliError> {
    if v >= 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(CliError::config(key, format!("must be finite and ≥ 0, got {v}")))
    }
}

fn prefixed(section: &str) -> impl Fn(spdelab::Error) -> CliError + '_ {
    move |e| match e {
        spdelab::Error::InvalidParameter { name, reason } => CliError::config(format!("{section}.{name}"), reason),
        other => CliError::config(section, other.to_string()),
    }
}

impl ExperimentConfig {
    /// Serializes the config back to TOML.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config structs serialize to TOML")
    }

    /// Validates every field and fills the derived defaults.
    pub fn resolve(mut self) -> Result<Self, CliError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(CliError::config(
                "schema_version",
                format!("unsupported schema version {} (expected {SCHEMA_VERSION})", self.schema_version),
            ));
        }
        let grid = self.grid()?;

        // Flux graph.
        if self.gamma.kind == GammaKind::PPower {
            let p = self.gamma.p.ok_or_else(|| CliError::config("gamma.p", "p_power needs an exponent"))?;
            if !(p > 1.0) || !p.is_finite() {
                return Err(CliError::config("gamma.p", format!("need p > 1, got {p}")));
            }
        } else if self.gamma.p.is_some() {
            return Err(CliError::config("gamma.p", "only p_power takes an exponent"));
        }
        if self.gamma.leray_lions.is_none() {
            let ll = match self.gamma.kind {
                GammaKind::Identity => *VectorGraph::identity(grid.dim()).map_err(prefixed("gamma"))?.leray_lions(),
                GammaKind::PPower => *VectorGraph::p_power(grid.dim(), self.gamma.p.unwrap_or(2.0))
                    .map_err(prefixed("gamma"))?
                    .leray_lions(),
                GammaKind::RadialExp => {
                    return Err(CliError::config("gamma.leray_lions", "radial_exp needs declared constants"));
                }
            };
            self.gamma.leray_lions = Some(LerayLionsSpec { p: ll.p, k: ll.k, d1: ll.d1, d2: ll.d2 });
        }
        let gamma = self.gamma_graph()?;

        // Reaction graph.
        let b = &self.beta;
        let expect_c = matches!(b.kind, BetaKind::Linear | BetaKind::Relay);
        let expect_p = b.kind == BetaKind::Power;
        let expect_coeffs = b.kind == BetaKind::Polynomial;
        if expect_c != b.c.is_some() {
            return Err(CliError::config("beta.c", "`c` is required for linear/relay and rejected otherwise"));
        }
        if expect_p != b.p.is_some() {
            return Err(CliError::config("beta.p", "`p` is required for power and rejected otherwise"));
        }
        if expect_coeffs != b.coefficients.is_some() {
            return Err(CliError::config(
                "beta.coefficients",
                "`coefficients` is required for polynomial and rejected otherwise",
            ));
        }
        self.beta_graph()?;

        // Noise.
        let nz = &mut self.noise;
        if nz.kind != NoiseKind::None {
            match &nz.coefficients {
                Some(c) => {
                    if c.is_empty() {
                        return Err(CliError::config("noise.coefficients", "need at least one coefficient"));
                    }
                    if let Some(v) = c.iter().find(|v| !v.is_finite()) {
                        return Err(CliError::config("noise.coefficients", format!("non-finite coefficient {v}")));
                    }
                    nz.modes = c.len();
                }
                None => {
                    if nz.modes == 0 {
                        return Err(CliError::config("noise.modes", "need at least one mode"));
                    }
                    if !nz.amplitude.is_finite() {
                        return Err(CliError::config("noise.amplitude", "must be finite"));
                    }
                    finite_nonnegative("noise.decay", nz.decay)?;
                }
            }
            if nz.modes > grid.node_count() {
                return Err(CliError::config(
                    "noise.modes",
                    format!("{} modes exceed the {} grid unknowns", nz.modes, grid.node_count()),
                ));
            }
        }
        match nz.kind {
            NoiseKind::Multiplicative => {
                let s = nz.sigma.get_or_insert_with(SigmaSpec::default);
                finite_nonnegative("noise.sigma.scale", s.scale)?;
            }
            _ if nz.sigma.is_some() => {
                return Err(CliError::config("noise.sigma", "only multiplicative noise takes sigma"));
            }
            _ => {}
        }

        // Initial datum.
        if !self.initial.amplitude.is_finite() {
            return Err(CliError::config("initial.amplitude", "must be finite"));
        }
        if self.initial.mode == 0 {
            return Err(CliError::config("initial.mode", "must be at least 1"));
        }

        // Solver parameters.
        let s = &mut self.solver;
        if !(s.lambda > 0.0 && s.lambda < 1.0) {
            return Err(CliError::config("solver.lambda", format!("must lie in (0, 1), got {}", s.lambda)));
        }
        finite_nonnegative("solver.eps", s.eps)?;
        finite_positive("solver.dt", s.dt)?;
        finite_positive("solver.t_final", s.t_final)?;
        let steps = (s.t_final / s.dt).round();
        if steps < 1.0 || (steps * s.dt - s.t_final).abs() > 1e-9 * s.t_final {
            return Err(CliError::config("solver.dt", format!("dt = {} does not divide t_final = {}", s.dt, s.t_final)));
        }
        if s.paths == 0 {
            return Err(CliError::config("solver.paths", "need at least one path"));
        }
        match s.smoothing_power {
            Some(0) => return Err(CliError::config("solver.smoothing_power", "must be positive")),
            Some(_) => {}
            None => s.smoothing_power = Some(default_smoothing_power(grid.dim(), gamma.leray_lions().p)),
        }

        self.validate_tolerances()?;
        self.validate_command(grid)?;
        Ok(self)
    }

    fn validate_tolerances(&self) -> Result<(), CliError> {
        let t = &self.tolerances;
        for (key, v) in [
            ("tolerances.nonnegativity", t.nonnegativity),
            ("tolerances.heat_error", t.heat_error),
            ("tolerances.rate_min", t.rate_min),
            ("tolerances.rate_max", t.rate_max),
            ("tolerances.sigmas", t.sigmas),
            ("tolerances.energy_dt_constant", t.energy_dt_constant),
            ("tolerances.contraction_slack", t.contraction_slack),
            ("tolerances.dependence_bound", t.dependence_bound),
            ("tolerances.uniqueness", t.uniqueness),
            ("tolerances.duality", t.duality),
            ("tolerances.commutation", t.commutation),
            ("tolerances.fenchel_young", t.fenchel_young),
            ("tolerances.fenchel_equality", t.fenchel_equality),
            ("tolerances.resolvent_identity", t.resolvent_identity),
            ("tolerances.monotonicity", t.monotonicity),
        ] {
            finite_nonnegative(key, v)?;
        }
        if t.rate_min > t.rate_max {
            return Err(CliError::config("tolerances.rate_min", "exceeds rate_max"));
        }
        Ok(())
    }

    fn validate_command(&mut self, grid: Grid) -> Result<(), CliError> {
        let stray = |present: bool, key: &str, cmd: Command| -> Result<(), CliError> {
            if present {
                Err(CliError::config(key, format!("section not used by `{}`", cmd.name())))
            } else {
                Ok(())
            }
        };
        let cmd = self.command;
        stray(self.oracle.is_some() && cmd != Command::Simulate, "oracle", cmd)?;
        stray(self.picard.is_some() && cmd != Command::Picard, "picard", cmd)?;
        stray(self.convergence.is_some() && cmd != Command::Convergence, "convergence", cmd)?;
        stray(self.depend.is_some() && cmd != Command::Depend, "depend", cmd)?;
        stray(self.verify.is_some() && cmd != Command::Verify, "verify", cmd)?;

        match cmd {
            Command::Simulate => {
                if let Some(o) = &self.oracle {
                    self.validate_oracle(o.clone(), grid)?;
                }
            }
            Command::Picard => {
                let p = self.picard.get_or_insert_with(PicardSpec::default).clone();
                if self.noise.kind != NoiseKind::Multiplicative {
                    return Err(CliError::config("noise.kind", "picard needs multiplicative noise"));
                }
                let lip = self.multiplicative_noise(grid)?.lipschitz_constant();
                let s = &self.solver;
                p.build().schedule(lip, s.dt, self.steps()).map_err(|e| match e {
                    spdelab::Error::InvalidParameter { name, reason } => CliError::config(name, reason),
                    other => CliError::config("picard", other.to_string()),
                })?;
            }
            Command::Convergence => {
                let c = self.convergence.get_or_insert_with(ConvergenceSpec::default);
                if c.lambdas.len() + c.epsilons.len() < 2 {
                    return Err(CliError::config("convergence", "need at least two values in a sweep"));
                }
                for (i, l) in c.lambdas.iter().enumerate() {
                    if !(*l > 0.0 && *l < 1.0) {
                        return Err(CliError::config(format!("convergence.lambdas[{i}]"), format!("must lie in (0, 1), got {l}")));
                    }
                }
                for (i, e) in c.epsilons.iter().enumerate() {
                    finite_nonnegative(&format!("convergence.epsilons[{i}]"), *e)?;
                }
            }
            Command::Depend => {
                let d = self.depend.get_or_insert_with(DependSpec::default).clone();
                if d.scales.is_empty() && d.noise_scales.is_empty() && !d.remove_noise {
                    return Err(CliError::config("depend", "nothing to compare"));
                }
                if (!d.noise_scales.is_empty() || d.remove_noise) && self.noise.kind != NoiseKind::Additive {
                    return Err(CliError::config("depend.noise_scales", "noise perturbations need additive noise"));
                }
                for (i, s) in d.scales.iter().chain(&d.noise_scales).enumerate() {
                    finite_positive(&format!("depend.scales[{i}]"), *s)?;
                }
                if d.perturbation.mode == 0 || !d.perturbation.amplitude.is_finite() {
                    return Err(CliError::config("depend.perturbation", "needs a finite amplitude and mode ≥ 1"));
                }
            }
            Command::Verify => {
                let v = self.verify.get_or_insert_with(VerifySpec::default);
                if v.samples == 0 {
                    return Err(CliError::config("verify.samples", "must be positive"));
                }
                if v.pairs == 0 {
                    return Err(CliError::config("verify.pairs", "must be positive"));
                }
            }
        }
        Ok(())
    }

    fn validate_oracle(&self, o: OracleSpec, grid: Grid) -> Result<(), CliError> {
        if o.levels < 2 {
            return Err(CliError::config("oracle.levels", "need at least two time steps to compare"));
        }
        let dirichlet_sine = grid.boundary() == Boundary::DirichletZero && self.initial.kind == FieldKind::Sine && self.initial.mode == 1;
        match o.kind {
            OracleKind::Heat => {
                if self.gamma.kind != GammaKind::Identity || self.beta.kind != BetaKind::Zero || self.noise.kind != NoiseKind::None {
                    return Err(CliError::config("oracle.kind", "heat needs identity gamma, zero beta and no noise"));
                }
                if !dirichlet_sine {
                    return Err(CliError::config("initial", "heat needs a Dirichlet grid and a first-mode sine datum"));
                }
            }
            OracleKind::OrnsteinUhlenbeck => {
                if self.gamma.kind != GammaKind::Identity || self.beta.kind != BetaKind::Linear {
                    return Err(CliError::config("oracle.kind", "ornstein_uhlenbeck needs identity gamma and linear beta"));
                }
                if self.noise.kind != NoiseKind::Additive || self.noise.modes != 1 {
                    return Err(CliError::config("noise", "ornstein_uhlenbeck needs additive noise on one mode"));
                }
                if !dirichlet_sine {
                    return Err(CliError::config("initial", "ornstein_uhlenbeck needs a Dirichlet grid and a first-mode sine datum"));
                }
                if self.solver.paths < 2 {
                    return Err(CliError::config("solver.paths", "Monte Carlo checks need at least two paths"));
                }
            }
            OracleKind::Energy => {
                if self.noise.kind != NoiseKind::Additive {
                    return Err(CliError::config("noise.kind", "energy oracle needs additive noise"));
                }
                if self.solver.paths < 2 {
                    return Err(CliError::config("solver.paths", "Monte Carlo checks need at least two paths"));
                }
            }
        }
        Ok(())
    }

    pub fn steps(&self) -> usize {
        (self.solver.t_final / self.solver.dt).round() as usize
    }

    pub fn grid(&self) -> Result<Grid, CliError> {
        let b = match self.grid.boundary {
            BoundaryKind::Dirichlet => Boundary::DirichletZero,
            BoundaryKind::Periodic => Boundary::Periodic,
        };
        Grid::new(self.grid.dim, self.grid.n, b).map_err(prefixed("grid"))
    }

    fn leray_lions(&self) -> Result<LerayLionsParams, CliError> {
        let ll = self.gamma.leray_lions.ok_or_else(|| CliError::config("gamma.leray_lions", "unresolved"))?;
        LerayLionsParams::new(ll.p, ll.k, ll.d1, ll.d2).map_err(prefixed("gamma"))
    }

    pub fn gamma_graph(&self) -> Result<VectorGraph, CliError> {
        let d = self.grid.dim;
        let ll = self.leray_lions()?;
        let g = match self.gamma.kind {
            GammaKind::Identity => VectorGraph::identity(d),
            GammaKind::PPower => VectorGraph::p_power(d, self.gamma.p.unwrap_or(2.0)),
            GammaKind::RadialExp => VectorGraph::radial_exp(d, ll),
        };
        Ok(g.map_err(prefixed("gamma"))?.with_leray_lions(ll))
    }

    pub fn beta_graph(&self) -> Result<ScalarGraph, CliError> {
        let b = &self.beta;
        let g = match b.kind {
            BetaKind::Zero => Ok(ScalarGraph::zero()),
            BetaKind::Identity => Ok(ScalarGraph::identity()),
            BetaKind::Linear => ScalarGraph::linear(b.c.unwrap_or(0.0)),
            BetaKind::Power => ScalarGraph::power(b.p.unwrap_or(2.0)),
            BetaKind::Sign => Ok(ScalarGraph::sign()),
            BetaKind::Relay => ScalarGraph::relay(b.c.unwrap_or(0.0)),
            BetaKind::Polynomial => ScalarGraph::polynomial_odd(b.coefficients.clone().unwrap_or_default()),
        };
        g.map_err(|e| match e {
            spdelab::Error::InvalidParameter { name, reason } => {
                let name = if name == "coeffs" { "coefficients".to_string() } else { name };
                CliError::config(format!("beta.{name}"), reason)
            }
            other => CliError::config("beta", other.to_string()),
        })
    }

    /// Base operator: explicit coefficients or the power law.
    pub fn base_noise(&self, grid: Grid) -> Result<SpectralHS, CliError> {
        let n = &self.noise;
        let b = match (n.kind, &n.coefficients) {
            (NoiseKind::None, _) => return Ok(SpectralHS::zero(grid)),
            (_, Some(c)) => SpectralHS::new(grid, c.clone()),
            (_, None) => SpectralHS::power_law(grid, n.modes, n.amplitude, n.decay),
        };
        b.map_err(prefixed("noise"))
    }

    pub fn multiplicative_noise(&self, grid: Grid) -> Result<MultiplicativeNoise, CliError> {
        let sigma = self.noise.sigma.unwrap_or_default().build();
        Ok(MultiplicativeNoise::new(self.base_noise(grid)?, sigma))
    }

    pub fn noise_model(&self, grid: Grid) -> Result<NoiseModel, CliError> {
        Ok(match self.noise.kind {
            NoiseKind::Multiplicative => NoiseModel::Multiplicative(self.multiplicative_noise(grid)?),
            _ => NoiseModel::Additive(self.base_noise(grid)?),
        })
    }

    /// The solver configuration described by this experiment.
    pub fn solver_config(&self) -> Result<SolverConfig, CliError> {
        let grid = self.grid()?;
        let mut cfg = SolverConfig::new(self.gamma_graph()?, self.beta_graph()?, self.noise_model(grid)?, self.initial.build(grid));
        let s = &self.solver;
        cfg.lambda = s.lambda;
        cfg.eps = s.eps;
        if let Some(k) = s.smoothing_power {
            cfg.smoothing_power = k;
        }
        cfg.dt = s.dt;
        cfg.t_final = s.t_final;
        cfg.paths = s.paths;
        cfg.seed = s.seed;
        cfg.scheme = match s.scheme {
            SchemeKind::Splitting => TimeScheme::Splitting,
            SchemeKind::Implicit => TimeScheme::Implicit,
        };
        cfg.recording = Recording { state_every: s.record_every, fields: false };
        cfg.validate().map_err(prefixed("solver"))?;
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "schema_version = 1\ncommand = \"simulate\"\n";

    #[test]
    fn minimal_config_gets_defaults() {
        let c = parse_config(MINIMAL).unwrap();
        assert_eq!(c.solver.lambda, 1e-2);
        assert_eq!(c.solver.eps, 0.0);
        assert_eq!(c.solver.smoothing_power, Some(default_smoothing_power(1, 2.0)));
        assert_eq!(c.gamma.leray_lions, Some(LerayLionsSpec { p: 2.0, k: 1.0, d1: 1.0, d2: 0.0 }));
    }

    #[test]
    fn unknown_kind_names_the_key() {
        let err = parse_config("schema_version = 1\ncommand = \"simulate\"\n[beta]\nkind = \"frobnicate\"\n").unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(err.to_string().contains("beta.kind"), "{err}");
    }

    #[test]
    fn unknown_key_is_rejected() {
        let err = parse_config("schema_version = 1\ncommand = \"simulate\"\n[solver]\nlamda = 0.1\n").unwrap_err();
        assert!(err.to_string().contains("solver"), "{err}");
        assert!(err.to_string().contains("lamda"), "{err}");
    }

    #[test]
    fn round_trip_is_idempotent() {
        let text = "schema_version = 1\ncommand = \"picard\"\n[gamma]\nkind = \"p_power\"\np = 3.0\n\
                    [noise]\nkind = \"multiplicative\"\ncoefficients = [0.5, 0.2]\n";
        let a = parse_config(text).unwrap();
        let b = parse_config(&a.to_toml()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn out_of_range_lambda() {
        let err = parse_config("schema_version = 1\ncommand = \"simulate\"\n[solver]\nlambda = 1.5\n").unwrap_err();
        assert!(err.to_string().contains("solver.lambda"), "{err}");
    }
}
