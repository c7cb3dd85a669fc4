//! Coupled-path experiments: λ/ε Cauchy sweeps and continuous dependence.
//! Runs being compared share grid, seed and time step, so they consume the
//! same Wiener increments.

use super::{run_multiplicative_picard, run_paths, NoiseModel, PicardConfig, Recording, SolverConfig, TrajectoryRecord};
use crate::{Error, Result};

/// Every path of a config, whatever its noise model (multiplicative noise
/// goes through the Picard loop with default settings).
pub fn simulate(cfg: &SolverConfig) -> Result<Vec<TrajectoryRecord>> {
    match cfg.noise {
        NoiseModel::Additive(_) => run_paths(cfg),
        NoiseModel::Multiplicative(_) => Ok(run_multiplicative_picard(cfg, &PicardConfig::default())?.0),
    }
}

fn every_step(cfg: &SolverConfig) -> SolverConfig {
    let mut c = cfg.clone();
    c.recording = Recording { state_every: 1, fields: false };
    c
}

/// Per-path, per-time squared distances `‖X₁ⁿ − X₂ⁿ‖²`.
fn squared_distances(a: &[TrajectoryRecord], b: &[TrajectoryRecord]) -> Result<Vec<Vec<f64>>> {
    if a.len() != b.len() {
        return Err(Error::Incompatible(format!("{} paths against {}", a.len(), b.len())));
    }
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            if x.times != y.times {
                return Err(Error::Incompatible("trajectories are recorded at different times".into()));
            }
            Ok(x.states.iter().zip(&y.states).map(|(s, t)| s.sub(t).norm_sq()).collect())
        })
        .collect()
}

/// `supₙ (E‖X₁ⁿ − X₂ⁿ‖²)^{1/2}`, the L^∞(0,T; L²(Ω; H)) distance.
pub fn sup_mean_distance(a: &[TrajectoryRecord], b: &[TrajectoryRecord]) -> Result<f64> {
    let d = squared_distances(a, b)?;
    let m = d.len() as f64;
    let steps = d.first().map_or(0, Vec::len);
    Ok((0..steps).map(|n| d.iter().map(|p| p[n]).sum::<f64>() / m).fold(0.0, f64::max).sqrt())
}

/// `(E supₙ ‖X₁ⁿ − X₂ⁿ‖²)^{1/2}`, the L²(Ω; L^∞(0,T; H)) distance.
fn mean_sup_distance(a: &[TrajectoryRecord], b: &[TrajectoryRecord]) -> Result<f64> {
    let d = squared_distances(a, b)?;
    let m = d.len() as f64;
    Ok((d.iter().map(|p| p.iter().copied().fold(0.0, f64::max)).sum::<f64>() / m).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StudyRow {
    pub from: f64,
    pub to: f64,
    /// Coupled distance in L²(Ω; L^∞(0,T; H)).
    pub difference: f64,
    /// `‖B^{ε_from} − B^{ε_to}‖_HS` for additive ε rows.
    pub hs_distance: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ConvergenceTable {
    pub lambda_rows: Vec<StudyRow>,
    pub eps_rows: Vec<StudyRow>,
}

impl ConvergenceTable {
    fn strictly_decreasing(rows: &[StudyRow]) -> bool {
        rows.windows(2).all(|w| w[1].difference < w[0].difference)
    }

    pub fn lambda_decreasing(&self) -> bool {
        Self::strictly_decreasing(&self.lambda_rows)
    }

    pub fn eps_decreasing(&self) -> bool {
        Self::strictly_decreasing(&self.eps_rows)
    }
}

/// Successive coupled differences along a λ sweep (at the base ε) and an ε
/// sweep (at the base λ).
pub fn convergence_study(base: &SolverConfig, lambdas: &[f64], epsilons: &[f64]) -> Result<ConvergenceTable> {
    let base = every_step(base);
    let mut table = ConvergenceTable::default();

    let mut prev: Option<(f64, Vec<TrajectoryRecord>)> = None;
    for &lambda in lambdas {
        let mut cfg = base.clone();
        cfg.lambda = lambda;
        let run = simulate(&cfg)?;
        if let Some((from, p)) = prev {
            table.lambda_rows.push(StudyRow { from, to: lambda, difference: mean_sup_distance(&p, &run)?, hs_distance: None });
        }
        prev = Some((lambda, run));
    }

    let mut prev: Option<(SolverConfig, Vec<TrajectoryRecord>)> = None;
    for &eps in epsilons {
        let mut cfg = base.clone();
        cfg.eps = eps;
        let run = simulate(&cfg)?;
        if let Some((pc, p)) = prev {
            let hs_distance = match (pc.effective_additive()?, cfg.effective_additive()?) {
                (Some(a), Some(b)) => Some(a.hs_distance(&b)?),
                _ => None,
            };
            table.eps_rows.push(StudyRow { from: pc.eps, to: eps, difference: mean_sup_distance(&p, &run)?, hs_distance });
        }
        prev = Some((cfg, run));
    }
    Ok(table)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DependenceReport {
    /// `supₙ (E‖X₁ⁿ − X₂ⁿ‖²)^{1/2}`
    pub distance: f64,
    /// `‖X₀¹ − X₀²‖`
    pub initial_distance: f64,
    /// `‖B₁^ε − B₂^ε‖_HS`; `None` for multiplicative runs, whose ratio uses
    /// the initial distance only.
    pub noise_distance: Option<f64>,
    pub denominator: f64,
    /// `distance / denominator`; `None` when the inputs coincide.
    pub ratio: Option<f64>,
}

/// Coupled runs of two configs differing in initial datum and/or noise.
pub fn continuous_dependence_experiment(cfg1: &SolverConfig, cfg2: &SolverConfig) -> Result<DependenceReport> {
    if cfg1.grid != cfg2.grid {
        return Err(Error::Incompatible("configs live on different grids".into()));
    }
    if cfg1.seed != cfg2.seed || cfg1.paths != cfg2.paths || cfg1.dt != cfg2.dt || cfg1.t_final != cfg2.t_final {
        return Err(Error::Incompatible("coupled runs need equal seed, paths, dt and T".into()));
    }
    let noise_distance = match (cfg1.effective_additive()?, cfg2.effective_additive()?) {
        (Some(a), Some(b)) => Some(a.hs_distance(&b)?),
        (None, None) => None,
        _ => return Err(Error::Incompatible("cannot couple additive and multiplicative noise".into())),
    };
    let a = simulate(&every_step(cfg1))?;
    let b = simulate(&every_step(cfg2))?;
    let distance = sup_mean_distance(&a, &b)?;
    let initial_distance = cfg1.x0.sub(&cfg2.x0).norm_sq().sqrt();
    let denominator = initial_distance + noise_distance.unwrap_or(0.0);
    Ok(DependenceReport {
        distance,
        initial_distance,
        noise_distance,
        denominator,
        ratio: (denominator > 0.0).then(|| distance / denominator),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{Grid, NodeField};
    use crate::monotone::{ScalarGraph, VectorGraph};
    use crate::noise::SpectralHS;

    fn cfg() -> SolverConfig {
        let g = Grid::dirichlet_1d(15).unwrap();
        let mut c = SolverConfig::new(
            VectorGraph::p_power(1, 3.0).unwrap(),
            ScalarGraph::sign(),
            NoiseModel::Additive(SpectralHS::power_law(g, 3, 0.5, 2.0).unwrap()),
            NodeField::from_fn(g, |x, _| x * (1.0 - x)),
        );
        c.lambda = 0.05;
        c.dt = 1e-2;
        c.paths = 4;
        c
    }

    #[test]
    fn identical_inputs_have_zero_distance() {
        let c = cfg();
        let rep = continuous_dependence_experiment(&c, &c).unwrap();
        assert_eq!(rep.distance, 0.0);
        assert_eq!(rep.ratio, None);
        let table = convergence_study(&c, &[0.05, 0.05], &[]).unwrap();
        assert_eq!(table.lambda_rows[0].difference, 0.0);
    }

    #[test]
    fn mismatched_configs_are_rejected() {
        let c = cfg();
        let mut d = c.clone();
        d.seed = 1;
        assert!(continuous_dependence_experiment(&c, &d).is_err());
    }
}
