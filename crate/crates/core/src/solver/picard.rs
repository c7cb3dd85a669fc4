//! Interval-wise Picard iteration for multiplicative noise.
//!
//! On each interval of length τ the map `Y ↦ X` solves the problem with the
//! noise coefficient frozen at `B(Y)` and the same Wiener increments; the
//! fixed point is accepted once successive iterates agree in the discrete
//! L²(paths × time × space) norm.

use rayon::prelude::*;

use super::{NoiseModel, SolverConfig, StepOutput, Stepper, TrajectoryRecord};
use crate::grid::NodeField;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PicardConfig {
    /// Interval length; `None` selects `1/(2 L_B)` (the whole horizon when `L_B = 0`).
    pub tau: Option<f64>,
    /// Relative stopping tolerance.
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for PicardConfig {
    fn default() -> Self {
        PicardConfig { tau: None, tolerance: 1e-8, max_iterations: 50 }
    }
}

/// Resolved interval layout.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PicardSchedule {
    pub lipschitz: f64,
    /// Effective interval length, a whole number of steps.
    pub tau: f64,
    pub steps_per_interval: usize,
}

impl PicardConfig {
    pub fn schedule(&self, lipschitz: f64, dt: f64, steps: usize) -> Result<PicardSchedule> {
        if !(self.tolerance > 0.0) {
            return Err(Error::invalid("picard.tolerance", format!("must be positive, got {}", self.tolerance)));
        }
        if self.max_iterations == 0 {
            return Err(Error::invalid("picard.max_iterations", "must be positive"));
        }
        let tau = match self.tau {
            Some(t) if !(t > 0.0) || !t.is_finite() => {
                return Err(Error::invalid("picard.tau", format!("must be positive, got {t}")));
            }
            Some(t) => t,
            None if lipschitz > 0.0 => 1.0 / (2.0 * lipschitz),
            None => steps as f64 * dt,
        };
        if tau * lipschitz >= 1.0 {
            return Err(Error::invalid(
                "picard.tau",
                format!("τ·L_B = {} must be < 1 (τ = {tau}, L_B = {lipschitz})", tau * lipschitz),
            ));
        }
        let s = ((tau / dt) * (1.0 + 1e-12)).floor().max(1.0) as usize;
        let s = s.min(steps.max(1));
        Ok(PicardSchedule { lipschitz, tau: s as f64 * dt, steps_per_interval: s })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntervalReport {
    pub index: usize,
    pub start_time: f64,
    pub end_time: f64,
    /// Number of solves performed, including the one confirming convergence.
    pub iterations: usize,
    /// Solves needed to produce the accepted iterate (`iterations − 1`).
    pub effective_iterations: usize,
    /// `‖Xᵏ − Xᵏ⁻¹‖` per iteration (`X⁰` is the constant initial guess).
    pub differences: Vec<f64>,
    /// Successive ratios `dₖ₊₁/dₖ`.
    pub factors: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContractionReport {
    pub schedule: PicardSchedule,
    pub intervals: Vec<IntervalReport>,
}

impl ContractionReport {
    pub fn max_factor(&self) -> f64 {
        self.intervals.iter().flat_map(|i| i.factors.iter().copied()).fold(0.0, f64::max)
    }

    pub fn max_iterations(&self) -> usize {
        self.intervals.iter().map(|i| i.iterations).max().unwrap_or(0)
    }
}

/// Run every path of a multiplicative-noise config through the Picard loop.
pub fn run_multiplicative_picard(cfg: &SolverConfig, pcfg: &PicardConfig) -> Result<(Vec<TrajectoryRecord>, ContractionReport)> {
    let noise = match &cfg.noise {
        NoiseModel::Multiplicative(m) => m,
        NoiseModel::Additive(_) => return Err(Error::Incompatible("Picard loop needs multiplicative noise".into())),
    };
    cfg.validate()?;
    let total = cfg.steps();
    let schedule = pcfg.schedule(noise.lipschitz_constant(), cfg.dt, total)?;
    let stepper = Stepper::new(cfg)?;
    let dt = cfg.dt;

    let mut records: Vec<TrajectoryRecord> = (0..cfg.paths).map(|p| TrajectoryRecord::start(cfg, p)).collect();
    let mut starts: Vec<NodeField> = vec![cfg.x0.clone(); cfg.paths];
    let mut intervals = Vec::new();
    let mut n0 = 0;
    while n0 < total {
        let n1 = (n0 + schedule.steps_per_interval).min(total);
        let len = n1 - n0;
        let mut previous: Vec<Vec<NodeField>> = starts.iter().map(|x| vec![x.clone(); len]).collect();
        let mut differences = Vec::new();
        let mut accepted: Option<Vec<Vec<StepOutput>>> = None;
        for _ in 0..pcfg.max_iterations {
            let outputs: Vec<Vec<StepOutput>> = (0..cfg.paths)
                .into_par_iter()
                .map(|p| solve_interval(&stepper, p, &starts[p], n0, &previous[p]))
                .collect::<Result<_>>()?;
            let (mut diff, mut norm) = (0.0, 0.0);
            for (out, prev) in outputs.iter().zip(&previous) {
                for (o, y) in out.iter().zip(prev) {
                    diff += dt * o.next.sub(y).norm_sq();
                    norm += dt * o.next.norm_sq();
                }
            }
            let m = cfg.paths as f64;
            let (diff, norm) = ((diff / m).sqrt(), (norm / m).sqrt());
            differences.push(diff);
            if diff <= pcfg.tolerance * norm {
                accepted = Some(outputs);
                break;
            }
            previous = outputs.iter().map(|o| o.iter().map(|s| s.next.clone()).collect()).collect();
        }
        let iterations = differences.len();
        let Some(outputs) = accepted else {
            return Err(Error::PicardNonConvergence {
                interval: intervals.len(),
                iterations,
                last_difference: *differences.last().unwrap_or(&f64::NAN),
            });
        };
        let factors = differences.windows(2).filter(|w| w[0] > 0.0).map(|w| w[1] / w[0]).collect();
        intervals.push(IntervalReport {
            index: intervals.len(),
            start_time: n0 as f64 * dt,
            end_time: n1 as f64 * dt,
            iterations,
            effective_iterations: iterations.saturating_sub(1),
            differences,
            factors,
        });
        for ((rec, out), start) in records.iter_mut().zip(outputs).zip(starts.iter_mut()) {
            for (i, o) in out.into_iter().enumerate() {
                *start = o.next.clone();
                rec.push(o, n0 + i, total, cfg.recording);
            }
        }
        n0 = n1;
    }
    Ok((records, ContractionReport { schedule, intervals }))
}

/// Steps `n0..n0+frozen.len()` of one path with the noise coefficient
/// evaluated at `start, frozen[0], …, frozen[len−2]`.
fn solve_interval(stepper: &Stepper<'_>, path: usize, start: &NodeField, n0: usize, frozen: &[NodeField]) -> Result<Vec<StepOutput>> {
    let mut out: Vec<StepOutput> = Vec::with_capacity(frozen.len());
    let mut x = start.clone();
    for i in 0..frozen.len() {
        let y = if i == 0 { start } else { &frozen[i - 1] };
        let step = n0 + i;
        let o = stepper.advance(&x, step, stepper.increments(path, step), Some(y))?;
        if !o.next.is_finite() {
            return Err(Error::NonFinite { path, step });
        }
        x = o.next.clone();
        out.push(o);
    }
    Ok(out)
}
