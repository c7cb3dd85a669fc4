//! Discrete energy ledgers, Itô residuals and a priori estimate reports.
//!
//! Every ledger row holds the per-step increments of the energy balance
//!
//! ```text
//! ½‖Xⁿ⁺¹‖² − ½‖Xⁿ‖² + dt[(η,∇Xⁿ) + λ‖∇Xⁿ‖² + (ξ,u)] = (u, N) + ½‖N‖² + O(dt²)
//! ```
//!
//! where `u` is the state before the noise field `N` is added.

use crate::grid::{EdgeField, EllipticSmoother, NodeField};
use crate::solver::TrajectoryRecord;
use crate::{Error, Result};

/// Per-step ledger entries. Energy terms are densities (multiply by `dt`
/// where the balance integrates in time); `martingale` and
/// `quadratic_variation` are already increments.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LedgerRow {
    pub time: f64,
    pub dt: f64,
    /// `½‖Xⁿ⁺¹‖²`
    pub kinetic: f64,
    /// `(γ_λ(∇Xⁿ), ∇Xⁿ)`
    pub dissipation: f64,
    /// `λ‖∇Xⁿ‖²`
    pub correction: f64,
    /// `(β_λ(u), u)`
    pub reaction: f64,
    /// `(u, N)`
    pub martingale: f64,
    /// `½‖N‖²`
    pub quadratic_variation: f64,
    /// `½ E‖N‖²` given the past, i.e. `½‖B‖²_HS dt`
    pub ito_correction: f64,
    /// `∫ j*(β_λ(u))`
    pub conjugate: f64,
    /// `∫ j_λ(u)`
    pub envelope: f64,
    /// Cumulative pathwise residual after this step.
    pub residual: f64,
    /// `∫ |J_λ(∇Xⁿ)|ᵖ`
    pub flux_p: f64,
    /// `‖γ_λ(∇Xⁿ)‖²`
    pub eta_sq: f64,
    /// `‖∇Xⁿ‖²`
    pub grad_sq: f64,
    /// `∫ |β_λ(u) u|`
    pub reaction_abs: f64,
}

impl LedgerRow {
    /// CSV header matching [`LedgerRow::to_record`].
    pub const COLUMNS: [&'static str; 16] = [
        "time",
        "dt",
        "kinetic",
        "dissipation",
        "correction",
        "reaction",
        "martingale",
        "quadratic_variation",
        "ito_correction",
        "conjugate",
        "envelope",
        "residual",
        "flux_p",
        "eta_sq",
        "grad_sq",
        "reaction_abs",
    ];

    pub fn to_record(&self) -> [f64; 16] {
        [
            self.time,
            self.dt,
            self.kinetic,
            self.dissipation,
            self.correction,
            self.reaction,
            self.martingale,
            self.quadratic_variation,
            self.ito_correction,
            self.conjugate,
            self.envelope,
            self.residual,
            self.flux_p,
            self.eta_sq,
            self.grad_sq,
            self.reaction_abs,
        ]
    }
}

/// Fields entering one ledger row.
#[derive(Debug, Clone, Copy)]
pub struct StepFields<'a> {
    pub next: &'a NodeField,
    pub grad: &'a EdgeField,
    pub eta: &'a EdgeField,
    pub xi: &'a NodeField,
    pub pre_noise: &'a NodeField,
    pub noise: &'a NodeField,
}

/// Scalars entering one ledger row that are not recomputed from fields.
#[derive(Debug, Clone, Copy, Default)]
pub struct StepScalars {
    pub time: f64,
    pub dt: f64,
    pub lambda: f64,
    pub ito_correction: f64,
    pub conjugate: f64,
    pub envelope: f64,
    pub flux_p: f64,
}

/// Assemble a ledger row (residual left at zero; the ledger fills it in).
pub fn ledger_row(f: StepFields<'_>, s: StepScalars) -> LedgerRow {
    let weight = f.xi.grid().weight();
    let grad_sq = f.grad.norm_sq();
    LedgerRow {
        time: s.time,
        dt: s.dt,
        kinetic: 0.5 * f.next.norm_sq(),
        dissipation: f.eta.dot(f.grad),
        correction: s.lambda * grad_sq,
        reaction: f.xi.dot(f.pre_noise),
        martingale: f.pre_noise.dot(f.noise),
        quadratic_variation: 0.5 * f.noise.norm_sq(),
        ito_correction: s.ito_correction,
        conjugate: s.conjugate,
        envelope: s.envelope,
        residual: 0.0,
        flux_p: s.flux_p,
        eta_sq: f.eta.norm_sq(),
        grad_sq,
        reaction_abs: weight * f.xi.values().iter().zip(f.pre_noise.values()).map(|(a, b)| (a * b).abs()).sum::<f64>(),
    }
}

/// Running sums of the ledger terms.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LedgerTotals {
    /// `Σ dt (dissipation + correction + reaction)`
    pub dissipated: f64,
    pub martingale: f64,
    pub quadratic_variation: f64,
    pub ito_correction: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct EnergyLedger {
    initial_kinetic: f64,
    rows: Vec<LedgerRow>,
    totals: LedgerTotals,
}

impl EnergyLedger {
    pub fn new(initial_kinetic: f64) -> Self {
        EnergyLedger { initial_kinetic, rows: Vec::new(), totals: LedgerTotals::default() }
    }

    pub fn initial_kinetic(&self) -> f64 {
        self.initial_kinetic
    }

    pub fn rows(&self) -> &[LedgerRow] {
        &self.rows
    }

    pub fn totals(&self) -> LedgerTotals {
        self.totals
    }

    pub fn final_kinetic(&self) -> f64 {
        self.rows.last().map_or(self.initial_kinetic, |r| r.kinetic)
    }

    /// Accumulate one step; fills in the cumulative residual.
    pub fn update(&mut self, mut row: LedgerRow) {
        let t = &mut self.totals;
        t.dissipated += row.dt * (row.dissipation + row.correction + row.reaction);
        t.martingale += row.martingale;
        t.quadratic_variation += row.quadratic_variation;
        t.ito_correction += row.ito_correction;
        row.residual = row.kinetic - self.initial_kinetic + t.dissipated - t.martingale - t.quadratic_variation;
        self.rows.push(row);
    }

    /// `½‖X(T)‖² − ½‖X₀‖² + Σ dt(D + C + R) − Σ(u,N) − Σ ½‖N‖²`.
    pub fn pathwise_residual(&self) -> f64 {
        self.rows.last().map_or(0.0, |r| r.residual)
    }

    /// `½‖X(T)‖² − ½‖X₀‖² + Σ dt(D + C + R) − Σ ½‖B‖²_HS dt`, whose mean over
    /// paths vanishes up to the time-discretisation error.
    pub fn expectation_summand(&self) -> f64 {
        self.final_kinetic() - self.initial_kinetic + self.totals.dissipated - self.totals.ito_correction
    }
}

/// Functional form of [`EnergyLedger::update`].
pub fn ledger_update(mut ledger: EnergyLedger, row: LedgerRow) -> EnergyLedger {
    ledger.update(row);
    ledger
}

/// Monte Carlo mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanEstimate {
    pub mean: f64,
    pub standard_error: f64,
}

impl MeanEstimate {
    pub fn from_samples(xs: &[f64]) -> Result<Self> {
        if xs.len() < 2 {
            return Err(Error::invalid("paths", "need at least 2 samples for a standard error"));
        }
        let m = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / m;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (m - 1.0);
        Ok(MeanEstimate { mean, standard_error: (var / m).sqrt() })
    }

    /// `|mean| ≤ k·SE + allowance`.
    pub fn within(&self, k: f64, allowance: f64) -> bool {
        self.mean.abs() <= k * self.standard_error + allowance
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpectationReport {
    pub paths: usize,
    /// Mean of [`EnergyLedger::expectation_summand`]; report `|residual.mean|`.
    pub residual: MeanEstimate,
    /// Mean of the accumulated martingale term.
    pub martingale: MeanEstimate,
    /// Mean of `½‖X₀‖² + Σ½‖B‖²_HS dt`, a natural scale for the residual.
    pub scale: f64,
}

/// Expectation form of the Itô energy identity over a set of paths.
pub fn ito_residual_expectation<'a>(ledgers: impl IntoIterator<Item = &'a EnergyLedger>) -> Result<ExpectationReport> {
    let mut res = Vec::new();
    let mut mart = Vec::new();
    let mut scale = 0.0;
    for l in ledgers {
        res.push(l.expectation_summand());
        mart.push(l.totals.martingale);
        scale += l.initial_kinetic + l.totals.ito_correction;
    }
    let paths = res.len();
    Ok(ExpectationReport {
        paths,
        residual: MeanEstimate::from_samples(&res)?,
        martingale: MeanEstimate::from_samples(&mart)?,
        scale: scale / paths.max(1) as f64,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmoothedCheck {
    /// Pathwise energy residual of the ledger rebuilt from smoothed fields.
    pub energy_residual: f64,
    /// The same residual from the raw ledger.
    pub raw_energy_residual: f64,
    /// `maxₙ ‖ΛXⁿ⁺¹ − ΛXⁿ − dt·div(𝐑Fⁿ) + dt·Λξⁿ − ΛNⁿ‖`, the scheme
    /// tested against smoothed fields.
    pub equation_residual: f64,
}

/// Rebuild the ledger with every field replaced by its elliptic smoothing
/// `(I − δΔ)⁻ᵏ`. Needs a record that kept per-step fields.
pub fn smoothed_ito_check(record: &TrajectoryRecord, delta: f64, k: usize) -> Result<SmoothedCheck> {
    let steps = record.ledger.rows().len();
    if record.eta.len() != steps || record.grad.len() != steps || record.states.len() != steps + 1 {
        return Err(Error::invalid("record", "smoothed check needs every state and per-step fields"));
    }
    let grid = *record.initial.grid();
    let sm = EllipticSmoother::new(grid, delta, k)?;
    let smoothed: Vec<NodeField> = record.states.iter().map(|x| sm.apply(x)).collect::<Result<_>>()?;
    let mut ledger = EnergyLedger::new(0.5 * smoothed[0].norm_sq());
    let mut equation_residual: f64 = 0.0;
    for n in 0..steps {
        let raw = &record.ledger.rows()[n];
        let grad = sm.apply_edges(&record.grad[n])?;
        let eta = sm.apply_edges(&record.eta[n])?;
        let xi = sm.apply(&record.xi[n])?;
        let pre = sm.apply(&record.pre_noise[n])?;
        let noise = sm.apply(&record.noise[n])?;
        let row = ledger_row(
            StepFields { next: &smoothed[n + 1], grad: &grad, eta: &eta, xi: &xi, pre_noise: &pre, noise: &noise },
            StepScalars {
                time: raw.time,
                dt: raw.dt,
                lambda: record.lambda,
                ito_correction: raw.ito_correction,
                conjugate: raw.conjugate,
                envelope: raw.envelope,
                flux_p: raw.flux_p,
            },
        );
        ledger.update(row);

        let div_flux = crate::grid::divergence(&sm.apply_edges(&record.flux[n])?);
        let mut r = smoothed[n + 1].sub(&smoothed[n]);
        r.axpy(-raw.dt, &div_flux);
        r.axpy(raw.dt, &xi);
        r.axpy(-1.0, &noise);
        equation_residual = equation_residual.max(r.norm_sq().sqrt());
    }
    Ok(SmoothedCheck {
        energy_residual: ledger.pathwise_residual(),
        raw_energy_residual: record.ledger.pathwise_residual(),
        equation_residual,
    })
}

/// Empirical counterparts of the a priori bounds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimateReport {
    /// `supₙ ‖Xⁿ‖`
    pub sup_l2: f64,
    /// `(Σ dt ∫|J_λ(∇X)|ᵖ)^{1/p}`
    pub flux_lp: f64,
    /// `√λ (Σ dt ‖γ_λ(∇X)‖²)^{1/2}`
    pub scaled_eta_l2: f64,
    /// `√λ (Σ dt ‖∇X‖²)^{1/2}`
    pub scaled_grad_l2: f64,
    /// `Σ dt ∫|β_λ(X) X|`
    pub reaction_l1: f64,
    /// `Σ dt ∫ j*(β_λ(X))`
    pub conjugate_integral: f64,
}

/// Relative slack in the per-step check `∫ j*(ξ) ≤ ∫ ξ u`.
pub const FENCHEL_TOLERANCE: f64 = 1e-9;

/// Estimate report for one path; fails if the conjugate ledger ever exceeds
/// the reaction term.
pub fn apriori_report(record: &TrajectoryRecord) -> Result<EstimateReport> {
    let rows = record.ledger.rows();
    let p = record.flux_exponent;
    let mut rep = EstimateReport {
        sup_l2: (2.0 * record.ledger.initial_kinetic()).sqrt(),
        flux_lp: 0.0,
        scaled_eta_l2: 0.0,
        scaled_grad_l2: 0.0,
        reaction_l1: 0.0,
        conjugate_integral: 0.0,
    };
    for r in rows {
        let scale = 1.0 + r.reaction.abs() + r.conjugate.abs();
        if !(r.conjugate <= r.reaction + FENCHEL_TOLERANCE * scale) {
            return Err(Error::FenchelViolation { path: record.path, conjugate: r.conjugate, reaction: r.reaction });
        }
        rep.sup_l2 = rep.sup_l2.max((2.0 * r.kinetic).sqrt());
        rep.flux_lp += r.dt * r.flux_p;
        rep.scaled_eta_l2 += r.dt * r.eta_sq;
        rep.scaled_grad_l2 += r.dt * r.grad_sq;
        rep.reaction_l1 += r.dt * r.reaction_abs;
        rep.conjugate_integral += r.dt * r.conjugate;
    }
    rep.flux_lp = rep.flux_lp.powf(1.0 / p);
    rep.scaled_eta_l2 = (record.lambda * rep.scaled_eta_l2).sqrt();
    rep.scaled_grad_l2 = (record.lambda * rep.scaled_grad_l2).sqrt();
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(dt: f64, kinetic: f64, dissipation: f64, martingale: f64, qv: f64) -> LedgerRow {
        LedgerRow { dt, kinetic, dissipation, martingale, quadratic_variation: qv, ito_correction: qv, ..Default::default() }
    }

    #[test]
    fn residual_accumulates() {
        let mut l = EnergyLedger::new(1.0);
        l.update(row(0.1, 0.9, 1.0, 0.0, 0.0));
        assert!(l.pathwise_residual().abs() < 1e-15);
        l = ledger_update(l, row(0.1, 1.0, 0.0, 0.05, 0.05));
        assert!(l.pathwise_residual().abs() < 1e-15);
        assert!((l.expectation_summand() - 0.05).abs() < 1e-15);
        assert_eq!(l.rows().len(), 2);
    }

    #[test]
    fn empty_ledger_is_zero() {
        let l = EnergyLedger::new(0.0);
        assert_eq!(l.pathwise_residual(), 0.0);
        assert_eq!(l.expectation_summand(), 0.0);
    }

    #[test]
    fn mean_estimate() {
        let m = MeanEstimate::from_samples(&[1.0, 3.0]).unwrap();
        assert_eq!(m.mean, 2.0);
        assert!((m.standard_error - 1.0).abs() < 1e-15);
        assert!(MeanEstimate::from_samples(&[1.0]).is_err());
    }
}
