//! Command dispatch: turns a resolved config into checks, scalars and tables.

use spdelab::diagnostics::{apriori_report, ito_residual_expectation, LedgerRow, MeanEstimate};
use spdelab::grid::NodeField;
use spdelab::noise::{MultiplicativeNoise, Sigma, SpectralHS};
use spdelab::solver::{
    continuous_dependence_experiment, convergence_study, run_multiplicative_picard, simulate, ContractionReport,
    DependenceReport, NoiseModel, PicardConfig, Recording, SolverConfig, StudyRow, TrajectoryRecord,
};

use crate::config::{Command, ExperimentConfig, OracleKind, OracleSpec, Tolerances};
use crate::error::CliError;
use crate::output::{num, opt_num, Check, RunOutput, RunSummary, Table};
use crate::verify;

/// Runs the configured command. Check failures are reported in the output,
/// not as errors.
pub fn run(cfg: &ExperimentConfig) -> Result<RunOutput, CliError> {
    match cfg.command {
        Command::Simulate => run_simulate(cfg),
        Command::Picard => run_picard(cfg),
        Command::Convergence => run_convergence(cfg),
        Command::Depend => run_depend(cfg),
        Command::Verify => verify::run_suite(&cfg.verify.clone().unwrap_or_default(), &cfg.tolerances),
    }
}

/// Runs and wraps the result in a summary.
pub fn run_summary(cfg: &ExperimentConfig) -> Result<(RunSummary, RunOutput), CliError> {
    let out = run(cfg)?;
    Ok((RunSummary::new(cfg, &out), out))
}

pub const LEDGER_HEADER: [&str; 17] = [
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
    "path",
];

pub const TRAJECTORY_HEADER: [&str; 6] = ["time", "node", "x", "y", "value", "path"];

fn ledger_table(records: &[TrajectoryRecord], paths: usize) -> Table {
    debug_assert_eq!(&LEDGER_HEADER[..16], &LedgerRow::COLUMNS[..]);
    let mut t = Table::new("ledger.csv", &LEDGER_HEADER);
    for r in records.iter().take(paths) {
        for row in r.ledger.rows() {
            let mut line: Vec<String> = row.to_record().iter().map(|v| num(*v)).collect();
            line.push(r.path.to_string());
            t.push(line);
        }
    }
    t
}

fn trajectory_table(records: &[TrajectoryRecord], paths: usize) -> Table {
    let mut t = Table::new("trajectory.csv", &TRAJECTORY_HEADER);
    for r in records.iter().take(paths) {
        for (time, state) in r.times.iter().zip(&r.states) {
            let grid = state.grid();
            for (i, v) in state.values().iter().enumerate() {
                let [x, y] = grid.node_coords(i);
                t.push(vec![num(*time), i.to_string(), num(x), num(y), num(*v), r.path.to_string()]);
            }
        }
    }
    t
}

/// Fenchel ledger, nonnegativity and a priori scalars over all paths.
fn path_checks(out: &mut RunOutput, records: &[TrajectoryRecord], tol: &Tolerances, prefix: &str) -> Result<(), CliError> {
    let mut violations = 0usize;
    let mut sup_l2: f64 = 0.0;
    let mut flux_lp: f64 = 0.0;
    let mut eta: f64 = 0.0;
    let mut conj: f64 = 0.0;
    for r in records {
        match apriori_report(r) {
            Ok(rep) => {
                sup_l2 = sup_l2.max(rep.sup_l2);
                flux_lp = flux_lp.max(rep.flux_lp);
                eta = eta.max(rep.scaled_eta_l2);
                conj = conj.max(rep.conjugate_integral);
            }
            Err(spdelab::Error::FenchelViolation { .. }) => violations += 1,
            Err(e) => return Err(e.into()),
        }
    }
    out.check(Check::at_most(format!("{prefix}fenchel_ledger.violating_paths"), violations as f64, 0.0));

    let mut worst = f64::INFINITY;
    for r in records {
        for row in r.ledger.rows() {
            for term in [row.dissipation, row.correction, row.reaction] {
                worst = worst.min(term / (1.0 + row.kinetic + term.abs()));
            }
        }
    }
    if worst.is_finite() {
        out.check(Check::at_least(format!("{prefix}nonnegativity"), worst, -tol.nonnegativity));
    }
    out.scalar(format!("{prefix}max_sup_l2"), sup_l2);
    out.scalar(format!("{prefix}max_flux_lp"), flux_lp);
    out.scalar(format!("{prefix}max_scaled_eta_l2"), eta);
    out.scalar(format!("{prefix}max_conjugate_integral"), conj);
    Ok(())
}

fn ledger_scalars(out: &mut RunOutput, records: &[TrajectoryRecord]) {
    let m = records.len() as f64;
    let mean = |f: &dyn Fn(&TrajectoryRecord) -> f64| records.iter().map(f).sum::<f64>() / m;
    out.scalar("paths", m);
    out.scalar("steps", records.first().map_or(0, |r| r.steps()) as f64);
    out.scalar("mean_final_kinetic", mean(&|r| r.ledger.final_kinetic()));
    out.scalar("mean_pathwise_residual", mean(&|r| r.ledger.pathwise_residual()));
    out.scalar(
        "max_abs_pathwise_residual",
        records.iter().map(|r| r.ledger.pathwise_residual().abs()).fold(0.0, f64::max),
    );
}

fn run_simulate(cfg: &ExperimentConfig) -> Result<RunOutput, CliError> {
    let solver = cfg.solver_config()?;
    let records = simulate(&solver)?;
    let mut out = RunOutput::default();
    path_checks(&mut out, &records, &cfg.tolerances, "")?;
    ledger_scalars(&mut out, &records);
    out.tables.push(ledger_table(&records, cfg.output.ledger_paths));
    out.tables.push(trajectory_table(&records, cfg.output.trajectory_paths));
    if let Some(o) = &cfg.oracle {
        let mut table = Table::new("oracle.csv", &["dt", "quantity", "value"]);
        match o.kind {
            OracleKind::Heat => heat_oracle(cfg, o, &solver, &mut out, &mut table)?,
            OracleKind::OrnsteinUhlenbeck => ou_oracle(cfg, &solver, &records, &mut out, &mut table)?,
            OracleKind::Energy => energy_oracle(cfg, o, &solver, &mut out, &mut table)?,
        }
        out.tables.push(table);
    }
    Ok(out)
}

fn refined(solver: &SolverConfig, level: usize) -> SolverConfig {
    let mut c = solver.clone();
    c.dt = solver.dt / 2f64.powi(level as i32);
    c
}

fn rate_checks(out: &mut RunOutput, name: &str, values: &[f64], tol: &Tolerances) {
    for (i, w) in values.windows(2).enumerate() {
        let ratio = w[0] / w[1];
        out.scalar(format!("{name}_ratio_{i}"), ratio);
        for c in Check::within(format!("{name}.ratio_{i}"), ratio, tol.rate_min, tol.rate_max) {
            out.check(c);
        }
    }
}

/// Decay rate of the lowest discrete mode under the regularized flux.
fn first_mode_rate(solver: &SolverConfig) -> Result<(f64, NodeField), CliError> {
    let basis = SpectralHS::new(solver.grid, vec![1.0])?;
    let lambda = solver.lambda;
    let rate = basis.eigenvalues()[0] * (1.0 / (1.0 + lambda) + lambda);
    Ok((rate, basis.basis_field(0)))
}

fn heat_oracle(cfg: &ExperimentConfig, o: &OracleSpec, solver: &SolverConfig, out: &mut RunOutput, table: &mut Table) -> Result<(), CliError> {
    let tol = &cfg.tolerances;
    let (rate, _) = first_mode_rate(solver)?;
    let mut errors = Vec::new();
    let mut residuals = Vec::new();
    for level in 0..o.levels {
        let mut c = refined(solver, level);
        c.paths = 1;
        c.recording = Recording { state_every: 1, fields: false };
        let rec = simulate(&c)?.remove(0);
        let err = rec
            .times
            .iter()
            .zip(&rec.states)
            .map(|(t, s)| s.sub(&c.x0.scaled((-rate * t).exp())).norm_sq().sqrt())
            .fold(0.0, f64::max);
        let res = rec.ledger.pathwise_residual().abs();
        table.push(vec![num(c.dt), "sup_l2_error".into(), num(err)]);
        table.push(vec![num(c.dt), "energy_residual".into(), num(res)]);
        errors.push(err);
        residuals.push(res);
    }
    out.scalar("heat_error", errors[0]);
    out.check(Check::at_most("heat.sup_l2_error", errors[0], tol.heat_error));
    rate_checks(out, "heat.error", &errors, tol);
    rate_checks(out, "heat.energy_residual", &residuals, tol);
    Ok(())
}

fn ou_oracle(cfg: &ExperimentConfig, solver: &SolverConfig, records: &[TrajectoryRecord], out: &mut RunOutput, table: &mut Table) -> Result<(), CliError> {
    let tol = &cfg.tolerances;
    let (rate, mode) = first_mode_rate(solver)?;
    let c = cfg.beta.c.unwrap_or(0.0);
    let kappa = rate + c / (1.0 + solver.lambda * c);
    let b = match solver.effective_additive()? {
        Some(op) => op.coeffs()[0],
        None => return Err(CliError::config("noise.kind", "ornstein_uhlenbeck needs additive noise")),
    };
    let t = solver.t_final;
    let a0 = solver.x0.dot(&mode);
    let exact_mean = a0 * (-kappa * t).exp();
    let exact_var = b * b * (1.0 - (-2.0 * kappa * t).exp()) / (2.0 * kappa);

    let amps: Vec<f64> = records.iter().map(|r| r.terminal.dot(&mode)).collect();
    let est = MeanEstimate::from_samples(&amps)?;
    let m = amps.len() as f64;
    let var = amps.iter().map(|a| (a - est.mean).powi(2)).sum::<f64>() / (m - 1.0);
    let var_se = var * (2.0 / (m - 1.0)).sqrt();

    for (q, v) in [
        ("mean", est.mean),
        ("mean_standard_error", est.standard_error),
        ("exact_mean", exact_mean),
        ("variance", var),
        ("variance_standard_error", var_se),
        ("exact_variance", exact_var),
    ] {
        table.push(vec![num(solver.dt), q.into(), num(v)]);
        out.scalar(format!("ou_{q}"), v);
    }
    out.check(Check::at_most("ou.mean", (est.mean - exact_mean).abs(), tol.sigmas * est.standard_error));
    out.check(Check::at_most("ou.variance", (var - exact_var).abs(), tol.sigmas * var_se));
    Ok(())
}

fn energy_oracle(cfg: &ExperimentConfig, o: &OracleSpec, solver: &SolverConfig, out: &mut RunOutput, table: &mut Table) -> Result<(), CliError> {
    let tol = &cfg.tolerances;
    let mut residuals = Vec::new();
    for level in 0..o.levels {
        let mut c = refined(solver, level);
        c.recording = Recording::terminal();
        let records = simulate(&c)?;
        let rep = ito_residual_expectation(records.iter().map(|r| &r.ledger))?;
        let r = rep.residual;
        let allowance = tol.sigmas * r.standard_error + tol.energy_dt_constant * c.dt;
        out.check(Check::at_most(format!("energy.expectation_{level}"), r.mean.abs(), allowance));
        out.check(Check::at_most(
            format!("energy.martingale_mean_{level}"),
            rep.martingale.mean.abs(),
            tol.sigmas * rep.martingale.standard_error,
        ));
        path_checks(out, &records, tol, &format!("energy.level_{level}."))?;
        for (q, v) in [
            ("expectation_residual", r.mean),
            ("residual_standard_error", r.standard_error),
            ("martingale_mean", rep.martingale.mean),
            ("martingale_standard_error", rep.martingale.standard_error),
        ] {
            table.push(vec![num(c.dt), q.into(), num(v)]);
        }
        residuals.push(r.mean.abs());
    }
    rate_checks(out, "energy.expectation", &residuals, tol);
    Ok(())
}

const PICARD_HEADER: [&str; 6] = ["interval", "start_time", "end_time", "iteration", "difference", "factor"];

fn picard_table(rep: &ContractionReport) -> Table {
    let mut t = Table::new("picard.csv", &PICARD_HEADER);
    for iv in &rep.intervals {
        for (k, d) in iv.differences.iter().enumerate() {
            let factor = if k == 0 { None } else { iv.factors.get(k - 1).copied() };
            t.push(vec![
                iv.index.to_string(),
                num(iv.start_time),
                num(iv.end_time),
                (k + 1).to_string(),
                num(*d),
                opt_num(factor),
            ]);
        }
    }
    t
}

fn picard_outcome(solver: &SolverConfig, pcfg: &PicardConfig) -> Result<Option<(Vec<TrajectoryRecord>, ContractionReport)>, CliError> {
    match run_multiplicative_picard(solver, pcfg) {
        Ok(r) => Ok(Some(r)),
        Err(spdelab::Error::PicardNonConvergence { .. }) => Ok(None),
        Err(e) => Err(e.into()),
    }
}

fn run_picard(cfg: &ExperimentConfig) -> Result<RunOutput, CliError> {
    let tol = &cfg.tolerances;
    let spec = cfg.picard.clone().unwrap_or_default();
    let pcfg = spec.build();
    let solver = cfg.solver_config()?;
    let mut out = RunOutput::default();

    let Some((records, rep)) = picard_outcome(&solver, &pcfg)? else {
        out.check(Check::holds("picard.converged", false));
        out.tables.push(Table::new("picard.csv", &PICARD_HEADER));
        return Ok(out);
    };
    out.check(Check::holds("picard.converged", true));
    let s = rep.schedule;
    let bound = (s.tau * s.lipschitz).sqrt();
    out.scalar("lipschitz", s.lipschitz);
    out.scalar("tau", s.tau);
    out.scalar("steps_per_interval", s.steps_per_interval as f64);
    out.scalar("intervals", rep.intervals.len() as f64);
    out.scalar("contraction_bound", bound);
    out.scalar("max_factor", rep.max_factor());
    out.scalar("max_iterations", rep.max_iterations() as f64);
    out.check(Check::at_most("picard.contraction", rep.max_factor(), bound + tol.contraction_slack));
    out.check(Check::at_most("picard.iterations", rep.max_iterations() as f64, pcfg.max_iterations as f64));

    if spec.halving_check {
        let half = PicardConfig { tau: Some(s.tau / 2.0), ..pcfg };
        match picard_outcome(&solver, &half)? {
            Some((_, r)) => {
                out.scalar("halved_tau_max_factor", r.max_factor());
                out.check(Check::below("picard.halved_tau_factor", r.max_factor(), rep.max_factor()));
            }
            None => out.check(Check::holds("picard.halved_tau_factor", false)),
        }
    }
    if spec.constant_sigma_check {
        let mut c = solver.clone();
        let NoiseModel::Multiplicative(m) = &solver.noise else {
            return Err(CliError::config("noise.kind", "picard needs multiplicative noise"));
        };
        let level = m.sigma().bound();
        c.noise = NoiseModel::Multiplicative(MultiplicativeNoise::new(m.base().clone(), Sigma::constant(level)));
        match picard_outcome(&c, &pcfg)? {
            Some((_, r)) => {
                let eff = r.intervals.iter().map(|iv| iv.effective_iterations).max().unwrap_or(0);
                out.scalar("constant_sigma_effective_iterations", eff as f64);
                out.check(Check::at_most("picard.constant_sigma_effective_iterations", eff as f64, 1.0));
            }
            None => out.check(Check::holds("picard.constant_sigma_effective_iterations", false)),
        }
    }

    path_checks(&mut out, &records, tol, "")?;
    ledger_scalars(&mut out, &records);
    out.tables.push(picard_table(&rep));
    out.tables.push(ledger_table(&records, cfg.output.ledger_paths));
    out.tables.push(trajectory_table(&records, cfg.output.trajectory_paths));
    Ok(out)
}

fn run_convergence(cfg: &ExperimentConfig) -> Result<RunOutput, CliError> {
    let spec = cfg.convergence.clone().unwrap_or_default();
    let solver = cfg.solver_config()?;
    let table = convergence_study(&solver, &spec.lambdas, &spec.epsilons)?;
    let mut out = RunOutput::default();
    let mut csv = Table::new("convergence.csv", &["sweep", "from", "to", "difference", "hs_distance"]);
    let mut sweep = |name: &str, rows: &[StudyRow], decreasing: bool, out: &mut RunOutput| {
        for r in rows {
            csv.push(vec![name.into(), num(r.from), num(r.to), num(r.difference), opt_num(r.hs_distance)]);
        }
        if rows.len() >= 2 {
            let worst = rows.windows(2).map(|w| w[1].difference / w[0].difference).fold(0.0, f64::max);
            out.scalar(format!("{name}_max_successive_ratio"), worst);
            out.check(Check::holds(format!("convergence.{name}_strictly_decreasing"), decreasing));
        }
        if let Some(ratio) = rows
            .iter()
            .filter_map(|r| r.hs_distance.filter(|h| *h > 0.0).map(|h| r.difference / h))
            .reduce(f64::max)
        {
            out.scalar(format!("{name}_max_difference_over_hs_distance"), ratio);
        }
    };
    sweep("lambda", &table.lambda_rows, table.lambda_decreasing(), &mut out);
    sweep("eps", &table.eps_rows, table.eps_decreasing(), &mut out);
    out.tables.push(csv);
    Ok(out)
}

fn run_depend(cfg: &ExperimentConfig) -> Result<RunOutput, CliError> {
    let tol = &cfg.tolerances;
    let spec = cfg.depend.clone().unwrap_or_default();
    let base = cfg.solver_config()?;
    let pert = spec.perturbation.build(base.grid);
    let mut out = RunOutput::default();
    let mut csv = Table::new(
        "depend.csv",
        &["case", "scale", "distance", "initial_distance", "noise_distance", "denominator", "ratio"],
    );
    let mut push = |case: &str, scale: f64, r: &DependenceReport| {
        csv.push(vec![
            case.into(),
            num(scale),
            num(r.distance),
            num(r.initial_distance),
            opt_num(r.noise_distance),
            num(r.denominator),
            opt_num(r.ratio),
        ]);
    };

    let same = continuous_dependence_experiment(&base, &base)?;
    push("identical", 0.0, &same);
    out.scalar("identical_distance", same.distance);
    out.check(Check::at_most("depend.identical_inputs", same.distance, tol.uniqueness));

    let mut ratios = Vec::new();
    for &s in &spec.scales {
        let mut c = base.clone();
        c.x0 = base.x0.add(&pert.scaled(s));
        let r = continuous_dependence_experiment(&base, &c)?;
        push("initial", s, &r);
        ratios.extend(r.ratio);
    }
    let base_noise = match &base.noise {
        NoiseModel::Additive(b) => Some(b.clone()),
        NoiseModel::Multiplicative(_) => None,
    };
    if let Some(b) = &base_noise {
        for &s in &spec.noise_scales {
            let mut c = base.clone();
            let coeffs = b.coeffs().iter().map(|v| v * (1.0 + s)).collect();
            c.noise = NoiseModel::Additive(SpectralHS::new(base.grid, coeffs)?);
            let r = continuous_dependence_experiment(&base, &c)?;
            push("noise", s, &r);
            ratios.extend(r.ratio);
        }
        if spec.remove_noise {
            let mut c = base.clone();
            c.noise = NoiseModel::Additive(SpectralHS::zero(base.grid));
            let r = continuous_dependence_experiment(&base, &c)?;
            push("noise_removed", 1.0, &r);
            ratios.extend(r.ratio);
        }
    }
    let max = ratios.iter().copied().fold(0.0, f64::max);
    let min = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    out.scalar("max_ratio", max);
    if min.is_finite() {
        out.scalar("min_ratio", min);
    }
    out.check(Check::at_most("depend.common_bound", max, tol.dependence_bound));
    out.tables.push(csv);
    Ok(out)
}
