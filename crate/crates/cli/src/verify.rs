//! Property suite run by the `verify` command: monotone-graph toolkit,
//! Leray–Lions declarations, discrete duality and commutation, and the
//! monotonicity/coercivity/boundedness of the regularized operator.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use spdelab::grid::{commutation_residual, divergence, gradient, Boundary, EdgeField, EllipticSmoother, Grid, NodeField};
use spdelab::monotone::{leray_lions_check, LerayLionsParams, ScalarGraph, VectorGraph, VectorKind};
use spdelab::solver::apply_a_lambda;

use crate::config::{Tolerances, VerifySpec};
use crate::error::CliError;
use crate::output::{num, Check, RunOutput, Table};

/// Coordinates are drawn from `[−SAMPLE_RADIUS, SAMPLE_RADIUS]`.
const SAMPLE_RADIUS: f64 = 4.0;
const RANGE_TOLERANCE: f64 = 1e-9;
/// Relative slack for the Lipschitz-type inequalities.
const LIPSCHITZ_SLACK: f64 = 1e-12;
const DUALITY_PAIRS: usize = 20;

pub fn builtin_scalar_graphs() -> Vec<(String, ScalarGraph)> {
    let mut v = vec![
        ("zero".to_string(), ScalarGraph::zero()),
        ("identity".to_string(), ScalarGraph::identity()),
        ("sign".to_string(), ScalarGraph::sign()),
    ];
    let fallible = [
        ("linear_c2", ScalarGraph::linear(2.0)),
        ("power_p3", ScalarGraph::power(3.0)),
        ("power_p1.5", ScalarGraph::power(1.5)),
        ("polynomial_1_0_1", ScalarGraph::polynomial_odd(vec![1.0, 0.0, 1.0])),
        ("relay_c1", ScalarGraph::relay(1.0)),
    ];
    for (name, g) in fallible {
        v.push((name.to_string(), g.expect("builtin parameters are valid")));
    }
    v
}

pub fn builtin_vector_graphs() -> Vec<(String, VectorGraph)> {
    let ll = LerayLionsParams::new(2.0, 1.0, 1.0, 0.0).expect("valid constants");
    vec![
        ("identity_2d".to_string(), VectorGraph::identity(2).expect("d = 2")),
        ("p_power_p3_2d".to_string(), VectorGraph::p_power(2, 3.0).expect("p = 3")),
        ("p_power_p1.5_2d".to_string(), VectorGraph::p_power(2, 1.5).expect("p = 1.5")),
        ("radial_exp_2d".to_string(), VectorGraph::radial_exp(2, ll).expect("d = 2")),
    ]
}

/// Worst values of each monotone-toolkit measure over the samples.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ToolkitMeasures {
    /// max (|Jx − Jy| − |x − y|)/|x − y|
    pub nonexpansive_excess: f64,
    /// max (δ|β_δx − β_δy| − |x − y|)/|x − y|
    pub yosida_excess: f64,
    /// max distance of (x − Jx)/δ to β(Jx), relative to 1 + |(x − Jx)/δ|
    pub range_gap: f64,
    /// min j(x) + j*(y) − x·y
    pub fenchel_young_min: f64,
    /// max |j(x) + j*(y) − x·y| at y ∈ β(x)
    pub fenchel_equality_gap: f64,
    /// max |y + hβ_λ(y) − x|/(1 + |x|) with y from the resolvent-of-Yosida formula
    pub resolvent_identity_gap: f64,
}

fn random_delta(rng: &mut ChaCha8Rng) -> f64 {
    10f64.powf(rng.random_range(-2.0..0.0))
}

fn random_point(rng: &mut ChaCha8Rng, d: usize) -> Vec<f64> {
    (0..d).map(|_| rng.random_range(-SAMPLE_RADIUS..SAMPLE_RADIUS)).collect()
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn excess(lhs: f64, rhs: f64) -> f64 {
    if rhs > 0.0 {
        (lhs - rhs) / rhs
    } else if lhs > 0.0 {
        f64::INFINITY
    } else {
        0.0
    }
}

pub fn scalar_measures(g: &ScalarGraph, samples: usize, seed: u64) -> Result<ToolkitMeasures, CliError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut m = ToolkitMeasures { fenchel_young_min: f64::INFINITY, ..Default::default() };
    let pot = g.potential();
    for _ in 0..samples {
        let delta = random_delta(&mut rng);
        let h = random_delta(&mut rng);
        let x = rng.random_range(-SAMPLE_RADIUS..SAMPLE_RADIUS);
        let y = rng.random_range(-SAMPLE_RADIUS..SAMPLE_RADIUS);

        let (jx, jy) = (g.resolvent(delta, x)?, g.resolvent(delta, y)?);
        m.nonexpansive_excess = m.nonexpansive_excess.max(excess((jx - jy).abs(), (x - y).abs()));
        let (ax, ay) = ((x - jx) / delta, (y - jy) / delta);
        m.yosida_excess = m.yosida_excess.max(excess(delta * (ax - ay).abs(), (x - y).abs()));

        let v = g.value(jx);
        let gap = (v.lo - ax).max(ax - v.hi).max(0.0) / (1.0 + ax.abs());
        m.range_gap = m.range_gap.max(gap);

        let fy = pot.eval(x) + pot.conjugate(y) - x * y;
        m.fenchel_young_min = m.fenchel_young_min.min(fy);
        let s = g.selection(x);
        let eq = pot.eval(x) + pot.conjugate(s) - x * s;
        m.fenchel_equality_gap = m.fenchel_equality_gap.max(eq.abs());

        let z = g.yosida_implicit_step(delta, h, x)?;
        let res = (z + h * g.yosida(delta, z)? - x).abs() / (1.0 + x.abs());
        m.resolvent_identity_gap = m.resolvent_identity_gap.max(res);
    }
    Ok(m)
}

fn vector_conjugate(g: &VectorGraph, y: &[f64]) -> f64 {
    match g.kind() {
        VectorKind::Identity => 0.5 * dot(y, y),
        VectorKind::Radial { profile } => profile.potential().conjugate(dot(y, y).sqrt()),
        VectorKind::Diagonal { components } => components.iter().zip(y).map(|(c, v)| c.potential().conjugate(*v)).sum(),
    }
}

pub fn vector_measures(g: &VectorGraph, samples: usize, seed: u64) -> Result<ToolkitMeasures, CliError> {
    let d = g.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut m = ToolkitMeasures { fenchel_young_min: f64::INFINITY, ..Default::default() };
    for _ in 0..samples {
        let delta = random_delta(&mut rng);
        let h = random_delta(&mut rng);
        let x = random_point(&mut rng, d);
        let y = random_point(&mut rng, d);

        let (jx, jy) = (g.resolvent(delta, &x)?, g.resolvent(delta, &y)?);
        let dxy = dist(&x, &y);
        m.nonexpansive_excess = m.nonexpansive_excess.max(excess(dist(&jx, &jy), dxy));
        let (ax, ay) = (g.yosida(delta, &x)?, g.yosida(delta, &y)?);
        m.yosida_excess = m.yosida_excess.max(excess(delta * dist(&ax, &ay), dxy));

        let scale = 1.0 + dot(&ax, &ax).sqrt();
        if !g.contains(&jx, &ax, RANGE_TOLERANCE * scale)? {
            let sel = g.selection(&jx)?;
            m.range_gap = m.range_gap.max(dist(&sel, &ax) / scale);
        }

        let fy = g.potential(&x) + vector_conjugate(g, &y) - dot(&x, &y);
        m.fenchel_young_min = m.fenchel_young_min.min(fy);
        let s = g.selection(&x)?;
        let eq = g.potential(&x) + vector_conjugate(g, &s) - dot(&x, &s);
        m.fenchel_equality_gap = m.fenchel_equality_gap.max(eq.abs());

        let r = g.resolvent(delta + h, &x)?;
        let z: Vec<f64> = x.iter().zip(&r).map(|(a, b)| (delta * a + h * b) / (delta + h)).collect();
        let az = g.yosida(delta, &z)?;
        let res: Vec<f64> = z.iter().zip(&az).map(|(a, b)| a + h * b).collect();
        m.resolvent_identity_gap = m.resolvent_identity_gap.max(dist(&res, &x) / (1.0 + dot(&x, &x).sqrt()));
    }
    Ok(m)
}

fn toolkit_checks(out: &mut RunOutput, name: &str, m: &ToolkitMeasures, tol: &Tolerances) {
    let p = format!("monotone.{name}");
    out.check(Check::at_most(format!("{p}.resolvent_nonexpansive"), m.nonexpansive_excess, LIPSCHITZ_SLACK));
    out.check(Check::at_most(format!("{p}.yosida_lipschitz"), m.yosida_excess, LIPSCHITZ_SLACK));
    out.check(Check::at_most(format!("{p}.range_condition"), m.range_gap, RANGE_TOLERANCE));
    out.check(Check::at_least(format!("{p}.fenchel_young"), m.fenchel_young_min, -tol.fenchel_young));
    out.check(Check::at_most(format!("{p}.fenchel_equality"), m.fenchel_equality_gap, tol.fenchel_equality));
    out.check(Check::at_most(format!("{p}.resolvent_of_yosida"), m.resolvent_identity_gap, tol.resolvent_identity));
}

fn random_node(grid: Grid, rng: &mut ChaCha8Rng) -> NodeField {
    let amp = 10f64.powf(rng.random_range(-2.0..1.0));
    let v = (0..grid.node_count()).map(|_| amp * rng.random_range(-1.0..1.0)).collect();
    NodeField::from_values(grid, v).expect("length matches the grid")
}

fn random_edge(grid: Grid, rng: &mut ChaCha8Rng) -> EdgeField {
    let v = (0..grid.edge_len()).map(|_| rng.random_range(-1.0..1.0)).collect();
    EdgeField::from_values(grid, v).expect("length matches the grid")
}

/// max over random pairs of |⟨−div v, u⟩ − ⟨v, ∇u⟩| / (‖v‖‖∇u‖).
pub fn duality_defect(grid: Grid, pairs: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..pairs {
        let u = random_node(grid, &mut rng);
        let v = random_edge(grid, &mut rng);
        let gu = gradient(&u);
        let lhs = -divergence(&v).dot(&u);
        let rhs = v.dot(&gu);
        let scale = (v.norm_sq() * gu.norm_sq()).sqrt();
        if scale > 0.0 {
            worst = worst.max((lhs - rhs).abs() / scale);
        }
    }
    worst
}

/// Largest commutation defect of the smoother with div and ∇.
pub fn commutation_defect(grid: Grid, pairs: usize, seed: u64) -> Result<f64, CliError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for i in 0..pairs {
        let delta = [1e-3, 1e-2, 1e-1][i % 3];
        let s = EllipticSmoother::new(grid, delta, 1 + i % 3)?;
        let (a, b) = commutation_residual(&s, &random_edge(grid, &mut rng), &random_node(grid, &mut rng))?;
        worst = worst.max(a).max(b);
    }
    Ok(worst)
}

/// Worst values of the operator probes over random fields.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OperatorMeasures {
    /// min ⟨A u − A v, u − v⟩ / (‖A u − A v‖‖u − v‖)
    pub monotonicity: f64,
    /// min (⟨A v, v⟩ − λ‖∇v‖²) / (|⟨A v, v⟩| + λ‖∇v‖²)
    pub coercivity: f64,
    /// max ‖A v‖ / (c (2/λ + λ)(‖v‖ + ‖∇v‖)), c from the inverse inequality
    pub boundedness: f64,
}

pub fn operator_measures(
    gamma: &VectorGraph,
    beta: &ScalarGraph,
    lambda: f64,
    grid: Grid,
    pairs: usize,
    seed: u64,
) -> Result<OperatorMeasures, CliError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut m = OperatorMeasures { monotonicity: f64::INFINITY, coercivity: f64::INFINITY, boundedness: 0.0 };
    let c = grid.inverse_inequality_constant().sqrt().max(1.0);
    for _ in 0..pairs {
        let u = random_node(grid, &mut rng);
        let v = random_node(grid, &mut rng);
        let (au, av) = (apply_a_lambda(gamma, beta, lambda, &u)?, apply_a_lambda(gamma, beta, lambda, &v)?);
        let (da, du) = (au.sub(&av), u.sub(&v));
        let scale = (da.norm_sq() * du.norm_sq()).sqrt();
        if scale > 0.0 {
            m.monotonicity = m.monotonicity.min(da.dot(&du) / scale);
        }
        let avv = av.dot(&v);
        let floor = lambda * gradient(&v).norm_sq();
        let scale = avv.abs() + floor;
        if scale > 0.0 {
            m.coercivity = m.coercivity.min((avv - floor) / scale);
        }
        let w12 = v.norm_sq().sqrt() + gradient(&v).norm_sq().sqrt();
        if w12 > 0.0 {
            m.boundedness = m.boundedness.max(av.norm_sq().sqrt() / (c * (2.0 / lambda + lambda) * w12));
        }
    }
    Ok(m)
}

/// Runs the whole suite, appending checks and a `verify.csv` table.
pub fn run_suite(spec: &VerifySpec, tol: &Tolerances) -> Result<RunOutput, CliError> {
    let mut out = RunOutput::default();
    let mut table = Table::new("verify.csv", &["group", "case", "measure", "value"]);
    let mut row = |g: &str, c: &str, m: &str, v: f64| table.push(vec![g.into(), c.into(), m.into(), num(v)]);

    let mut seed = spec.seed;
    let mut next_seed = || {
        seed = seed.wrapping_add(0x9e37_79b9_7f4a_7c15);
        seed
    };

    let record = |out: &mut RunOutput, name: &str, m: ToolkitMeasures, row: &mut dyn FnMut(&str, &str, &str, f64)| {
        toolkit_checks(out, name, &m, tol);
        row("monotone", name, "nonexpansive_excess", m.nonexpansive_excess);
        row("monotone", name, "yosida_excess", m.yosida_excess);
        row("monotone", name, "range_gap", m.range_gap);
        row("monotone", name, "fenchel_young_min", m.fenchel_young_min);
        row("monotone", name, "fenchel_equality_gap", m.fenchel_equality_gap);
        row("monotone", name, "resolvent_identity_gap", m.resolvent_identity_gap);
    };
    for (name, g) in builtin_scalar_graphs() {
        let m = scalar_measures(&g, spec.samples, next_seed())?;
        record(&mut out, &name, m, &mut row);
    }
    for (name, g) in builtin_vector_graphs() {
        let m = vector_measures(&g, spec.samples, next_seed())?;
        record(&mut out, &name, m, &mut row);
    }

    // Leray–Lions declarations.
    let ll3 = LerayLionsParams::new(3.0, 1.0, 1.0, 0.0)?;
    let p3 = VectorGraph::p_power(2, 3.0)?;
    let rep = leray_lions_check(&p3, &ll3, spec.samples, 10.0);
    out.check(Check::holds("leray_lions.p_power_p3.passes", rep.pass));
    row("leray_lions", "p_power_p3", "worst_growth_ratio", rep.worst_growth_ratio);
    let ll2 = LerayLionsParams::new(2.0, 1.0, 1.0, 0.0)?;
    let exp = VectorGraph::radial_exp(2, ll2)?;
    let rep = leray_lions_check(&exp, &ll2, spec.samples, 3.0);
    out.check(Check::holds("leray_lions.radial_exp_at_p2.fails_with_witness", !rep.pass && rep.witness.is_some()));
    row("leray_lions", "radial_exp_at_p2", "worst_growth_ratio", rep.worst_growth_ratio);

    // Discrete duality and smoother commutation.
    let mut grids = Vec::new();
    for n in [15, 63, 255] {
        grids.push((format!("dirichlet_1d_n{n}"), Grid::dirichlet_1d(n)?));
    }
    grids.push(("dirichlet_2d_n31".into(), Grid::dirichlet_2d(31)?));
    grids.push(("periodic_1d_n64".into(), Grid::periodic_1d(64)?));
    grids.push(("periodic_2d_n32".into(), Grid::periodic_2d(32)?));
    for (name, g) in &grids {
        let d = duality_defect(*g, DUALITY_PAIRS, next_seed());
        out.check(Check::at_most(format!("duality.{name}"), d, tol.duality));
        row("duality", name, "relative_defect", d);
    }
    for (name, g) in grids.iter().filter(|(_, g)| g.boundary() == Boundary::Periodic) {
        let d = commutation_defect(*g, 6, next_seed())?;
        out.check(Check::at_most(format!("commutation.{name}"), d, tol.commutation));
        row("commutation", name, "defect", d);
    }

    // Regularized operator.
    let configs: [(&str, VectorGraph, ScalarGraph, f64, Grid); 3] = [
        ("identity_linear_1d", VectorGraph::identity(1)?, ScalarGraph::linear(1.0)?, 1e-2, Grid::dirichlet_1d(31)?),
        ("p3_sign_1d", VectorGraph::p_power(1, 3.0)?, ScalarGraph::sign(), 5e-2, Grid::periodic_1d(32)?),
        ("p1.5_relay_2d", VectorGraph::p_power(2, 1.5)?, ScalarGraph::relay(1.0)?, 1e-1, Grid::dirichlet_2d(15)?),
    ];
    for (name, gamma, beta, lambda, grid) in &configs {
        let m = operator_measures(gamma, beta, *lambda, *grid, spec.pairs, next_seed())?;
        out.check(Check::at_least(format!("operator.{name}.monotonicity"), m.monotonicity, -tol.monotonicity));
        out.check(Check::at_least(format!("operator.{name}.coercivity"), m.coercivity, -tol.monotonicity));
        out.check(Check::at_most(format!("operator.{name}.boundedness"), m.boundedness, 1.0));
        row("operator", name, "monotonicity", m.monotonicity);
        row("operator", name, "coercivity", m.coercivity);
        row("operator", name, "boundedness", m.boundedness);
    }

    out.scalar("checks", out.checks.len() as f64);
    out.tables.push(table);
    Ok(out)
}
