use std::fmt;
use std::sync::Arc;

use super::interval::Interval;
use super::potential::Potential;
use super::root::{solve_inclusion, MonotoneMap};
use crate::{Error, Result};

pub type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Discontinuity of a jump graph: the graph takes the whole interval
/// `[left, right]` at `at`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JumpPoint {
    pub at: f64,
    pub left: f64,
    pub right: f64,
}

#[derive(Clone)]
pub enum ScalarKind {
    Identity,
    /// `β(x) = |x|^{p−2} x`.
    Power { p: f64 },
    /// `β(x) = Σᵢ cᵢ x^{2i+1}`.
    PolynomialOdd { coeffs: Vec<f64> },
    /// Nondecreasing `base` away from the sorted `jumps`.
    Jump { jumps: Vec<JumpPoint>, base: ScalarFn, base_slope: Option<ScalarFn> },
    Custom { f: ScalarFn, slope: Option<ScalarFn> },
}

impl fmt::Debug for ScalarKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScalarKind::Identity => write!(f, "Identity"),
            ScalarKind::Power { p } => write!(f, "Power {{ p: {p} }}"),
            ScalarKind::PolynomialOdd { coeffs } => write!(f, "PolynomialOdd {{ coeffs: {coeffs:?} }}"),
            ScalarKind::Jump { jumps, .. } => write!(f, "Jump {{ jumps: {jumps:?} }}"),
            ScalarKind::Custom { .. } => write!(f, "Custom"),
        }
    }
}

/// Maximal monotone graph β on ℝ with `D(β) = ℝ` and `0 ∈ β(0)`, together
/// with its potential `j` (`∂j = β`).
#[derive(Clone, Debug)]
pub struct ScalarGraph {
    name: String,
    kind: ScalarKind,
    potential: Potential,
}

impl ScalarGraph {
    pub fn identity() -> Self {
        ScalarGraph {
            name: "identity".into(),
            kind: ScalarKind::Identity,
            potential: Potential::new(|y| 0.5 * y * y, true).with_conjugate(|r| 0.5 * r * r),
        }
    }

    /// `β(x) = |x|^{p−2} x`, `j = |x|^p/p`, `j* = |r|^q/q`.
    pub fn power(p: f64) -> Result<Self> {
        if !(p > 1.0) || !p.is_finite() {
            return Err(Error::invalid("p", format!("power graph needs p > 1, got {p}")));
        }
        let q = p / (p - 1.0);
        Ok(ScalarGraph {
            name: format!("power(p={p})"),
            kind: ScalarKind::Power { p },
            potential: Potential::new(move |y: f64| y.abs().powf(p) / p, true)
                .with_conjugate(move |r: f64| r.abs().powf(q) / q),
        })
    }

    /// Odd polynomial with nonnegative coefficients `c₀ x + c₁ x³ + …`.
    pub fn polynomial_odd(coeffs: Vec<f64>) -> Result<Self> {
        if let Some(c) = coeffs.iter().find(|c| !(**c >= 0.0) || !c.is_finite()) {
            return Err(Error::invalid("coeffs", format!("coefficients must be finite and nonnegative, got {c}")));
        }
        let cs = coeffs.clone();
        let eval = move |y: f64| {
            cs.iter()
                .enumerate()
                .map(|(i, c)| c * y.powi(2 * i as i32 + 2) / (2 * i + 2) as f64)
                .sum::<f64>()
        };
        let nonzero: Vec<usize> = (0..coeffs.len()).filter(|&i| coeffs[i] > 0.0).collect();
        let mut potential = Potential::new(eval, true);
        if nonzero.is_empty() {
            potential = potential.with_conjugate(|r| if r == 0.0 { 0.0 } else { f64::INFINITY });
        } else if nonzero == [0] {
            let c = coeffs[0];
            potential = potential.with_conjugate(move |r| r * r / (2.0 * c));
        }
        let name = if nonzero.is_empty() {
            "zero".to_string()
        } else {
            format!("polynomial_odd({coeffs:?})")
        };
        Ok(ScalarGraph { name, kind: ScalarKind::PolynomialOdd { coeffs }, potential })
    }

    /// `β ≡ 0`.
    pub fn zero() -> Self {
        Self::polynomial_odd(Vec::new()).expect("empty coefficient list is valid")
    }

    /// `β(x) = c x` with `c ≥ 0`.
    pub fn linear(c: f64) -> Result<Self> {
        let mut g = Self::polynomial_odd(vec![c])?;
        if c > 0.0 {
            g.name = format!("linear(c={c})");
        }
        Ok(g)
    }

    /// `β = ∂|·|`, the sign graph with `β(0) = [−1, 1]`.
    pub fn sign() -> Self {
        ScalarGraph {
            name: "sign".into(),
            kind: ScalarKind::Jump {
                jumps: vec![JumpPoint { at: 0.0, left: -1.0, right: 1.0 }],
                base: Arc::new(f64::signum),
                base_slope: Some(Arc::new(|_| 0.0)),
            },
            potential: Potential::new(f64::abs, true)
                .with_conjugate(|r: f64| if r.abs() <= 1.0 { 0.0 } else { f64::INFINITY }),
        }
    }

    /// `β(x) = c x + sign(x)`: linear growth with a unit jump at the origin.
    pub fn relay(c: f64) -> Result<Self> {
        if !(c > 0.0) || !c.is_finite() {
            return Err(Error::invalid("c", format!("relay graph needs c > 0, got {c}")));
        }
        Ok(ScalarGraph {
            name: format!("relay(c={c})"),
            kind: ScalarKind::Jump {
                jumps: vec![JumpPoint { at: 0.0, left: -1.0, right: 1.0 }],
                base: Arc::new(move |x: f64| c * x + x.signum()),
                base_slope: Some(Arc::new(move |_| c)),
            },
            potential: Potential::new(move |y: f64| 0.5 * c * y * y + y.abs(), true).with_conjugate(move |r: f64| {
                let e = (r.abs() - 1.0).max(0.0);
                e * e / (2.0 * c)
            }),
        })
    }

    /// General jump graph. `base` must be nondecreasing and continuous away
    /// from the jump points, with one-sided limits matching `left`/`right`.
    pub fn jump(
        name: impl Into<String>,
        mut jumps: Vec<JumpPoint>,
        base: ScalarFn,
        base_slope: Option<ScalarFn>,
        potential: Potential,
    ) -> Result<Self> {
        jumps.sort_by(|a, b| a.at.total_cmp(&b.at));
        for w in jumps.windows(2) {
            if w[0].at == w[1].at || w[0].right > w[1].left {
                return Err(Error::invalid("jumps", "jump points must be distinct and nondecreasing"));
            }
        }
        if let Some(j) = jumps.iter().find(|j| !(j.left <= j.right)) {
            return Err(Error::invalid("jumps", format!("left limit exceeds right limit at {}", j.at)));
        }
        let g = ScalarGraph { name: name.into(), kind: ScalarKind::Jump { jumps, base, base_slope }, potential };
        if !g.value(0.0).contains(0.0, 0.0) {
            return Err(Error::invalid("jumps", "graph must contain the origin"));
        }
        Ok(g)
    }

    /// Continuous nondecreasing `f` with `f(0) = 0`.
    pub fn custom(name: impl Into<String>, f: ScalarFn, slope: Option<ScalarFn>, potential: Potential) -> Result<Self> {
        if f(0.0) != 0.0 {
            return Err(Error::invalid("f", "custom graph must satisfy f(0) = 0"));
        }
        Ok(ScalarGraph { name: name.into(), kind: ScalarKind::Custom { f, slope }, potential })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn kind(&self) -> &ScalarKind {
        &self.kind
    }

    pub fn potential(&self) -> &Potential {
        &self.potential
    }

    pub fn jump_points(&self) -> &[JumpPoint] {
        match &self.kind {
            ScalarKind::Jump { jumps, .. } => jumps,
            _ => &[],
        }
    }

    /// β(x) as a closed interval.
    pub fn value(&self, x: f64) -> Interval {
        match &self.kind {
            ScalarKind::Identity => Interval::point(x),
            ScalarKind::Power { p } => Interval::point(x.abs().powf(p - 2.0) * x),
            ScalarKind::PolynomialOdd { coeffs } => Interval::point(odd_poly(coeffs, x)),
            ScalarKind::Jump { jumps, base, .. } => match jumps.iter().find(|j| j.at == x) {
                Some(j) => Interval::new(j.left, j.right),
                None => Interval::point(base(x)),
            },
            ScalarKind::Custom { f, .. } => Interval::point(f(x)),
        }
    }

    /// Minimal-norm selection of β(x).
    pub fn selection(&self, x: f64) -> f64 {
        self.value(x).min_norm()
    }

    /// Derivative where β is single valued and differentiable.
    pub fn slope(&self, x: f64) -> Option<f64> {
        match &self.kind {
            ScalarKind::Identity => Some(1.0),
            ScalarKind::Power { p } => {
                let s = (p - 1.0) * x.abs().powf(p - 2.0);
                s.is_finite().then_some(s)
            }
            ScalarKind::PolynomialOdd { coeffs } => Some(
                coeffs
                    .iter()
                    .enumerate()
                    .map(|(i, c)| c * (2 * i + 1) as f64 * x.powi(2 * i as i32))
                    .sum(),
            ),
            ScalarKind::Jump { jumps, base_slope, .. } => {
                if jumps.iter().any(|j| j.at == x) {
                    None
                } else {
                    base_slope.as_ref().map(|s| s(x))
                }
            }
            ScalarKind::Custom { slope, .. } => slope.as_ref().map(|s| s(x)),
        }
    }

    /// `R_δ x = (I + δβ)⁻¹ x`.
    pub fn resolvent(&self, delta: f64, x: f64) -> Result<f64> {
        check_delta(delta)?;
        if !x.is_finite() {
            return Err(Error::invalid("x", format!("resolvent argument must be finite, got {x}")));
        }
        match &self.kind {
            ScalarKind::Identity => Ok(x / (1.0 + delta)),
            ScalarKind::PolynomialOdd { coeffs } if coeffs.iter().all(|c| *c == 0.0) => Ok(x),
            ScalarKind::Jump { jumps, .. } => {
                // The root sits on a jump iff x − xₙ ∈ δ·[β₋(xₙ), β₊(xₙ)].
                for j in jumps {
                    if Interval::new(j.left, j.right).scale(delta).contains(x - j.at, 0.0) {
                        return Ok(j.at);
                    }
                }
                solve_inclusion(self, delta, x)
            }
            _ => solve_inclusion(self, delta, x),
        }
    }

    /// `R_δ x` together with a (generalised) derivative `dR_δ/dx ∈ [0, 1]`.
    /// On a jump the resolvent is flat and the derivative is 0.
    pub fn resolvent_with_derivative(&self, delta: f64, x: f64) -> Result<(f64, f64)> {
        let r = self.resolvent(delta, x)?;
        if self.jump_points().iter().any(|j| j.at == r) {
            return Ok((r, 0.0));
        }
        let d = match self.slope(r) {
            Some(s) if s.is_finite() && s >= 0.0 => 1.0 / (1.0 + delta * s),
            _ => {
                let h = 1e-7 * (1.0 + x.abs());
                ((self.resolvent(delta, x + h)? - self.resolvent(delta, x - h)?) / (2.0 * h)).clamp(0.0, 1.0)
            }
        };
        Ok((r, d))
    }

    /// `β_δ(x) = (x − R_δ x)/δ`, an element of β(R_δ x).
    pub fn yosida(&self, delta: f64, x: f64) -> Result<f64> {
        let r = self.resolvent(delta, x)?;
        Ok((x - r) / delta)
    }

    /// `j_λ(x) = |x − R_λ x|²/(2λ) + j(R_λ x)`.
    pub fn moreau_envelope(&self, lambda: f64, x: f64) -> Result<f64> {
        let r = self.resolvent(lambda, x)?;
        Ok((x - r) * (x - r) / (2.0 * lambda) + self.potential.eval(r))
    }

    /// Implicit Euler step for the Yosida approximation:
    /// `(I + h β_λ)⁻¹ x = (λ x + h R_{λ+h} x)/(λ + h)`.
    pub fn yosida_implicit_step(&self, lambda: f64, h: f64, x: f64) -> Result<f64> {
        check_delta(lambda)?;
        if h == 0.0 {
            return Ok(x);
        }
        let r = self.resolvent(lambda + h, x)?;
        Ok((lambda * x + h * r) / (lambda + h))
    }
}

impl MonotoneMap for ScalarGraph {
    fn value(&self, y: f64) -> Interval {
        ScalarGraph::value(self, y)
    }

    fn slope(&self, y: f64) -> Option<f64> {
        ScalarGraph::slope(self, y)
    }
}

fn odd_poly(coeffs: &[f64], x: f64) -> f64 {
    let x2 = x * x;
    coeffs.iter().rev().fold(0.0, |acc, c| acc * x2 + c) * x
}

pub(crate) fn check_delta(delta: f64) -> Result<()> {
    if delta > 0.0 && delta.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid("delta", format!("regularization parameter must be positive, got {delta}")))
    }
}
