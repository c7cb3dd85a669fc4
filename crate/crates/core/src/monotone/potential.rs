use std::fmt;
use std::sync::Arc;

use super::scalar::ScalarFn;

/// Consecutive non-increasing expansions that end the bracket search.
const EXPANSION_PATIENCE: usize = 8;
/// Objective values beyond this are reported as `+∞`.
const DIVERGENCE_THRESHOLD: f64 = 1e12;
const FIRST_STEP: f64 = 1e-3;
const MAX_EXPANSIONS: usize = 1100;
const GOLDEN_ITERATIONS: usize = 200;

/// Convex potential `j: ℝ → [0, ∞)` with `j(0) = 0`.
///
/// The conjugate `j*` uses the closed form when one was supplied and falls
/// back to a one-dimensional sup-search otherwise.
#[derive(Clone)]
pub struct Potential {
    eval: ScalarFn,
    conjugate: Option<ScalarFn>,
    even: bool,
}

impl fmt::Debug for Potential {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Potential")
            .field("closed_form_conjugate", &self.conjugate.is_some())
            .field("even", &self.even)
            .finish()
    }
}

impl Potential {
    pub fn new(eval: impl Fn(f64) -> f64 + Send + Sync + 'static, even: bool) -> Self {
        Potential { eval: Arc::new(eval), conjugate: None, even }
    }

    /// Attaches a closed-form conjugate. It may return `f64::INFINITY`.
    pub fn with_conjugate(mut self, conj: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        self.conjugate = Some(Arc::new(conj));
        self
    }

    pub fn eval(&self, y: f64) -> f64 {
        (self.eval)(y)
    }

    pub fn is_even(&self) -> bool {
        self.even
    }

    pub fn has_closed_form_conjugate(&self) -> bool {
        self.conjugate.is_some()
    }

    /// `j*(r)`; `+∞` when the supremum diverges.
    pub fn conjugate(&self, r: f64) -> f64 {
        match &self.conjugate {
            Some(c) => c(r),
            None => self.conjugate_by_search(r),
        }
    }

    /// Sup-search for `sup_y { r y − j(y) }`, ignoring any closed form.
    ///
    /// Since `j ≥ 0 = j(0)` the maximiser has the sign of `r`, so the search
    /// runs along the half line `y = s·t, t ≥ 0` with `s = sign(r)`. The
    /// bracket grows geometrically until the concave objective stops
    /// increasing, then golden-section search refines it.
    pub fn conjugate_by_search(&self, r: f64) -> f64 {
        if r == 0.0 {
            return 0.0;
        }
        let s = r.signum();
        let slope = r.abs();
        let psi = |t: f64| slope * t - self.eval(s * t);

        // ts[i] = 0 for i = 0 and FIRST_STEP·2^(i−1) afterwards.
        let mut ts = vec![0.0];
        let mut vals = vec![0.0];
        let mut best = 0usize;
        let mut stalled = 0usize;
        let mut t = FIRST_STEP;
        for _ in 0..MAX_EXPANSIONS {
            let v = psi(t);
            if v == f64::NEG_INFINITY {
                // j overflowed past the maximiser; the bracket is already closed.
                stalled = EXPANSION_PATIENCE;
                break;
            }
            if !v.is_finite() || v > DIVERGENCE_THRESHOLD {
                return f64::INFINITY;
            }
            let prev = *vals.last().unwrap();
            ts.push(t);
            vals.push(v);
            if v > vals[best] {
                best = vals.len() - 1;
            }
            if v <= prev {
                stalled += 1;
                if stalled >= EXPANSION_PATIENCE {
                    break;
                }
            } else {
                stalled = 0;
            }
            t *= 2.0;
            if !t.is_finite() {
                return f64::INFINITY;
            }
        }
        if stalled < EXPANSION_PATIENCE {
            return f64::INFINITY;
        }

        let mut a = ts[best.saturating_sub(1)];
        let mut b = ts[(best + 1).min(ts.len() - 1)];
        let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
        let mut c = b - inv_phi * (b - a);
        let mut d = a + inv_phi * (b - a);
        let (mut fc, mut fd) = (psi(c), psi(d));
        for _ in 0..GOLDEN_ITERATIONS {
            if (b - a).abs() <= 1e-15 * (1.0 + b.abs()) {
                break;
            }
            if fc >= fd {
                b = d;
                d = c;
                fd = fc;
                c = b - inv_phi * (b - a);
                fc = psi(c);
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + inv_phi * (b - a);
                fd = psi(d);
            }
        }
        let refined = fc.max(fd).max(psi(0.5 * (a + b)));
        refined.max(vals[best]).max(0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_is_self_conjugate() {
        let j = Potential::new(|y| 0.5 * y * y, true);
        assert!((j.conjugate_by_search(2.0) - 2.0).abs() < 1e-10);
        assert!((j.conjugate_by_search(-3.0) - 4.5).abs() < 1e-10);
    }

    #[test]
    fn abs_value_has_indicator_conjugate() {
        let j = Potential::new(f64::abs, true);
        assert_eq!(j.conjugate_by_search(0.5), 0.0);
        assert_eq!(j.conjugate_by_search(1.0), 0.0);
        assert!(j.conjugate_by_search(1.5).is_infinite());
        assert!(j.conjugate_by_search(-1.0001).is_infinite());
    }

    #[test]
    fn quartic_conjugate_matches_closed_form() {
        let j = Potential::new(|y: f64| y.powi(4) / 4.0, true);
        for &r in &[1.0, -0.3, 7.0] {
            let exact = 0.75 * f64::abs(r).powf(4.0 / 3.0);
            assert!((j.conjugate_by_search(r) - exact).abs() < 1e-9 * (1.0 + exact));
        }
    }

    #[test]
    fn exponential_conjugate_survives_overflow() {
        let j = Potential::new(|y: f64| y.abs().exp() - 1.0 - y.abs(), true);
        for r in [0.5, 20.0, 270.0] {
            let exact = (r + 1.0) * (r + 1.0f64).ln() - r;
            assert!((j.conjugate_by_search(r) - exact).abs() <= 1e-9 * (1.0 + exact), "r = {r}");
        }
    }

    #[test]
    fn closed_form_takes_precedence() {
        let j = Potential::new(|y| 0.5 * y * y, true).with_conjugate(|_| 42.0);
        assert_eq!(j.conjugate(1.0), 42.0);
    }
}
