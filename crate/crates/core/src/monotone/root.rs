//! Guarded root search for the inclusion `x ∈ y + δ·β(y)`.

use std::cmp::Ordering;

use super::interval::Interval;
use crate::{Error, Result};

pub(crate) const ABS_TOL: f64 = 1e-13;
pub(crate) const MAX_ITERATIONS: usize = 200;
const MAX_EXPANSIONS: usize = 64;

/// Nondecreasing set-valued map seen by the root search.
pub(crate) trait MonotoneMap {
    fn value(&self, y: f64) -> Interval;
    /// Derivative at points where the map is single valued and differentiable.
    fn slope(&self, _y: f64) -> Option<f64> {
        None
    }
}

/// Position of `x` relative to `y + δ·β(y)`.
fn classify<M: MonotoneMap + ?Sized>(map: &M, delta: f64, x: f64, y: f64) -> Ordering {
    let v = map.value(y);
    if y + delta * v.hi < x {
        Ordering::Less
    } else if y + delta * v.lo > x {
        Ordering::Greater
    } else {
        Ordering::Equal
    }
}

/// Solves `x ∈ y + δ·β(y)` for `y`, assuming `0 ∈ β(0)`.
///
/// The initial bracket is `[x − δ·max β(x)⁺, x]` (mirrored for `x < 0`),
/// widened geometrically if the map does not straddle `x`. Newton steps are
/// taken whenever they stay strictly inside the bracket and the previous
/// step halved it; otherwise bisect.
pub(crate) fn solve_inclusion<M: MonotoneMap + ?Sized>(map: &M, delta: f64, x: f64) -> Result<f64> {
    if x == 0.0 {
        return Ok(0.0);
    }
    let fail = |iterations| Error::ResolventNonConvergence { x, delta, iterations };

    let vx = map.value(x);
    let (mut a, mut b) = if x > 0.0 {
        (x - delta * vx.hi.max(0.0), x)
    } else {
        (x, x - delta * vx.lo.min(0.0))
    };
    match classify(map, delta, x, b) {
        Ordering::Equal => return Ok(b),
        Ordering::Greater => {}
        Ordering::Less => {
            let mut width = (b - a).max(x.abs()).max(f64::MIN_POSITIVE);
            let mut ok = false;
            for _ in 0..MAX_EXPANSIONS {
                b = a + 2.0 * width;
                width *= 2.0;
                match classify(map, delta, x, b) {
                    Ordering::Equal => return Ok(b),
                    Ordering::Greater => {
                        ok = true;
                        break;
                    }
                    Ordering::Less => {}
                }
            }
            if !ok {
                return Err(fail(MAX_EXPANSIONS));
            }
        }
    }
    match classify(map, delta, x, a) {
        Ordering::Equal => return Ok(a),
        Ordering::Less => {}
        Ordering::Greater => {
            let mut width = (b - a).max(x.abs()).max(f64::MIN_POSITIVE);
            let mut ok = false;
            for _ in 0..MAX_EXPANSIONS {
                a = b - 2.0 * width;
                width *= 2.0;
                match classify(map, delta, x, a) {
                    Ordering::Equal => return Ok(a),
                    Ordering::Less => {
                        ok = true;
                        break;
                    }
                    Ordering::Greater => {}
                }
            }
            if !ok {
                return Err(fail(MAX_EXPANSIONS));
            }
        }
    }

    let tol = ABS_TOL * x.abs().min(1.0);
    let mut y = 0.5 * (a + b);
    let mut last_width = f64::INFINITY;
    for _ in 0..MAX_ITERATIONS {
        match classify(map, delta, x, y) {
            Ordering::Equal => return Ok(y),
            Ordering::Less => a = y,
            Ordering::Greater => b = y,
        }
        if b - a <= tol {
            return Ok(y.clamp(a, b));
        }
        // Newton can cycle around cusps; bisect whenever the bracket failed to halve.
        let stalled = b - a > 0.5 * last_width;
        last_width = b - a;
        let newton = (!stalled).then(|| map.value(y).is_point().then(|| map.slope(y)).flatten()).flatten().and_then(|s| {
            let g = y + delta * map.value(y).lo - x;
            let step = g / (1.0 + delta * s);
            let next = y - step;
            (step.is_finite() && next > a && next < b).then_some((next, step))
        });
        match newton {
            Some((next, step)) => {
                // Rounding in the residual is of order ε|x|, so smaller steps are noise.
                if step.abs() <= 4.0 * f64::EPSILON * next.abs().max(x.abs()) {
                    return Ok(next);
                }
                y = next;
            }
            None => {
                let mid = 0.5 * (a + b);
                if mid <= a || mid >= b {
                    return Ok(y.clamp(a, b));
                }
                y = mid;
            }
        }
    }
    Err(fail(MAX_ITERATIONS))
}
