/// Closed interval `[lo, hi]`, the value of a monotone graph at a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn point(x: f64) -> Self {
        Interval { lo: x, hi: x }
    }

    pub fn new(lo: f64, hi: f64) -> Self {
        debug_assert!(lo <= hi, "empty interval [{lo}, {hi}]");
        Interval { lo, hi }
    }

    pub fn is_point(&self) -> bool {
        self.lo == self.hi
    }

    /// Element of minimal absolute value.
    pub fn min_norm(&self) -> f64 {
        if self.lo > 0.0 {
            self.lo
        } else if self.hi < 0.0 {
            self.hi
        } else {
            0.0
        }
    }

    pub fn contains(&self, y: f64, tol: f64) -> bool {
        y >= self.lo - tol && y <= self.hi + tol
    }

    pub fn scale(&self, s: f64) -> Self {
        if s >= 0.0 {
            Interval::new(s * self.lo, s * self.hi)
        } else {
            Interval::new(s * self.hi, s * self.lo)
        }
    }
}
