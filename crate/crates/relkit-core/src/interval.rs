//! Closed interval arithmetic with outward rounding.
//!
//! Every operation widens its result by one ulp on each side, so the computed
//! interval contains the exact real result as well as any round-to-nearest
//! floating point evaluation along the same expression. Overestimation is
//! accepted; only containment matters.

/// A closed interval `[lo, hi]`, `lo <= hi`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        debug_assert!(lo <= hi, "interval bounds out of order: [{lo}, {hi}]");
        Interval { lo, hi }
    }

    pub fn point(x: f64) -> Self {
        Interval { lo: x, hi: x }
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn intersects(&self, other: &Interval) -> bool {
        self.lo <= other.hi && other.lo <= self.hi
    }

    pub fn intersect(&self, other: &Interval) -> Option<Interval> {
        let lo = self.lo.max(other.lo);
        let hi = self.hi.min(other.hi);
        (lo <= hi).then_some(Interval { lo, hi })
    }

    pub fn hull(&self, other: &Interval) -> Interval {
        Interval {
            lo: self.lo.min(other.lo),
            hi: self.hi.max(other.hi),
        }
    }

    /// Widen each side by `pad` (clamped to be nonnegative).
    pub fn widen(&self, pad: f64) -> Interval {
        let pad = pad.max(0.0);
        Interval {
            lo: self.lo - pad,
            hi: self.hi + pad,
        }
    }

    fn outward(lo: f64, hi: f64) -> Interval {
        Interval {
            lo: lo.next_down(),
            hi: hi.next_up(),
        }
    }

    pub fn add(&self, other: &Interval) -> Interval {
        Self::outward(self.lo + other.lo, self.hi + other.hi)
    }

    pub fn sub(&self, other: &Interval) -> Interval {
        Self::outward(self.lo - other.hi, self.hi - other.lo)
    }

    pub fn neg(&self) -> Interval {
        Interval {
            lo: -self.hi,
            hi: -self.lo,
        }
    }

    pub fn mul(&self, other: &Interval) -> Interval {
        let p = [
            self.lo * other.lo,
            self.lo * other.hi,
            self.hi * other.lo,
            self.hi * other.hi,
        ];
        let lo = p.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = p.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        Self::outward(lo, hi)
    }

    /// Integer power. Even powers are evaluated on |x| so that e.g.
    /// `[-2, 1]^2 = [0, 4]` rather than the naive `[-8, 4]` product chain.
    pub fn powi(&self, n: u32) -> Interval {
        match n {
            0 => Interval::point(1.0),
            1 => *self,
            _ => {
                if n % 2 == 0 {
                    let m = if self.lo <= 0.0 && self.hi >= 0.0 {
                        0.0
                    } else {
                        self.lo.abs().min(self.hi.abs())
                    };
                    let big = self.lo.abs().max(self.hi.abs());
                    Self::outward(pow_down(m, n), pow_up(big, n))
                } else {
                    Self::outward(pow_down(self.lo, n), pow_up(self.hi, n))
                }
            }
        }
    }
}

fn pow_down(x: f64, n: u32) -> f64 {
    let mut acc = x;
    for _ in 1..n {
        acc = (acc * x).next_down();
    }
    acc
}

fn pow_up(x: f64, n: u32) -> f64 {
    let mut acc = x;
    for _ in 1..n {
        acc = (acc * x).next_up();
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn add_contains_exact_sum() {
        let a = Interval::new(0.1, 0.2);
        let b = Interval::new(0.3, 0.4);
        let s = a.add(&b);
        assert!(s.lo <= 0.4 && s.hi >= 0.6);
    }

    #[test]
    fn even_power_is_nonnegative() {
        let a = Interval::new(-2.0, 1.0);
        let p = a.powi(2);
        assert!(p.lo <= 0.0 && p.lo >= -1e-300);
        assert!(p.hi >= 4.0);
        assert!(p.hi < 4.0 + 1e-12);
    }

    #[test]
    fn odd_power_preserves_order() {
        let a = Interval::new(-2.0, 3.0);
        let p = a.powi(3);
        assert!(p.lo <= -8.0 && p.hi >= 27.0);
    }

    #[test]
    fn mul_spans_sign_cases() {
        let a = Interval::new(-1.0, 2.0);
        let b = Interval::new(-3.0, 0.5);
        let m = a.mul(&b);
        assert!(m.lo <= -6.0 && m.hi >= 3.0);
    }
}
