//! Certified enclosures: exact rational intervals and outward-rounded
//! f64 intervals.

use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;

/// Closed interval with exact rational endpoints.
#[derive(Debug, Clone, PartialEq)]
pub struct RatInterval {
    pub lo: BigRational,
    pub hi: BigRational,
}

impl RatInterval {
    pub fn new(lo: BigRational, hi: BigRational) -> Self {
        assert!(lo <= hi, "inverted interval");
        RatInterval { lo, hi }
    }

    pub fn point(x: BigRational) -> Self {
        RatInterval { lo: x.clone(), hi: x }
    }

    pub fn zero() -> Self {
        Self::point(BigRational::zero())
    }

    pub fn one() -> Self {
        Self::point(BigRational::one())
    }

    pub fn contains(&self, x: &BigRational) -> bool {
        self.lo <= *x && *x <= self.hi
    }

    pub fn overlaps(&self, other: &RatInterval) -> bool {
        self.lo <= other.hi && other.lo <= self.hi
    }

    pub fn width(&self) -> BigRational {
        &self.hi - &self.lo
    }

    pub fn midpoint(&self) -> BigRational {
        (&self.lo + &self.hi) / BigRational::from_integer(2.into())
    }

    pub fn add(&self, other: &RatInterval) -> Self {
        RatInterval {
            lo: &self.lo + &other.lo,
            hi: &self.hi + &other.hi,
        }
    }

    pub fn sub(&self, other: &RatInterval) -> Self {
        RatInterval {
            lo: &self.lo - &other.hi,
            hi: &self.hi - &other.lo,
        }
    }

    pub fn mul(&self, other: &RatInterval) -> Self {
        let cands = [
            &self.lo * &other.lo,
            &self.lo * &other.hi,
            &self.hi * &other.lo,
            &self.hi * &other.hi,
        ];
        let lo = cands.iter().min().unwrap().clone();
        let hi = cands.iter().max().unwrap().clone();
        RatInterval { lo, hi }
    }

    pub fn scale(&self, c: &BigRational) -> Self {
        if c.is_negative() {
            RatInterval {
                lo: &self.hi * c,
                hi: &self.lo * c,
            }
        } else {
            RatInterval {
                lo: &self.lo * c,
                hi: &self.hi * c,
            }
        }
    }

    /// Reciprocal; the interval must not straddle zero.
    pub fn recip(&self) -> Self {
        assert!(
            self.lo.is_positive() || self.hi.is_negative(),
            "reciprocal of interval containing zero"
        );
        RatInterval {
            lo: self.hi.recip(),
            hi: self.lo.recip(),
        }
    }

    pub fn div(&self, other: &RatInterval) -> Self {
        self.mul(&other.recip())
    }

    pub fn to_f64(&self) -> F64Interval {
        F64Interval {
            lo: rat_to_f64_down(&self.lo),
            hi: rat_to_f64_up(&self.hi),
        }
    }
}

fn rat_to_f64_down(x: &BigRational) -> f64 {
    let v = x.to_f64().unwrap_or(f64::NEG_INFINITY);
    // f64 conversion of a big rational may round either way
    v.next_down()
}

fn rat_to_f64_up(x: &BigRational) -> f64 {
    let v = x.to_f64().unwrap_or(f64::INFINITY);
    v.next_up()
}

/// Closed f64 interval; every operation widens outward by one ulp per
/// endpoint, which dominates the half-ulp rounding of the primitive ops.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct F64Interval {
    pub lo: f64,
    pub hi: f64,
}

impl F64Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        assert!(lo <= hi, "inverted interval: {lo} > {hi}");
        F64Interval { lo, hi }
    }

    pub fn point(x: f64) -> Self {
        F64Interval { lo: x, hi: x }
    }

    pub fn zero() -> Self {
        Self::point(0.0)
    }

    pub fn one() -> Self {
        Self::point(1.0)
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

    pub fn add(&self, o: &F64Interval) -> Self {
        F64Interval {
            lo: (self.lo + o.lo).next_down(),
            hi: (self.hi + o.hi).next_up(),
        }
    }

    pub fn sub(&self, o: &F64Interval) -> Self {
        F64Interval {
            lo: (self.lo - o.hi).next_down(),
            hi: (self.hi - o.lo).next_up(),
        }
    }

    pub fn mul(&self, o: &F64Interval) -> Self {
        let c = [
            self.lo * o.lo,
            self.lo * o.hi,
            self.hi * o.lo,
            self.hi * o.hi,
        ];
        let lo = c.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = c.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        F64Interval {
            lo: lo.next_down(),
            hi: hi.next_up(),
        }
    }

    pub fn recip(&self) -> Self {
        assert!(self.lo > 0.0 || self.hi < 0.0, "reciprocal across zero");
        F64Interval {
            lo: (1.0 / self.hi).next_down(),
            hi: (1.0 / self.lo).next_up(),
        }
    }

    pub fn div(&self, o: &F64Interval) -> Self {
        self.mul(&o.recip())
    }

    /// Enclosure of sqrt(x) for a nonnegative interval.
    pub fn sqrt(&self) -> Self {
        assert!(self.lo >= 0.0);
        F64Interval {
            lo: self.lo.sqrt().next_down().max(0.0),
            hi: self.hi.sqrt().next_up(),
        }
    }

    /// Enclosure of exp(x). libm exp is faithful to within 1 ulp, so a
    /// two-ulp widening is a safe outer bound.
    pub fn exp(&self) -> Self {
        F64Interval {
            lo: self.lo.exp().next_down().next_down(),
            hi: self.hi.exp().next_up().next_up(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::big_rat;

    #[test]
    fn rational_interval_ops() {
        let a = RatInterval::new(big_rat(1, 3), big_rat(1, 2));
        let b = RatInterval::new(big_rat(-1, 4), big_rat(1, 4));
        let p = a.mul(&b);
        assert_eq!(p.lo, big_rat(-1, 8));
        assert_eq!(p.hi, big_rat(1, 8));
        let r = a.recip();
        assert_eq!(r.lo, big_rat(2, 1));
        assert_eq!(r.hi, big_rat(3, 1));
        assert!(a.contains(&big_rat(2, 5)));
    }

    #[test]
    fn f64_interval_outward() {
        let a = F64Interval::point(0.1);
        let b = F64Interval::point(0.2);
        let s = a.add(&b);
        assert!(s.lo <= 0.3 && 0.3 <= s.hi);
        let t = F64Interval::point(2.0).sqrt();
        assert!(t.contains(std::f64::consts::SQRT_2));
    }

    #[test]
    fn rational_to_f64_outward() {
        let x = RatInterval::point(big_rat(1, 3));
        let f = x.to_f64();
        assert!(f.lo < 1.0 / 3.0 && 1.0 / 3.0 < f.hi);
    }
}
