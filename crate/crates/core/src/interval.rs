//! Outward-rounded real intervals.
//!
//! Every operation computes its endpoints in round-to-nearest and then moves
//! each endpoint one representable number outward. No FPU mode switching is
//! involved, so intervals can be evaluated from any thread.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum IntervalError {
    #[error("division by an interval containing zero")]
    DivisionByZero,
    #[error("square root of a negative interval")]
    NegativeSqrt,
}

/// Closed interval `[lo, hi]`, or the empty set.
///
/// The empty set is stored as `lo = +inf, hi = -inf`; every other value
/// satisfies `lo <= hi`.
#[derive(Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    lo: f64,
    hi: f64,
}

fn is_power_of_two(c: f64) -> bool {
    c.is_normal() && c.to_bits() & ((1u64 << 52) - 1) == 0
}

// A product by a power of two is exact unless it leaves the normal range.
fn exact_product(x: f64) -> bool {
    x == 0.0 || x.is_normal()
}

#[inline]
fn down(x: f64) -> f64 {
    if x.is_nan() {
        f64::NEG_INFINITY
    } else {
        x.next_down()
    }
}

#[inline]
fn up(x: f64) -> f64 {
    if x.is_nan() {
        f64::INFINITY
    } else {
        x.next_up()
    }
}

impl Interval {
    pub const EMPTY: Interval = Interval {
        lo: f64::INFINITY,
        hi: f64::NEG_INFINITY,
    };
    pub const ENTIRE: Interval = Interval {
        lo: f64::NEG_INFINITY,
        hi: f64::INFINITY,
    };
    pub const ZERO: Interval = Interval { lo: 0.0, hi: 0.0 };
    pub const ONE: Interval = Interval { lo: 1.0, hi: 1.0 };

    /// Builds `[lo, hi]`. Panics if `lo > hi` or either bound is NaN.
    pub fn new(lo: f64, hi: f64) -> Self {
        assert!(lo <= hi, "invalid interval [{lo}, {hi}]");
        Interval { lo, hi }
    }

    /// Builds `[min(x, y), max(x, y)]`.
    pub fn spanning(x: f64, y: f64) -> Self {
        Interval::new(x.min(y), x.max(y))
    }

    pub fn point(x: f64) -> Self {
        Interval::new(x, x)
    }

    /// `[c - r, c + r]` with outward rounding.
    pub fn centered(c: f64, r: f64) -> Self {
        let r = r.abs();
        Interval::new(down(c - r), up(c + r))
    }

    #[inline]
    pub fn lo(&self) -> f64 {
        self.lo
    }

    #[inline]
    pub fn hi(&self) -> f64 {
        self.hi
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.lo > self.hi
    }

    #[inline]
    fn from_raw(lo: f64, hi: f64) -> Self {
        if lo.is_nan() || hi.is_nan() {
            return Interval::ENTIRE;
        }
        Interval { lo, hi }
    }

    #[inline]
    fn outward(lo: f64, hi: f64) -> Self {
        Interval::from_raw(down(lo), up(hi))
    }

    pub fn mid(&self) -> f64 {
        if self.lo == self.hi {
            return self.lo;
        }
        let m = 0.5 * self.lo + 0.5 * self.hi;
        if m.is_finite() {
            m
        } else {
            0.0
        }
    }

    /// Upper bound on `hi - lo`.
    pub fn width(&self) -> f64 {
        if self.is_empty() || self.lo == self.hi {
            0.0
        } else {
            up(self.hi - self.lo)
        }
    }

    /// Upper bound on the radius.
    pub fn rad(&self) -> f64 {
        if self.is_empty() {
            return 0.0;
        }
        let m = self.mid();
        up((self.hi - m).max(m - self.lo))
    }

    /// `max |x|` over the interval.
    pub fn mag(&self) -> f64 {
        self.lo.abs().max(self.hi.abs())
    }

    /// `min |x|` over the interval.
    pub fn mig(&self) -> f64 {
        if self.contains(0.0) {
            0.0
        } else {
            self.lo.abs().min(self.hi.abs())
        }
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn contains_zero(&self) -> bool {
        self.contains(0.0)
    }

    /// `self ⊆ other`.
    pub fn subset(&self, other: &Interval) -> bool {
        self.is_empty() || (other.lo <= self.lo && self.hi <= other.hi)
    }

    /// `self ⊂ int(other)`, strict on both ends.
    pub fn interior_subset(&self, other: &Interval) -> bool {
        !self.is_empty() && other.lo < self.lo && self.hi < other.hi
    }

    pub fn hull(&self, other: &Interval) -> Interval {
        if self.is_empty() {
            return *other;
        }
        if other.is_empty() {
            return *self;
        }
        Interval {
            lo: self.lo.min(other.lo),
            hi: self.hi.max(other.hi),
        }
    }

    pub fn hull_point(&self, x: f64) -> Interval {
        self.hull(&Interval::point(x))
    }

    pub fn intersect(&self, other: &Interval) -> Interval {
        let lo = self.lo.max(other.lo);
        let hi = self.hi.min(other.hi);
        if lo > hi {
            Interval::EMPTY
        } else {
            Interval { lo, hi }
        }
    }

    pub fn overlaps(&self, other: &Interval) -> bool {
        !self.intersect(other).is_empty()
    }

    /// Certainly `< other`: every element of `self` below every element of `other`.
    pub fn certainly_lt(&self, other: &Interval) -> bool {
        self.hi < other.lo
    }

    pub fn certainly_gt(&self, other: &Interval) -> bool {
        self.lo > other.hi
    }

    /// Splits at the midpoint.
    pub fn bisect(&self) -> (Interval, Interval) {
        let m = self.mid();
        (Interval::new(self.lo, m), Interval::new(m, self.hi))
    }

    /// Splits into `n` pieces with shared endpoints covering `self`.
    pub fn split(&self, n: usize) -> Vec<Interval> {
        assert!(n > 0);
        let mut out = Vec::with_capacity(n);
        let mut prev = self.lo;
        for k in 1..=n {
            let next = if k == n {
                self.hi
            } else {
                self.lo + (self.hi - self.lo) * (k as f64 / n as f64)
            };
            let next = next.max(prev);
            out.push(Interval::new(prev, next));
            prev = next;
        }
        out
    }

    /// Grows the interval by `r` on both sides.
    pub fn inflate(&self, r: f64) -> Interval {
        if self.is_empty() {
            return *self;
        }
        Interval::outward(self.lo - r, self.hi + r)
    }

    pub fn abs(&self) -> Interval {
        if self.is_empty() {
            return *self;
        }
        if self.lo >= 0.0 {
            *self
        } else if self.hi <= 0.0 {
            -*self
        } else {
            Interval {
                lo: 0.0,
                hi: self.mag(),
            }
        }
    }

    pub fn sqr(&self) -> Interval {
        if self.is_empty() {
            return *self;
        }
        if self.lo >= 0.0 {
            Interval::from_raw(down(self.lo * self.lo).max(0.0), up(self.hi * self.hi))
        } else if self.hi <= 0.0 {
            Interval::from_raw(down(self.hi * self.hi).max(0.0), up(self.lo * self.lo))
        } else {
            let m = self.mag();
            Interval::from_raw(0.0, up(m * m))
        }
    }

    pub fn powi(&self, n: u32) -> Interval {
        match n {
            0 => Interval::ONE,
            1 => *self,
            _ if n % 2 == 0 => self.powi(n / 2).sqr(),
            _ => *self * self.powi(n - 1),
        }
    }

    pub fn sqrt(&self) -> Result<Interval, IntervalError> {
        if self.is_empty() {
            return Ok(*self);
        }
        if self.hi < 0.0 {
            return Err(IntervalError::NegativeSqrt);
        }
        let lo = if self.lo <= 0.0 {
            0.0
        } else {
            down(self.lo.sqrt()).max(0.0)
        };
        Ok(Interval::from_raw(lo, up(self.hi.sqrt())))
    }

    pub fn recip(&self) -> Result<Interval, IntervalError> {
        if self.is_empty() {
            return Ok(*self);
        }
        if self.contains_zero() {
            return Err(IntervalError::DivisionByZero);
        }
        Ok(Interval::outward(1.0 / self.hi, 1.0 / self.lo))
    }

    pub fn div(&self, y: &Interval) -> Result<Interval, IntervalError> {
        if self.is_empty() || y.is_empty() {
            return Ok(Interval::EMPTY);
        }
        if y.contains_zero() {
            return Err(IntervalError::DivisionByZero);
        }
        let q = [
            self.lo / y.lo,
            self.lo / y.hi,
            self.hi / y.lo,
            self.hi / y.hi,
        ];
        let lo = q.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = q.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Ok(Interval::outward(lo, hi))
    }

    /// Multiplication by an exact scalar.
    pub fn scale(&self, c: f64) -> Interval {
        if self.is_empty() {
            return *self;
        }
        if c == 0.0 || self.is_zero() {
            return Interval::ZERO;
        }
        let a = self.lo * c;
        let b = self.hi * c;
        let exact = is_power_of_two(c) && exact_product(a) && exact_product(b);
        if exact {
            Interval::from_raw(a.min(b), a.max(b))
        } else {
            Interval::outward(a.min(b), a.max(b))
        }
    }

    #[inline]
    pub fn is_zero(&self) -> bool {
        self.lo == 0.0 && self.hi == 0.0
    }

    pub fn min(&self, other: &Interval) -> Interval {
        Interval {
            lo: self.lo.min(other.lo),
            hi: self.hi.min(other.hi),
        }
    }

    pub fn max(&self, other: &Interval) -> Interval {
        Interval {
            lo: self.lo.max(other.lo),
            hi: self.hi.max(other.hi),
        }
    }

    /// Monotone increasing function evaluated at the endpoints, widened by
    /// `ulps` representable numbers on each side.
    pub fn map_increasing(&self, f: impl Fn(f64) -> f64, ulps: u32) -> Interval {
        let mut lo = f(self.lo);
        let mut hi = f(self.hi);
        for _ in 0..ulps {
            lo = down(lo);
            hi = up(hi);
        }
        Interval::from_raw(lo, hi)
    }
}

impl Default for Interval {
    fn default() -> Self {
        Interval::ZERO
    }
}

impl fmt::Debug for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_empty() {
            write!(f, "[empty]")
        } else {
            write!(f, "[{:e}, {:e}]", self.lo, self.hi)
        }
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

impl From<f64> for Interval {
    fn from(x: f64) -> Self {
        Interval::point(x)
    }
}

impl PartialOrd for Interval {
    /// Certain ordering only; overlapping intervals are incomparable.
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        if self == other {
            Some(Ordering::Equal)
        } else if self.hi < other.lo {
            Some(Ordering::Less)
        } else if self.lo > other.hi {
            Some(Ordering::Greater)
        } else {
            None
        }
    }
}

impl Neg for Interval {
    type Output = Interval;
    fn neg(self) -> Interval {
        if self.is_empty() {
            return self;
        }
        Interval {
            lo: -self.hi,
            hi: -self.lo,
        }
    }
}

impl Add for Interval {
    type Output = Interval;
    #[inline]
    fn add(self, rhs: Interval) -> Interval {
        if self.is_empty() || rhs.is_empty() {
            return Interval::EMPTY;
        }
        if rhs.is_zero() {
            return self;
        }
        if self.is_zero() {
            return rhs;
        }
        Interval::outward(self.lo + rhs.lo, self.hi + rhs.hi)
    }
}

impl Sub for Interval {
    type Output = Interval;
    #[inline]
    fn sub(self, rhs: Interval) -> Interval {
        if self.is_empty() || rhs.is_empty() {
            return Interval::EMPTY;
        }
        if rhs.is_zero() {
            return self;
        }
        if self.is_zero() {
            return -rhs;
        }
        Interval::outward(self.lo - rhs.hi, self.hi - rhs.lo)
    }
}

impl Mul for Interval {
    type Output = Interval;
    #[inline]
    fn mul(self, rhs: Interval) -> Interval {
        if self.is_empty() || rhs.is_empty() {
            return Interval::EMPTY;
        }
        if self.is_zero() || rhs.is_zero() {
            return Interval::ZERO;
        }
        let p = [
            self.lo * rhs.lo,
            self.lo * rhs.hi,
            self.hi * rhs.lo,
            self.hi * rhs.hi,
        ];
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for v in p {
            if v.is_nan() {
                return Interval::ENTIRE;
            }
            lo = lo.min(v);
            hi = hi.max(v);
        }
        Interval::outward(lo, hi)
    }
}

impl AddAssign for Interval {
    fn add_assign(&mut self, rhs: Interval) {
        *self = *self + rhs;
    }
}

impl Add<f64> for Interval {
    type Output = Interval;
    fn add(self, rhs: f64) -> Interval {
        self + Interval::point(rhs)
    }
}

impl Sub<f64> for Interval {
    type Output = Interval;
    fn sub(self, rhs: f64) -> Interval {
        self - Interval::point(rhs)
    }
}

impl Mul<f64> for Interval {
    type Output = Interval;
    fn mul(self, rhs: f64) -> Interval {
        self.scale(rhs)
    }
}

impl Add<Interval> for f64 {
    type Output = Interval;
    fn add(self, rhs: Interval) -> Interval {
        Interval::point(self) + rhs
    }
}

impl Sub<Interval> for f64 {
    type Output = Interval;
    fn sub(self, rhs: Interval) -> Interval {
        Interval::point(self) - rhs
    }
}

impl Mul<Interval> for f64 {
    type Output = Interval;
    fn mul(self, rhs: Interval) -> Interval {
        rhs.scale(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn add_encloses_exact_sum() {
        let r = Interval::new(1.0, 2.0) + Interval::new(3.0, 4.0);
        assert!(r.contains(4.0) && r.contains(6.0));
        assert!(r.width() < 2.0 + 1e-14);
    }

    #[test]
    fn sqr_uses_even_symmetry() {
        let r = Interval::new(-1.0, 2.0).sqr();
        assert_eq!(r.lo(), 0.0);
        assert!(r.contains(4.0) && r.hi() < 4.0 + 1e-14);
    }

    #[test]
    fn third_is_tight() {
        let r = Interval::point(1.0).div(&Interval::point(3.0)).unwrap();
        assert!(r.contains(1.0 / 3.0));
        let ulp = (1.0f64 / 3.0).next_up() - 1.0 / 3.0;
        assert!(r.hi() - r.lo() <= 2.0 * ulp);
    }

    #[test]
    fn domain_errors() {
        assert_eq!(
            Interval::ONE.div(&Interval::new(-1.0, 1.0)),
            Err(IntervalError::DivisionByZero)
        );
        assert_eq!(
            Interval::new(-2.0, -1.0).sqrt(),
            Err(IntervalError::NegativeSqrt)
        );
        assert_eq!(Interval::new(-1.0, 4.0).sqrt().unwrap().lo(), 0.0);
    }

    #[test]
    fn interior_subset_is_strict() {
        let outer = Interval::new(1.3, 1.6);
        assert!(Interval::new(1.4, 1.5).interior_subset(&outer));
        assert!(!Interval::new(1.3, 1.5).interior_subset(&outer));
    }

    #[test]
    fn disjoint_intersection_is_empty() {
        let r = Interval::new(0.0, 1.0).intersect(&Interval::new(2.0, 3.0));
        assert!(r.is_empty());
        assert!((r + Interval::ONE).is_empty());
    }

    #[test]
    fn split_covers() {
        let x = Interval::new(-1.0, 2.5);
        let parts = x.split(7);
        assert_eq!(parts.first().unwrap().lo(), -1.0);
        assert_eq!(parts.last().unwrap().hi(), 2.5);
        for w in parts.windows(2) {
            assert_eq!(w[0].hi(), w[1].lo());
        }
    }
}
