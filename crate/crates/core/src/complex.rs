//! Axis-aligned complex rectangles `{x + iy : x ∈ re, y ∈ im}`.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::interval::{Interval, IntervalError};

#[derive(Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ComplexRect {
    pub re: Interval,
    pub im: Interval,
}

impl ComplexRect {
    pub const ZERO: ComplexRect = ComplexRect {
        re: Interval::ZERO,
        im: Interval::ZERO,
    };
    pub const ONE: ComplexRect = ComplexRect {
        re: Interval::ONE,
        im: Interval::ZERO,
    };

    pub fn new(re: Interval, im: Interval) -> Self {
        ComplexRect { re, im }
    }

    pub fn point(re: f64, im: f64) -> Self {
        ComplexRect::new(Interval::point(re), Interval::point(im))
    }

    pub fn real(re: Interval) -> Self {
        ComplexRect::new(re, Interval::ZERO)
    }

    pub fn is_empty(&self) -> bool {
        self.re.is_empty() || self.im.is_empty()
    }

    /// True when the imaginary part is exactly zero.
    pub fn is_real(&self) -> bool {
        self.im == Interval::ZERO
    }

    pub fn mid(&self) -> (f64, f64) {
        (self.re.mid(), self.im.mid())
    }

    pub fn mid_rect(&self) -> ComplexRect {
        ComplexRect::point(self.re.mid(), self.im.mid())
    }

    /// Larger of the two side widths.
    pub fn diameter(&self) -> f64 {
        self.re.width().max(self.im.width())
    }

    pub fn contains(&self, re: f64, im: f64) -> bool {
        self.re.contains(re) && self.im.contains(im)
    }

    pub fn subset(&self, other: &ComplexRect) -> bool {
        self.re.subset(&other.re) && self.im.subset(&other.im)
    }

    pub fn interior_subset(&self, other: &ComplexRect) -> bool {
        self.re.interior_subset(&other.re) && self.im.interior_subset(&other.im)
    }

    pub fn hull(&self, other: &ComplexRect) -> ComplexRect {
        ComplexRect::new(self.re.hull(&other.re), self.im.hull(&other.im))
    }

    pub fn intersect(&self, other: &ComplexRect) -> ComplexRect {
        let re = self.re.intersect(&other.re);
        let im = self.im.intersect(&other.im);
        if re.is_empty() || im.is_empty() {
            ComplexRect::new(Interval::EMPTY, Interval::EMPTY)
        } else {
            ComplexRect::new(re, im)
        }
    }

    pub fn conj(&self) -> ComplexRect {
        ComplexRect::new(self.re, -self.im)
    }

    pub fn scale(&self, k: Interval) -> ComplexRect {
        ComplexRect::new(self.re * k, self.im * k)
    }

    /// Multiplication by an exact real scalar.
    pub fn scale_f64(&self, k: f64) -> ComplexRect {
        ComplexRect::new(self.re.scale(k), self.im.scale(k))
    }

    /// `re² - im² + 2i·re·im` with dependency-aware squares.
    pub fn sqr(&self) -> ComplexRect {
        ComplexRect::new(
            self.re.sqr() - self.im.sqr(),
            (self.re * self.im).scale(2.0),
        )
    }

    /// Enclosure of `|z|²`.
    pub fn norm_sqr(&self) -> Interval {
        self.re.sqr() + self.im.sqr()
    }

    /// Enclosure of `|z|`.
    pub fn abs(&self) -> Interval {
        self.norm_sqr()
            .sqrt()
            .expect("sum of squares is nonnegative")
    }

    pub fn recip(&self) -> Result<ComplexRect, IntervalError> {
        let n = self.norm_sqr();
        if n.contains_zero() {
            return Err(IntervalError::DivisionByZero);
        }
        Ok(ComplexRect::new(self.re.div(&n)?, (-self.im).div(&n)?))
    }

    pub fn div(&self, y: &ComplexRect) -> Result<ComplexRect, IntervalError> {
        if y.is_real() {
            return Ok(ComplexRect::new(self.re.div(&y.re)?, self.im.div(&y.re)?));
        }
        Ok(*self * y.recip()?)
    }

    /// A square root that is continuous over the whole rectangle.
    ///
    /// Uses the principal branch when the rectangle avoids the closed
    /// negative real axis, the branch continuous on the closed upper
    /// half-plane when `im >= 0`, and its mirror when `im <= 0`. Returns
    /// `None` when no single branch is continuous on the rectangle.
    pub fn sqrt(&self) -> Option<ComplexRect> {
        if self.is_empty() {
            return Some(*self);
        }
        if self.re.contains_zero() && self.im.contains_zero() {
            return None;
        }
        if self.re.lo() > 0.0 {
            return self.sqrt_right();
        }
        if self.im.lo() >= 0.0 {
            return self.sqrt_upper();
        }
        if self.im.hi() <= 0.0 {
            return self.conj().sqrt_upper().map(|w| w.conj());
        }
        None
    }

    // re > 0: Re √z = √((|z|+x)/2) is bounded away from 0.
    fn sqrt_right(&self) -> Option<ComplexRect> {
        let r = self.abs();
        let re = ((r + self.re).scale(0.5)).sqrt().ok()?;
        let re = re.intersect(&Interval::new(0.0, f64::INFINITY));
        let im = self.im.div(&re.scale(2.0)).ok()?;
        Some(ComplexRect::new(re, im))
    }

    // im >= 0: Im √z = √((|z|-x)/2) >= 0.
    fn sqrt_upper(&self) -> Option<ComplexRect> {
        let r = self.abs();
        if self.re.hi() >= 0.0 && self.im.lo() <= 0.0 {
            // Rectangle touches the nonnegative real axis: use both forms.
            let re = ((r + self.re).scale(0.5)).sqrt().ok()?;
            let im = ((r - self.re).scale(0.5)).sqrt().ok()?;
            return Some(ComplexRect::new(re, im));
        }
        let im = ((r - self.re).scale(0.5)).sqrt().ok()?;
        if im.lo() <= 0.0 {
            let re = ((r + self.re).scale(0.5)).sqrt().ok()?;
            return Some(ComplexRect::new(re, im));
        }
        let re = self.im.div(&im.scale(2.0)).ok()?;
        Some(ComplexRect::new(re, im))
    }

    /// Splits along the wider side.
    pub fn bisect(&self) -> (ComplexRect, ComplexRect) {
        if self.re.width() >= self.im.width() {
            let (a, b) = self.re.bisect();
            (ComplexRect::new(a, self.im), ComplexRect::new(b, self.im))
        } else {
            let (a, b) = self.im.bisect();
            (ComplexRect::new(self.re, a), ComplexRect::new(self.re, b))
        }
    }

    pub fn inflate(&self, r: f64) -> ComplexRect {
        ComplexRect::new(self.re.inflate(r), self.im.inflate(r))
    }
}

impl fmt::Debug for ComplexRect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?} + i{:?}", self.re, self.im)
    }
}

impl From<f64> for ComplexRect {
    fn from(x: f64) -> Self {
        ComplexRect::point(x, 0.0)
    }
}

impl From<Interval> for ComplexRect {
    fn from(x: Interval) -> Self {
        ComplexRect::real(x)
    }
}

impl Neg for ComplexRect {
    type Output = ComplexRect;
    fn neg(self) -> ComplexRect {
        ComplexRect::new(-self.re, -self.im)
    }
}

impl Add for ComplexRect {
    type Output = ComplexRect;
    #[inline]
    fn add(self, rhs: ComplexRect) -> ComplexRect {
        ComplexRect::new(self.re + rhs.re, self.im + rhs.im)
    }
}

impl Sub for ComplexRect {
    type Output = ComplexRect;
    #[inline]
    fn sub(self, rhs: ComplexRect) -> ComplexRect {
        ComplexRect::new(self.re - rhs.re, self.im - rhs.im)
    }
}

impl Mul for ComplexRect {
    type Output = ComplexRect;
    #[inline]
    fn mul(self, rhs: ComplexRect) -> ComplexRect {
        if self.is_real() && rhs.is_real() {
            return ComplexRect::real(self.re * rhs.re);
        }
        ComplexRect::new(
            self.re * rhs.re - self.im * rhs.im,
            self.re * rhs.im + self.im * rhs.re,
        )
    }
}

impl Add<f64> for ComplexRect {
    type Output = ComplexRect;
    fn add(self, rhs: f64) -> ComplexRect {
        ComplexRect::new(self.re + rhs, self.im)
    }
}

impl Sub<f64> for ComplexRect {
    type Output = ComplexRect;
    fn sub(self, rhs: f64) -> ComplexRect {
        ComplexRect::new(self.re - rhs, self.im)
    }
}

impl Mul<f64> for ComplexRect {
    type Output = ComplexRect;
    fn mul(self, rhs: f64) -> ComplexRect {
        self.scale_f64(rhs)
    }
}
