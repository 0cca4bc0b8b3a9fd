//! The Hénon family `f(x, y) = (x² − a − b·y, x)` over complex rectangles.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::complex::ComplexRect;
use crate::interval::{Interval, IntervalError};

/// Component diameter beyond which `iterate` gives up.
pub const DEFAULT_BLOWUP: f64 = 1e6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HenonError {
    #[error("parameter b contains 0; the inverse map is undefined")]
    DegenerateParameter,
    #[error("enclosure blew up at iterate {iterate} (diameter {diameter:e})")]
    BlowUp { iterate: usize, diameter: f64 },
    #[error("cannot separate the root branches: discriminant straddles 0")]
    AmbiguousBranch,
    #[error("domain error: {0}")]
    Domain(#[from] IntervalError),
}

/// Rectangle in complex `(a, b)` parameter space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParamBox {
    pub a: ComplexRect,
    pub b: ComplexRect,
}

impl ParamBox {
    pub fn new(a: ComplexRect, b: ComplexRect) -> Self {
        ParamBox { a, b }
    }

    pub fn point(a: f64, b: f64) -> Self {
        ParamBox::new(ComplexRect::from(a), ComplexRect::from(b))
    }

    /// Real box `[a_lo, a_hi] × [b_lo, b_hi]`.
    pub fn real(a: Interval, b: Interval) -> Self {
        ParamBox::new(ComplexRect::real(a), ComplexRect::real(b))
    }

    /// Real box of radius `r` around `(a, b)`.
    pub fn around(a: f64, b: f64, r: f64) -> Self {
        ParamBox::real(Interval::centered(a, r), Interval::centered(b, r))
    }

    pub fn is_real(&self) -> bool {
        self.a.is_real() && self.b.is_real()
    }

    pub fn mid(&self) -> (f64, f64) {
        (self.a.re.mid(), self.b.re.mid())
    }

    pub fn b_contains_zero(&self) -> bool {
        self.b.re.contains_zero() && self.b.im.contains_zero()
    }

    pub fn subset(&self, other: &ParamBox) -> bool {
        self.a.subset(&other.a) && self.b.subset(&other.b)
    }
}

/// Rectangle in phase space `C²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseRect {
    pub x: ComplexRect,
    pub y: ComplexRect,
}

impl PhaseRect {
    pub fn new(x: ComplexRect, y: ComplexRect) -> Self {
        PhaseRect { x, y }
    }

    pub fn point(x: f64, y: f64) -> Self {
        PhaseRect::new(ComplexRect::from(x), ComplexRect::from(y))
    }

    pub fn real(x: Interval, y: Interval) -> Self {
        PhaseRect::new(ComplexRect::real(x), ComplexRect::real(y))
    }

    pub fn diameter(&self) -> f64 {
        self.x.diameter().max(self.y.diameter())
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty() || self.y.is_empty()
    }

    pub fn subset(&self, other: &PhaseRect) -> bool {
        self.x.subset(&other.x) && self.y.subset(&other.y)
    }

    pub fn overlaps(&self, other: &PhaseRect) -> bool {
        !self.x.intersect(&other.x).is_empty() && !self.y.intersect(&other.y).is_empty()
    }
}

/// Entrywise enclosure of `Df = [[2x, −b], [1, 0]]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JacobianRect {
    pub m: [[ComplexRect; 2]; 2],
}

impl JacobianRect {
    pub fn entry(&self, i: usize, j: usize) -> ComplexRect {
        self.m[i][j]
    }
}

pub fn henon_image(p: &ParamBox, z: &PhaseRect) -> PhaseRect {
    PhaseRect::new(z.x.sqr() - p.a - p.b * z.y, z.x)
}

/// `f⁻¹(x, y) = (y, (y² − a − x)/b)`.
pub fn henon_inverse_image(p: &ParamBox, z: &PhaseRect) -> Result<PhaseRect, HenonError> {
    if p.b_contains_zero() {
        return Err(HenonError::DegenerateParameter);
    }
    let num = z.y.sqr() - p.a - z.x;
    let y = num.div(&p.b).map_err(|_| HenonError::DegenerateParameter)?;
    Ok(PhaseRect::new(z.y, y))
}

pub fn henon_derivative(p: &ParamBox, z: &PhaseRect) -> JacobianRect {
    JacobianRect {
        m: [
            [z.x.scale_f64(2.0), -p.b],
            [ComplexRect::ONE, ComplexRect::ZERO],
        ],
    }
}

/// Enclosure of `f^k(z)`; fails with `BlowUp` once a component exceeds `threshold`.
pub fn iterate(
    p: &ParamBox,
    z: &PhaseRect,
    k: usize,
    threshold: f64,
) -> Result<PhaseRect, HenonError> {
    assert!(k >= 1, "iterate needs k >= 1");
    let mut w = *z;
    for i in 1..=k {
        w = henon_image(p, &w);
        let d = w.diameter();
        if !(d <= threshold) {
            return Err(HenonError::BlowUp {
                iterate: i,
                diameter: d,
            });
        }
    }
    Ok(w)
}

/// Roots of `t² + B t + C = 0` in the cancellation-free form.
fn quadratic_roots(
    bq: ComplexRect,
    cq: ComplexRect,
) -> Result<(ComplexRect, ComplexRect), HenonError> {
    let disc = bq.sqr() - cq.scale_f64(4.0);
    let s = disc.sqrt().ok_or(HenonError::AmbiguousBranch)?;
    let (bm, sm) = (bq.mid(), s.mid());
    let same_dir = bm.0 * sm.0 + bm.1 * sm.1 >= 0.0;
    let q = if same_dir { -(bq + s) } else { -(bq - s) }.scale_f64(0.5);
    match cq.div(&q) {
        Ok(r2) => Ok((q, r2)),
        Err(_) => {
            let r1 = (-bq + s).scale_f64(0.5);
            let r2 = (-bq - s).scale_f64(0.5);
            Ok((r1, r2))
        }
    }
}

fn order_by_real_part(r1: ComplexRect, r2: ComplexRect) -> (ComplexRect, ComplexRect) {
    let k1 = r1.mid();
    let k2 = r2.mid();
    if (k1.0, k1.1) >= (k2.0, k2.1) {
        (r1, r2)
    } else {
        (r2, r1)
    }
}

/// Fixed points `p1, p3` and the period-two orbit `p2, p4`.
///
/// `p1` is the fixed point with the larger real part and `p2` the period-two
/// point with negative `x` (second quadrant for real parameters).
pub fn fixed_and_period2_points(
    a: ComplexRect,
    b: ComplexRect,
) -> Result<[PhaseRect; 4], HenonError> {
    let one_b = b + 1.0;
    // x² − (1+b)x − a = 0
    let (f1, f2) = quadratic_roots(-one_b, -a)?;
    let (p1x, p3x) = order_by_real_part(f1, f2);
    // t² + (1+b)t + (1+b)² − a = 0
    let (s1, s2) = quadratic_roots(one_b, one_b.sqr() - a)?;
    let (hi, lo) = order_by_real_part(s1, s2);
    Ok([
        PhaseRect::new(p1x, p1x),
        PhaseRect::new(lo, hi),
        PhaseRect::new(p3x, p3x),
        PhaseRect::new(hi, lo),
    ])
}

/// Flags that hold for every parameter in the given real box.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClosedForm {
    /// `a > 2(1+|b|)²`.
    pub horseshoe_bound: bool,
    /// `a < −(b+1)²/4`.
    pub nonreal_fixed: bool,
    /// `a > √(|b|R + a) + |b|R`; `None` when `a` reaches below 0.
    pub three_box_cmc: Option<bool>,
}

/// Radius of the invariant square `|x|, |y| ≤ R` containing the filled Julia set.
pub fn escape_radius(a: Interval, b: Interval) -> Interval {
    let one_b = b.abs() + 1.0;
    let disc = one_b.sqr() + a.scale(4.0);
    let root = disc.sqrt().unwrap_or(Interval::ZERO);
    (one_b + root).scale(0.5)
}

pub fn three_box_cmc(a: Interval, b: Interval) -> Result<bool, HenonError> {
    if a.lo() < 0.0 {
        return Err(HenonError::Domain(IntervalError::NegativeSqrt));
    }
    let r = escape_radius(a, b);
    let br = b.abs() * r;
    let rhs = (br + a).sqrt()? + br;
    Ok(a.certainly_gt(&rhs))
}

pub fn closed_form_criteria(a: Interval, b: Interval) -> ClosedForm {
    let one_b = b.abs() + 1.0;
    let horseshoe = a.certainly_gt(&one_b.sqr().scale(2.0));
    let nonreal = a.certainly_lt(&(-(b + 1.0).sqr().scale(0.25)));
    ClosedForm {
        horseshoe_bound: horseshoe,
        nonreal_fixed: nonreal,
        three_box_cmc: three_box_cmc(a, b).ok(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(x: f64, y: f64) -> PhaseRect {
        PhaseRect::point(x, y)
    }

    #[test]
    fn image_direct_evaluation() {
        let w = henon_image(&ParamBox::point(2.0, 0.3), &pt(1.0, 1.0));
        assert!(w.x.contains(-1.3, 0.0));
        assert_eq!(w.y, ComplexRect::from(1.0));
    }

    #[test]
    fn image_of_unit_square() {
        let z = PhaseRect::real(Interval::new(0.0, 1.0), Interval::new(0.0, 1.0));
        let w = henon_image(&ParamBox::point(2.0, 1.0), &z);
        assert!(Interval::new(-3.0, -1.0).subset(&w.x.re));
    }

    #[test]
    fn fixed_point_of_quadratic() {
        let w = henon_image(&ParamBox::point(2.0, 0.0), &pt(2.0, 2.0));
        assert!(w.x.contains(2.0, 0.0) && w.y.contains(2.0, 0.0));
    }

    #[test]
    fn inverse_round_trip_and_degenerate() {
        let p = ParamBox::point(2.0, 0.5);
        let w = henon_inverse_image(&p, &henon_image(&p, &pt(1.0, 1.0))).unwrap();
        assert!(w.x.contains(1.0, 0.0) && w.y.contains(1.0, 0.0));
        let w = henon_inverse_image(&ParamBox::point(2.0, 0.3), &pt(-1.3, 1.0)).unwrap();
        assert!(w.x.contains(1.0, 0.0) && w.y.contains(1.0, 0.0));
        let degenerate = ParamBox::real(Interval::point(2.0), Interval::new(-0.1, 0.1));
        assert_eq!(
            henon_inverse_image(&degenerate, &pt(1.0, 1.0)),
            Err(HenonError::DegenerateParameter)
        );
    }

    #[test]
    fn jacobian_structure() {
        let j = henon_derivative(&ParamBox::point(1.0, 0.5), &pt(3.0, 0.0));
        assert!(j.entry(0, 0).contains(6.0, 0.0));
        assert!(j.entry(0, 1).contains(-0.5, 0.0));
        assert_eq!(j.entry(1, 0), ComplexRect::ONE);
        assert_eq!(j.entry(1, 1), ComplexRect::ZERO);
        let j0 = henon_derivative(&ParamBox::point(1.0, 0.0), &pt(3.0, 0.0));
        assert_eq!(j0.entry(0, 1).re, Interval::ZERO);
    }

    #[test]
    fn critical_orbit_of_chebyshev() {
        let p = ParamBox::point(2.0, 0.0);
        let w = iterate(&p, &pt(0.0, 0.0), 2, DEFAULT_BLOWUP).unwrap();
        assert!(w.x.contains(2.0, 0.0) && w.y.contains(-2.0, 0.0));
    }

    #[test]
    fn wide_input_blows_up() {
        let z = PhaseRect::real(Interval::new(-100.0, 100.0), Interval::new(-100.0, 100.0));
        let r = iterate(&ParamBox::point(2.0, 0.3), &z, 4, DEFAULT_BLOWUP);
        assert!(matches!(r, Err(HenonError::BlowUp { .. })));
    }

    #[test]
    fn fixed_and_period_two_at_chebyshev() {
        let pts = fixed_and_period2_points(ComplexRect::from(2.0), ComplexRect::from(0.0)).unwrap();
        assert!(pts[0].x.contains(2.0, 0.0) && pts[0].y.contains(2.0, 0.0));
        assert!(pts[2].x.contains(-1.0, 0.0));
        let r1 = (-1.0 + 5f64.sqrt()) / 2.0;
        let r2 = (-1.0 - 5f64.sqrt()) / 2.0;
        assert!(pts[1].x.contains(r2, 0.0) && pts[1].y.contains(r1, 0.0));
        assert!(pts[3].x.contains(r1, 0.0) && pts[3].y.contains(r2, 0.0));
    }

    #[test]
    fn nonreal_fixed_points_below_the_bound() {
        let pts =
            fixed_and_period2_points(ComplexRect::from(-2.0), ComplexRect::from(0.0)).unwrap();
        assert!(!pts[0].x.im.contains_zero());
        assert!(!pts[2].x.im.contains_zero());
    }

    #[test]
    fn closed_forms() {
        let c = closed_form_criteria(Interval::point(9.0), Interval::point(1.0));
        assert!(c.horseshoe_bound);
        let c = closed_form_criteria(Interval::point(-2.0), Interval::point(0.0));
        assert!(c.nonreal_fixed);
        assert_eq!(c.three_box_cmc, None);
        assert!(three_box_cmc(Interval::point(4.0), Interval::point(0.3)).unwrap());
        assert!(!three_box_cmc(Interval::point(5.7), Interval::point(1.0)).unwrap());
    }
}
