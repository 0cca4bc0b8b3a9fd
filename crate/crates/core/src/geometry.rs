//! Projective coordinates, ellipse-with-cut disks and projective boxes.
//!
//! The projection lines are fixed to `L_u = {y = 0}` and `L_v = {x = 0}`. A
//! focus `F` defines `π(z)` as the intersection of the line through `F` and
//! `z` with the corresponding axis. Foci are stored in homogeneous form so
//! that parallel edges (focus at infinity) need no special casing in the
//! formulas.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::complex::ComplexRect;
use crate::henon::PhaseRect;
use crate::interval::Interval;
use crate::params::Family;

/// Denominators smaller than this in magnitude are reported as small divisors.
pub const SMALL_DIVISOR_FLOOR: f64 = 1e-3;

/// Default number of ellipse arc pieces in a boundary covering.
pub const DEFAULT_ARC_SEGMENTS: usize = 64;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("small divisor in projective coordinate change (|den| >= {0:e} not guaranteed)")]
    SmallDivisor(f64),
    #[error("degenerate quadrilateral: {0}")]
    DegenerateQuad(String),
    #[error("disk is empty: cuts and ellipse do not intersect")]
    EmptyDisk,
    #[error("invalid global cuts: need P > 0 > Q and positive ellipse scales")]
    InvalidCuts,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Focus {
    Finite { x: f64, y: f64 },
    /// Point at infinity in direction `(dx, dy)`, stored with unit length.
    AtInfinity { dx: f64, dy: f64 },
}

impl Focus {
    pub fn at_infinity(dx: f64, dy: f64) -> Focus {
        let n = dx.hypot(dy);
        let (dx, dy) = if dy < 0.0 || (dy == 0.0 && dx < 0.0) {
            (-dx / n, -dy / n)
        } else {
            (dx / n, dy / n)
        };
        Focus::AtInfinity { dx, dy }
    }

    /// Homogeneous coordinates `(fx, fy, fw)`.
    pub fn homogeneous(&self) -> [f64; 3] {
        match *self {
            Focus::Finite { x, y } => [x, y, 1.0],
            Focus::AtInfinity { dx, dy } => [dx, dy, 0.0],
        }
    }

    fn from_homogeneous(h: [f64; 3]) -> Focus {
        let scale = h[0].abs().max(h[1].abs());
        if h[2].abs() <= 1e-14 * scale {
            Focus::at_infinity(h[0], h[1])
        } else {
            Focus::Finite {
                x: h[0] / h[2],
                y: h[1] / h[2],
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Axis {
    U,
    V,
}

/// Pair of focus projections onto the coordinate axes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProjectiveCoords {
    pub u_focus: Focus,
    pub v_focus: Focus,
}

fn check_den(den: &ComplexRect) -> Result<(), GeometryError> {
    let lo = den.re.mig().max(den.im.mig());
    if lo < SMALL_DIVISOR_FLOOR {
        Err(GeometryError::SmallDivisor(SMALL_DIVISOR_FLOOR))
    } else {
        Ok(())
    }
}

impl ProjectiveCoords {
    pub fn euclidean() -> Self {
        ProjectiveCoords {
            u_focus: Focus::at_infinity(0.0, 1.0),
            v_focus: Focus::at_infinity(1.0, 0.0),
        }
    }

    pub fn new(u_focus: Focus, v_focus: Focus) -> Result<Self, GeometryError> {
        let [_, uy, _] = u_focus.homogeneous();
        let [vx, _, _] = v_focus.homogeneous();
        if uy == 0.0 {
            return Err(GeometryError::DegenerateQuad("u-focus lies on L_u".into()));
        }
        if vx == 0.0 {
            return Err(GeometryError::DegenerateQuad("v-focus lies on L_v".into()));
        }
        Ok(ProjectiveCoords { u_focus, v_focus })
    }

    /// `π_u(x, y) = (fy·x − fx·y) / (fy − fw·y)`.
    pub fn project_u(&self, z: &PhaseRect) -> Result<ComplexRect, GeometryError> {
        let [fx, fy, fw] = self.u_focus.homogeneous();
        let den = ComplexRect::from(fy) - z.y.scale_f64(fw);
        check_den(&den)?;
        let num = z.x.scale_f64(fy) - z.y.scale_f64(fx);
        num.div(&den)
            .map_err(|_| GeometryError::SmallDivisor(SMALL_DIVISOR_FLOOR))
    }

    /// `π_v(x, y) = (fx·y − fy·x) / (fx − fw·x)`.
    pub fn project_v(&self, z: &PhaseRect) -> Result<ComplexRect, GeometryError> {
        let [fx, fy, fw] = self.v_focus.homogeneous();
        let den = ComplexRect::from(fx) - z.x.scale_f64(fw);
        check_den(&den)?;
        let num = z.y.scale_f64(fx) - z.x.scale_f64(fy);
        num.div(&den)
            .map_err(|_| GeometryError::SmallDivisor(SMALL_DIVISOR_FLOOR))
    }

    pub fn project(&self, axis: Axis, z: &PhaseRect) -> Result<ComplexRect, GeometryError> {
        match axis {
            Axis::U => self.project_u(z),
            Axis::V => self.project_v(z),
        }
    }

    /// Gradients `(∂π_u/∂x, ∂π_u/∂y)` and `(∂π_v/∂x, ∂π_v/∂y)` over `z`.
    pub fn projection_gradients(
        &self,
        z: &PhaseRect,
    ) -> Result<[[ComplexRect; 2]; 2], GeometryError> {
        let [ux, uy, uw] = self.u_focus.homogeneous();
        let den_u = ComplexRect::from(uy) - z.y.scale_f64(uw);
        check_den(&den_u)?;
        let inv_u = den_u
            .recip()
            .map_err(|_| GeometryError::SmallDivisor(SMALL_DIVISOR_FLOOR))?;
        let du_dx = inv_u.scale_f64(uy);
        let du_dy = (z.x.scale_f64(uw) - ux).scale_f64(uy) * inv_u.sqr();

        let [vx, vy, vw] = self.v_focus.homogeneous();
        let den_v = ComplexRect::from(vx) - z.x.scale_f64(vw);
        check_den(&den_v)?;
        let inv_v = den_v
            .recip()
            .map_err(|_| GeometryError::SmallDivisor(SMALL_DIVISOR_FLOOR))?;
        let dv_dy = inv_v.scale_f64(vx);
        let dv_dx = (z.y.scale_f64(vw) - vy).scale_f64(vx) * inv_v.sqr();
        Ok([[du_dx, du_dy], [dv_dx, dv_dy]])
    }

    /// The phase point with coordinates `(u, v)`: intersection of the line
    /// through the u-focus and `(u, 0)` with the line through the v-focus
    /// and `(0, v)`.
    pub fn from_uv(&self, u: &ComplexRect, v: &ComplexRect) -> Result<PhaseRect, GeometryError> {
        let [ux, uy, uw] = self.u_focus.homogeneous();
        let [vx, vy, vw] = self.v_focus.homogeneous();
        // ℓu = (uy, uw·u − ux, −uy·u), ℓv = (vy − vw·v, −vx, vx·v)
        let lu1 = u.scale_f64(uw) - ux;
        let lv0 = ComplexRect::from(vy) - v.scale_f64(vw);
        let p0 = v.scale_f64(vx) * lu1 - u.scale_f64(uy * vx);
        let p1 = -(u.scale_f64(uy) * lv0) - v.scale_f64(uy * vx);
        let p2 = ComplexRect::from(-uy * vx) - lu1 * lv0;
        check_den(&p2)?;
        let inv = p2
            .recip()
            .map_err(|_| GeometryError::SmallDivisor(SMALL_DIVISOR_FLOOR))?;
        if p2.is_real() {
            let x = p0.div(&p2).map_err(|_| GeometryError::SmallDivisor(0.0))?;
            let y = p1.div(&p2).map_err(|_| GeometryError::SmallDivisor(0.0))?;
            return Ok(PhaseRect::new(x, y));
        }
        Ok(PhaseRect::new(p0 * inv, p1 * inv))
    }

    /// Point version of `from_uv` for real coordinates.
    pub fn from_uv_f64(&self, u: f64, v: f64) -> Option<(f64, f64)> {
        let [ux, uy, uw] = self.u_focus.homogeneous();
        let [vx, vy, vw] = self.v_focus.homogeneous();
        let lu1 = uw * u - ux;
        let lv0 = vy - vw * v;
        let p0 = vx * v * lu1 - uy * vx * u;
        let p1 = -uy * u * lv0 - uy * vx * v;
        let p2 = -uy * vx - lu1 * lv0;
        if p2.abs() < 1e-300 {
            return None;
        }
        Some((p0 / p2, p1 / p2))
    }

    pub fn project_f64(&self, x: f64, y: f64) -> Option<(f64, f64)> {
        let [ux, uy, uw] = self.u_focus.homogeneous();
        let [vx, vy, vw] = self.v_focus.homogeneous();
        let du = uy - uw * y;
        let dv = vx - vw * x;
        if du == 0.0 || dv == 0.0 {
            return None;
        }
        Some(((uy * x - ux * y) / du, (vx * y - vy * x) / dv))
    }
}

/// Result of a rigorous membership test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Membership {
    Inside,
    Outside,
    Boundary,
}

/// `{u : (Re u − c)² + (k·Im u)² ≤ r²} ∩ {cut_lo ≤ Re u ≤ cut_hi}` with
/// `c = (P+Q)/2`, `r = (P−Q)/2`, `k = a/b`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiskRegion {
    pub big_p: f64,
    pub big_q: f64,
    pub a: f64,
    pub b: f64,
    pub cut_lo: f64,
    pub cut_hi: f64,
}

/// One piece of a boundary covering: a parameter range and its enclosure.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryPiece {
    pub kind: PieceKind,
    pub rect: ComplexRect,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PieceKind {
    /// Ellipse arc in the quadrant with signs `(sx, sy)`, rational parameter `t ∈ [0, 1]`.
    Arc { sx: i8, sy: i8, t: Interval },
    /// Vertical chord `Re u = re`, `Im u ∈ im`.
    Chord { re: f64, im: Interval },
}

impl DiskRegion {
    pub fn new(
        big_p: f64,
        big_q: f64,
        a: f64,
        b: f64,
        cut_lo: f64,
        cut_hi: f64,
    ) -> Result<Self, GeometryError> {
        if !(big_p > big_q) || !(a > 0.0) || !(b > 0.0) {
            return Err(GeometryError::InvalidCuts);
        }
        let d = DiskRegion {
            big_p,
            big_q,
            a,
            b,
            cut_lo,
            cut_hi,
        };
        if d.real_lo() >= d.real_hi() {
            return Err(GeometryError::EmptyDisk);
        }
        Ok(d)
    }

    fn center(&self) -> Interval {
        (Interval::point(self.big_p) + Interval::point(self.big_q)).scale(0.5)
    }

    fn radius(&self) -> Interval {
        (Interval::point(self.big_p) - Interval::point(self.big_q)).scale(0.5)
    }

    fn ratio(&self) -> Interval {
        Interval::point(self.a)
            .div(&Interval::point(self.b))
            .expect("b > 0")
    }

    /// Left end of the real segment of the disk.
    pub fn real_lo(&self) -> f64 {
        self.cut_lo.max(self.big_q)
    }

    pub fn real_hi(&self) -> f64 {
        self.cut_hi.min(self.big_p)
    }

    /// `(Re u − c)² + (k·Im u)² − r²`.
    fn ellipse_excess(&self, u: &ComplexRect) -> Interval {
        (u.re - self.center()).sqr() + (u.im * self.ratio()).sqr() - self.radius().sqr()
    }

    pub fn membership(&self, u: &ComplexRect) -> Membership {
        if u.is_empty() {
            return Membership::Outside;
        }
        if u.re.hi() < self.cut_lo || u.re.lo() > self.cut_hi {
            return Membership::Outside;
        }
        let e = self.ellipse_excess(u);
        if e.lo() > 0.0 {
            return Membership::Outside;
        }
        if u.re.lo() > self.cut_lo && u.re.hi() < self.cut_hi && e.hi() < 0.0 {
            return Membership::Inside;
        }
        Membership::Boundary
    }

    /// Non-rigorous point test.
    pub fn contains_point(&self, re: f64, im: f64) -> bool {
        let c = 0.5 * (self.big_p + self.big_q);
        let r = 0.5 * (self.big_p - self.big_q);
        let k = self.a / self.b;
        re >= self.cut_lo
            && re <= self.cut_hi
            && (re - c).powi(2) + (k * im).powi(2) <= r * r
    }

    /// Enclosure of the imaginary half-height of the ellipse over real parts `s`.
    fn half_height(&self, s: Interval) -> Interval {
        let inner = self.radius().sqr() - (s - self.center()).sqr();
        let inner = inner.max(&Interval::ZERO);
        inner.sqrt().expect("clamped to >= 0").div(&self.ratio()).expect("ratio > 0")
    }

    pub fn bounding_rect(&self) -> ComplexRect {
        let re = Interval::new(self.real_lo(), self.real_hi());
        let c = 0.5 * (self.big_p + self.big_q);
        let peak = if re.contains(c) {
            self.half_height(Interval::point(c).hull(&self.center()))
        } else {
            self.half_height(re)
        };
        let h = peak.hi();
        ComplexRect::new(re, Interval::new(-h, h))
    }

    fn arc_rect(&self, sx: i8, sy: i8, t: Interval) -> ComplexRect {
        // cos θ = (1−t²)/(1+t²) decreasing, sin θ = 2t/(1+t²) increasing on [0, 1].
        let cs = |t: f64| {
            let t = Interval::point(t);
            let d = t.sqr() + 1.0;
            let c = (1.0 - t.sqr()).div(&d).expect("positive");
            let s = t.scale(2.0).div(&d).expect("positive");
            (c, s)
        };
        let (c0, s0) = cs(t.lo());
        let (c1, s1) = cs(t.hi());
        let cos = c1.hull(&c0);
        let sin = s0.hull(&s1);
        let re = self.center() + (self.radius() * cos).scale(f64::from(sx));
        let im = (self.radius() * sin)
            .div(&self.ratio())
            .expect("ratio > 0")
            .scale(f64::from(sy));
        ComplexRect::new(re, im)
    }

    fn chord_height(&self, re: f64) -> Interval {
        self.half_height(Interval::point(re))
    }

    fn piece(&self, kind: PieceKind) -> Option<BoundaryPiece> {
        let strip = Interval::new(self.cut_lo, self.cut_hi);
        let rect = match kind {
            PieceKind::Arc { sx, sy, t } => {
                let r = self.arc_rect(sx, sy, t);
                let re = r.re.intersect(&strip);
                if re.is_empty() {
                    return None;
                }
                ComplexRect::new(re, r.im)
            }
            PieceKind::Chord { re, im } => ComplexRect::new(Interval::point(re), im),
        };
        Some(BoundaryPiece { kind, rect })
    }

    /// Finite covering of `∂D`: `n_arcs` ellipse arc pieces clipped to the
    /// cut strip, plus the cut chords split into pieces of similar size.
    pub fn boundary_cover(&self, n_arcs: usize) -> Vec<BoundaryPiece> {
        let per_quadrant = n_arcs.div_ceil(4).max(1);
        let mut out = Vec::new();
        for (sx, sy) in [(1i8, 1i8), (-1, 1), (-1, -1), (1, -1)] {
            for t in Interval::new(0.0, 1.0).split(per_quadrant) {
                if let Some(p) = self.piece(PieceKind::Arc { sx, sy, t }) {
                    out.push(p);
                }
            }
        }
        let arc_len = std::f64::consts::PI * self.radius().hi() / (2.0 * per_quadrant as f64);
        for re in [self.cut_lo, self.cut_hi] {
            if !(re > self.big_q && re < self.big_p) {
                continue;
            }
            let h = self.chord_height(re).hi();
            let n = ((2.0 * h / arc_len).ceil() as usize).clamp(2, 4 * per_quadrant);
            for im in Interval::new(-h, h).split(n) {
                out.push(BoundaryPiece {
                    kind: PieceKind::Chord { re, im },
                    rect: ComplexRect::new(Interval::point(re), im),
                });
            }
        }
        out
    }

    /// Splits a boundary piece in two.
    pub fn refine(&self, piece: &BoundaryPiece) -> Vec<BoundaryPiece> {
        match piece.kind {
            PieceKind::Arc { sx, sy, t } => {
                let (a, b) = t.bisect();
                [a, b]
                    .into_iter()
                    .filter_map(|t| self.piece(PieceKind::Arc { sx, sy, t }))
                    .collect()
            }
            PieceKind::Chord { re, im } => {
                let (a, b) = im.bisect();
                vec![
                    BoundaryPiece {
                        kind: PieceKind::Chord { re, im: a },
                        rect: ComplexRect::new(Interval::point(re), a),
                    },
                    BoundaryPiece {
                        kind: PieceKind::Chord { re, im: b },
                        rect: ComplexRect::new(Interval::point(re), b),
                    },
                ]
            }
        }
    }

    /// Enclosure of one actual boundary point inside the piece, if the
    /// midpoint parameter certainly lies on `∂D`.
    pub fn piece_sample(&self, piece: &BoundaryPiece) -> Option<ComplexRect> {
        let strip = Interval::new(self.cut_lo, self.cut_hi);
        match piece.kind {
            PieceKind::Arc { sx, sy, t } => {
                let m = Interval::point(t.mid());
                let r = self.arc_rect(sx, sy, m);
                r.re.subset(&strip).then_some(r)
            }
            PieceKind::Chord { re, im } => {
                let u = ComplexRect::point(re, im.mid());
                (self.ellipse_excess(&u).hi() <= 0.0).then_some(u)
            }
        }
    }

    /// Grid cells over the bounding rectangle that may meet the disk.
    pub fn cover(&self, n_re: usize, n_im: usize) -> Vec<ComplexRect> {
        let bb = self.bounding_rect();
        let ims = if bb.im.width() == 0.0 {
            vec![bb.im]
        } else {
            bb.im.split(n_im.max(1))
        };
        let mut out = Vec::new();
        for re in bb.re.split(n_re.max(1)) {
            for im in &ims {
                let c = ComplexRect::new(re, *im);
                if self.membership(&c) != Membership::Outside {
                    out.push(c);
                }
            }
        }
        out
    }
}

/// Real quadrilateral with vertices in clockwise order; `v1v2` and `v3v4`
/// are the near-vertical edges.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quadrilateral {
    pub v: [(f64, f64); 4],
}

fn line_through(p: (f64, f64), q: (f64, f64)) -> [f64; 3] {
    cross([p.0, p.1, 1.0], [q.0, q.1, 1.0])
}

fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn same_line(l1: [f64; 3], l2: [f64; 3]) -> bool {
    let c = cross(l1, l2);
    let scale = l1.iter().map(|v| v.abs()).fold(0.0, f64::max)
        * l2.iter().map(|v| v.abs()).fold(0.0, f64::max);
    c.iter().all(|v| v.abs() <= 1e-12 * scale)
}

impl Quadrilateral {
    pub fn new(v1: (f64, f64), v2: (f64, f64), v3: (f64, f64), v4: (f64, f64)) -> Self {
        Quadrilateral {
            v: [v1, v2, v3, v4],
        }
    }

    /// Builds `Q_i` from four trellis points in the data-file order
    /// (top-right, bottom-right, top-left, bottom-left).
    pub fn from_trellis(t: [(f64, f64); 4]) -> Self {
        Quadrilateral::new(t[0], t[1], t[3], t[2])
    }

    /// Non-rigorous point-in-polygon test (convex quadrilateral).
    pub fn contains_point(&self, p: (f64, f64)) -> bool {
        let mut sign = 0.0;
        for k in 0..4 {
            let a = self.v[k];
            let b = self.v[(k + 1) % 4];
            let c = (b.0 - a.0) * (p.1 - a.1) - (b.1 - a.1) * (p.0 - a.0);
            if c == 0.0 {
                continue;
            }
            if sign == 0.0 {
                sign = c.signum();
            } else if c.signum() != sign {
                return false;
            }
        }
        true
    }

    pub fn centroid(&self) -> (f64, f64) {
        let sx: f64 = self.v.iter().map(|p| p.0).sum();
        let sy: f64 = self.v.iter().map(|p| p.1).sum();
        (sx / 4.0, sy / 4.0)
    }
}

/// Projective coordinates of a quadrilateral plus the intercepts
/// `p_x > q_x` of its vertical edge lines and `p_y > q_y` of its horizontal
/// edge lines.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadCoords {
    pub coords: ProjectiveCoords,
    pub p_x: f64,
    pub q_x: f64,
    pub p_y: f64,
    pub q_y: f64,
}

pub fn quad_to_coords(q: &Quadrilateral) -> Result<QuadCoords, GeometryError> {
    let [v1, v2, v3, v4] = q.v;
    for (k, (a, b)) in [(v1, v2), (v2, v3), (v3, v4), (v4, v1)].iter().enumerate() {
        if a == b {
            return Err(GeometryError::DegenerateQuad(format!("edge {k} has zero length")));
        }
    }
    let right = line_through(v1, v2);
    let left = line_through(v3, v4);
    let bottom = line_through(v2, v3);
    let top = line_through(v4, v1);
    if same_line(right, left) || same_line(bottom, top) {
        return Err(GeometryError::DegenerateQuad("opposite edges coincide".into()));
    }
    let u_focus = Focus::from_homogeneous(cross(right, left));
    let v_focus = Focus::from_homogeneous(cross(bottom, top));
    for (name, f) in [("u", u_focus), ("v", v_focus)] {
        if let Focus::Finite { x, y } = f {
            if q.contains_point((x, y)) {
                return Err(GeometryError::DegenerateQuad(format!("{name}-focus inside")));
            }
        }
    }
    // x-intercept of a·x + b·y + c = 0 is −c/a; y-intercept is −c/b.
    let x_int = |l: [f64; 3]| -l[2] / l[0];
    let y_int = |l: [f64; 3]| -l[2] / l[1];
    let (xr, xl) = (x_int(right), x_int(left));
    let (yb, yt) = (y_int(bottom), y_int(top));
    if !(xr.is_finite() && xl.is_finite() && yb.is_finite() && yt.is_finite()) {
        return Err(GeometryError::DegenerateQuad("edge parallel to an axis line".into()));
    }
    let coords = ProjectiveCoords::new(u_focus, v_focus)?;
    Ok(QuadCoords {
        coords,
        p_x: xr.max(xl),
        q_x: xr.min(xl),
        p_y: yb.max(yt),
        q_y: yb.min(yt),
    })
}

/// Per-box ellipse shapes and cut offsets.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoxShape {
    pub ax: f64,
    pub bx: f64,
    pub ay: f64,
    pub by: f64,
    pub delta_px: f64,
    pub delta_qx: f64,
    pub delta_py: f64,
    pub delta_qy: f64,
}

/// Family-wide ellipse extents.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GlobalCuts {
    pub px: f64,
    pub qx: f64,
    pub py: f64,
    pub qy: f64,
}

/// `D_u ×_pr D_v = π_u⁻¹(D_u) ∩ π_v⁻¹(D_v)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProjectiveBox {
    pub coords: ProjectiveCoords,
    pub du: DiskRegion,
    pub dv: DiskRegion,
    pub id: usize,
    pub family: Family,
}

pub fn build_box(
    q: &Quadrilateral,
    shape: &BoxShape,
    cuts: &GlobalCuts,
    id: usize,
    family: Family,
) -> Result<ProjectiveBox, GeometryError> {
    if !(cuts.px > 0.0 && cuts.qx < 0.0 && cuts.py > 0.0 && cuts.qy < 0.0) {
        return Err(GeometryError::InvalidCuts);
    }
    let qc = quad_to_coords(q)?;
    let du = DiskRegion::new(
        cuts.px,
        cuts.qx,
        shape.ax,
        shape.bx,
        qc.q_x + shape.delta_qx,
        qc.p_x + shape.delta_px,
    )?;
    let dv = DiskRegion::new(
        cuts.py,
        cuts.qy,
        shape.ay,
        shape.by,
        qc.q_y + shape.delta_qy,
        qc.p_y + shape.delta_py,
    )?;
    Ok(ProjectiveBox {
        coords: qc.coords,
        du,
        dv,
        id,
        family,
    })
}

/// Which part of `∂B` a boundary covering describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Side {
    /// `∂D_u ×_pr D_v`.
    Vertical,
    /// `D_u ×_pr ∂D_v`.
    Horizontal,
}

impl ProjectiveBox {
    pub fn disk(&self, axis: Axis) -> &DiskRegion {
        match axis {
            Axis::U => &self.du,
            Axis::V => &self.dv,
        }
    }

    pub fn project(&self, z: &PhaseRect) -> Result<(ComplexRect, ComplexRect), GeometryError> {
        Ok((self.coords.project_u(z)?, self.coords.project_v(z)?))
    }

    pub fn membership(&self, z: &PhaseRect) -> Membership {
        let mu = match self.coords.project_u(z) {
            Ok(u) => self.du.membership(&u),
            Err(_) => Membership::Boundary,
        };
        if mu == Membership::Outside {
            return Membership::Outside;
        }
        let mv = match self.coords.project_v(z) {
            Ok(v) => self.dv.membership(&v),
            Err(_) => Membership::Boundary,
        };
        match (mu, mv) {
            (_, Membership::Outside) => Membership::Outside,
            (Membership::Inside, Membership::Inside) => Membership::Inside,
            _ => Membership::Boundary,
        }
    }

    /// Non-rigorous membership of a real point.
    pub fn contains_real_point(&self, x: f64, y: f64) -> bool {
        match self.coords.project_f64(x, y) {
            Some((u, v)) => self.du.contains_point(u, 0.0) && self.dv.contains_point(v, 0.0),
            None => false,
        }
    }

    pub fn from_uv(&self, u: &ComplexRect, v: &ComplexRect) -> Result<PhaseRect, GeometryError> {
        self.coords.from_uv(u, v)
    }

    /// Covering of `∂D_u` (vertical side) or `∂D_v` (horizontal side).
    pub fn boundary_curves(&self, side: Side, n_arcs: usize) -> Vec<BoundaryPiece> {
        match side {
            Side::Vertical => self.du.boundary_cover(n_arcs),
            Side::Horizontal => self.dv.boundary_cover(n_arcs),
        }
    }

    /// Corners of the real part `B ∩ R²`, which is a quadrilateral.
    pub fn real_corners(&self) -> [(f64, f64); 4] {
        let (u0, u1) = (self.du.real_lo(), self.du.real_hi());
        let (v0, v1) = (self.dv.real_lo(), self.dv.real_hi());
        let c = |u, v| self.coords.from_uv_f64(u, v).unwrap_or((f64::NAN, f64::NAN));
        [c(u1, v1), c(u1, v0), c(u0, v0), c(u0, v1)]
    }

    /// Rigorous axis-aligned bounding box of `B ∩ R²`.
    pub fn real_bounds(&self) -> Result<(Interval, Interval), GeometryError> {
        let u = Interval::new(self.du.real_lo(), self.du.real_hi());
        let v = Interval::new(self.dv.real_lo(), self.dv.real_hi());
        let mut bx = Interval::EMPTY;
        let mut by = Interval::EMPTY;
        // The real box is the convex quadrilateral spanned by its corners.
        for (uu, vv) in [(u.lo(), v.lo()), (u.lo(), v.hi()), (u.hi(), v.lo()), (u.hi(), v.hi())] {
            let z = self
                .coords
                .from_uv(&ComplexRect::from(uu), &ComplexRect::from(vv))?;
            bx = bx.hull(&z.x.re);
            by = by.hull(&z.y.re);
        }
        Ok((bx, by))
    }

    /// Rigorous enclosure of the complex box as a phase rectangle.
    pub fn phase_bounds(&self) -> Result<PhaseRect, GeometryError> {
        let u = self.du.bounding_rect();
        let v = self.dv.bounding_rect();
        self.coords.from_uv(&u, &v)
    }
}
