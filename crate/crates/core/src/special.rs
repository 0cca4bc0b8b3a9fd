//! Counting intersections of the special stable and unstable pieces.
//!
//! For the plus family the pieces are `W^s_{31(0)}` and `W^u_{(0)23}` in
//! `B3`. A transverse crossing is certified by a Krawczyk box for the
//! shooting system
//!
//! ```text
//! G(ξ, η) = f^N(p₁ + ξ·e_u + h_u(ξ)·e_s) − f^{−M}(p₁ + η·e_s + h_s(η)·e_u)
//! ```
//!
//! where `h_u`, `h_s` are the local manifold graphs. They are not known
//! exactly, but on a chart where cone conditions hold they are graphs with
//! `|h'| ≤ κ` and `|h(t)| ≤ L|t| + K·t²`, which is all the enclosures of `G`
//! and `DG` need. The graph offset enters in mean-value form along `e_s`
//! (resp. `e_u`), so it is carried by the true contraction near `p₁` rather
//! than by a box. Absence of crossings is shown by cell enclosures of the two pieces
//! that neither share nor touch any cell.
//!
//! At `b = 0` the pieces are the line `x = −β` and the parabola
//! `x = y² − a`, crossing at `y = ±√(a − β)` where `β` is the fixed point of
//! `x² − a`.

use serde::{Deserialize, Serialize};

use crate::cells::{enclose_manifold_piece_in, real_root, CellError, Enclosure, Word};
use crate::geometry::Membership;
use crate::henon::{ParamBox, PhaseRect};
use crate::interval::Interval;
use crate::krawczyk::{certify, FnSystem, KrawczykStatus};
use crate::params::{BoxSystem, Family};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SpecialCount {
    Two,
    AtLeastOne,
    Zero,
    Unknown,
}

/// A certified transverse intersection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Crossing {
    /// Unknowns of the certified system: chart coordinates `(ξ, η)`, or the
    /// height `y` at `b = 0`.
    pub unknowns: Vec<Interval>,
    /// Enclosure of the intersection point.
    pub point: (Interval, Interval),
    pub forward_steps: usize,
    pub backward_steps: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountReport {
    pub count: SpecialCount,
    pub crossings: Vec<Crossing>,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CountOptions {
    /// Grid depth for the piece enclosures.
    pub depth: u32,
    /// Samples per fundamental domain when tracing the pieces.
    pub samples: usize,
    /// Chart half-width, relative to `1 + |p₁|`.
    pub chart_radius: f64,
    /// Cone slope `κ`.
    pub cone: f64,
}

impl Default for CountOptions {
    fn default() -> Self {
        CountOptions { depth: 10, samples: 3000, chart_radius: 1e-4, cone: 1e-2 }
    }
}

/// The stable and unstable words whose intersection decides the count.
pub fn special_words(family: Family) -> (Word, Word) {
    match family {
        Family::Plus => (Word::stable(&[3, 1], &[0]), Word::unstable(&[0], &[2, 3])),
        Family::Minus => (Word::stable(&[4, 1], &[0]), Word::unstable(&[4, 3], &[4, 1, 2, 4])),
    }
}

type V2 = [Interval; 2];
type M2 = [[Interval; 2]; 2];

#[derive(Debug, Clone, Copy)]
struct Real {
    a: Interval,
    b: Interval,
    binv: Interval,
}

impl Real {
    fn new(p: &ParamBox) -> Option<Real> {
        let b = p.b.re;
        let binv = b.recip().ok()?;
        Some(Real { a: p.a.re, b, binv })
    }

    fn fwd(&self, z: V2) -> V2 {
        [z[0].sqr() - self.a - self.b * z[1], z[0]]
    }

    fn bwd(&self, z: V2) -> V2 {
        [z[1], (z[1].sqr() - self.a - z[0]) * self.binv]
    }

    fn dfwd(&self, z: V2) -> M2 {
        [[z[0] * 2.0, -self.b], [Interval::ONE, Interval::ZERO]]
    }

    fn dbwd(&self, z: V2) -> M2 {
        [[Interval::ZERO, Interval::ONE], [-self.binv, z[1] * 2.0 * self.binv]]
    }
}

fn mul_mv(m: &M2, v: V2) -> V2 {
    [m[0][0] * v[0] + m[0][1] * v[1], m[1][0] * v[0] + m[1][1] * v[1]]
}

fn mul_mm(a: &M2, b: &M2) -> M2 {
    let mut c = [[Interval::ZERO; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            c[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    c
}

fn phase(z: V2) -> PhaseRect {
    PhaseRect::real(z[0], z[1])
}

fn sym(r: f64) -> Interval {
    Interval::new(-r, r)
}

/// Saddle chart `z = c + ξ·e_u + η·e_s` on `|ξ|, |η| ≤ r`.
#[derive(Debug, Clone)]
struct Chart {
    center: V2,
    eu: [f64; 2],
    es: [f64; 2],
    lu: f64,
    ls: f64,
    r: f64,
    /// Slope bound of both local graphs.
    kappa: f64,
    /// `|h_u(ξ)| ≤ lin_u·|ξ| + quad_u·ξ²`.
    lin_u: f64,
    quad_u: f64,
    lin_s: f64,
    quad_s: f64,
}

impl Chart {
    fn at(&self, u: Interval, s: Interval) -> V2 {
        [
            self.center[0] + u * self.eu[0] + s * self.es[0],
            self.center[1] + u * self.eu[1] + s * self.es[1],
        ]
    }

    fn region(&self) -> V2 {
        self.at(sym(self.r), sym(self.r))
    }

    fn height_u(&self, xi: Interval) -> f64 {
        let t = xi.mag();
        (Interval::point(self.lin_u) * t + Interval::point(self.quad_u) * t * t).hi()
    }

    fn height_s(&self, eta: Interval) -> f64 {
        let t = eta.mag();
        (Interval::point(self.lin_s) * t + Interval::point(self.quad_s) * t * t).hi()
    }
}

/// The first-quadrant fixed point `(x, x)`, `x = ((1+b) + √((1+b)² + 4a))/2`.
fn fixed_point(p: &Real) -> Option<V2> {
    let s = (p.b + 1.0).sqr() + p.a * 4.0;
    let x = ((p.b + 1.0) + s.sqrt().ok()?) * 0.5;
    Some([x, x])
}

fn chart_matrices(eu: [f64; 2], es: [f64; 2]) -> Option<(M2, M2)> {
    let p = [
        [Interval::point(eu[0]), Interval::point(es[0])],
        [Interval::point(eu[1]), Interval::point(es[1])],
    ];
    let det = p[0][0] * p[1][1] - p[0][1] * p[1][0];
    let d = det.recip().ok()?;
    let pinv = [[p[1][1] * d, -p[0][1] * d], [-p[1][0] * d, p[0][0] * d]];
    Some((p, pinv))
}

/// Unstable cone `|dη| ≤ κ|dξ|` mapped into itself and expanded by `Df`,
/// stable cone `|dξ| ≤ κ|dη|` likewise by `Df⁻¹`, everywhere on the chart.
/// Under these conditions the local manifolds through the fixed point are
/// graphs over the full chart width with slopes bounded by `κ`.
fn cones_hold(p: &Real, ch: &Chart) -> Result<(), String> {
    let (pm, pinv) = chart_matrices(ch.eu, ch.es).ok_or("degenerate eigenbasis")?;
    let z = ch.region();
    let k = ch.kappa;
    let a = mul_mm(&pinv, &mul_mm(&p.dfwd(z), &pm));
    let gain_u = a[0][0].mig() - a[0][1].mag() * k;
    let ok_u = gain_u > 1.0 && a[1][0].mag() + a[1][1].mag() * k <= k * gain_u;
    if !ok_u {
        return Err(format!("unstable cone fails: {a:?}"));
    }
    let bm = mul_mm(&pinv, &mul_mm(&p.dbwd(z), &pm));
    let gain_s = bm[1][1].mig() - bm[1][0].mag() * k;
    let ok_s = gain_s > 1.0 && bm[0][1].mag() + bm[0][0].mag() * k <= k * gain_s;
    if !ok_s {
        return Err(format!("stable cone fails: {bm:?}"));
    }
    Ok(())
}

/// In chart coordinates one step is `p' = a_pp·p + a_pq·q + c_p·s²`,
/// `q' = a_qp·p + a_qq·q + c_q·s²` with `s = α·p + β·q`, `p` expanding. The
/// set of graphs `|q| ≤ L|p| + K·p²` over `|p| ≤ r` is invariant under the
/// graph transform when the returned inequalities hold, so the local
/// manifold, the limit of that transform, obeys the same bound.
struct Step {
    a_pp: Interval,
    a_pq: Interval,
    a_qp: Interval,
    a_qq: Interval,
    c_p: Interval,
    c_q: Interval,
    alpha: f64,
    beta: f64,
}

fn quadratic_graph_bound(st: &Step, r: f64) -> Option<(f64, f64)> {
    let (mut l, mut k) = (0.0f64, 0.0f64);
    let check = |l: f64, k: f64| -> Option<(f64, f64, bool)> {
        let phi_r = Interval::point(l) + Interval::point(k) * r;
        let c = Interval::point(st.alpha.abs()) + phi_r * st.beta.abs();
        let c2 = c.sqr();
        let m = Interval::point(st.a_pp.mig()) - phi_r * st.a_pq.mag() - c2 * st.c_p.mag() * r;
        let m = m.lo();
        if m <= 1.0 {
            return None;
        }
        let need_l = Interval::point(st.a_qp.mag())
            .div(&(Interval::point(m) - st.a_qq.mag()))
            .ok()?
            .hi();
        let need_k = (c2 * st.c_q.mag())
            .div(&(Interval::point(m).sqr() - st.a_qq.mag()))
            .ok()?
            .hi();
        let lin_ok = (Interval::point(st.a_qp.mag()) + Interval::point(st.a_qq.mag()) * l).hi()
            <= (Interval::point(l) * m).lo();
        let quad_ok = (Interval::point(st.a_qq.mag()) * k + c2 * st.c_q.mag()).hi()
            <= (Interval::point(k) * m * m).lo();
        Some((need_l, need_k, lin_ok && quad_ok))
    };
    for _ in 0..40 {
        let (nl, nk, ok) = check(l, k)?;
        if ok {
            return Some((l, k));
        }
        l = (nl * 1.01).max(l);
        k = (nk * 1.01).max(k);
        if !(l.is_finite() && k.is_finite()) {
            return None;
        }
    }
    None
}

fn graph_bounds(p: &Real, ch: &Chart) -> Option<((f64, f64), (f64, f64))> {
    let (pm, pinv) = chart_matrices(ch.eu, ch.es)?;
    let a = mul_mm(&pinv, &mul_mm(&p.dfwd(ch.center), &pm));
    let unstable = Step {
        a_pp: a[0][0],
        a_pq: a[0][1],
        a_qp: a[1][0],
        a_qq: a[1][1],
        c_p: pinv[0][0],
        c_q: pinv[1][0],
        alpha: ch.eu[0],
        beta: ch.es[0],
    };
    let bm = mul_mm(&pinv, &mul_mm(&p.dbwd(ch.center), &pm));
    let stable = Step {
        a_pp: bm[1][1],
        a_pq: bm[1][0],
        a_qp: bm[0][1],
        a_qq: bm[0][0],
        c_p: pinv[1][1] * p.binv,
        c_q: pinv[0][1] * p.binv,
        alpha: ch.es[1],
        beta: ch.eu[1],
    };
    Some((quadratic_graph_bound(&unstable, ch.r)?, quadratic_graph_bound(&stable, ch.r)?))
}

fn build_chart(p: &Real, opts: &CountOptions) -> Result<Chart, String> {
    let center = fixed_point(p).ok_or("fixed point not real")?;
    let x = center[0].mid();
    let b = p.b.mid();
    let disc = x * x - b;
    if disc <= 0.0 {
        return Err("fixed point is not a saddle".into());
    }
    let (lu, ls) = (x + disc.sqrt(), x - disc.sqrt());
    if lu.abs() <= 1.0 || ls.abs() >= 1.0 || ls <= 0.0 {
        return Err(format!("eigenvalues {lu}, {ls} not of positive saddle type"));
    }
    let unit = |l: f64| {
        let n = (l * l + 1.0).sqrt();
        [l / n, 1.0 / n]
    };
    let mut ch = Chart {
        center,
        eu: unit(lu),
        es: unit(ls),
        lu,
        ls,
        r: opts.chart_radius * (1.0 + x.abs()),
        kappa: opts.cone,
        lin_u: 0.0,
        quad_u: 0.0,
        lin_s: 0.0,
        quad_s: 0.0,
    };
    let mut last = String::new();
    for _ in 0..12 {
        match cones_hold(p, &ch) {
            Ok(()) => match graph_bounds(p, &ch) {
                Some(((lu_, ku), (ls_, ks))) => {
                    ch.lin_u = lu_;
                    ch.quad_u = ku;
                    ch.lin_s = ls_;
                    ch.quad_s = ks;
                    return Ok(ch);
                }
                None => last = "quadratic graph bound fails".into(),
            },
            Err(e) => last = e,
        }
        ch.r *= 0.25;
    }
    Err(last)
}

fn fwd64(a: f64, b: f64, z: [f64; 2]) -> [f64; 2] {
    [z[0] * z[0] - a - b * z[1], z[0]]
}

fn bwd64(a: f64, b: f64, z: [f64; 2]) -> [f64; 2] {
    [z[1], (z[1] * z[1] - a - z[0]) / b]
}

fn inside(sys: &BoxSystem, i: usize, z: V2) -> bool {
    sys.boxes[i].membership(&phase(z)) == Membership::Inside
}

fn contains64(sys: &BoxSystem, i: usize, z: [f64; 2]) -> bool {
    z[0].is_finite() && z[1].is_finite() && sys.boxes[i].contains_real_point(z[0], z[1])
}

/// Sample on a traced piece: the point and its address `(steps, chart
/// coordinate)`.
#[derive(Debug, Clone, Copy)]
struct Sample {
    z: [f64; 2],
    steps: usize,
    t: f64,
    /// Index along the traced curve; consecutive indices are neighbours.
    seq: usize,
}

/// Traces `W^{u}_{(c) w}` (or the stable analogue) from the chart by
/// iterating fundamental domains while they stay in the cycle box, then
/// pushing through the finite word.
fn trace(
    a: f64,
    b: f64,
    sys: &BoxSystem,
    ch: &Chart,
    word: &Word,
    stable: bool,
    samples: usize,
) -> Vec<Sample> {
    let cycle = word.cycle[0];
    let (dir, lam) = if stable { (ch.es, 1.0 / ch.ls) } else { (ch.eu, ch.lu) };
    let step = |z: [f64; 2]| if stable { bwd64(a, b, z) } else { fwd64(a, b, z) };
    let c = [ch.center[0].mid(), ch.center[1].mid()];
    let r = 0.5 * ch.r;
    let mut out = Vec::new();
    let mut seq = 0usize;
    for sign in [-1.0, 1.0] {
        // Geometric spacing over [r/λ, r] in each domain.
        let domain: Vec<f64> = (0..samples)
            .map(|i| sign * r * lam.powf(i as f64 / samples as f64 - 1.0))
            .collect();
        let mut k = 0usize;
        'branch: loop {
            for &t in &domain {
                let mut z = [c[0] + t * dir[0], c[1] + t * dir[1]];
                for _ in 0..k {
                    z = step(z);
                }
                if !contains64(sys, cycle, z) {
                    break 'branch;
                }
                // Push through the finite word.
                let mut w = z;
                let mut ok = true;
                let finite: Vec<usize> = if stable {
                    word.finite.iter().rev().copied().collect()
                } else {
                    word.finite.clone()
                };
                for &s in &finite {
                    w = step(w);
                    if !contains64(sys, s, w) {
                        ok = false;
                        break;
                    }
                }
                seq += 1;
                if ok {
                    out.push(Sample { z: w, steps: k + finite.len(), t, seq });
                }
            }
            k += 1;
            if k > 200 {
                break;
            }
        }
        seq += 2;
    }
    out
}

fn seg_intersect(p1: [f64; 2], p2: [f64; 2], q1: [f64; 2], q2: [f64; 2]) -> Option<(f64, f64)> {
    let d1 = [p2[0] - p1[0], p2[1] - p1[1]];
    let d2 = [q2[0] - q1[0], q2[1] - q1[1]];
    let den = d1[0] * d2[1] - d1[1] * d2[0];
    if den == 0.0 {
        return None;
    }
    let w = [q1[0] - p1[0], q1[1] - p1[1]];
    let s = (w[0] * d2[1] - w[1] * d2[0]) / den;
    let t = (w[0] * d1[1] - w[1] * d1[0]) / den;
    ((0.0..=1.0).contains(&s) && (0.0..=1.0).contains(&t)).then_some((s, t))
}

/// Segment intersections of two traced polylines.
fn crossings(u: &[Sample], s: &[Sample]) -> Vec<(Sample, Sample)> {
    let segs = |v: &[Sample]| -> Vec<(Sample, Sample)> {
        v.windows(2).filter(|w| w[1].seq == w[0].seq + 1).map(|w| (w[0], w[1])).collect()
    };
    let su = segs(u);
    let ss = segs(s);
    if su.is_empty() || ss.is_empty() {
        return Vec::new();
    }
    // Bucket the stable segments on a coarse grid.
    let all: Vec<[f64; 2]> = ss.iter().flat_map(|(a, b)| [a.z, b.z]).collect();
    let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
    for z in &all {
        for k in 0..2 {
            lo[k] = lo[k].min(z[k]);
            hi[k] = hi[k].max(z[k]);
        }
    }
    let n = 256usize;
    let cell = |z: f64, k: usize| -> usize {
        let w = (hi[k] - lo[k]).max(1e-300);
        (((z - lo[k]) / w * n as f64).floor().max(0.0) as usize).min(n - 1)
    };
    let mut buckets: Vec<Vec<usize>> = vec![Vec::new(); n * n];
    for (i, (a, b)) in ss.iter().enumerate() {
        let (x0, x1) = (cell(a.z[0].min(b.z[0]), 0), cell(a.z[0].max(b.z[0]), 0));
        let (y0, y1) = (cell(a.z[1].min(b.z[1]), 1), cell(a.z[1].max(b.z[1]), 1));
        for x in x0..=x1 {
            for y in y0..=y1 {
                buckets[x * n + y].push(i);
            }
        }
    }
    let mut out = Vec::new();
    for (ua, ub) in &su {
        let bx = (ua.z[0].min(ub.z[0]), ua.z[0].max(ub.z[0]));
        let by = (ua.z[1].min(ub.z[1]), ua.z[1].max(ub.z[1]));
        if bx.1 < lo[0] || bx.0 > hi[0] || by.1 < lo[1] || by.0 > hi[1] {
            continue;
        }
        let mut seen = Vec::new();
        for x in cell(bx.0, 0)..=cell(bx.1, 0) {
            for y in cell(by.0, 1)..=cell(by.1, 1) {
                for &i in &buckets[x * n + y] {
                    if seen.contains(&i) {
                        continue;
                    }
                    seen.push(i);
                    let (sa, sb) = ss[i];
                    if let Some((fu, fs)) = seg_intersect(ua.z, ub.z, sa.z, sb.z) {
                        let mix = |a: &Sample, b: &Sample, f: f64| {
                            let mut m = if f < 0.5 { *a } else { *b };
                            m.z = [a.z[0] + f * (b.z[0] - a.z[0]), a.z[1] + f * (b.z[1] - a.z[1])];
                            m
                        };
                        out.push((mix(ua, ub, fu), mix(&sa, &sb, fs)));
                    }
                }
            }
        }
    }
    out
}

/// Orbit of a chart point in mean-value form: `z_k` encloses `f^k` of the
/// graph point, `vu`/`vs` enclose `Df^k·e_u` and `Df^k·e_s` along it.
struct Orbit {
    points: Vec<V2>,
    vu: V2,
    vs: V2,
}

/// The shooting system in chart coordinates, with `N` forward and `M`
/// backward steps.
struct Shooting<'a> {
    p: &'a Real,
    ch: &'a Chart,
    n: usize,
    m: usize,
}

impl Shooting<'_> {
    /// `f^k(c + ξ·e_u + h·e_s)` for `k ≤ N`, `|h| ≤ H(ξ)`.
    fn forward(&self, xi: Interval) -> Orbit {
        let ch = self.ch;
        let h = self.ch.height_u(xi);
        let mut base = ch.at(xi, Interval::ZERO);
        let mut fat = ch.at(xi, sym(h));
        let mut vu = [Interval::point(ch.eu[0]), Interval::point(ch.eu[1])];
        let mut vs = [Interval::point(ch.es[0]), Interval::point(ch.es[1])];
        let mut points = Vec::with_capacity(self.n + 1);
        let widen = |base: V2, vs: V2| [base[0] + vs[0] * sym(h), base[1] + vs[1] * sym(h)];
        points.push(widen(base, vs));
        for _ in 0..self.n {
            let d = self.p.dfwd(fat);
            vu = mul_mv(&d, vu);
            vs = mul_mv(&d, vs);
            base = self.p.fwd(base);
            let next = widen(base, vs);
            fat = [self.p.fwd(fat)[0].intersect(&next[0]), self.p.fwd(fat)[1].intersect(&next[1])];
            points.push(next);
        }
        Orbit { points, vu, vs }
    }

    /// `f^{−j}(c + η·e_s + h·e_u)` for `j ≤ M`, `|h| ≤ H(η)`.
    fn backward(&self, eta: Interval) -> Orbit {
        let ch = self.ch;
        let h = self.ch.height_s(eta);
        let mut base = ch.at(Interval::ZERO, eta);
        let mut fat = ch.at(sym(h), eta);
        let mut vu = [Interval::point(ch.eu[0]), Interval::point(ch.eu[1])];
        let mut vs = [Interval::point(ch.es[0]), Interval::point(ch.es[1])];
        let mut points = Vec::with_capacity(self.m + 1);
        let widen = |base: V2, vu: V2| [base[0] + vu[0] * sym(h), base[1] + vu[1] * sym(h)];
        points.push(widen(base, vu));
        for _ in 0..self.m {
            let d = self.p.dbwd(fat);
            vu = mul_mv(&d, vu);
            vs = mul_mv(&d, vs);
            base = self.p.bwd(base);
            let next = widen(base, vu);
            fat = [self.p.bwd(fat)[0].intersect(&next[0]), self.p.bwd(fat)[1].intersect(&next[1])];
            points.push(next);
        }
        Orbit { points, vu, vs }
    }

    fn eval(&self, x: &[Interval]) -> Vec<Interval> {
        let zu = *self.forward(x[0]).points.last().expect("orbit");
        let zs = *self.backward(x[1]).points.last().expect("orbit");
        vec![zu[0] - zs[0], zu[1] - zs[1]]
    }

    fn jacobian(&self, x: &[Interval]) -> Vec<Vec<Interval>> {
        let k = sym(self.ch.kappa);
        let fu = self.forward(x[0]);
        let fs = self.backward(x[1]);
        let tu = [fu.vu[0] + k * fu.vs[0], fu.vu[1] + k * fu.vs[1]];
        let ts = [fs.vs[0] + k * fs.vu[0], fs.vs[1] + k * fs.vu[1]];
        vec![vec![tu[0], -ts[0]], vec![tu[1], -ts[1]]]
    }
}

/// Newton on the chart-linearised system, `h ≡ 0`.
fn newton(a: f64, b: f64, ch: &Chart, n: usize, m: usize, mut x: [f64; 2]) -> Option<[f64; 2]> {
    let c = [ch.center[0].mid(), ch.center[1].mid()];
    for _ in 0..40 {
        let mut zu = [c[0] + x[0] * ch.eu[0], c[1] + x[0] * ch.eu[1]];
        let mut tu = ch.eu;
        for _ in 0..n {
            tu = [2.0 * zu[0] * tu[0] - b * tu[1], tu[0]];
            zu = fwd64(a, b, zu);
        }
        let mut zs = [c[0] + x[1] * ch.es[0], c[1] + x[1] * ch.es[1]];
        let mut ts = ch.es;
        for _ in 0..m {
            ts = [ts[1], (-ts[0] + 2.0 * zs[1] * ts[1]) / b];
            zs = bwd64(a, b, zs);
        }
        let g = [zu[0] - zs[0], zu[1] - zs[1]];
        let j = [[tu[0], -ts[0]], [tu[1], -ts[1]]];
        let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
        if !det.is_finite() || det == 0.0 {
            return None;
        }
        let dx = [
            (j[1][1] * g[0] - j[0][1] * g[1]) / det,
            (-j[1][0] * g[0] + j[0][0] * g[1]) / det,
        ];
        x = [x[0] - dx[0], x[1] - dx[1]];
        if !(x[0].is_finite() && x[1].is_finite()) || x[0].abs() > ch.r || x[1].abs() > ch.r {
            return None;
        }
        if dx[0].abs() <= 1e-15 * ch.r && dx[1].abs() <= 1e-15 * ch.r {
            break;
        }
    }
    Some(x)
}

/// Every orbit point of a certified box lies in the box its word demands.
fn itinerary_holds(sys: &BoxSystem, sh: &Shooting, omega: &[Interval], stable: &Word, unstable: &Word) -> bool {
    let fu = sh.forward(omega[0]);
    let mu = unstable.finite.len();
    for (k, z) in fu.points.iter().enumerate() {
        let want = if k + mu > sh.n { unstable.finite[k + mu - sh.n - 1] } else { unstable.cycle[0] };
        if !inside(sys, want, *z) {
            return false;
        }
    }
    let fs = sh.backward(omega[1]);
    let ms = stable.finite.len();
    for (j, w) in fs.points.iter().enumerate() {
        let from_start = sh.m - j;
        let want = if from_start < ms { stable.finite[from_start] } else { stable.cycle[0] };
        if !inside(sys, want, *w) {
            return false;
        }
    }
    true
}

fn certify_crossing(
    p: &Real,
    sys: &BoxSystem,
    ch: &Chart,
    words: &(Word, Word),
    n: usize,
    m: usize,
    x0: [f64; 2],
) -> Result<Crossing, String> {
    let sh = Shooting { p, ch, n, m };
    let system = FnSystem { n: 2, g: |x: &[Interval]| sh.eval(x), dg: |x: &[Interval]| sh.jacobian(x) };
    let mut rho = 1e-12 * ch.r;
    while rho < 0.05 * ch.r {
        let omega = [Interval::centered(x0[0], rho), Interval::centered(x0[1], rho)];
        if omega.iter().all(|w| w.subset(&sym(ch.r))) {
            let out = certify(&system, &omega, 30);
            if out.status == KrawczykStatus::UniqueZero {
                let bx = out.certified_box.expect("certified box");
                if !itinerary_holds(sys, &sh, &bx, &words.0, &words.1) {
                    return Err("certified crossing leaves the prescribed boxes".into());
                }
                let z = *sh.forward(bx[0]).points.last().expect("orbit");
                let zs = *sh.backward(bx[1]).points.last().expect("orbit");
                let point = (z[0].intersect(&zs[0]), z[1].intersect(&zs[1]));
                return Ok(Crossing { unknowns: bx, point, forward_steps: n, backward_steps: m });
            }
        }
        rho *= 8.0;
    }
    Err("Krawczyk did not certify the candidate".into())
}

fn disjoint_points(a: &Crossing, b: &Crossing) -> bool {
    !a.point.0.overlaps(&b.point.0) || !a.point.1.overlaps(&b.point.1)
}

/// Quadratic-family count at `b = 0`.
fn degenerate_count(a: Interval) -> CountReport {
    let report = |count, crossings, note: String| CountReport { count, crossings, notes: vec![note] };
    let Ok(root) = (a * 4.0 + 1.0).sqrt() else {
        return report(SpecialCount::Unknown, vec![], "1 + 4a < 0".into());
    };
    let beta = (root + 1.0) * 0.5;
    let d = a - beta;
    if d.hi() < 0.0 {
        return report(SpecialCount::Zero, vec![], format!("a − β = {d} < 0"));
    }
    if d.lo() <= 0.0 {
        return report(SpecialCount::Unknown, vec![], format!("a − β = {d} straddles 0"));
    }
    // y² − (a − β) = 0 on each side.
    let system = FnSystem {
        n: 1,
        g: |x: &[Interval]| vec![x[0].sqr() - d],
        dg: |x: &[Interval]| vec![vec![x[0] * 2.0]],
    };
    let y = d.sqrt().expect("positive");
    let mut crossings = Vec::new();
    for sign in [1.0, -1.0] {
        let guess = sign * y.mid();
        let omega = [Interval::centered(guess, 0.5 * y.mid())];
        let out = certify(&system, &omega, 30);
        if out.status == KrawczykStatus::UniqueZero {
            let bx = out.certified_box.expect("certified box");
            crossings.push(Crossing {
                unknowns: bx.clone(),
                point: (-beta, bx[0]),
                forward_steps: 0,
                backward_steps: 0,
            });
        }
    }
    let count = match crossings.len() {
        2 => SpecialCount::Two,
        1 => SpecialCount::AtLeastOne,
        _ => SpecialCount::Unknown,
    };
    report(count, crossings, format!("a − β = {d}"))
}

/// Enclosures of the two special pieces on a common grid.
pub fn special_enclosures(
    p: &ParamBox,
    sys: &BoxSystem,
    depth: u32,
) -> Result<(Enclosure, Enclosure), CellError> {
    let (ws, wu) = special_words(sys.family);
    let root = real_root(sys)?;
    let s = enclose_manifold_piece_in(p, sys, &ws, &root, depth, crate::cells::DEFAULT_BUDGET)?;
    let u = enclose_manifold_piece_in(p, sys, &wu, &root, depth, crate::cells::DEFAULT_BUDGET)?;
    Ok((s, u))
}

pub fn count_special_intersections(
    p: &ParamBox,
    sys: Option<&BoxSystem>,
    family: Family,
    opts: &CountOptions,
) -> CountReport {
    let unknown = |note: String| CountReport { count: SpecialCount::Unknown, crossings: vec![], notes: vec![note] };
    if !p.is_real() {
        return unknown("parameter is not real".into());
    }
    if p.b.re.is_zero() {
        return match family {
            Family::Plus => degenerate_count(p.a.re),
            Family::Minus => unknown("no degenerate oracle for the minus pieces".into()),
        };
    }
    if p.b.re.contains_zero() {
        return unknown("b straddles 0".into());
    }
    let Some(sys) = sys else {
        return unknown("no box system".into());
    };
    if sys.family != family {
        return unknown("box system belongs to the other family".into());
    }
    let mut notes = Vec::new();
    match special_enclosures(p, sys, opts.depth) {
        Ok((s, u)) => match s.touches(&u) {
            Ok(false) => {
                return CountReport {
                    count: SpecialCount::Zero,
                    crossings: vec![],
                    notes: vec![format!("enclosures separated at depth {} ({} and {} cells)", opts.depth, s.len(), u.len())],
                }
            }
            Ok(true) => notes.push(format!("enclosures touch at depth {}", opts.depth)),
            Err(e) => notes.push(e.to_string()),
        },
        Err(e) => notes.push(format!("enclosure failed: {e}")),
    }
    if family == Family::Minus {
        notes.push("crossing certificates need the inner piece, which is not traced for the minus family".into());
        return CountReport { count: SpecialCount::Unknown, crossings: vec![], notes };
    }
    let Some(real) = Real::new(p) else {
        notes.push("b straddles 0".into());
        return CountReport { count: SpecialCount::Unknown, crossings: vec![], notes };
    };
    let ch = match build_chart(&real, opts) {
        Ok(c) => c,
        Err(e) => {
            notes.push(format!("no saddle chart: {e}"));
            return CountReport { count: SpecialCount::Unknown, crossings: vec![], notes };
        }
    };
    if !inside(sys, 0, ch.region()) {
        notes.push("saddle chart not inside B0".into());
        return CountReport { count: SpecialCount::Unknown, crossings: vec![], notes };
    }
    let words = special_words(family);
    let (a, b) = (p.a.re.mid(), p.b.re.mid());
    let su = trace(a, b, sys, &ch, &words.1, false, opts.samples);
    let ss = trace(a, b, sys, &ch, &words.0, true, opts.samples);
    let candidates = crossings(&su, &ss);
    notes.push(format!("{} candidate crossings", candidates.len()));
    let mut found: Vec<Crossing> = Vec::new();
    for (cu, cs) in candidates {
        let (n, m) = (cu.steps, cs.steps);
        let Some(x0) = newton(a, b, &ch, n, m, [cu.t, cs.t]) else {
            notes.push("Newton diverged on a candidate".into());
            continue;
        };
        match certify_crossing(&real, sys, &ch, &words, n, m, x0) {
            Ok(c) => {
                if found.iter().all(|f| disjoint_points(f, &c)) {
                    found.push(c);
                }
            }
            Err(e) => notes.push(e),
        }
    }
    let count = match found.len() {
        0 => SpecialCount::Unknown,
        1 => SpecialCount::AtLeastOne,
        _ => SpecialCount::Two,
    };
    CountReport { count, crossings: found, notes }
}
