//! Interval Krawczyk operator and certified periodic orbits.

use num_complex::Complex64;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::complex::ComplexRect;
use crate::henon::{ParamBox, PhaseRect};
use crate::interval::Interval;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum KrawczykError {
    #[error("dimension mismatch: {0}")]
    ContractError(String),
}

/// `g: Rⁿ → Rⁿ` with interval evaluation and Jacobian enclosures.
pub trait ZeroSystem: Sync {
    fn dim(&self) -> usize;
    fn eval(&self, x: &[Interval]) -> Vec<Interval>;
    fn jacobian(&self, x: &[Interval]) -> Vec<Vec<Interval>>;
}

/// A system given by closures.
pub struct FnSystem<G, J> {
    pub n: usize,
    pub g: G,
    pub dg: J,
}

impl<G, J> ZeroSystem for FnSystem<G, J>
where
    G: Fn(&[Interval]) -> Vec<Interval> + Sync,
    J: Fn(&[Interval]) -> Vec<Vec<Interval>> + Sync,
{
    fn dim(&self) -> usize {
        self.n
    }
    fn eval(&self, x: &[Interval]) -> Vec<Interval> {
        (self.g)(x)
    }
    fn jacobian(&self, x: &[Interval]) -> Vec<Vec<Interval>> {
        (self.dg)(x)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum KrawczykStatus {
    UniqueZero,
    NoZero,
    Unknown,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KrawczykOutcome {
    pub status: KrawczykStatus,
    pub certified_box: Option<Vec<Interval>>,
    pub iterations: usize,
    pub diagnostic: Option<String>,
}

/// `K(Ω) = x₀ − A·g(x₀) + (I − A·Dg(Ω))(Ω − x₀)`.
pub fn krawczyk(
    g: &dyn ZeroSystem,
    omega: &[Interval],
    x0: &[f64],
    a: &[Vec<f64>],
) -> Result<Vec<Interval>, KrawczykError> {
    let n = g.dim();
    if omega.len() != n || x0.len() != n || a.len() != n || a.iter().any(|r| r.len() != n) {
        return Err(KrawczykError::ContractError(format!(
            "system has dimension {n}, got |Ω| = {}, |x0| = {}, A {}×{}",
            omega.len(),
            x0.len(),
            a.len(),
            a.first().map_or(0, Vec::len)
        )));
    }
    let x0i: Vec<Interval> = x0.iter().map(|&v| Interval::point(v)).collect();
    let gx0 = g.eval(&x0i);
    let dg = g.jacobian(omega);
    if gx0.len() != n || dg.len() != n {
        return Err(KrawczykError::ContractError("system returned wrong sizes".into()));
    }
    let delta: Vec<Interval> = omega.iter().zip(x0).map(|(w, &c)| *w - c).collect();
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut agx = Interval::ZERO;
        for k in 0..n {
            agx += gx0[k] * a[i][k];
        }
        let mut acc = x0i[i] - agx;
        for j in 0..n {
            let mut c = if i == j { Interval::ONE } else { Interval::ZERO };
            for k in 0..n {
                c = c - dg[k][j] * a[i][k];
            }
            acc += c * delta[j];
        }
        out.push(acc);
    }
    Ok(out)
}

/// LU with partial pivoting; returns the inverse or `None` when singular.
pub fn invert(m: &[Vec<f64>]) -> Option<Vec<Vec<f64>>> {
    let n = m.len();
    let mut a: Vec<Vec<f64>> = m.to_vec();
    let mut inv: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    let scale = m
        .iter()
        .flat_map(|r| r.iter())
        .fold(0.0f64, |s, v| s.max(v.abs()));
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if !(a[piv][col].abs() > 1e-14 * scale) {
            return None;
        }
        a.swap(col, piv);
        inv.swap(col, piv);
        let d = a[col][col];
        for j in 0..n {
            a[col][j] /= d;
            inv[col][j] /= d;
        }
        for i in 0..n {
            if i != col && a[i][col] != 0.0 {
                let f = a[i][col];
                for j in 0..n {
                    a[i][j] -= f * a[col][j];
                    inv[i][j] -= f * inv[col][j];
                }
            }
        }
    }
    Some(inv)
}

fn mid_matrix(m: &[Vec<Interval>]) -> Vec<Vec<f64>> {
    m.iter().map(|r| r.iter().map(|v| v.mid()).collect()).collect()
}

fn box_width(b: &[Interval]) -> f64 {
    b.iter().map(|v| v.width()).fold(0.0, f64::max)
}

/// Krawczyk iteration `Ω ← K(Ω) ∩ Ω`; once interior inclusion holds the box
/// keeps contracting while it shrinks and `max_iter` allows.
pub fn certify(g: &dyn ZeroSystem, omega: &[Interval], max_iter: usize) -> KrawczykOutcome {
    let outcome = |status, certified_box, iterations, diagnostic: Option<String>| KrawczykOutcome {
        status,
        certified_box,
        iterations,
        diagnostic,
    };
    let mut omega = omega.to_vec();
    let mut certified: Option<Vec<Interval>> = None;
    let mut iterations = 0;
    while iterations < max_iter {
        let gw = g.eval(&omega);
        if gw.iter().any(|v| !v.contains_zero()) {
            // All zeros in the original box lie in the current one.
            return match certified {
                Some(_) => outcome(
                    KrawczykStatus::Unknown,
                    None,
                    iterations,
                    Some("zero lost after inclusion; enclosures inconsistent".into()),
                ),
                None => outcome(KrawczykStatus::NoZero, None, iterations, None),
            };
        }
        let x0: Vec<f64> = omega.iter().map(|v| v.mid()).collect();
        let Some(a) = invert(&mid_matrix(&g.jacobian(&omega))) else {
            return match certified {
                Some(b) => outcome(KrawczykStatus::UniqueZero, Some(b), iterations, None),
                None => outcome(
                    KrawczykStatus::Unknown,
                    None,
                    iterations,
                    Some("midpoint Jacobian is numerically singular".into()),
                ),
            };
        };
        let k = match krawczyk(g, &omega, &x0, &a) {
            Ok(k) => k,
            Err(e) => return outcome(KrawczykStatus::Unknown, None, iterations, Some(e.to_string())),
        };
        iterations += 1;
        let inside = k.iter().zip(&omega).all(|(kv, w)| kv.interior_subset(w));
        let next: Vec<Interval> = k.iter().zip(&omega).map(|(kv, w)| kv.intersect(w)).collect();
        if next.iter().any(|v| v.is_empty()) {
            return match certified {
                Some(b) => outcome(KrawczykStatus::UniqueZero, Some(b), iterations, None),
                None => outcome(KrawczykStatus::NoZero, None, iterations, None),
            };
        }
        if inside || certified.is_some() {
            let improved = certified
                .as_ref()
                .is_none_or(|c| box_width(&next) < 0.5 * box_width(c));
            if !improved {
                let best = certified.take().unwrap();
                let best = if box_width(&next) < box_width(&best) { next } else { best };
                return outcome(KrawczykStatus::UniqueZero, Some(best), iterations, None);
            }
            certified = Some(next.clone());
        }
        omega = next;
    }
    match certified {
        Some(b) => outcome(KrawczykStatus::UniqueZero, Some(b), iterations, None),
        None => outcome(
            KrawczykStatus::Unknown,
            None,
            iterations,
            Some("no interior inclusion within the iteration cap".into()),
        ),
    }
}

/// `p_{m+1} − f(p_m) = 0` cyclically, split into `4k` real unknowns ordered
/// `(Re x, Im x, Re y, Im y)` per orbit point.
pub struct PeriodicSystem {
    pub p: ParamBox,
    pub k: usize,
}

pub fn periodic_orbit_system(p: ParamBox, k: usize) -> PeriodicSystem {
    assert!(k >= 1, "period must be at least 1");
    PeriodicSystem { p, k }
}

fn point_of(x: &[Interval], m: usize) -> (ComplexRect, ComplexRect) {
    (
        ComplexRect::new(x[4 * m], x[4 * m + 1]),
        ComplexRect::new(x[4 * m + 2], x[4 * m + 3]),
    )
}

impl ZeroSystem for PeriodicSystem {
    fn dim(&self) -> usize {
        4 * self.k
    }

    fn eval(&self, x: &[Interval]) -> Vec<Interval> {
        let mut out = Vec::with_capacity(4 * self.k);
        for m in 0..self.k {
            let (xm, ym) = point_of(x, m);
            let (xn, yn) = point_of(x, (m + 1) % self.k);
            let fx = xm.sqr() - self.p.a - self.p.b * ym;
            let ex = xn - fx;
            let ey = yn - xm;
            out.extend([ex.re, ex.im, ey.re, ey.im]);
        }
        out
    }

    fn jacobian(&self, x: &[Interval]) -> Vec<Vec<Interval>> {
        let n = 4 * self.k;
        let mut jac = vec![vec![Interval::ZERO; n]; n];
        // Real 2×2 block of multiplication by the complex number c.
        let put = |jac: &mut Vec<Vec<Interval>>, r: usize, c: usize, z: ComplexRect| {
            jac[r][c] = z.re;
            jac[r][c + 1] = -z.im;
            jac[r + 1][c] = z.im;
            jac[r + 1][c + 1] = z.re;
        };
        for m in 0..self.k {
            let (xm, _) = point_of(x, m);
            let next = (m + 1) % self.k;
            let row = 4 * m;
            // ∂(x_{m+1} − x_m² + a + b·y_m)
            put(&mut jac, row, 4 * m, -xm.scale_f64(2.0));
            put(&mut jac, row, 4 * m + 2, self.p.b);
            // ∂(y_{m+1} − x_m)
            put(&mut jac, row + 2, 4 * m, -ComplexRect::ONE);
            if next == m {
                let add = |jac: &mut Vec<Vec<Interval>>, r: usize, c: usize| {
                    jac[r][c] = jac[r][c] + 1.0;
                    jac[r + 1][c + 1] = jac[r + 1][c + 1] + 1.0;
                };
                add(&mut jac, row, 4 * next);
                add(&mut jac, row + 2, 4 * next + 2);
            } else {
                put(&mut jac, row, 4 * next, ComplexRect::ONE);
                put(&mut jac, row + 2, 4 * next + 2, ComplexRect::ONE);
            }
        }
        jac
    }
}

pub type Orbit = Vec<(Complex64, Complex64)>;

fn henon_c(a: Complex64, b: Complex64, (x, y): (Complex64, Complex64)) -> (Complex64, Complex64) {
    (x * x - a - b * y, x)
}

fn orbit_residual(a: Complex64, b: Complex64, orbit: &Orbit) -> f64 {
    let k = orbit.len();
    (0..k)
        .map(|m| {
            let (fx, fy) = henon_c(a, b, orbit[m]);
            let (nx, ny) = orbit[(m + 1) % k];
            (nx - fx).norm().max((ny - fy).norm())
        })
        .fold(0.0, f64::max)
}

/// One damped Newton solve of `f^k(z) = z` in `C²`.
fn newton_periodic(
    a: Complex64,
    b: Complex64,
    k: usize,
    mut z: (Complex64, Complex64),
) -> Option<(Complex64, Complex64)> {
    let resid = |z: (Complex64, Complex64)| -> Option<((Complex64, Complex64), [[Complex64; 2]; 2])> {
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::new(0.0, 0.0);
        let mut w = z;
        let mut j = [[one, zero], [zero, one]];
        for _ in 0..k {
            let d = [[w.0 * 2.0, -b], [one, zero]];
            j = [
                [
                    d[0][0] * j[0][0] + d[0][1] * j[1][0],
                    d[0][0] * j[0][1] + d[0][1] * j[1][1],
                ],
                [
                    d[1][0] * j[0][0] + d[1][1] * j[1][0],
                    d[1][0] * j[0][1] + d[1][1] * j[1][1],
                ],
            ];
            w = henon_c(a, b, w);
            if !(w.0.norm() < 1e8 && w.1.norm() < 1e8) {
                return None;
            }
        }
        Some(((w.0 - z.0, w.1 - z.1), j))
    };
    let norm = |r: (Complex64, Complex64)| r.0.norm().max(r.1.norm());
    for _ in 0..100 {
        let (r, mut j) = resid(z)?;
        let rn = norm(r);
        if rn < 1e-13 * (1.0 + norm(z)) {
            return Some(z);
        }
        j[0][0] -= 1.0;
        j[1][1] -= 1.0;
        let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
        if det.norm() < 1e-300 {
            return None;
        }
        let dx = (j[1][1] * r.0 - j[0][1] * r.1) / det;
        let dy = (j[0][0] * r.1 - j[1][0] * r.0) / det;
        let mut t = 1.0;
        loop {
            let cand = (z.0 - dx * t, z.1 - dy * t);
            if let Some((rc, _)) = resid(cand) {
                if norm(rc) < rn || t < 1e-3 {
                    z = cand;
                    break;
                }
            }
            t *= 0.5;
            if t < 1e-3 {
                return None;
            }
        }
    }
    let (r, _) = resid(z)?;
    (norm(r) < 1e-9 * (1.0 + norm(z))).then_some(z)
}

fn minimal_period(orbit: &Orbit, tol: f64) -> usize {
    let k = orbit.len();
    let close = |p: (Complex64, Complex64), q: (Complex64, Complex64)| {
        (p.0 - q.0).norm() < tol && (p.1 - q.1).norm() < tol
    };
    (1..=k)
        .find(|&d| k % d == 0 && close(orbit[0], orbit[d % k]))
        .unwrap_or(k)
}

fn same_orbit(p: &Orbit, q: &Orbit, tol: f64) -> bool {
    let k = p.len();
    let close = |u: (Complex64, Complex64), v: (Complex64, Complex64)| {
        (u.0 - v.0).norm() < tol && (u.1 - v.1).norm() < tol
    };
    let conj = |u: (Complex64, Complex64)| (u.0.conj(), u.1.conj());
    (0..k).any(|s| {
        (0..k).all(|m| close(p[m], q[(m + s) % k])) || (0..k).all(|m| close(p[m], conj(q[(m + s) % k])))
    })
}

/// Orbits of minimal period `k`, found by damped Newton from `seeds` random
/// starting points in `|Re| ≤ 3`, `|Im| ≤ 2`, up to shift and conjugation.
pub fn find_candidate(a: Complex64, b: Complex64, k: usize, seeds: usize, rng_seed: u64) -> Vec<Orbit> {
    let mut rng = StdRng::seed_from_u64(rng_seed);
    let mut found: Vec<Orbit> = Vec::new();
    for _ in 0..seeds {
        let mut c = || Complex64::new(rng.random_range(-3.0..3.0), rng.random_range(-2.0..2.0));
        let z0 = (c(), c());
        let Some(z) = newton_periodic(a, b, k, z0) else {
            continue;
        };
        let mut orbit = vec![z];
        for _ in 1..k {
            let last = *orbit.last().unwrap();
            orbit.push(henon_c(a, b, last));
        }
        let res = orbit_residual(a, b, &orbit);
        if !(res < 1e-10) || minimal_period(&orbit, 1e-7) != k {
            continue;
        }
        if !found.iter().any(|o| same_orbit(o, &orbit, 1e-7)) {
            found.push(orbit);
        }
    }
    found
}

/// Result of certifying a periodic orbit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodicCertificate {
    pub outcome: KrawczykOutcome,
    /// `Some(true)`: every orbit point has a certainly non-real coordinate.
    /// `Some(false)`: the orbit is certainly real. `None`: undecided.
    pub nonreal: Option<bool>,
    /// Orbit point boxes are pairwise disjoint.
    pub primitive: bool,
    pub orbit: Vec<PhaseRect>,
}

impl PeriodicCertificate {
    pub fn is_nonreal_primitive(&self) -> bool {
        self.outcome.status == KrawczykStatus::UniqueZero && self.nonreal == Some(true) && self.primitive
    }
}

fn orbit_boxes(b: &[Interval]) -> Vec<PhaseRect> {
    (0..b.len() / 4)
        .map(|m| {
            let (x, y) = point_of(b, m);
            PhaseRect::new(x, y)
        })
        .collect()
}

/// Epsilon-inflation around `candidate` followed by Krawczyk certification.
///
/// The radius starts at `1e−6` relative and is doubled on failure, or grown
/// to the extent of `K(Ω)` when the parameter width dominates, at most 8 times.
pub fn certify_nonreal_periodic(p: &ParamBox, k: usize, candidate: &Orbit) -> PeriodicCertificate {
    assert_eq!(candidate.len(), k, "candidate length must equal the period");
    let sys = periodic_orbit_system(*p, k);
    let real_param = p.is_real();
    let mut center: Vec<f64> = Vec::with_capacity(4 * k);
    for (x, y) in candidate {
        center.extend([x.re, x.im, y.re, y.im]);
    }
    let near_real = center.iter().skip(1).step_by(2).all(|v| v.abs() < 1e-9);
    if real_param && near_real {
        // A conjugation-symmetric box makes a unique zero real.
        for v in center.iter_mut().skip(1).step_by(2) {
            *v = 0.0;
        }
    }
    let scale = center.iter().fold(1.0f64, |s, v| s.max(v.abs()));
    let mut radius = vec![1e-6 * scale; 4 * k];
    for _ in 0..=8 {
        let omega: Vec<Interval> = center
            .iter()
            .zip(&radius)
            .map(|(&c, &r)| Interval::centered(c, r))
            .collect();
        let a = match invert(&mid_matrix(&sys.jacobian(&omega))) {
            Some(a) => a,
            None => break,
        };
        let kk = krawczyk(&sys, &omega, &center, &a).expect("dimensions match");
        let inside = kk.iter().zip(&omega).all(|(kv, w)| kv.interior_subset(w));
        if inside {
            let symmetric = real_param
                && near_real
                && omega.iter().skip(1).step_by(2).all(|w| w.lo() == -w.hi());
            let mut outcome = certify(&sys, &kk, 50);
            if outcome.status != KrawczykStatus::UniqueZero {
                outcome = KrawczykOutcome {
                    status: KrawczykStatus::UniqueZero,
                    certified_box: Some(kk.clone()),
                    iterations: 1,
                    diagnostic: None,
                };
            }
            let cert = outcome.certified_box.clone().unwrap();
            let orbit = orbit_boxes(&cert);
            let all_nonreal = orbit
                .iter()
                .all(|z| !z.x.im.contains_zero() || !z.y.im.contains_zero());
            let nonreal = if all_nonreal {
                Some(true)
            } else if symmetric {
                Some(false)
            } else {
                None
            };
            let primitive = (0..orbit.len())
                .all(|i| (i + 1..orbit.len()).all(|j| !orbit[i].overlaps(&orbit[j])));
            return PeriodicCertificate {
                outcome,
                nonreal,
                primitive,
                orbit,
            };
        }
        for ((r, kv), &c) in radius.iter_mut().zip(&kk).zip(&center) {
            let reach = (kv.hi() - c).abs().max((c - kv.lo()).abs());
            *r = (2.0 * *r).max(if reach.is_finite() { 1.1 * reach } else { 2.0 * *r });
        }
    }
    PeriodicCertificate {
        outcome: KrawczykOutcome {
            status: KrawczykStatus::Unknown,
            certified_box: None,
            iterations: 9,
            diagnostic: Some("no interior inclusion after 8 inflations".into()),
        },
        nonreal: None,
        primitive: false,
        orbit: Vec::new(),
    }
}

/// Non-rigorous Newton polish of an orbit for the point parameter `(a, b)`,
/// starting from given phase points.
pub fn polish_orbit(a: Complex64, b: Complex64, start: &Orbit) -> Option<Orbit> {
    let k = start.len();
    let z = newton_periodic(a, b, k, start[0])?;
    let mut orbit = vec![z];
    for _ in 1..k {
        let last = *orbit.last().unwrap();
        orbit.push(henon_c(a, b, last));
    }
    Some(orbit)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn invert_small() {
        let inv = invert(&[vec![2.0, 1.0], vec![1.0, 1.0]]).unwrap();
        assert!((inv[0][0] - 1.0).abs() < 1e-15 && (inv[0][1] + 1.0).abs() < 1e-15);
        assert!(invert(&[vec![1.0, 2.0], vec![2.0, 4.0]]).is_none());
    }

    #[test]
    fn contract_error_on_mismatch() {
        let g = FnSystem {
            n: 2,
            g: |x: &[Interval]| x.to_vec(),
            dg: |_: &[Interval]| vec![vec![Interval::ONE, Interval::ZERO], vec![Interval::ZERO, Interval::ONE]],
        };
        let r = krawczyk(&g, &[Interval::ONE], &[1.0], &[vec![1.0]]);
        assert!(matches!(r, Err(KrawczykError::ContractError(_))));
    }
}
