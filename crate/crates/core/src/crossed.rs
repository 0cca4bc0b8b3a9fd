//! Boundary compatibility, derivative nonvanishing and off-criticality checks.
//!
//! All three checks share one driver: a work list of cells, each evaluated
//! with interval arithmetic to `Pass`, `Refine` or a rigorous `Witness` of
//! failure. Cells that cannot be decided are split until a depth cap.

use std::sync::atomic::{AtomicBool, Ordering};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::complex::ComplexRect;
use crate::geometry::{
    Axis, BoundaryPiece, DiskRegion, Membership, ProjectiveBox, ProjectiveCoords,
    DEFAULT_ARC_SEGMENTS,
};
use crate::henon::{henon_derivative, henon_image, henon_inverse_image, ParamBox, PhaseRect};
use crate::interval::Interval;
use crate::params::{BoxSystem, Transition};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CheckStatus {
    Verified,
    Failed,
    Unknown,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionVerdict {
    pub transition: (usize, usize),
    pub status: CheckStatus,
    pub refinement_depth: u32,
    /// Phase enclosure of an offending point when `status` is `Failed`.
    pub witness: Option<PhaseRect>,
    pub diagnostic: Option<String>,
}

impl TransitionVerdict {
    pub fn is_verified(&self) -> bool {
        self.status == CheckStatus::Verified
    }
}

/// How the image of a boundary cell must avoid the target box.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BccMode {
    /// `f(∂^v B_i) ∩ B_j = ∅`: the image leaves `D_u,j` or `D_v,j`.
    Membership,
    /// `π_u∘f(∂^v B_i) ∩ D_u,j = ∅` taken literally.
    Projection,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BccOptions {
    pub mode: BccMode,
    pub arc_segments: usize,
    /// Initial grid `(re, im)` over the transverse disk.
    pub transverse_cells: (usize, usize),
    pub max_depth: u32,
    /// Cap on evaluated cells per transition.
    pub budget: usize,
}

impl Default for BccOptions {
    fn default() -> Self {
        BccOptions {
            mode: BccMode::Membership,
            arc_segments: DEFAULT_ARC_SEGMENTS,
            transverse_cells: (32, 16),
            max_depth: 12,
            budget: 4_000_000,
        }
    }
}

enum Outcome {
    Pass,
    Refine(Option<String>),
    Witness(PhaseRect),
}

struct DriverResult {
    status: CheckStatus,
    depth: u32,
    witness: Option<PhaseRect>,
    diagnostic: Option<String>,
}

/// Depth-first refinement of each initial cell; the first witness stops the
/// remaining work.
fn drive<T: Send + Sync>(
    initial: Vec<T>,
    max_depth: u32,
    budget: usize,
    eval: impl Fn(&T) -> Outcome + Sync,
    split: impl Fn(&T) -> Vec<T> + Sync,
) -> DriverResult {
    let stop = AtomicBool::new(false);
    let per_item = (budget / initial.len().max(1)).max(64);
    let results: Vec<DriverResult> = initial
        .into_par_iter()
        .map(|item| {
            let mut stack = vec![(item, 0u32)];
            let mut depth = 0;
            let mut used = 0usize;
            let mut unknown: Option<String> = None;
            while let Some((it, d)) = stack.pop() {
                if stop.load(Ordering::Relaxed) {
                    break;
                }
                depth = depth.max(d);
                used += 1;
                match eval(&it) {
                    Outcome::Pass => {}
                    Outcome::Witness(w) => {
                        stop.store(true, Ordering::Relaxed);
                        return DriverResult {
                            status: CheckStatus::Failed,
                            depth,
                            witness: Some(w),
                            diagnostic: None,
                        };
                    }
                    Outcome::Refine(msg) => {
                        if d >= max_depth || used >= per_item {
                            let why = msg.unwrap_or_else(|| {
                                if d >= max_depth {
                                    format!("refinement cap {max_depth} reached")
                                } else {
                                    "cell budget exhausted".to_string()
                                }
                            });
                            unknown.get_or_insert(why);
                            continue;
                        }
                        for child in split(&it) {
                            stack.push((child, d + 1));
                        }
                    }
                }
            }
            DriverResult {
                status: if unknown.is_some() {
                    CheckStatus::Unknown
                } else {
                    CheckStatus::Verified
                },
                depth,
                witness: None,
                diagnostic: unknown,
            }
        })
        .collect();
    let depth = results.iter().map(|r| r.depth).max().unwrap_or(0);
    if let Some(f) = results.iter().find(|r| r.status == CheckStatus::Failed) {
        return DriverResult {
            status: CheckStatus::Failed,
            depth,
            witness: f.witness,
            diagnostic: None,
        };
    }
    if let Some(u) = results.iter().find(|r| r.status == CheckStatus::Unknown) {
        return DriverResult {
            status: CheckStatus::Unknown,
            depth,
            witness: None,
            diagnostic: u.diagnostic.clone(),
        };
    }
    DriverResult {
        status: CheckStatus::Verified,
        depth,
        witness: None,
        diagnostic: None,
    }
}

fn split_cell(disk: &DiskRegion, c: &ComplexRect) -> Vec<ComplexRect> {
    let (a, b) = c.bisect();
    [a, b]
        .into_iter()
        .filter(|x| disk.membership(x) != Membership::Outside)
        .collect()
}

#[derive(Clone, Copy)]
struct BoundaryCell {
    piece: BoundaryPiece,
    cell: ComplexRect,
}

/// A boundary piece on one axis crossed with a cell of the other disk.
fn boundary_cells(
    boundary: &DiskRegion,
    transverse: &DiskRegion,
    opts: &BccOptions,
) -> Vec<BoundaryCell> {
    let pieces = boundary.boundary_cover(opts.arc_segments);
    let cells = transverse.cover(opts.transverse_cells.0, opts.transverse_cells.1);
    let mut out = Vec::with_capacity(pieces.len() * cells.len());
    for piece in &pieces {
        for cell in &cells {
            out.push(BoundaryCell {
                piece: *piece,
                cell: *cell,
            });
        }
    }
    out
}

fn split_boundary_cell(
    boundary: &DiskRegion,
    transverse: &DiskRegion,
    c: &BoundaryCell,
) -> Vec<BoundaryCell> {
    if c.piece.rect.diameter() >= c.cell.diameter() {
        boundary
            .refine(&c.piece)
            .into_iter()
            .map(|piece| BoundaryCell { piece, ..*c })
            .collect()
    } else {
        split_cell(transverse, &c.cell)
            .into_iter()
            .map(|cell| BoundaryCell { cell, ..*c })
            .collect()
    }
}

/// Whether `w` provably misses the target under the BCC mode; `axis` names
/// the projection used in `Projection` mode.
fn certainly_misses(target: &ProjectiveBox, w: &PhaseRect, mode: BccMode, axis: Axis) -> bool {
    match mode {
        BccMode::Membership => target.membership(w) == Membership::Outside,
        BccMode::Projection => match target.coords.project(axis, w) {
            Ok(x) => target.disk(axis).membership(&x) == Membership::Outside,
            Err(_) => false,
        },
    }
}

fn certainly_hits(target: &ProjectiveBox, w: &PhaseRect, mode: BccMode, axis: Axis) -> bool {
    match mode {
        BccMode::Membership => target.membership(w) == Membership::Inside,
        BccMode::Projection => match target.coords.project(axis, w) {
            Ok(x) => target.disk(axis).membership(&x) == Membership::Inside,
            Err(_) => false,
        },
    }
}

fn point_param(p: &ParamBox) -> ParamBox {
    ParamBox::new(p.a.mid_rect(), p.b.mid_rect())
}

/// A phase point on the boundary piece with transverse coordinate inside
/// the transverse disk, for the given axis assignment.
fn boundary_sample(
    boxed: &ProjectiveBox,
    boundary_axis: Axis,
    c: &BoundaryCell,
) -> Option<PhaseRect> {
    let (bdisk, tdisk) = match boundary_axis {
        Axis::U => (&boxed.du, &boxed.dv),
        Axis::V => (&boxed.dv, &boxed.du),
    };
    let s = bdisk.piece_sample(&c.piece)?;
    let t = c.cell.mid_rect();
    if tdisk.membership(&t) == Membership::Outside {
        return None;
    }
    // Closed disk membership: the sample may sit on the edge but not outside.
    let (u, v) = match boundary_axis {
        Axis::U => (s, t),
        Axis::V => (t, s),
    };
    boxed.from_uv(&u, &v).ok()
}

/// Boundary compatibility for one transition `(i, j)`.
pub fn check_bcc(p: &ParamBox, sys: &BoxSystem, t: (usize, usize)) -> TransitionVerdict {
    check_bcc_with(p, sys, t, &BccOptions::default())
}

pub fn check_bcc_with(
    p: &ParamBox,
    sys: &BoxSystem,
    t: (usize, usize),
    opts: &BccOptions,
) -> TransitionVerdict {
    let verdict = |r: DriverResult| TransitionVerdict {
        transition: t,
        status: r.status,
        refinement_depth: r.depth,
        witness: r.witness,
        diagnostic: r.diagnostic,
    };
    if sys.transition(t.0, t.1).is_none() {
        return TransitionVerdict {
            transition: t,
            status: CheckStatus::Unknown,
            refinement_depth: 0,
            witness: None,
            diagnostic: Some(format!("{t:?} is not an admissible transition")),
        };
    }
    let bi = &sys.boxes[t.0];
    let bj = &sys.boxes[t.1];
    let p0 = point_param(p);

    // Vertical boundary of B_i forward into B_j.
    let vertical = drive(
        boundary_cells(&bi.du, &bi.dv, opts),
        opts.max_depth,
        opts.budget / 2,
        |c| {
            let z = match bi.from_uv(&c.piece.rect, &c.cell) {
                Ok(z) => z,
                Err(e) => return Outcome::Refine(Some(e.to_string())),
            };
            let w = henon_image(p, &z);
            if certainly_misses(bj, &w, opts.mode, Axis::U) {
                return Outcome::Pass;
            }
            if let Some(z0) = boundary_sample(bi, Axis::U, c) {
                let w0 = henon_image(&p0, &z0);
                if certainly_hits(bj, &w0, opts.mode, Axis::U) {
                    return Outcome::Witness(z0);
                }
            }
            Outcome::Refine(None)
        },
        |c| split_boundary_cell(&bi.du, &bi.dv, c),
    );
    if vertical.status == CheckStatus::Failed {
        return verdict(vertical);
    }

    let horizontal = if p.b_contains_zero() {
        forward_horizontal(p, bi, bj, opts)
    } else {
        drive(
            boundary_cells(&bj.dv, &bj.du, opts),
            opts.max_depth,
            opts.budget / 2,
            |c| {
                let z = match bj.from_uv(&c.cell, &c.piece.rect) {
                    Ok(z) => z,
                    Err(e) => return Outcome::Refine(Some(e.to_string())),
                };
                let w = match henon_inverse_image(p, &z) {
                    Ok(w) => w,
                    Err(e) => return Outcome::Refine(Some(e.to_string())),
                };
                if certainly_misses(bi, &w, opts.mode, Axis::V) {
                    return Outcome::Pass;
                }
                if let Some(z0) = boundary_sample(bj, Axis::V, c) {
                    if let Ok(w0) = henon_inverse_image(&p0, &z0) {
                        if certainly_hits(bi, &w0, opts.mode, Axis::V) {
                            return Outcome::Witness(z0);
                        }
                    }
                }
                Outcome::Refine(None)
            },
            |c| split_boundary_cell(&bj.dv, &bj.du, c),
        )
    };
    let depth = vertical.depth.max(horizontal.depth);
    let merged = match (vertical.status, horizontal.status) {
        (_, CheckStatus::Failed) => horizontal,
        (CheckStatus::Verified, CheckStatus::Verified) => horizontal,
        (CheckStatus::Unknown, _) => vertical,
        _ => horizontal,
    };
    verdict(DriverResult { depth, ..merged })
}

/// `f(B_i) ∩ ∂^h B_j = ∅`, usable when `0 ∈ b`.
fn forward_horizontal(
    p: &ParamBox,
    bi: &ProjectiveBox,
    bj: &ProjectiveBox,
    opts: &BccOptions,
) -> DriverResult {
    let (nr, ni) = opts.transverse_cells;
    let ucells = bi.du.cover(nr, ni);
    let vcells = bi.dv.cover(nr, ni);
    let mut initial = Vec::with_capacity(ucells.len() * vcells.len());
    for u in &ucells {
        for v in &vcells {
            initial.push((*u, *v));
        }
    }
    drive(
        initial,
        opts.max_depth,
        opts.budget / 2,
        |&(u, v)| {
            let z = match bi.from_uv(&u, &v) {
                Ok(z) => z,
                Err(e) => return Outcome::Refine(Some(e.to_string())),
            };
            let w = henon_image(p, &z);
            let (wu, wv) = match bj.project(&w) {
                Ok(x) => x,
                Err(e) => return Outcome::Refine(Some(e.to_string())),
            };
            if bj.du.membership(&wu) == Membership::Outside
                || bj.dv.membership(&wv) != Membership::Boundary
            {
                Outcome::Pass
            } else {
                Outcome::Refine(None)
            }
        },
        |&(u, v)| {
            if u.diameter() >= v.diameter() {
                split_cell(&bi.du, &u).into_iter().map(|u| (u, v)).collect()
            } else {
                split_cell(&bi.dv, &v).into_iter().map(|v| (u, v)).collect()
            }
        },
    )
}

/// BCC for every admissible transition of the system.
pub fn check_cmc_family(p: &ParamBox, sys: &BoxSystem) -> Vec<TransitionVerdict> {
    check_cmc_family_with(p, sys, &BccOptions::default())
}

pub fn check_cmc_family_with(
    p: &ParamBox,
    sys: &BoxSystem,
    opts: &BccOptions,
) -> Vec<TransitionVerdict> {
    sys.transitions
        .iter()
        .map(|t: &Transition| check_bcc_with(p, sys, (t.from, t.to), opts))
        .collect()
}

pub fn family_status(verdicts: &[TransitionVerdict]) -> CheckStatus {
    if verdicts.iter().any(|v| v.status == CheckStatus::Failed) {
        CheckStatus::Failed
    } else if verdicts.iter().all(|v| v.is_verified()) {
        CheckStatus::Verified
    } else {
        CheckStatus::Unknown
    }
}

/// A region `f^m(z)` is required to stay in.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Constraint {
    /// No restriction at this step.
    Free,
    Box(ProjectiveBox),
    /// `π_axis(z) ∈ disk` in the given coordinates.
    Disk {
        coords: ProjectiveCoords,
        axis: Axis,
        disk: DiskRegion,
    },
}

impl Constraint {
    fn membership(&self, z: &PhaseRect) -> Membership {
        match self {
            Constraint::Free => Membership::Inside,
            Constraint::Box(b) => b.membership(z),
            Constraint::Disk { coords, axis, disk } => match coords.project(*axis, z) {
                Ok(x) => disk.membership(&x),
                Err(_) => Membership::Boundary,
            },
        }
    }
}

/// `u ↦ π_target ∘ f^k ∘ ι(u, v₀)` over `u ∈ u_disk`, `v₀ ∈ v0_disk`, with
/// `f^m(z)` constrained by `chain[m − 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompositeCheckSpec {
    pub k: usize,
    pub start: ProjectiveCoords,
    pub u_disk: DiskRegion,
    pub v0_disk: DiskRegion,
    pub chain: Vec<Constraint>,
    pub target: ProjectiveCoords,
    pub target_axis: Axis,
    pub grid: (usize, usize),
    pub max_depth: u32,
}

impl CompositeCheckSpec {
    pub fn new(
        k: usize,
        start: ProjectiveCoords,
        u_disk: DiskRegion,
        v0_disk: DiskRegion,
        chain: Vec<Constraint>,
        target: ProjectiveCoords,
        target_axis: Axis,
    ) -> Result<Self, String> {
        if !(2..=4).contains(&k) {
            return Err(format!("iterate count {k} not in 2..=4"));
        }
        if chain.len() != k {
            return Err(format!("chain has {} constraints, need {k}", chain.len()));
        }
        Ok(CompositeCheckSpec {
            k,
            start,
            u_disk,
            v0_disk,
            chain,
            target,
            target_axis,
            grid: (32, 8),
            max_depth: 12,
        })
    }
}

/// `∂ι/∂u` from the inverse of the projection Jacobian.
fn d_iota_du(coords: &ProjectiveCoords, z: &PhaseRect) -> Option<(ComplexRect, ComplexRect)> {
    let g = coords.projection_gradients(z).ok()?;
    let det = g[0][0] * g[1][1] - g[0][1] * g[1][0];
    let inv = det.recip().ok()?;
    Some((g[1][1] * inv, -(g[1][0] * inv)))
}

/// Outcome of pushing a cell through the composite map.
pub enum CompositeEval {
    /// Some iterate provably leaves its constraint.
    Exits,
    /// Image and `u`-derivative enclosures; `inside` when every constraint
    /// provably holds.
    Value {
        image: PhaseRect,
        projected: ComplexRect,
        derivative: ComplexRect,
        inside: bool,
    },
    Undefined(String),
}

fn projection_derivative(
    coords: &ProjectiveCoords,
    axis: Axis,
    z: &PhaseRect,
    t: (ComplexRect, ComplexRect),
) -> Result<ComplexRect, String> {
    let g = coords.projection_gradients(z).map_err(|e| e.to_string())?;
    let row = match axis {
        Axis::U => g[0],
        Axis::V => g[1],
    };
    Ok(row[0] * t.0 + row[1] * t.1)
}

pub fn composite_eval(
    p: &ParamBox,
    spec: &CompositeCheckSpec,
    u: &ComplexRect,
    v0: &ComplexRect,
) -> CompositeEval {
    let mut z = match spec.start.from_uv(u, v0) {
        Ok(z) => z,
        Err(e) => return CompositeEval::Undefined(e.to_string()),
    };
    let Some(mut t) = d_iota_du(&spec.start, &z) else {
        return CompositeEval::Undefined("singular coordinate change".into());
    };
    let mut inside = true;
    for c in &spec.chain {
        let j = henon_derivative(p, &z);
        t = (
            j.entry(0, 0) * t.0 + j.entry(0, 1) * t.1,
            j.entry(1, 0) * t.0 + j.entry(1, 1) * t.1,
        );
        z = henon_image(p, &z);
        match c.membership(&z) {
            Membership::Outside => return CompositeEval::Exits,
            Membership::Boundary => inside = false,
            Membership::Inside => {}
        }
    }
    let projected = match spec.target.project(spec.target_axis, &z) {
        Ok(x) => x,
        Err(e) => return CompositeEval::Undefined(e.to_string()),
    };
    match projection_derivative(&spec.target, spec.target_axis, &z, t) {
        Ok(derivative) => CompositeEval::Value {
            image: z,
            projected,
            derivative,
            inside,
        },
        Err(e) => CompositeEval::Undefined(e),
    }
}

fn domain_cells(
    u_disk: &DiskRegion,
    v0_disk: &DiskRegion,
    grid: (usize, usize),
) -> Vec<(ComplexRect, ComplexRect)> {
    let us = u_disk.cover(grid.0, grid.1);
    let vs = if v0_disk.bounding_rect().diameter() == 0.0 {
        vec![v0_disk.bounding_rect()]
    } else {
        v0_disk.cover(grid.1.max(1), grid.1.max(1))
    };
    let mut out = Vec::with_capacity(us.len() * vs.len());
    for u in &us {
        for v in &vs {
            out.push((*u, *v));
        }
    }
    out
}

fn split_domain(
    u_disk: &DiskRegion,
    v0_disk: &DiskRegion,
    c: &(ComplexRect, ComplexRect),
) -> Vec<(ComplexRect, ComplexRect)> {
    let (u, v) = *c;
    if u.diameter() >= v.diameter() {
        split_cell(u_disk, &u).into_iter().map(|u| (u, v)).collect()
    } else {
        split_cell(v0_disk, &v).into_iter().map(|v| (u, v)).collect()
    }
}

fn point_in(disk: &DiskRegion, c: &ComplexRect) -> Option<ComplexRect> {
    let m = c.mid_rect();
    (disk.membership(&m) == Membership::Inside).then_some(m)
}

/// A real segment around the cell on which the `u`-derivative has opposite
/// signs at the two ends, so it vanishes somewhere on it. Needs real
/// parameters and coordinates, where the composite is a real function.
fn real_sign_change(
    p: &ParamBox,
    spec: &CompositeCheckSpec,
    u: &ComplexRect,
    v: &ComplexRect,
) -> Option<(PhaseRect, ComplexRect)> {
    if !p.is_real() || !u.im.contains_zero() || !v.im.contains_zero() {
        return None;
    }
    // Widened so a zero on a cell edge is still strictly inside.
    let w = 0.5 * u.re.width();
    let lo = (u.re.lo() - w).max(spec.u_disk.real_lo());
    let hi = (u.re.hi() + w).min(spec.u_disk.real_hi());
    if !(lo < hi) {
        return None;
    }
    let v0 = ComplexRect::point(v.re.mid(), 0.0);
    if spec.v0_disk.membership(&v0) == Membership::Outside {
        return None;
    }
    let d_at = |x: f64| match composite_eval(p, spec, &ComplexRect::point(x, 0.0), &v0) {
        CompositeEval::Value { derivative, .. } => Some(derivative.re),
        _ => None,
    };
    let (dl, dh) = (d_at(lo)?, d_at(hi)?);
    if !((dl.hi() < 0.0 && dh.lo() > 0.0) || (dl.lo() > 0.0 && dh.hi() < 0.0)) {
        return None;
    }
    let seg = ComplexRect::new(Interval::new(lo, hi), Interval::point(0.0));
    match composite_eval(p, spec, &seg, &v0) {
        CompositeEval::Value { inside: true, projected, .. } => Some((spec.start.from_uv(&seg, &v0).ok()?, projected)),
        _ => None,
    }
}

/// Numerical Checks C, D, E, E′: the `u`-derivative of the composite never
/// vanishes on the constrained set.
pub fn check_derivative_nonvanishing(
    p: &ParamBox,
    spec: &CompositeCheckSpec,
) -> TransitionVerdict {
    let p0 = point_param(p);
    let r = drive(
        domain_cells(&spec.u_disk, &spec.v0_disk, spec.grid),
        spec.max_depth,
        2_000_000,
        |&(u, v)| match composite_eval(p, spec, &u, &v) {
            CompositeEval::Exits => Outcome::Pass,
            CompositeEval::Undefined(e) => Outcome::Refine(Some(e)),
            CompositeEval::Value { derivative, .. } => {
                if !(derivative.re.contains_zero() && derivative.im.contains_zero()) {
                    return Outcome::Pass;
                }
                if let Some((z, _)) = real_sign_change(p, spec, &u, &v) {
                    return Outcome::Witness(z);
                }
                if let (Some(u0), Some(v0)) = (point_in(&spec.u_disk, &u), point_in(&spec.v0_disk, &v)) {
                    if let CompositeEval::Value {
                        derivative,
                        inside: true,
                        ..
                    } = composite_eval(&p0, spec, &u0, &v0)
                    {
                        if derivative.re.is_zero() && derivative.im.is_zero() {
                            if let Ok(z0) = spec.start.from_uv(&u0, &v0) {
                                return Outcome::Witness(z0);
                            }
                        }
                    }
                }
                Outcome::Refine(None)
            }
        },
        |c| split_domain(&spec.u_disk, &spec.v0_disk, c),
    );
    TransitionVerdict {
        transition: (0, 0),
        status: r.status,
        refinement_depth: r.depth,
        witness: r.witness,
        diagnostic: r.diagnostic,
    }
}

/// Verified when any of the alternatives verifies (Check D's disjunction).
pub fn check_any(p: &ParamBox, specs: &[CompositeCheckSpec]) -> TransitionVerdict {
    let mut last = None;
    for s in specs {
        let v = check_derivative_nonvanishing(p, s);
        if v.is_verified() {
            return v;
        }
        last = Some(v);
    }
    last.unwrap_or(TransitionVerdict {
        transition: (0, 0),
        status: CheckStatus::Unknown,
        refinement_depth: 0,
        witness: None,
        diagnostic: Some("no alternatives given".into()),
    })
}

/// Off-criticality for transition `(i, j)`: where `σ_{v₀} = π_u,j ∘ f ∘ ι_{v₀}`
/// may have a critical point, its value must leave `D_u,j`.
pub fn check_occ(p: &ParamBox, sys: &BoxSystem, t: (usize, usize)) -> TransitionVerdict {
    check_occ_with(p, sys, t, (16, 8), 12)
}

pub fn check_occ_with(
    p: &ParamBox,
    sys: &BoxSystem,
    t: (usize, usize),
    grid: (usize, usize),
    max_depth: u32,
) -> TransitionVerdict {
    let bi = sys.boxes[t.0];
    let bj = sys.boxes[t.1];
    let spec = OccSpec {
        start: bi.coords,
        u_disk: bi.du,
        v0_disk: bi.dv,
        target: bj.coords,
        target_disk: bj.du,
    };
    let mut v = check_occ_spec(p, &spec, grid, max_depth);
    v.transition = t;
    v
}

/// Fiberwise off-criticality data, decoupled from a box system for testing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OccSpec {
    pub start: ProjectiveCoords,
    pub u_disk: DiskRegion,
    pub v0_disk: DiskRegion,
    pub target: ProjectiveCoords,
    pub target_disk: DiskRegion,
}

pub fn check_occ_spec(
    p: &ParamBox,
    occ: &OccSpec,
    grid: (usize, usize),
    max_depth: u32,
) -> TransitionVerdict {
    let spec = CompositeCheckSpec {
        k: 1,
        start: occ.start,
        u_disk: occ.u_disk,
        v0_disk: occ.v0_disk,
        chain: vec![Constraint::Free],
        target: occ.target,
        target_axis: Axis::U,
        grid,
        max_depth,
    };
    let p0 = point_param(p);
    let r = drive(
        domain_cells(&occ.u_disk, &occ.v0_disk, grid),
        max_depth,
        2_000_000,
        |&(u, v)| match composite_eval(p, &spec, &u, &v) {
            CompositeEval::Exits => Outcome::Pass,
            CompositeEval::Undefined(e) => Outcome::Refine(Some(e)),
            CompositeEval::Value {
                projected,
                derivative,
                ..
            } => {
                if !(derivative.re.contains_zero() && derivative.im.contains_zero()) {
                    return Outcome::Pass;
                }
                if occ.target_disk.membership(&projected) == Membership::Outside {
                    return Outcome::Pass;
                }
                if let Some((z, value)) = real_sign_change(p, &spec, &u, &v) {
                    if occ.target_disk.membership(&value) == Membership::Inside {
                        return Outcome::Witness(z);
                    }
                }
                if let (Some(u0), Some(v0)) = (point_in(&occ.u_disk, &u), point_in(&occ.v0_disk, &v)) {
                    if let CompositeEval::Value {
                        projected,
                        derivative,
                        ..
                    } = composite_eval(&p0, &spec, &u0, &v0)
                    {
                        if derivative.re.is_zero()
                            && derivative.im.is_zero()
                            && occ.target_disk.membership(&projected) == Membership::Inside
                        {
                            if let Ok(z0) = spec.start.from_uv(&u0, &v0) {
                                return Outcome::Witness(z0);
                            }
                        }
                    }
                }
                Outcome::Refine(None)
            }
        },
        |c| split_domain(&occ.u_disk, &occ.v0_disk, c),
    );
    TransitionVerdict {
        transition: (0, 0),
        status: r.status,
        refinement_depth: r.depth,
        witness: r.witness,
        diagnostic: r.diagnostic,
    }
}
