use henon_core::geometry::{
    build_box, quad_to_coords, BoxShape, DiskRegion, Focus, GeometryError, GlobalCuts, Membership,
    ProjectiveCoords, Quadrilateral, Side, DEFAULT_ARC_SEGMENTS,
};
use henon_core::params::{reference_anchor, Family};
use henon_core::{ComplexRect, Interval, PhaseRect};
use proptest::prelude::*;
use rand::{rngs::StdRng, Rng, SeedableRng};

#[test]
fn reference_q0_has_finite_foci_and_round_trips() {
    let d = reference_anchor();
    let q0 = d.quadrilaterals()[0];
    let qc = quad_to_coords(&q0).unwrap();
    assert!(matches!(qc.coords.u_focus, Focus::Finite { .. }));
    assert!(matches!(qc.coords.v_focus, Focus::Finite { .. }));
    let [v1, v2, v3, v4] = q0.v;
    let proj = |p: (f64, f64)| qc.coords.project_f64(p.0, p.1).unwrap();
    // v1v2 is the right edge, v3v4 the left, v4v1 the top, v2v3 the bottom.
    for (p, u_want, v_want) in [
        (v1, qc.p_x, qc.p_y),
        (v2, qc.p_x, qc.q_y),
        (v3, qc.q_x, qc.q_y),
        (v4, qc.q_x, qc.p_y),
    ] {
        let (u, v) = proj(p);
        assert!((u - u_want).abs() < 1e-9, "u {u} vs {u_want}");
        assert!((v - v_want).abs() < 1e-9, "v {v} vs {v_want}");
    }
}

#[test]
fn reference_boxes_build() {
    let sys = reference_anchor().build().unwrap();
    assert_eq!(sys.boxes.len(), 4);
    let b0 = &sys.boxes[0];
    let qc = quad_to_coords(&sys.quads[0]).unwrap();
    let lo = qc.q_x - 0.15;
    let hi = qc.p_x + 0.2;
    assert_eq!((b0.du.cut_lo, b0.du.cut_hi), (lo, hi));
    for s in Interval::new(lo, hi).split(50) {
        let m = b0.du.membership(&ComplexRect::real(Interval::point(s.mid())));
        assert_eq!(m, Membership::Inside);
    }
    // P_X is taken from the first box.
    assert_eq!(sys.cuts.px, hi);
}

#[test]
fn symmetric_disk_is_symmetric() {
    let d = DiskRegion::new(2.0, -1.0, 1.0, 1.0, -5.0, 5.0).unwrap();
    let c = 0.5;
    for k in 0..20 {
        let t = 1.5 * k as f64 / 20.0;
        let l = d.membership(&ComplexRect::point(c - t, 0.3));
        let r = d.membership(&ComplexRect::point(c + t, 0.3));
        assert_eq!(l, r, "t = {t}");
    }
}

#[test]
fn cuts_outside_ellipse_are_empty() {
    let q = Quadrilateral::new((1.0, 1.0), (1.0, -1.0), (-1.0, -1.0), (-1.0, 1.0));
    let shape = BoxShape {
        ax: 1.0,
        bx: 1.0,
        ay: 1.0,
        by: 1.0,
        delta_px: 5.0,
        delta_qx: 4.0,
        delta_py: 0.0,
        delta_qy: 0.0,
    };
    let cuts = GlobalCuts {
        px: 2.0,
        qx: -2.0,
        py: 2.0,
        qy: -2.0,
    };
    assert_eq!(
        build_box(&q, &shape, &cuts, 0, Family::Plus),
        Err(GeometryError::EmptyDisk)
    );
}

#[test]
fn degenerate_quads_are_rejected() {
    let q = Quadrilateral::new((1.0, 1.0), (1.0, 1.0), (-1.0, -1.0), (-1.0, 1.0));
    assert!(matches!(quad_to_coords(&q), Err(GeometryError::DegenerateQuad(_))));
    let q = Quadrilateral::new((0.0, 1.0), (0.0, -1.0), (0.0, -2.0), (0.0, 2.0));
    assert!(matches!(quad_to_coords(&q), Err(GeometryError::DegenerateQuad(_))));
}

fn sample_circle(d: &DiskRegion, n: usize, rng: &mut StdRng) -> Vec<(f64, f64)> {
    let c = 0.5 * (d.big_p + d.big_q);
    let r = 0.5 * (d.big_p - d.big_q);
    let k = d.a / d.b;
    (0..n)
        .map(|_| {
            let th: f64 = rng.random_range(0.0..std::f64::consts::TAU);
            (c + r * th.cos(), r * th.sin() / k)
        })
        .filter(|&(x, _)| x >= d.cut_lo && x <= d.cut_hi)
        .collect()
}

fn covered(pieces: &[henon_core::geometry::BoundaryPiece], p: (f64, f64)) -> bool {
    // Sampled points carry libm error, so allow a few ulps of slack.
    pieces
        .iter()
        .any(|s| s.rect.inflate(1e-12).contains(p.0, p.1))
}

#[test]
fn circle_boundary_cover() {
    let d = DiskRegion::new(1.0, -1.0, 1.0, 1.0, -10.0, 10.0).unwrap();
    let pieces = d.boundary_cover(DEFAULT_ARC_SEGMENTS);
    assert_eq!(pieces.len(), 64);
    let mut rng = StdRng::seed_from_u64(7);
    let pts = sample_circle(&d, 1000, &mut rng);
    assert_eq!(pts.len(), 1000);
    for p in &pts {
        assert!(covered(&pieces, *p), "{p:?} not covered");
    }
    let finer = d.boundary_cover(128);
    for p in &pts {
        assert!(covered(&finer, *p));
    }
    let refined: Vec<_> = pieces.iter().flat_map(|p| d.refine(p)).collect();
    for p in &pts {
        assert!(covered(&refined, *p));
    }
}

#[test]
fn cut_chords_are_vertical() {
    let d = DiskRegion::new(2.0, -2.0, 1.0, 1.0, -1.0, 1.5).unwrap();
    let pieces = d.boundary_cover(64);
    let chords: Vec<_> = pieces
        .iter()
        .filter(|p| matches!(p.kind, henon_core::geometry::PieceKind::Chord { .. }))
        .collect();
    assert!(!chords.is_empty());
    for c in &chords {
        assert_eq!(c.rect.re.width(), 0.0);
        assert!(c.rect.re.lo() == -1.0 || c.rect.re.lo() == 1.5);
    }
    let mut rng = StdRng::seed_from_u64(3);
    for _ in 0..500 {
        let side = if rng.random_bool(0.5) { -1.0 } else { 1.5 };
        let h = (4.0f64 - side * side).sqrt();
        let y = rng.random_range(-h..h);
        assert!(covered(&pieces, (side, y)));
    }
    for p in sample_circle(&d, 1000, &mut rng) {
        assert!(covered(&pieces, p));
    }
}

#[test]
fn box_boundary_sides_use_matching_disk() {
    let sys = reference_anchor().build().unwrap();
    let b = &sys.boxes[1];
    let v = b.boundary_curves(Side::Vertical, 64);
    let h = b.boundary_curves(Side::Horizontal, 64);
    assert!(v.iter().all(|p| p.rect.re.lo() >= b.du.cut_lo - 1e-12));
    assert!(h.iter().all(|p| p.rect.re.lo() >= b.dv.cut_lo - 1e-12));
}

#[test]
fn box_membership_consistency() {
    let sys = reference_anchor().build().unwrap();
    let mut rng = StdRng::seed_from_u64(11);
    for (i, q) in sys.quads.iter().enumerate() {
        let qc = quad_to_coords(q).unwrap();
        let shape = BoxShape {
            ax: 1.0,
            bx: 0.5,
            ay: 1.0,
            by: 0.5,
            delta_px: 0.05,
            delta_qx: 0.0,
            delta_py: 0.0,
            delta_qy: -0.05,
        };
        let cuts = GlobalCuts {
            px: qc.p_x.max(0.0) + 1.0,
            qx: qc.q_x.min(0.0) - 1.0,
            py: qc.p_y.max(0.0) + 1.0,
            qy: qc.q_y.min(0.0) - 1.0,
        };
        let b = build_box(q, &shape, &cuts, i, Family::Plus).unwrap();
        let c = q.centroid();
        let shrunk = Quadrilateral {
            v: q.v.map(|p| (c.0 + 0.99 * (p.0 - c.0), c.1 + 0.99 * (p.1 - c.1))),
        };
        let mut hits = 0;
        while hits < 200 {
            let (x0, x1) = q.v.iter().fold((f64::MAX, f64::MIN), |m, p| (m.0.min(p.0), m.1.max(p.0)));
            let (y0, y1) = q.v.iter().fold((f64::MAX, f64::MIN), |m, p| (m.0.min(p.1), m.1.max(p.1)));
            let p = (rng.random_range(x0..x1), rng.random_range(y0..y1));
            if !shrunk.contains_point(p) {
                continue;
            }
            hits += 1;
            assert_eq!(
                b.membership(&PhaseRect::point(p.0, p.1)),
                Membership::Inside,
                "box {i} point {p:?}"
            );
        }
    }
}

#[test]
fn projection_pair_is_injective_on_box_samples() {
    let sys = reference_anchor().build().unwrap();
    let mut rng = StdRng::seed_from_u64(5);
    for b in &sys.boxes {
        let mut pts = Vec::new();
        while pts.len() < 200 {
            let (u, v) = (
                rng.random_range(b.du.real_lo()..b.du.real_hi()),
                rng.random_range(b.dv.real_lo()..b.dv.real_hi()),
            );
            let (x, y) = b.coords.from_uv_f64(u, v).unwrap();
            pts.push(((x, y), b.coords.project_f64(x, y).unwrap()));
        }
        for i in 0..pts.len() {
            for j in i + 1..pts.len() {
                let (zi, ci) = pts[i];
                let (zj, cj) = pts[j];
                let dz = (zi.0 - zj.0).abs() + (zi.1 - zj.1).abs();
                let dc = (ci.0 - cj.0).abs() + (ci.1 - cj.1).abs();
                assert!(dz < 1e-12 || dc > 0.0);
            }
        }
    }
}

fn coords_strategy() -> impl Strategy<Value = ProjectiveCoords> {
    (-5.0..5.0f64, 6.0..30.0f64, 6.0..30.0f64, -5.0..5.0f64, any::<bool>(), any::<bool>()).prop_map(
        |(ux, uy, vx, vy, su, sv)| {
            let uy = if su { uy } else { -uy };
            let vx = if sv { vx } else { -vx };
            ProjectiveCoords::new(Focus::Finite { x: ux, y: uy }, Focus::Finite { x: vx, y: vy })
                .unwrap()
        },
    )
}

proptest! {
    #[test]
    fn projection_soundness(
        c in coords_strategy(),
        x0 in -3.0..3.0f64, y0 in -3.0..3.0f64,
        xi0 in -1.0..1.0f64, yi0 in -1.0..1.0f64,
        w in 0.0..0.5f64,
        t in proptest::array::uniform4(0.0..1.0f64),
    ) {
        let z = PhaseRect::new(
            ComplexRect::new(Interval::new(x0, x0 + w), Interval::new(xi0, xi0 + w)),
            ComplexRect::new(Interval::new(y0, y0 + w), Interval::new(yi0, yi0 + w)),
        );
        let pt = PhaseRect::new(
            ComplexRect::point(x0 + t[0] * w, xi0 + t[1] * w),
            ComplexRect::point(y0 + t[2] * w, yi0 + t[3] * w),
        );
        let u = c.project_u(&z).unwrap();
        let up = c.project_u(&pt).unwrap();
        prop_assert!(up.subset(&u));
        let v = c.project_v(&z).unwrap();
        let vp = c.project_v(&pt).unwrap();
        prop_assert!(vp.subset(&v));
    }

    #[test]
    fn from_uv_is_inverse(c in coords_strategy(), u in -3.0..3.0f64, v in -3.0..3.0f64) {
        let z = c.from_uv(&ComplexRect::from(u), &ComplexRect::from(v)).unwrap();
        let back_u = c.project_u(&z).unwrap();
        let back_v = c.project_v(&z).unwrap();
        prop_assert!(back_u.inflate(1e-9).contains(u, 0.0));
        prop_assert!(back_v.inflate(1e-9).contains(v, 0.0));
    }

    #[test]
    fn gradient_encloses_difference_quotient(
        c in coords_strategy(), x in -3.0..3.0f64, y in -3.0..3.0f64,
    ) {
        let h = 1e-6;
        let z = PhaseRect::real(Interval::new(x - h, x + h), Interval::new(y - h, y + h));
        let g = c.projection_gradients(&z).unwrap();
        let f = |x: f64, y: f64| c.project_f64(x, y).unwrap();
        let dux = (f(x + h, y).0 - f(x - h, y).0) / (2.0 * h);
        let duy = (f(x, y + h).0 - f(x, y - h).0) / (2.0 * h);
        let dvx = (f(x + h, y).1 - f(x - h, y).1) / (2.0 * h);
        let dvy = (f(x, y + h).1 - f(x, y - h).1) / (2.0 * h);
        prop_assert!(g[0][0].re.inflate(1e-6).contains(dux));
        prop_assert!(g[0][1].re.inflate(1e-6).contains(duy));
        prop_assert!(g[1][0].re.inflate(1e-6).contains(dvx));
        prop_assert!(g[1][1].re.inflate(1e-6).contains(dvy));
    }
}
