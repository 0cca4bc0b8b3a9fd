use henon_core::krawczyk::{
    certify, certify_nonreal_periodic, find_candidate, krawczyk, periodic_orbit_system, FnSystem, KrawczykStatus,
    ZeroSystem,
};
use henon_core::{Interval, ParamBox};
use num_complex::Complex64;
use num_rational::BigRational;
use proptest::prelude::*;

fn q(x: f64) -> BigRational {
    BigRational::from_float(x).unwrap()
}

fn square_root_system(c: f64) -> impl ZeroSystem {
    FnSystem {
        n: 1,
        g: move |x: &[Interval]| vec![x[0].sqr() - c],
        dg: |x: &[Interval]| vec![vec![x[0] * 2.0]],
    }
}

#[test]
fn sqrt2_to_twelve_digits() {
    let g = square_root_system(2.0);
    let out = certify(&g, &[Interval::new(1.3, 1.5)], 5);
    assert_eq!(out.status, KrawczykStatus::UniqueZero);
    assert!(out.iterations <= 5);
    let r = out.certified_box.unwrap()[0];
    assert!(r.width() < 1e-12, "width {}", r.width());
    // lo² < 2 < hi² in exact arithmetic.
    let two = q(2.0);
    assert!(q(r.lo()) * q(r.lo()) < two && q(r.hi()) * q(r.hi()) > two);
}

#[test]
fn no_real_root_of_x2_plus_1() {
    let g = FnSystem {
        n: 1,
        g: |x: &[Interval]| vec![x[0].sqr() + 1.0],
        dg: |x: &[Interval]| vec![vec![x[0] * 2.0]],
    };
    let out = certify(&g, &[Interval::new(-2.0, 2.0)], 20);
    assert_eq!(out.status, KrawczykStatus::NoZero);
}

#[test]
fn linear_system_one_step() {
    let g = FnSystem {
        n: 2,
        g: |x: &[Interval]| vec![x[0] * 2.0 + x[1] - 3.0, x[0] - x[1]],
        dg: |_: &[Interval]| {
            vec![
                vec![Interval::point(2.0), Interval::ONE],
                vec![Interval::ONE, Interval::point(-1.0)],
            ]
        },
    };
    let out = certify(&g, &[Interval::new(-4.0, 4.0), Interval::new(-4.0, 4.0)], 3);
    assert_eq!(out.status, KrawczykStatus::UniqueZero);
    let b = out.certified_box.unwrap();
    assert!(b[0].contains(1.0) && b[1].contains(1.0));
    assert!(b[0].width() < 1e-14);
}

#[test]
fn singular_derivative_is_not_certified() {
    // x³ at 0: Dg(0) = 0.
    let g = FnSystem {
        n: 1,
        g: |x: &[Interval]| vec![x[0].powi(3)],
        dg: |x: &[Interval]| vec![vec![x[0].sqr() * 3.0]],
    };
    let out = certify(&g, &[Interval::new(-0.5, 0.5)], 10);
    assert_ne!(out.status, KrawczykStatus::UniqueZero);
}

#[test]
fn henon_fixed_point_2_2() {
    let sys = periodic_orbit_system(ParamBox::point(2.0, 0.0), 1);
    let omega: Vec<Interval> = [2.0, 0.0, 2.0, 0.0].iter().map(|&c| Interval::centered(c + 0.01, 0.1)).collect();
    let out = certify(&sys, &omega, 20);
    assert_eq!(out.status, KrawczykStatus::UniqueZero);
    let b = out.certified_box.unwrap();
    assert!(b[0].contains(2.0) && b[2].contains(2.0));
    assert!(b[1].contains(0.0) && b[3].contains(0.0));
    assert!(b.iter().all(|v| v.width() < 1e-12));
}

#[test]
fn krawczyk_operator_contracts_at_root() {
    let g = square_root_system(2.0);
    let k = krawczyk(&g, &[Interval::new(1.4, 1.43)], &[1.415], &[vec![1.0 / 2.83]]).unwrap();
    assert!(k[0].interior_subset(&Interval::new(1.4, 1.43)));
}

#[test]
fn period7_nonreal_orbit_at_3_05() {
    let p = ParamBox::around(3.0, 0.5, 1e-3);
    let cands = find_candidate(Complex64::new(3.0, 0.0), Complex64::new(0.5, 0.0), 7, 5000, 7);
    let cert = cands
        .iter()
        .filter(|o| o.iter().any(|z| z.0.im.abs() > 1e-6))
        .map(|o| certify_nonreal_periodic(&p, 7, o))
        .find(|c| c.is_nonreal_primitive())
        .expect("a non-real period-7 orbit certifies");
    assert_eq!(cert.orbit.len(), 7);
}

#[test]
fn horseshoe_parameter_has_only_real_period2() {
    // At (9, 1) every periodic orbit is real.
    let p = ParamBox::point(9.0, 1.0);
    let cands = find_candidate(Complex64::new(9.0, 0.0), Complex64::new(1.0, 0.0), 2, 200, 3);
    assert!(!cands.is_empty());
    for o in &cands {
        let c = certify_nonreal_periodic(&p, 2, o);
        assert_eq!(c.outcome.status, KrawczykStatus::UniqueZero);
        assert_eq!(c.nonreal, Some(false));
    }
}

fn sign_changes(vals: &[f64]) -> bool {
    vals.iter().any(|&v| v <= 0.0) && vals.iter().any(|&v| v >= 0.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn certified_cubic_roots_change_sign(c0 in -3.0f64..3.0, c1 in -3.0f64..3.0, lo in -3.0f64..3.0, w in 0.01f64..3.0) {
        let g = FnSystem {
            n: 1,
            g: move |x: &[Interval]| vec![x[0].powi(3) + x[0] * c1 + c0],
            dg: move |x: &[Interval]| vec![vec![x[0].sqr() * 3.0 + c1]],
        };
        let out = certify(&g, &[Interval::new(lo, lo + w)], 30);
        let h = |x: f64| x * x * x + c1 * x + c0;
        match out.status {
            KrawczykStatus::UniqueZero => {
                let b = out.certified_box.unwrap()[0];
                let s: Vec<f64> = (0..=200).map(|i| h(b.lo() + (b.hi() - b.lo()) * i as f64 / 200.0)).collect();
                prop_assert!(sign_changes(&s) || s.iter().any(|v| v.abs() < 1e-12));
            }
            KrawczykStatus::NoZero => {
                let s: Vec<f64> = (0..=2000).map(|i| h(lo + w * i as f64 / 2000.0)).collect();
                prop_assert!(!sign_changes(&s));
            }
            KrawczykStatus::Unknown => {}
        }
    }

    #[test]
    fn certified_planar_roots_are_sign_consistent(c1 in -2.0f64..2.0, c2 in -2.0f64..2.0, x0 in -2.0f64..2.0, y0 in -2.0f64..2.0, r in 0.05f64..1.0) {
        let g = FnSystem {
            n: 2,
            g: move |v: &[Interval]| vec![v[0].sqr() - v[1] - c1, v[0] + v[1].sqr() - c2],
            dg: |v: &[Interval]| vec![vec![v[0] * 2.0, Interval::point(-1.0)], vec![Interval::ONE, v[1] * 2.0]],
        };
        let out = certify(&g, &[Interval::centered(x0, r), Interval::centered(y0, r)], 30);
        if out.status == KrawczykStatus::UniqueZero {
            let b = out.certified_box.unwrap();
            let n = 40;
            let mut g1 = Vec::new();
            let mut g2 = Vec::new();
            for i in 0..=n {
                for j in 0..=n {
                    let x = b[0].lo() + (b[0].hi() - b[0].lo()) * i as f64 / n as f64;
                    let y = b[1].lo() + (b[1].hi() - b[1].lo()) * j as f64 / n as f64;
                    g1.push(x * x - y - c1);
                    g2.push(x + y * y - c2);
                }
            }
            let tiny = |s: &[f64]| s.iter().any(|v| v.abs() < 1e-12);
            prop_assert!(sign_changes(&g1) || tiny(&g1));
            prop_assert!(sign_changes(&g2) || tiny(&g2));
        }
    }
}
