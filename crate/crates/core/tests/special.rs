use henon_core::params::{reference_anchor, Family};
use henon_core::special::{count_special_intersections, special_words, CountOptions, SpecialCount};
use henon_core::{Interval, ParamBox};

fn count(a: f64, b: f64) -> henon_core::special::CountReport {
    let sys = reference_anchor().build().unwrap();
    count_special_intersections(&ParamBox::point(a, b), Some(&sys), Family::Plus, &CountOptions::default())
}

// At b = 0 the stable piece is the line x = −β, with β the larger fixed
// point of x² − a, and the unstable piece is the parabola x = y² − a.
fn beta(a: f64) -> f64 {
    (1.0 + (1.0 + 4.0 * a).sqrt()) / 2.0
}

#[test]
fn degenerate_family_above_tangency() {
    let a = 2.1;
    let r = count(a, 0.0);
    assert_eq!(r.count, SpecialCount::Two);
    let y = (a - beta(a)).sqrt();
    let mut ys: Vec<Interval> = r.crossings.iter().map(|c| c.point.1).collect();
    ys.sort_by(|p, q| p.lo().total_cmp(&q.lo()));
    assert!(ys[0].contains(-y) && ys[1].contains(y), "{ys:?} vs ±{y}");
    for c in &r.crossings {
        assert!(c.point.0.contains(-beta(a)));
    }
}

#[test]
fn degenerate_family_below_tangency() {
    assert_eq!(count(1.9, 0.0).count, SpecialCount::Zero);
}

#[test]
fn degenerate_family_at_tangency_is_unknown() {
    assert_eq!(count(2.0, 0.0).count, SpecialCount::Unknown);
}

#[test]
fn reference_system_counts() {
    assert_eq!(count(5.7, 1.0).count, SpecialCount::Two);
    assert_eq!(count(5.6, 1.0).count, SpecialCount::Zero);
}

#[test]
fn complex_parameter_is_unknown() {
    let p = ParamBox::around(5.7, 1.0, 1e-3);
    let r = count_special_intersections(&p, None, Family::Plus, &CountOptions::default());
    assert_eq!(r.count, SpecialCount::Unknown);
}

#[test]
fn missing_or_mismatched_system_is_unknown() {
    let p = ParamBox::point(5.7, 1.0);
    let r = count_special_intersections(&p, None, Family::Plus, &CountOptions::default());
    assert_eq!(r.count, SpecialCount::Unknown);
    let sys = reference_anchor().build().unwrap();
    let r = count_special_intersections(&p, Some(&sys), Family::Minus, &CountOptions::default());
    assert_eq!(r.count, SpecialCount::Unknown);
}

#[test]
fn special_words_are_admissible() {
    let sys = reference_anchor().build().unwrap();
    let (s, u) = special_words(Family::Plus);
    assert_eq!((s.to_string(), u.to_string()), ("31(0)".to_string(), "(0)23".to_string()));
    s.check(&sys).unwrap();
    u.check(&sys).unwrap();
}
