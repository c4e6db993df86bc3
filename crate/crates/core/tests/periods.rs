use num_complex::Complex64 as C;
use twistrec::curve::{SpectralCurve, TwistSection};
use twistrec::elliptic::{j_invariant, reduce_tau};
use twistrec::periods::{
    cycle_basis, lambda_coordinate, normalized_basis, period_data, period_matrix, uniformize, CycleOpts, Piece, TrackedCycle,
};
use twistrec::poly::CPoly;
use twistrec::quad::QuadOpts;
use twistrec::Error;

fn c(re: f64, im: f64) -> C {
    C::new(re, im)
}

fn generic() -> SpectralCurve {
    let p = CPoly::new(vec![c(-1.0, 0.2), c(0.3, 0.0), c(0.1, -0.1), c(0.0, 0.0), c(1.0, 0.0)]);
    let tw = TwistSection::from_zeros(&[c(2.0, 0.5), c(-2.5, 0.3), c(0.4, 2.2), c(0.3, -2.4)]).unwrap();
    SpectralCurve::hyperelliptic(p, Some(tw)).unwrap()
}

#[test]
fn lemniscatic_and_equianharmonic() {
    let lem = SpectralCurve::hyperelliptic(CPoly::from_real(&[0.0, -4.0, 0.0, 4.0]), None).unwrap();
    let cb = cycle_basis(&lem, CycleOpts::default()).unwrap();
    let tau = reduce_tau(period_matrix(&lem, &cb).unwrap());
    assert!((tau - c(0.0, 1.0)).norm() < 1e-8, "{tau}");
    let eq = SpectralCurve::hyperelliptic(CPoly::from_real(&[-4.0, 0.0, 0.0, 4.0]), None).unwrap();
    let cb = cycle_basis(&eq, CycleOpts::default()).unwrap();
    let tau = period_matrix(&eq, &cb).unwrap();
    assert!(tau.im > 0.0);
    assert!(j_invariant(tau).norm() < 1e-6);
}

#[test]
fn normalization_and_rescaling() {
    let cur = generic();
    let cb = cycle_basis(&cur, CycleOpts::default()).unwrap();
    let v = normalized_basis(&cur, &cb).unwrap();
    let a = cb.a.integrate(&cur, &|x, y| v.per_dx(x, y), QuadOpts::default()).unwrap();
    assert!((a - 1.0).norm() < 1e-10);
    let tau = period_matrix(&cur, &cb).unwrap();
    let k = c(2.5, 1.0);
    let scaled = SpectralCurve::hyperelliptic(cur.hyper_poly().unwrap().scale(k), cur.twist.clone()).unwrap();
    let cb2 = cb.retrack(&scaled).unwrap();
    let v2 = normalized_basis(&scaled, &cb2).unwrap();
    // y -> sqrt(k) y, so the A-period of dx/y picks up 1/sqrt(k) and v is unchanged
    let r = v.a_period * v.a_period / (v2.a_period * v2.a_period);
    assert!((r - k).norm() < 1e-10 * k.norm());
    assert!((period_matrix(&scaled, &cb2).unwrap() - tau).norm() < 1e-10);
}

#[test]
fn contour_deformation_leaves_periods_unchanged() {
    let cur = generic();
    let cb = cycle_basis(&cur, CycleOpts::default()).unwrap();
    let v = normalized_basis(&cur, &cb).unwrap();
    let f = |x: C, y: C| v.per_dx(x, y);
    let tau = cb.b.integrate(&cur, &f, QuadOpts::default()).unwrap();
    for r in [0.6 * cb.radius, 0.85 * cb.radius] {
        let nb = cb.nested_b(&cur, r).unwrap();
        let t2 = nb.integrate(&cur, &f, QuadOpts::default()).unwrap();
        assert!((t2 - tau).norm() < 1e-9, "{t2} vs {tau}");
    }
    // a thinner A capsule
    let [e1, e2] = cb.a_pair;
    let caps = twistrec::periods::capsule(e1, e2, 0.9 * cb.radius);
    let (x0, y0) = cb.a.start();
    let mut pieces = caps;
    let p = cur.hyper_poly().unwrap();
    let start = pieces[0].at(0.0);
    let y_start = twistrec::periods::SqrtTrack::new(&|s: f64| p.eval(x0 + (start - x0) * s), y0).unwrap().end();
    let principal = p.eval(start).sqrt();
    let sheet = if (y_start - principal).norm() < (y_start + principal).norm() { 1 } else { -1 };
    pieces[0] = match pieces[0] {
        Piece::Circular { center, radius, start_angle, sweep, .. } => Piece::Circular { center, radius, start_angle, sweep, sheet },
        Piece::Segment { from, to, .. } => Piece::Segment { from, to, sheet },
    };
    let a2 = TrackedCycle::track(&cur, &pieces).unwrap();
    let same_orientation = (a2.pieces[0].at(0.5) - a2.pieces[0].at(0.0)) / (cb.a.pieces[0].at(0.5) - cb.a.pieces[0].at(0.0));
    let a2 = if same_orientation.re < 0.0 { a2.reversed(&cur).unwrap() } else { a2 };
    let one = a2.integrate(&cur, &f, QuadOpts::default()).unwrap();
    assert!((one - 1.0).norm() < 1e-9, "{one}");
}

#[test]
fn abel_map() {
    let cur = generic();
    let cb = cycle_basis(&cur, CycleOpts::default()).unwrap();
    let uni = uniformize(&cur, &cb).unwrap();
    let x = c(0.3, 0.45);
    let p = cur.point_over(x, 1);
    let (_, y) = cur.xy(p);
    let u = uni.abel(x, y).unwrap();
    assert!((uni.abel(x, -y).unwrap() + u).norm() < 1e-12);
    // du/dx = v
    let h = 1e-4;
    let up = uni.abel(x + h, cur.y_near(x + h, y)).unwrap();
    let um = uni.abel(x - h, cur.y_near(x - h, y)).unwrap();
    let du = (up - um) / (2.0 * h);
    assert!((du - uni.v.per_dx(x, y)).norm() < 1e-6 * du.norm());
}

#[test]
fn lambda_scales_like_sqrt_t() {
    let s = CPoly::from_roots(&[c(1.0, 0.2), c(-1.1, 0.1), c(0.1, 1.3), c(-0.2, -0.9)]);
    let build = |t: f64| {
        let p = s.scale(c(-t, 0.0));
        SpectralCurve::hyperelliptic_with(p, Some(TwistSection::new(s.clone()).unwrap()), false).unwrap()
    };
    let c1 = build(1.0);
    let cb = cycle_basis(&c1, CycleOpts::default()).unwrap();
    let l1 = lambda_coordinate(&c1, &cb).unwrap();
    let c4 = build(4.0);
    let cb4 = cb.retrack(&c4).unwrap();
    let l4 = lambda_coordinate(&c4, &cb4).unwrap();
    assert!((l4 - l1 * 2.0).norm() < 1e-9 * l1.norm(), "{l4} vs {l1}");
    let plain = c1.with_twist(Some(TwistSection::constant(c(1.0, 0.0)))).unwrap();
    let ydx = cb.a.integrate(&plain, &|_, y| y, QuadOpts::default()).unwrap();
    assert!((lambda_coordinate(&plain, &cb).unwrap() - ydx).norm() < 1e-14);
}

#[test]
fn period_data_is_consistent() {
    let cur = generic();
    let cb = cycle_basis(&cur, CycleOpts::default()).unwrap();
    let d = period_data(&cur, &cb).unwrap();
    assert!(d.tau.im > 0.0);
    assert!((d.tau - period_matrix(&cur, &cb).unwrap()).norm() < 1e-12);
    assert!(d.lambda.is_some());
    assert_eq!(cb.intersection_matrix(), [[0, 1], [-1, 0]]);
}

#[test]
fn cycle_json_round_trip() {
    let cur = generic();
    let cb = cycle_basis(&cur, CycleOpts::default()).unwrap();
    let js = cb.to_json();
    let pieces: Vec<Piece> = serde_json::from_value(js["b"].clone()).unwrap();
    assert_eq!(pieces, cb.b.pieces);
    let b = TrackedCycle::from_sheets(&cur, &pieces).unwrap();
    let f = |_: C, y: C| y.inv();
    let lhs = b.integrate(&cur, &f, QuadOpts::default()).unwrap();
    let rhs = cb.b.integrate(&cur, &f, QuadOpts::default()).unwrap();
    assert!((lhs - rhs).norm() < 1e-12);
}

#[test]
fn corridor_and_genus_errors() {
    let tw = TwistSection::from_zeros(&[c(1.05, 0.0), c(3.0, 0.0), c(5.0, 0.0), c(7.0, 0.0)]).unwrap();
    let cur = SpectralCurve::hyperelliptic(CPoly::from_real(&[-1.0, 0.0, 0.0, 0.0, 1.0]), Some(tw)).unwrap();
    let opts = CycleOpts { pairs: Some(([c(1.0, 0.0), c(-1.0, 0.0)], [c(-1.0, 0.0), c(0.0, 1.0)])), ..Default::default() };
    assert!(matches!(cycle_basis(&cur, opts), Err(Error::Corridor(_))));
    assert!(cycle_basis(&SpectralCurve::airy(), CycleOpts::default()).is_err());
}
