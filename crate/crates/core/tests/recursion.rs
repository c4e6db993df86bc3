use num_complex::Complex64 as C;
use num_rational::BigRational;
use num_traits::Zero;
use twistrec::curve::{Point, SpectralCurve, TwistSection};
use twistrec::kernels::{recursion_kernel, Variant};
use twistrec::periods::{cycle_basis, CycleOpts};
use twistrec::poly::{CPoly, QPoly, QRat};
use twistrec::recursion::{check_properties, evaluate_w, Engine, Mode, Normalization, RecursionSetup};
use twistrec::series::rat;

fn qpoly(c: &[i64]) -> QPoly {
    QPoly::new(c.iter().map(|&v| BigRational::from_integer(v.into())).collect())
}

/// `x = z^3 - 3z`, `y = z^2`: ramified at `z = 1` and `z = -1`.
fn cubic_cover() -> SpectralCurve {
    SpectralCurve::parametric(QRat::poly(qpoly(&[0, -3, 0, 1])), QRat::poly(qpoly(&[0, 0, 1]))).unwrap()
}

fn z(re: f64, im: f64) -> Point {
    Point::Z(C::new(re, im))
}

#[test]
fn airy_higher_differentials() {
    let eng = Engine::new(&SpectralCurve::airy(), None, RecursionSetup::default()).unwrap();
    let w21 = eng.compute_w(2, 1, Mode::Exact).unwrap();
    assert_eq!(w21.serialize().unwrap(), "-105/128 * z0^-10 * dz0");
    let w12 = eng.compute_w(1, 2, Mode::Exact).unwrap();
    assert_eq!(w12.serialize().unwrap(), "5/8 * z0^-6 * z1^-2 * dz0dz1 + 3/8 * z0^-4 * z1^-4 * dz0dz1 + 5/8 * z0^-2 * z1^-6 * dz0dz1");
    for (g, n) in [(0, 3), (1, 1), (0, 4), (1, 2), (2, 1), (0, 5), (2, 2)] {
        let w = eng.compute_w(g, n, Mode::Exact).unwrap();
        let rep = check_properties(&w, &[]).unwrap();
        assert_eq!(rep.symmetry_defect, 0.0, "({g},{n})");
        assert_eq!(rep.oddness_defect, 0.0, "({g},{n})");
        assert!(rep.odd_exactly && rep.pole_centers_ok && rep.max_pole_order <= rep.pole_order_bound, "({g},{n}) {rep:?}");
    }
}

#[test]
fn residue_lemma_normalization_scales() {
    let sb = Engine::new(&SpectralCurve::airy(), None, RecursionSetup::default()).unwrap();
    let rl = Engine::new(&SpectralCurve::airy(), None, RecursionSetup { normalization: Normalization::ResidueLemma, ..Default::default() }).unwrap();
    assert_eq!(rl.compute_w(0, 3, Mode::Exact).unwrap().serialize().unwrap(), "1/2 * z0^-2 * z1^-2 * z2^-2 * dz0dz1dz2");
    assert_eq!(rl.compute_w(1, 1, Mode::Exact).unwrap().serialize().unwrap(), "1/16 * z0^-4 * dz0");
    let a = sb.compute_w(1, 2, Mode::Exact).unwrap().exact_poly().unwrap().scale(&rat(1, 4));
    assert_eq!(&a, rl.compute_w(1, 2, Mode::Exact).unwrap().exact_poly().unwrap());
    assert_eq!(rl.w03_direct_exact().unwrap(), *rl.compute_w(0, 3, Mode::Exact).unwrap().exact_poly().unwrap());
}

#[test]
fn two_ramification_points() {
    let eng = Engine::new(&cubic_cover(), None, RecursionSetup::default()).unwrap();
    let w03 = eng.compute_w(0, 3, Mode::Exact).unwrap();
    assert_eq!(*w03.exact_poly().unwrap(), eng.w03_direct_exact().unwrap());
    for (g, n) in [(0, 3), (1, 1), (0, 4), (1, 2)] {
        let w = eng.compute_w(g, n, Mode::Exact).unwrap();
        let rep = check_properties(&w, &[]).unwrap();
        assert_eq!(rep.symmetry_defect, 0.0);
        assert_eq!(rep.oddness_defect, 0.0, "({g},{n}) polar part must be odd");
        assert!(rep.pole_centers_ok && rep.max_pole_order <= rep.pole_order_bound, "{rep:?}");
        let pts = [z(0.3, 0.7), z(-2.1, 0.4), z(1.7, -1.1), z(0.2, -2.0)];
        let ex = evaluate_w(&w, &pts[..n as usize]).unwrap();
        let ev = eng.eval_w(g, n, &pts[..n as usize]).unwrap();
        assert!((ex - ev).norm() < 1e-10 * ex.norm(), "({g},{n}) {ex} {ev}");
    }
    // no global involution on a degree-3 cover
    let w02 = eng.compute_w(0, 2, Mode::Exact).unwrap();
    assert!(check_properties(&w02, &[vec![z(0.3, 0.7), z(2.5, 0.5)]]).unwrap().anomaly.is_none());
}

#[test]
fn w02_anomaly_on_airy() {
    let eng = Engine::new(&SpectralCurve::airy(), None, RecursionSetup::default()).unwrap();
    let w02 = eng.compute_w(0, 2, Mode::Exact).unwrap();
    assert_eq!(w02.serialize().unwrap(), "1 * (z0 - z1)^-2 * dz0dz1");
    let rep = check_properties(&w02, &[vec![z(0.3, 0.7), z(2.5, 0.5)], vec![z(-0.4, 1.2), z(-2.0, -1.0)]]).unwrap();
    let (size, dev) = rep.anomaly.unwrap();
    assert!(size > 1e-3 && dev < 1e-12, "{size} {dev}");
}

#[test]
fn constant_twist_scales_by_power() {
    let c = rat(3, 2);
    let airy = SpectralCurve::airy();
    let tw = airy.with_twist(Some(TwistSection::exact(QPoly::new(vec![c.clone()])).unwrap())).unwrap();
    let ord = Engine::new(&airy, None, RecursionSetup::default()).unwrap();
    let twe = Engine::new(&tw, None, RecursionSetup::with_variant(Variant::Twisted)).unwrap();
    for (g, n) in [(0, 3), (1, 1), (0, 4), (1, 2), (2, 1)] {
        let k = 2 * g as i32 - 2 + n as i32;
        let mut f = BigRational::from_integer(1.into());
        for _ in 0..k {
            f *= &c;
        }
        let a = ord.compute_w(g, n, Mode::Exact).unwrap().exact_poly().unwrap().scale(&f);
        assert_eq!(&a, twe.compute_w(g, n, Mode::Exact).unwrap().exact_poly().unwrap(), "({g},{n})");
    }
}

#[test]
fn airy_twist_by_x() {
    let airy = SpectralCurve::airy();
    let tw = airy.with_twist(Some(TwistSection::exact(qpoly(&[0, 1])).unwrap())).unwrap();
    let ord = Engine::new(&airy, None, RecursionSetup::default()).unwrap();
    let twe = Engine::new(&tw, None, RecursionSetup::with_variant(Variant::Twisted)).unwrap();
    let ko = recursion_kernel(&airy, &ord.b, 0, Variant::Ordinary).unwrap();
    let kt = recursion_kernel(&tw, &twe.b, 0, Variant::Twisted).unwrap();
    let p0 = z(1.3, 0.4);
    for s in [C::new(0.1, 0.05), C::new(-0.2, 0.1)] {
        let r = kt.eval(&tw, p0, s).unwrap() / ko.eval(&airy, p0, s).unwrap();
        assert!((r - s * s).norm() < 1e-12, "{r} vs {}", s * s);
    }
    // s vanishes at the ramification point, so W03 = Res BBB x / (dx dy) = 0
    let w03 = twe.compute_w(0, 3, Mode::Exact).unwrap();
    assert!(w03.exact_poly().unwrap().is_zero());
    assert_eq!(*w03.exact_poly().unwrap(), twe.w03_direct_exact().unwrap());
    let pts = [z(0.9, 0.2), z(-1.4, 0.6), z(0.5, -1.3), z(1.1, 1.0)];
    assert!(twe.eval_w(0, 3, &pts[..3]).unwrap().norm() < 1e-12);
    // W04 only sees W03 products
    assert!(twe.compute_w(0, 4, Mode::Exact).unwrap().exact_poly().unwrap().is_zero());
    assert_eq!(twe.compute_w(1, 1, Mode::Exact).unwrap().serialize().unwrap(), "-1/8 * z0^-2 * dz0");
    for (g, n) in [(1, 1), (1, 2), (2, 1)] {
        let w = twe.compute_w(g, n, Mode::Exact).unwrap();
        assert!(!w.exact_poly().unwrap().is_zero());
        let ex = evaluate_w(&w, &pts[..n as usize]).unwrap();
        let ev = twe.eval_w(g, n, &pts[..n as usize]).unwrap();
        assert!((ex - ev).norm() < 1e-10 * ex.norm(), "({g},{n}) {ex} {ev}");
    }
}

#[test]
fn hitchin_global_variant() {
    let setup = RecursionSetup { variant: Variant::HitchinGlobal, w01_factor: qpoly(&[3, 1]), ..Default::default() };
    let eng = Engine::new(&cubic_cover(), None, setup).unwrap();
    let w03 = eng.compute_w(0, 3, Mode::Exact).unwrap();
    assert_eq!(*w03.exact_poly().unwrap(), eng.w03_direct_exact().unwrap());
    let ord = Engine::new(&cubic_cover(), None, RecursionSetup::default()).unwrap();
    assert_ne!(w03.exact_poly().unwrap(), ord.compute_w(0, 3, Mode::Exact).unwrap().exact_poly().unwrap());
    let pts = [z(0.3, 0.7), z(-2.1, 0.4), z(1.7, -1.1)];
    let ex = evaluate_w(&w03, &pts).unwrap();
    let ev = eng.eval_w(0, 3, &pts).unwrap();
    assert!((ex - ev).norm() < 1e-10 * ex.norm());
}

#[test]
fn excluded_terms_are_not_zero() {
    for curve in [SpectralCurve::airy(), cubic_cover()] {
        let eng = Engine::new(&curve, None, RecursionSetup::default()).unwrap();
        for (g, n) in [(0, 3), (1, 1)] {
            eng.compute_w(g, n, Mode::Exact).unwrap();
            assert!(!eng.excluded_terms(g, n).unwrap().is_zero(), "({g},{n})");
        }
    }
}

#[test]
fn exact_mode_rejects_irrational_ramification() {
    // x = z^3 - 2z ramifies at z = +-sqrt(2/3)
    let c = SpectralCurve::parametric(QRat::poly(qpoly(&[0, -2, 0, 1])), QRat::poly(qpoly(&[0, 0, 1]))).unwrap();
    let eng = Engine::new(&c, None, RecursionSetup::default()).unwrap();
    assert!(eng.compute_w(0, 3, Mode::Exact).is_err());
    let v = eng.eval_w(0, 3, &[z(1.0, 1.0), z(-1.5, 0.5), z(0.2, -1.6)]).unwrap();
    assert!(v.is_finite());
}

#[test]
fn genus_one_evaluable() {
    let tw = TwistSection::from_zeros(&[C::new(2.0, 0.5), C::new(-2.5, 0.3), C::new(0.4, 2.2), C::new(0.3, -2.4)]).unwrap();
    let p0 = CPoly::new(vec![C::new(-1.0, 0.2), C::new(0.3, 0.0), C::new(0.1, -0.1), C::new(0.0, 0.0), C::new(1.0, 0.0)]);
    let cur = SpectralCurve::hyperelliptic(p0, Some(tw)).unwrap();
    let cb = cycle_basis(&cur, CycleOpts::default()).unwrap();
    let setup = RecursionSetup { variant: Variant::Twisted, normalization: Normalization::ResidueLemma, ..Default::default() };
    let eng = Engine::new(&cur, Some(&cb), setup).unwrap();
    let p = [cur.point_over(C::new(0.7, 1.3), 1), cur.point_over(C::new(-1.6, -0.4), -1), cur.point_over(C::new(1.9, -0.9), 1)];
    let a = eng.eval_w(0, 3, &p).unwrap();
    let b = eng.w03_direct(p).unwrap();
    assert!((a - b).norm() < 1e-10 * b.norm(), "{a} {b}");
    let w03 = eng.compute_w(0, 3, Mode::Evaluable).unwrap();
    let rep = check_properties(&w03, &[p.to_vec()]).unwrap();
    assert!(rep.symmetry_defect < 1e-10 && rep.oddness_defect < 1e-10, "{rep:?}");
    assert!(rep.growth_ratio.unwrap() < 1.01, "{rep:?}");
    let w11 = eng.compute_w(1, 1, Mode::Evaluable).unwrap();
    let rep = check_properties(&w11, &[p[..1].to_vec()]).unwrap();
    assert!(rep.oddness_defect < 1e-10, "{rep:?}");
    let w02 = eng.compute_w(0, 2, Mode::Evaluable).unwrap();
    let rep = check_properties(&w02, &[p[..2].to_vec()]).unwrap();
    assert!(rep.anomaly.unwrap().1 < 1e-8, "{rep:?}");
    assert!(eng.compute_w(0, 3, Mode::Exact).is_err());
    assert!(eng.compute_w(0, 0, Mode::Evaluable).is_err());
    let _ = Point::Z(C::zero());
}
