//! One-parameter families `y^2 = P0(x) - t c s(x)` and the variational checks
//! on them: finite differences of `tau`, the twisted Rauch formula, the cubic
//! `d tau / d lambda` three ways, and its expression as a triple B-period of `W03`.

use std::f64::consts::PI;

use num_complex::Complex64;
use num_traits::Zero;
use rayon::prelude::*;
use serde::Serialize;

use crate::curve::{Point, SpectralCurve, TwistSection};
use crate::error::{Error, Result};
use crate::kernels::{bergman, symmetrize_b, Bidifferential, Chart, Variant};
use crate::periods::{cycle_basis, normalized_basis, period_data, CycleBasis, CycleOpts, TrackedCycle};
use crate::poly::{min_separation, CPoly};
use crate::quad::{circle_residue_checked, QuadOpts};
use crate::recursion::{Engine, Normalization, RecursionSetup};

type C64 = Complex64;

const I: C64 = C64::new(0.0, 1.0);
const RESIDUE_NODES: usize = 64;
const RESIDUE_TOL: f64 = 1e-9;

/// `y^2 = P0 - t c s` on `|t| <= radius`, with contours fixed in the x-plane.
#[derive(Clone, Debug)]
pub struct CurveFamily {
    pub base: SpectralCurve,
    pub p0: CPoly,
    pub twist: TwistSection,
    pub direction: C64,
    pub radius: f64,
    pub cycles: CycleBasis,
    /// Twist zeros sit on branch points (the `s ~ P0` direction).
    pub degenerate: bool,
}

/// Builds a family and checks admissibility on the circle `|t| = radius`.
pub fn family(base: &SpectralCurve, direction: C64, radius: f64) -> Result<CurveFamily> {
    family_with(base, direction, radius, CycleOpts::default())
}

pub fn family_with(base: &SpectralCurve, direction: C64, radius: f64, opts: CycleOpts) -> Result<CurveFamily> {
    let p0 = base.hyper_poly().ok_or_else(|| Error::Admissibility("base must be hyperelliptic".into()))?.clone();
    let twist = base.twist.clone().ok_or_else(|| Error::Admissibility("base needs a twist".into()))?;
    if base.genus != 1 {
        return Err(Error::Admissibility("base must have genus 1".into()));
    }
    if twist.s.degree() > p0.degree() {
        return Err(Error::Admissibility("deg s exceeds deg P0".into()));
    }
    let roots = base.branch_points();
    let spacing = min_separation(&roots);
    let degenerate = twist.zeros.iter().any(|z| roots.iter().any(|r| (r - z).norm() < 1e-6 * spacing.min(1.0)));
    let cycles = cycle_basis(base, opts)?;
    let fam = CurveFamily { base: base.clone(), p0, twist, direction, radius, cycles, degenerate };
    let allowed = 0.25 * fam.cycles.radius.min(fam.cycles.separation);
    for k in 0..16 {
        let t = C64::from_polar(radius, 2.0 * PI * k as f64 / 16.0);
        let pt = fam.poly_at(t);
        if pt.degree() != fam.p0.degree() {
            return Err(Error::Admissibility(format!("degree drops at t = {t}")));
        }
        let moved = pt.roots().map_err(|e| Error::Admissibility(format!("at t = {t}: {e}")))?;
        if min_separation(&moved) < 0.5 * spacing {
            return Err(Error::Admissibility(format!("branch points approach each other at t = {t}")));
        }
        for r in &roots {
            let d = moved.iter().map(|m| (m - r).norm()).fold(f64::INFINITY, f64::min);
            if d > allowed {
                return Err(Error::Admissibility(format!("branch point {r} moves {d:.3e} at t = {t}, corridor allows {allowed:.3e}")));
            }
        }
    }
    Ok(fam)
}

impl CurveFamily {
    pub fn poly_at(&self, t: C64) -> CPoly {
        self.p0.add(&self.twist.s.scale(-t * self.direction))
    }

    pub fn curve_at(&self, t: f64) -> Result<SpectralCurve> {
        if t.abs() > self.radius {
            return Err(Error::Admissibility(format!("t = {t} outside radius {}", self.radius)));
        }
        SpectralCurve::hyperelliptic_with(self.poly_at(C64::new(t, 0.0)), Some(self.twist.clone()), !self.degenerate)
    }

    pub fn cycles_at(&self, curve: &SpectralCurve) -> Result<CycleBasis> {
        self.cycles.retrack(curve)
    }

    /// Same fibres, parameter scaled: `t -> k t`.
    pub fn rescaled(&self, k: f64) -> CurveFamily {
        CurveFamily { direction: self.direction * k, radius: self.radius / k.abs(), ..self.clone() }
    }

    /// `B` on the fibre at `t`, symmetrized and tagged with the twist divisor.
    pub fn bergman_at(&self, t: f64) -> Result<(SpectralCurve, Bidifferential)> {
        let c = self.curve_at(t)?;
        let cb = self.cycles_at(&c)?;
        let b = symmetrize_b(&c, &bergman(&c, Some(&cb))?);
        Ok((c, b))
    }
}

/// Central difference at `0` with one Richardson step.
pub fn richardson<F>(f: F, h: f64) -> Result<C64>
where
    F: Fn(f64) -> Result<C64> + Sync,
{
    let ts = [h, -h, 0.5 * h, -0.5 * h];
    let v: Vec<C64> = ts.par_iter().map(|&t| f(t)).collect::<Result<_>>()?;
    let d1 = (v[0] - v[1]) / (2.0 * h);
    let d2 = (v[2] - v[3]) / h;
    Ok((d2 * 4.0 - d1) / 3.0)
}

/// Derivatives of `tau` and `lambda` along a family.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct TauDerivative {
    pub dtau_dt: C64,
    pub dlambda_dt: C64,
    /// `None` when `|d lambda/dt| < 1e-12`.
    pub dtau_dlambda: Option<C64>,
    pub step: f64,
}

pub fn fd_tau(f: &CurveFamily, step: f64) -> Result<TauDerivative> {
    let data = |t: f64| -> Result<(C64, C64)> {
        let c = f.curve_at(t)?;
        let pd = period_data(&c, &f.cycles_at(&c)?)?;
        Ok((pd.tau, pd.lambda.expect("twisted family")))
    };
    let dtau_dt = richardson(|t| Ok(data(t)?.0), step)?;
    let dlambda_dt = richardson(|t| Ok(data(t)?.1), step)?;
    let dtau_dlambda = if dlambda_dt.norm() < 1e-12 { None } else { Some(dtau_dt / dlambda_dt) };
    Ok(TauDerivative { dtau_dt, dlambda_dt, dtau_dlambda, step })
}

/// A verification record.
#[derive(Clone, Debug, Serialize)]
pub struct CheckRecord {
    pub check: String,
    pub lhs: C64,
    pub rhs: C64,
    pub rel_err: f64,
    pub tolerance: f64,
    pub pass: bool,
    pub constants_resolved: serde_json::Value,
}

impl CheckRecord {
    /// Relative error, or absolute when both sides are below `1e-12`.
    pub fn new(check: &str, lhs: C64, rhs: C64, tolerance: f64, constants: serde_json::Value) -> Self {
        let scale = lhs.norm().max(rhs.norm());
        let rel_err = if scale < 1e-12 { (lhs - rhs).norm() } else { (lhs - rhs).norm() / scale };
        CheckRecord { check: check.into(), lhs, rhs, rel_err, tolerance, pass: rel_err < tolerance, constants_resolved: constants }
    }

    /// Both sides must vanish below `tolerance`.
    pub fn vanishing(check: &str, lhs: C64, rhs: C64, tolerance: f64, constants: serde_json::Value) -> Self {
        let err = lhs.norm().max(rhs.norm());
        CheckRecord { check: check.into(), lhs, rhs, rel_err: err, tolerance, pass: err < tolerance, constants_resolved: constants }
    }
}

/// Residue radius at chart `k`: a fifth of the chart distance to other
/// branch points and to the given points.
fn residue_radius(curve: &SpectralCurve, chart: &Chart, avoid: &[Point]) -> f64 {
    let mut d = f64::INFINITY;
    for r in curve.branch_points() {
        let p = Point::XY { x: r, y: C64::zero() };
        let dist = chart.s_distance(&p);
        if dist > 1e-9 {
            d = d.min(dist);
        }
    }
    for p in avoid {
        d = d.min(chart.s_distance(p));
    }
    0.2 * d
}

/// `sum_a Res f` over the ramification points, with `f(u, dx/ds, dy/dx)`
/// giving the integrand per `ds`.
fn residue_sum<F>(curve: &SpectralCurve, avoid: &[Point], f: F, what: &str) -> Result<C64>
where
    F: Fn(Point, C64, C64) -> Result<C64> + Sync,
{
    let p = curve.hyper_poly().unwrap();
    let dp = p.derivative();
    let n = curve.ramification_points()?.len();
    let mut total = C64::zero();
    for k in 0..n {
        let chart = Chart::new(curve, k)?;
        let r = residue_radius(curve, &chart, avoid);
        let g = |s: C64| -> Result<C64> {
            let q = chart.point(s);
            let (x, y) = curve.xy(q);
            let dy_dx = dp.eval(x) / (y * 2.0);
            f(q, chart.dx_ds(s), dy_dx)
        };
        total += circle_residue_checked(&g, r, RESIDUE_NODES, RESIDUE_TOL, what)?;
    }
    Ok(total)
}

/// Twisted Rauch formula at `p, q` on the base fibre.
pub fn rauch_check(f: &CurveFamily, p: Point, q: Point, step: f64, tolerance: f64) -> Result<CheckRecord> {
    let (Point::XY { x: xp, y: yp }, Point::XY { x: xq, y: yq }) = (p, q) else {
        return Err(Error::InvalidCurve("Rauch check takes (x, y) points".into()));
    };
    // left: B at fixed x along the family
    let lhs = richardson(
        |t| {
            let (c, b) = f.bergman_at(t)?;
            let pt = Point::XY { x: xp, y: c.y_near(xp, yp) };
            let qt = Point::XY { x: xq, y: c.y_near(xq, yq) };
            b.eval(pt, qt)
        },
        step,
    )?;
    // right: residues with delta Theta by finite differences at fixed x
    let (base, b) = f.bergman_at(0.0)?;
    let fibres: Vec<SpectralCurve> = [step, -step, 0.5 * step, -0.5 * step].iter().map(|&t| f.curve_at(t)).collect::<Result<_>>()?;
    let twist = f.twist.clone();
    let rhs = -residue_sum(
        &base,
        &[p, q],
        |u, dx_ds, dy_dx| {
            let Point::XY { x, y } = u else { unreachable!() };
            let ys: Vec<C64> = fibres.iter().map(|c| c.y_near(x, y)).collect();
            let d1 = (ys[0] - ys[1]) / (2.0 * step);
            let d2 = (ys[2] - ys[3]) / step;
            let s = twist.eval(x);
            let dtheta = (d2 * 4.0 - d1) / 3.0 / s;
            Ok(dtheta * s * b.eval(u, p)? * b.eval(u, q)? / dy_dx * dx_ds)
        },
        "Rauch residue",
    )?;
    let constants = serde_json::json!({ "denominator": "dx dy / s(x), paired with Theta = y dx / s(x)", "variation": "fixed x", "step": step });
    if f.degenerate {
        // the fibres are rescalings of each other and both sides vanish
        return Ok(CheckRecord::vanishing("rauch", lhs, rhs, 1e-8, constants));
    }
    Ok(CheckRecord::new("rauch", lhs, rhs, tolerance, constants))
}

/// `d tau / d lambda` three ways.
#[derive(Clone, Debug, Serialize)]
pub struct CubicReport {
    pub c_fd: Option<C64>,
    pub c_res: Option<C64>,
    pub c_int: Option<C64>,
    pub errors: Vec<String>,
    pub tolerance: f64,
    /// Pairwise relative differences fd/res, fd/int, res/int.
    pub pairwise: [Option<f64>; 3],
    pub agree: bool,
    pub degenerate: bool,
}

fn rel(a: C64, b: C64) -> f64 {
    let s = a.norm().max(b.norm());
    if s == 0.0 {
        0.0
    } else {
        (a - b).norm() / s
    }
}

/// `-2 pi i sum_a Res s v^3 / (dx dy)`.
pub fn cubic_residue(curve: &SpectralCurve, cycles: &CycleBasis) -> Result<C64> {
    let v = normalized_basis(curve, cycles)?;
    let r = residue_sum(
        curve,
        &[],
        |u, dx_ds, dy_dx| {
            let Point::XY { x, y } = u else { unreachable!() };
            let vx = v.per_dx(x, y);
            Ok(curve.twist_at(x) * vx * vx * vx / dy_dx * dx_ds)
        },
        "cubic residue",
    )?;
    Ok(-2.0 * PI * I * r)
}

/// `G(q) = oint_B B(., q)`, per `dx` at `q`.
pub fn b_period_of_b(curve: &SpectralCurve, b: &Bidifferential, cycle: &TrackedCycle, q: Point) -> Result<C64> {
    let opts = QuadOpts { tol: 1e-12, ..QuadOpts::default() };
    let mut failure = std::sync::Mutex::new(None);
    let v = cycle.integrate(
        curve,
        &|x, y| match b.eval(Point::XY { x, y }, q) {
            Ok(v) => v,
            Err(e) => {
                *failure.lock().unwrap() = Some(e);
                C64::zero()
            }
        },
        opts,
    )?;
    if let Some(e) = failure.get_mut().unwrap().take() {
        return Err(e);
    }
    Ok(v)
}

/// `(1 / 4 pi^2) sum_a Res G^3 s / (dx dy)` with `G` the numerical B-period of `B`.
pub fn cubic_from_w03_periods(curve: &SpectralCurve, cycles: &CycleBasis, b: &Bidifferential) -> Result<C64> {
    let r = residue_sum(
        curve,
        &[],
        |u, dx_ds, dy_dx| {
            let Point::XY { x, .. } = u else { unreachable!() };
            let g = b_period_of_b(curve, b, &cycles.b, u)?;
            Ok(curve.twist_at(x) * g * g * g / dy_dx * dx_ds)
        },
        "triple period residue",
    )?;
    Ok(r / (4.0 * PI * PI))
}

pub fn dm_cubic(f: &CurveFamily, step: f64, tolerance: f64) -> CubicReport {
    let mut errors = Vec::new();
    let c_fd = match fd_tau(f, step) {
        Ok(d) => match d.dtau_dlambda {
            Some(v) => Some(v),
            None => {
                errors.push("c_fd: d lambda / dt below 1e-12".into());
                None
            }
        },
        Err(e) => {
            errors.push(format!("c_fd: {e}"));
            None
        }
    };
    let base = f.curve_at(0.0);
    let c_res = base.as_ref().map_err(|e| e.to_string()).and_then(|c| cubic_residue(c, &f.cycles).map_err(|e| e.to_string()));
    let c_res = c_res.map_err(|e| errors.push(format!("c_res: {e}"))).ok();
    let c_int = f
        .bergman_at(0.0)
        .and_then(|(c, b)| cubic_from_w03_periods(&c, &f.cycles, &b))
        .map_err(|e| errors.push(format!("c_int: {e}")))
        .ok();
    let pair = |a: Option<C64>, b: Option<C64>| a.zip(b).map(|(a, b)| rel(a, b));
    let pairwise = [pair(c_fd, c_res), pair(c_fd, c_int), pair(c_res, c_int)];
    let agree = if f.degenerate {
        [c_res, c_int].iter().all(|v| v.is_some_and(|v| v.norm() < 1e-7)) && c_fd.is_none_or(|v| v.norm() < 1e-7)
    } else {
        pairwise.iter().all(|p| p.is_some_and(|p| p < tolerance))
    };
    CubicReport { c_fd, c_res, c_int, errors, tolerance, pairwise, agree, degenerate: f.degenerate }
}

/// Options for the triple B-period of `W03`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct TaylorOpts {
    pub order: usize,
    pub panels: usize,
    pub step: f64,
}

impl Default for TaylorOpts {
    fn default() -> Self {
        TaylorOpts { order: 12, panels: 1, step: 1e-3 }
    }
}

/// `oint_B oint_B oint_B W03` by a tensor rule on the B-cycle, with `W03`
/// from the residue formula in the residue-lemma normalization.
pub fn triple_b_period(engine: &Engine, cycle: &TrackedCycle, order: usize, panels: usize) -> Result<C64> {
    let nodes = cycle.nodes(&engine.curve, order, panels);
    let pts: Vec<(Point, C64)> = nodes.iter().map(|&(x, y, w)| (Point::XY { x, y }, w)).collect();
    let n = pts.len();
    // symmetric in the three arguments: sum i <= j <= k with multiplicities
    let rows: Vec<Result<C64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut acc = C64::zero();
            for j in i..n {
                for k in j..n {
                    let mult = match (i == j, j == k) {
                        (true, true) => 1.0,
                        (false, false) => 6.0,
                        _ => 3.0,
                    };
                    let w = engine.w03_direct([pts[i].0, pts[j].0, pts[k].0])?;
                    acc += w * pts[i].1 * pts[j].1 * pts[k].1 * mult;
                }
            }
            Ok(acc)
        })
        .collect();
    rows.into_iter().sum()
}

/// Taylor coefficient at `m = 3`: `d tau / d lambda = -(i / 2 pi)^2 oint^3 W03`.
pub fn taylor_check(f: &CurveFamily, opts: TaylorOpts, tolerance: f64) -> Result<CheckRecord> {
    let d = fd_tau(f, opts.step)?;
    let base = f.curve_at(0.0)?;
    let setup = RecursionSetup { variant: Variant::Twisted, normalization: Normalization::ResidueLemma, ..Default::default() };
    let engine = Engine::new(&base, Some(&f.cycles), setup)?;
    let triple = triple_b_period(&engine, &f.cycles.b, opts.order, opts.panels)?;
    let k = -(I / (2.0 * PI)).powi(2);
    let rhs = triple * k;
    let tau = period_data(&base, &f.cycles)?.tau;
    let m2 = m2_base_case(&base, &f.cycles, engine.b.clone())?;
    let constants = serde_json::json!({
        "bergman_b_period": "oint_B B = 2 pi i v, oint oint B = 2 pi i tau",
        "m2_factor": "-(i/2pi)",
        "m2_value": [m2.re, m2.im],
        "tau": [tau.re, tau.im],
        "m2_rel_err": rel(m2, tau),
        "m3_factor": "-(i/2pi)^2",
        "w03_normalization": "residue lemma",
        "quadrature": opts,
    });
    match d.dtau_dlambda {
        Some(lhs) if !f.degenerate => Ok(CheckRecord::new("taylor_m3", lhs, rhs, tolerance, constants)),
        Some(lhs) => Ok(CheckRecord::vanishing("taylor_m3", lhs, rhs, 1e-8, constants)),
        None => Err(Error::SingularCoordinate("d lambda / dt below 1e-12".into())),
    }
}

/// `-(i / 2 pi) oint_B oint_B' B` with `B'` a nested copy of the B-cycle.
pub fn m2_base_case(curve: &SpectralCurve, cycles: &CycleBasis, b: Bidifferential) -> Result<C64> {
    let inner = cycles.nested_b(curve, 0.5 * cycles.radius)?;
    let opts = QuadOpts { tol: 1e-11, ..QuadOpts::default() };
    let mut failure = std::sync::Mutex::new(None);
    let v = cycles.b.integrate(
        curve,
        &|x, y| match b_period_of_b(curve, &b, &inner, Point::XY { x, y }) {
            Ok(v) => v,
            Err(e) => {
                *failure.lock().unwrap() = Some(e);
                C64::zero()
            }
        },
        opts,
    )?;
    if let Some(e) = failure.get_mut().unwrap().take() {
        return Err(e);
    }
    Ok(-(I / (2.0 * PI)) * v)
}

/// The same base and direction with two twists: reports both cubic values
/// side by side without asserting a relation.
#[derive(Clone, Debug, Serialize)]
pub struct TwistChoiceReport {
    pub twists: [Vec<C64>; 2],
    pub c_res: [C64; 2],
    pub c_fd: [Option<C64>; 2],
    pub rel_diff: f64,
}

pub fn twist_choice_experiment(p0: &CPoly, s: [&TwistSection; 2], direction: C64, radius: f64, step: f64) -> Result<TwistChoiceReport> {
    let mut c_res = [C64::zero(); 2];
    let mut c_fd = [None; 2];
    for k in 0..2 {
        let base = SpectralCurve::hyperelliptic(p0.clone(), Some(s[k].clone()))?;
        let fam = family(&base, direction, radius)?;
        c_res[k] = cubic_residue(&base, &fam.cycles)?;
        c_fd[k] = fd_tau(&fam, step)?.dtau_dlambda;
    }
    Ok(TwistChoiceReport { twists: [s[0].s.0.clone(), s[1].s.0.clone()], c_res, c_fd, rel_diff: rel(c_res[0], c_res[1]) })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    pub(crate) fn generic_family() -> CurveFamily {
        let p0 = CPoly::new(vec![c(-1.0, 0.2), c(0.3, 0.0), c(0.1, -0.1), c(0.0, 0.0), c(1.0, 0.0)]);
        let tw = TwistSection::from_zeros(&[c(2.0, 0.5), c(-2.5, 0.3), c(0.4, 2.2), c(0.3, -2.4)]).unwrap();
        let base = SpectralCurve::hyperelliptic(p0, Some(tw)).unwrap();
        family(&base, c(0.01, 0.0), 0.05).unwrap()
    }

    #[test]
    fn cubic_three_ways() {
        let f = generic_family();
        let rep = dm_cubic(&f, 1e-3, 1e-3);
        assert!(rep.agree, "{rep:?}");
    }

    #[test]
    fn rauch_and_taylor() {
        let f = generic_family();
        let p = f.base.point_over(c(0.7, 1.3), 1);
        let q = f.base.point_over(c(-1.6, -0.4), -1);
        let r = rauch_check(&f, p, q, 1e-3, 1e-4).unwrap();
        assert!(r.pass, "{r:?}");
        let t = taylor_check(&f, TaylorOpts::default(), 1e-3).unwrap();
        assert!(t.pass, "{t:?}");
    }

    #[test]
    fn degenerate_direction() {
        let p0 = CPoly::new(vec![c(-1.0, 0.2), c(0.3, 0.0), c(0.1, -0.1), c(0.0, 0.0), c(1.0, 0.0)]);
        let tw = TwistSection::new(p0.scale(c(0.5, 0.0))).unwrap();
        let base = SpectralCurve::hyperelliptic_with(p0, Some(tw), false).unwrap();
        let f = family(&base, c(0.2, 0.0), 0.05).unwrap();
        assert!(f.degenerate);
        let d = fd_tau(&f, 1e-3).unwrap();
        assert!(d.dtau_dt.norm() < 1e-8, "{d:?}");
        let rep = dm_cubic(&f, 1e-3, 1e-3);
        assert!(rep.agree, "{rep:?}");
    }

    #[test]
    fn radius_too_large() {
        let f = generic_family();
        assert!(matches!(family(&f.base, c(1.0, 0.0), 1.0), Err(Error::Admissibility(_))));
    }
}
