//! Bergman kernels, the twisted symmetrization, Cauchy kernels, local charts
//! at ramification points and the recursion kernels.

use std::sync::Arc;

use num_complex::Complex64;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::curve::{chart_poly, CurveModel, Point, RamLocation, SpectralCurve};
use crate::elliptic::Lattice;
use crate::error::{Error, Result};
use crate::periods::{uniformize, CycleBasis, SqrtTrack, Uniformization};
use crate::poly::{CPoly, QRat};
use crate::quad::{adaptive, QuadOpts};
use crate::series::LocalSeries;

type C64 = Complex64;
type CSeries = LocalSeries<C64>;

/// The three recursion-kernel variants.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Variant {
    Ordinary,
    HitchinGlobal,
    Twisted,
}

/// How a bidifferential was built.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum GenusMode {
    ExactGenus0,
    Elliptic,
}

#[derive(Clone, Debug)]
enum Kind {
    /// `dz1 dz2 / (z1 - z2)^2`.
    Rational,
    /// Algebraic form on `y^2 = P(x)` with the additive constant `c`.
    Klein { p: CPoly, c: C64 },
}

/// A symmetric bidifferential, evaluated per unit `dz` (parametric curves) or
/// per unit `dx` (hyperelliptic curves) in each argument.
#[derive(Clone, Debug)]
pub struct Bidifferential {
    kind: Kind,
    pub genus_mode: GenusMode,
    /// Preimages of the twist zeros, where simple b-poles are allowed.
    pub b_pole_divisor: Vec<Point>,
    pub symmetrized: bool,
    torus: Option<Arc<TorusKernel>>,
}

/// `B = (wp(u1 - u2) + c) du1 du2` on the uniformized torus.
#[derive(Clone, Debug)]
pub struct TorusKernel {
    pub uni: Uniformization,
    pub c: C64,
}

impl TorusKernel {
    pub fn new(uni: Uniformization) -> Result<Self> {
        let lat = uni.lattice;
        let u0 = lat.tau * 0.5;
        let c = -adaptive(&|s: f64| lat.wp(u0 + s), QuadOpts::default(), "torus constant")?;
        Ok(TorusKernel { uni, c })
    }

    pub fn lattice(&self) -> &Lattice {
        &self.uni.lattice
    }

    /// Value per `dx1 dx2`.
    pub fn eval(&self, p: (C64, C64), q: (C64, C64)) -> Result<C64> {
        let u1 = self.uni.abel(p.0, p.1)?;
        let u2 = self.uni.abel(q.0, q.1)?;
        let v = |x: C64, y: C64| self.uni.v.per_dx(x, y);
        Ok((self.uni.lattice.wp(u1 - u2) + self.c) * v(p.0, p.1) * v(q.0, q.1))
    }
}

fn klein_f(p: &CPoly, x1: C64, x2: C64) -> C64 {
    let a = |k: usize| p.coeff(k);
    a(0) * 2.0 + a(1) * (x1 + x2) + x1 * x2 * (a(2) * 2.0 + a(3) * (x1 + x2)) + a(4) * 2.0 * x1 * x1 * x2 * x2
}

/// Klein form without the constant, per `dx1 dx2`.
fn klein_bare(p: &CPoly, (x1, y1): (C64, C64), (x2, y2): (C64, C64)) -> C64 {
    let d = x1 - x2;
    (y1 * y2 * 2.0 + klein_f(p, x1, x2)) / (d * d * y1 * y2 * 4.0)
}

fn calibration_point(curve: &SpectralCurve) -> (C64, C64) {
    let roots = curve.branch_points();
    let n = roots.len() as f64;
    let centroid: C64 = roots.iter().sum::<C64>() / n;
    let spread = roots.iter().map(|r| (r - centroid).norm()).fold(0.0, f64::max);
    let x = centroid + C64::from_polar(2.0 * spread + 1.0, 0.7);
    let y = curve.hyper_poly().unwrap().eval(x).sqrt();
    (x, y)
}

/// The Bergman kernel of `curve`.
///
/// Genus 1 needs a cycle basis; the additive constant is fixed by a vanishing
/// A-period and the torus kernel is built alongside for cross-checks.
pub fn bergman(curve: &SpectralCurve, cycles: Option<&CycleBasis>) -> Result<Bidifferential> {
    match &curve.model {
        CurveModel::Parametric { .. } => Ok(Bidifferential {
            kind: Kind::Rational,
            genus_mode: GenusMode::ExactGenus0,
            b_pole_divisor: Vec::new(),
            symmetrized: false,
            torus: None,
        }),
        CurveModel::Hyperelliptic { p } => {
            let cycles = cycles.ok_or_else(|| Error::Uniformization("genus-1 Bergman kernel needs a cycle basis".into()))?;
            let q = calibration_point(curve);
            let opts = QuadOpts::default();
            let bare = cycles.a.integrate(curve, &|x, y| klein_bare(p, (x, y), q), opts)?;
            let a0 = cycles.a.integrate(curve, &|_, y: C64| y.inv(), opts)?;
            let c = -q.1 * bare / a0;
            let torus = TorusKernel::new(uniformize(curve, cycles)?)?;
            Ok(Bidifferential {
                kind: Kind::Klein { p: p.clone(), c },
                genus_mode: GenusMode::Elliptic,
                b_pole_divisor: Vec::new(),
                symmetrized: false,
                torus: Some(Arc::new(torus)),
            })
        }
    }
}

/// `B^(z1, z2) = (B(z1, z2) + B(z2, z1)) / 2`, tagged with the twist divisor.
pub fn symmetrize_b(curve: &SpectralCurve, b: &Bidifferential) -> Bidifferential {
    Bidifferential { b_pole_divisor: curve.b_divisor(), symmetrized: true, ..b.clone() }
}

impl Bidifferential {
    fn raw(&self, p: Point, q: Point) -> Result<C64> {
        match (&self.kind, p, q) {
            (Kind::Rational, Point::Z(a), Point::Z(b)) => {
                let d = a - b;
                Ok((d * d).inv())
            }
            (Kind::Klein { p: poly, c }, Point::XY { x: x1, y: y1 }, Point::XY { x: x2, y: y2 }) => {
                Ok(klein_bare(poly, (x1, y1), (x2, y2)) + c / (y1 * y2))
            }
            _ => Err(Error::InvalidCurve("point does not match the kernel's curve model".into())),
        }
    }

    /// Value per unit in each argument.
    pub fn eval(&self, p: Point, q: Point) -> Result<C64> {
        if self.symmetrized {
            Ok((self.raw(p, q)? + self.raw(q, p)?) * 0.5)
        } else {
            self.raw(p, q)
        }
    }

    /// `B(p, sigma p)` per unit squared (hyperelliptic involution).
    pub fn at_sigma_diagonal(&self, p: Point) -> Result<C64> {
        match (&self.kind, p) {
            (Kind::Klein { p: poly, c }, Point::XY { x, y }) => {
                let a = |k: usize| poly.coeff(k);
                let pv = y * y;
                let dp = poly.derivative().eval(x);
                Ok((a(2) + a(3) * 2.0 * x + a(4) * 4.0 * x * x - dp * dp / (pv * 4.0)) / (pv * 4.0) - c / pv)
            }
            _ => Err(Error::UnsupportedMode("sigma diagonal only on hyperelliptic curves".into())),
        }
    }

    /// The additive constant of the algebraic genus-1 kernel.
    pub fn klein_constant(&self) -> Option<C64> {
        match &self.kind {
            Kind::Klein { c, .. } => Some(*c),
            Kind::Rational => None,
        }
    }

    /// The torus form of the same kernel.
    pub fn torus(&self) -> Option<&TorusKernel> {
        self.torus.as_deref()
    }

    /// Expansion of `B(., q)` per `dt` in a local chart, as a series in `t`.
    pub fn series_in_chart(&self, chart: &Chart, q: Point, order: i32) -> Result<CSeries> {
        match (&self.kind, chart, q) {
            (Kind::Rational, Chart::Param { a, .. }, Point::Z(z2)) => {
                // 1/(a + t - z2)^2
                let lin = CSeries::var(order).add_const(a - z2);
                (&lin * &lin).recip()
            }
            (Kind::Klein { p, c }, Chart::Branch { .. }, Point::XY { x: x2, y: y2 }) => {
                let (xs, ys) = chart.xy_series(order)?;
                let a = |k: usize| p.coeff(k);
                let f = (xs.scale(&(a(1) + x2 * x2 * a(3)))
                    + (&xs * &xs).scale(&(a(3) * x2 + a(4) * 2.0 * x2 * x2))
                    + xs.scale(&(x2 * a(2) * 2.0)))
                .add_const(a(0) * 2.0 + a(1) * x2);
                let d = xs.add_const(-x2);
                let num = ys.scale(&(y2 * 2.0)) + f;
                let den = (&(&d * &d) * &ys).scale(&(y2 * 4.0));
                let main = num.checked_div(&den)?;
                let extra = ys.recip()?.scale(&(c / y2));
                Ok(&(main + extra) * &xs.derivative())
            }
            _ => Err(Error::InvalidCurve("chart does not match the kernel's curve model".into())),
        }
    }
}

/// Local chart at a ramification point, with coordinate `s` vanishing there.
#[derive(Clone, Debug)]
pub enum Chart {
    /// Hyperelliptic branch point: `x = a + s^2` (or `x = s^-2` at infinity),
    /// `y = s h(s)` (or `s^-3 h(s)`), with `h^2 = Q(s^2)`.
    Branch { loc: RamLocation, q: CPoly, h0: C64, p: CPoly },
    /// Parametric point `z = a + s`.
    Param { a: C64, involution: CSeries, x: QRat, y: QRat },
}

impl Chart {
    pub fn new(curve: &SpectralCurve, i: usize) -> Result<Self> {
        let rp = &curve.ramification_points()?[i];
        match (&curve.model, rp.location) {
            (CurveModel::Hyperelliptic { p }, loc) => {
                let q = chart_poly(p, loc);
                let h0 = q.eval(C64::zero()).sqrt();
                Ok(Chart::Branch { loc, q, h0, p: p.clone() })
            }
            (CurveModel::Parametric { x, y }, RamLocation::Z(a)) => Ok(Chart::Param {
                a,
                involution: curve.local_involution(i, crate::series::DEFAULT_ORDER)?,
                x: x.clone(),
                y: y.clone(),
            }),
            _ => Err(Error::InvalidCurve("inconsistent ramification data".into())),
        }
    }

    fn h(&self, s: C64) -> C64 {
        match self {
            Chart::Branch { q, h0, .. } => {
                let q0 = h0 * h0;
                h0 * (q.eval(s * s) / q0).sqrt()
            }
            Chart::Param { .. } => C64::one(),
        }
    }

    /// Point of the curve at chart coordinate `s`.
    pub fn point(&self, s: C64) -> Point {
        match self {
            Chart::Branch { loc: RamLocation::Infinity, .. } => {
                let inv = s.inv();
                Point::XY { x: inv * inv, y: inv * inv * inv * self.h(s) }
            }
            Chart::Branch { loc: RamLocation::X(a), .. } => Point::XY { x: a + s * s, y: s * self.h(s) },
            Chart::Branch { .. } => unreachable!(),
            Chart::Param { a, .. } => Point::Z(a + s),
        }
    }

    /// `d(unit)/ds` at `s`, where the unit is `dx` or `dz`.
    pub fn unit_ds(&self, s: C64) -> C64 {
        match self {
            Chart::Branch { loc: RamLocation::Infinity, .. } => -2.0 * s.inv().powi(3),
            Chart::Branch { .. } => s * 2.0,
            Chart::Param { .. } => C64::one(),
        }
    }

    /// `dx/ds`.
    pub fn dx_ds(&self, s: C64) -> C64 {
        match self {
            Chart::Param { a, x, .. } => x.derivative_c(a + s),
            _ => self.unit_ds(s),
        }
    }

    /// `sigma` of the point at `s`, with `d(unit at sigma)/ds`.
    pub fn sigma(&self, s: C64) -> Result<(Point, C64)> {
        match self {
            Chart::Branch { .. } => Ok((self.point(-s), self.unit_ds(s))),
            Chart::Param { a, involution, x, .. } => {
                let z = a + s;
                let target = x.eval_c(z);
                let mut w = a + involution.eval(s);
                for _ in 0..60 {
                    let step = (x.eval_c(w) - target) / x.derivative_c(w);
                    w -= step;
                    if step.norm() <= 1e-15 * w.norm().max(1.0) {
                        break;
                    }
                }
                if (w - z).norm() < 0.5 * s.norm() || (x.eval_c(w) - target).norm() > 1e-10 * target.norm().max(1.0) {
                    return Err(Error::RootFinding(format!("local involution at z = {z}")));
                }
                Ok((Point::Z(w), x.derivative_c(z) / x.derivative_c(w)))
            }
        }
    }

    /// `y(z) - y(sigma z)` at `s`.
    pub fn y_diff(&self, s: C64) -> Result<C64> {
        match self {
            Chart::Branch { .. } => {
                let Point::XY { y, .. } = self.point(s) else { unreachable!() };
                Ok(y * 2.0)
            }
            Chart::Param { a, y, .. } => {
                let (Point::Z(w), _) = self.sigma(s)? else { unreachable!() };
                Ok(y.eval_c(a + s) - y.eval_c(w))
            }
        }
    }

    /// `int_{sigma z}^{z} B(., p0)` with `z` at chart coordinate `s`, per unit at `p0`.
    pub fn n_integral(&self, b: &Bidifferential, s: C64, p0: Point) -> Result<C64> {
        match (self, p0) {
            (Chart::Param { .. }, Point::Z(z0)) => {
                let (Point::Z(w), _) = self.sigma(s)? else { unreachable!() };
                let z = self.point(s).x_coord();
                Ok((z0 - z).inv() - (z0 - w).inv())
            }
            (Chart::Branch { .. }, Point::XY { .. }) => {
                let mid = C64::zero();
                let half = s;
                let mut acc = C64::zero();
                for &(t, w) in crate::quad::gauss_legendre(24) {
                    let u = mid + half * t;
                    acc += b.eval(self.point(u), p0)? * self.unit_ds(u) * w;
                }
                Ok(acc * half)
            }
            _ => Err(Error::InvalidCurve("point does not match the chart".into())),
        }
    }

    /// Distance of `p` from the chart center, measured in the chart coordinate.
    pub fn s_distance(&self, p: &Point) -> f64 {
        match (self, p) {
            (Chart::Branch { loc: RamLocation::Infinity, .. }, pt) => 1.0 / pt.x_coord().norm().sqrt(),
            (Chart::Branch { loc: RamLocation::X(a), .. }, pt) => (pt.x_coord() - a).norm().sqrt(),
            (Chart::Param { a, .. }, pt) => (pt.x_coord() - a).norm(),
            _ => f64::INFINITY,
        }
    }

    /// Same as [`Chart::s_distance`] for an `x` value (hyperelliptic) or `z` value.
    pub fn s_distance_x(&self, x: C64) -> f64 {
        self.s_distance(&Point::Z(x))
    }

    /// `(x(s), y(s))` as series in `s`.
    pub fn xy_series(&self, order: i32) -> Result<(CSeries, CSeries)> {
        match self {
            Chart::Branch { loc, p, .. } => {
                let f = crate::curve::branch_frame(p, *loc, order)?;
                Ok((f.x, f.y))
            }
            Chart::Param { a, x, y, .. } => {
                let t = CSeries::var(order).add_const(*a);
                let xs = rat_on_series(x, &t)?;
                let ys = rat_on_series(y, &t)?;
                Ok((xs, ys))
            }
        }
    }
}

fn rat_on_series(r: &QRat, t: &CSeries) -> Result<CSeries> {
    let n = r.num.to_cpoly().on_series(t);
    let d = r.den.to_cpoly().on_series(t);
    n.checked_div(&d)
}

/// Factor multiplying the ordinary kernel: `1`, `s(x)` or `1/f(x)` where
/// `W01 = f(x) y dx` for the Hitchin-global variant.
pub fn variant_factor(curve: &SpectralCurve, variant: Variant, w01_factor: &CPoly, x: C64) -> Result<C64> {
    match variant {
        Variant::Ordinary => Ok(C64::one()),
        Variant::Twisted => {
            let tw = curve.twist.as_ref().ok_or_else(|| Error::UnsupportedMode("twisted variant needs a twist".into()))?;
            Ok(tw.eval(x))
        }
        Variant::HitchinGlobal => {
            let f = w01_factor.eval(x);
            if f.norm() < 1e-300 {
                return Err(Error::FramePole("W01 factor vanishes".into()));
            }
            Ok(f.inv())
        }
    }
}

/// A recursion kernel at one ramification point.
#[derive(Clone, Debug)]
pub struct RecursionKernel {
    pub variant: Variant,
    pub ram_index: usize,
    pub chart: Chart,
    pub w01_factor: CPoly,
    b: Bidifferential,
}

/// Builds the recursion kernel at the `i`-th ramification point with base
/// point `sigma(z)`.
pub fn recursion_kernel(curve: &SpectralCurve, b: &Bidifferential, i: usize, variant: Variant) -> Result<RecursionKernel> {
    if variant == Variant::Twisted && curve.twist.is_none() {
        return Err(Error::UnsupportedMode("twisted variant needs a twist".into()));
    }
    Ok(RecursionKernel { variant, ram_index: i, chart: Chart::new(curve, i)?, w01_factor: CPoly(vec![C64::one()]), b: b.clone() })
}

impl RecursionKernel {
    pub fn with_w01_factor(mut self, f: CPoly) -> Self {
        self.w01_factor = f;
        self
    }

    /// `K(p0; s)` per unit at `p0` and per `ds`^-1.
    pub fn eval(&self, curve: &SpectralCurve, p0: Point, s: C64) -> Result<C64> {
        let n = self.chart.n_integral(&self.b, s, p0)?;
        let x = match self.chart.point(s) {
            Point::XY { x, .. } => x,
            Point::Z(z) => match &curve.model {
                CurveModel::Parametric { x, .. } => x.eval_c(z),
                _ => unreachable!(),
            },
        };
        let rho = variant_factor(curve, self.variant, &self.w01_factor, x)?;
        Ok(n * rho / (self.chart.y_diff(s)? * self.chart.dx_ds(s)))
    }

    /// Laurent expansion of `K(p0; t)` in the chart coordinate.
    pub fn series(&self, curve: &SpectralCurve, p0: Point, order: i32) -> Result<CSeries> {
        let work = order + 6;
        let (xs, ys) = self.chart.xy_series(work)?;
        let (n, y_sigma) = match &self.chart {
            Chart::Branch { .. } => {
                let bs = self.b.series_in_chart(&self.chart, p0, work)?;
                let anti = antiderivative(&bs)?;
                let neg = reflect(&anti);
                (&anti - &neg, reflect(&ys))
            }
            Chart::Param { a, involution, .. } => {
                let Point::Z(z0) = p0 else {
                    return Err(Error::InvalidCurve("point does not match the chart".into()));
                };
                let sig = involution.truncate(work);
                let t = CSeries::var(work);
                let d1 = t.add_const(a - z0).scale(&C64::new(-1.0, 0.0)).recip()?;
                let d2 = sig.add_const(a - z0).scale(&C64::new(-1.0, 0.0)).recip()?;
                let ysig = ys.compose(&sig)?;
                (&d1 - &d2, ysig)
            }
        };
        let rho = match self.variant {
            Variant::Ordinary => CSeries::constant(C64::one(), crate::series::EXACT),
            Variant::Twisted => curve.twist.as_ref().unwrap().s.on_series(&xs),
            Variant::HitchinGlobal => self.w01_factor.on_series(&xs).recip()?,
        };
        let den = &(&ys - &y_sigma) * &xs.derivative();
        let k = (&n * &rho).checked_div(&den)?;
        Ok(k.truncate(order))
    }
}

fn antiderivative(f: &CSeries) -> Result<CSeries> {
    let lo = f.lowest_order();
    if f.coeffs().is_empty() {
        return Ok(f.clone());
    }
    let mut out = Vec::new();
    let mut first = None;
    for (k, c) in f.coeffs().iter().enumerate() {
        let e = lo + k as i32;
        if e == -1 {
            if !c.is_zero() && c.norm() > 1e-12 {
                return Err(Error::InvalidCurve("kernel integrand has a residue".into()));
            }
            continue;
        }
        if first.is_none() {
            first = Some(e + 1);
        }
        out.push((e + 1, c / (e + 1) as f64));
    }
    let Some(start) = first else { return Ok(CSeries::zero(f.truncation_order() + 1)) };
    let end = out.last().unwrap().0;
    let mut coeffs = vec![C64::zero(); (end - start + 1) as usize];
    for (e, c) in out {
        coeffs[(e - start) as usize] = c;
    }
    Ok(CSeries::from_terms(start, coeffs, f.truncation_order() + 1))
}

fn reflect(f: &CSeries) -> CSeries {
    let lo = f.lowest_order();
    let coeffs = f
        .coeffs()
        .iter()
        .enumerate()
        .map(|(k, c)| if (lo + k as i32) % 2 == 0 { *c } else { -c })
        .collect();
    CSeries::from_terms(lo, coeffs, f.truncation_order())
}

/// A meromorphic one-form with recorded poles.
#[derive(Clone)]
pub struct OneForm {
    eval: Arc<dyn Fn(Point) -> Result<C64> + Send + Sync>,
    pub poles: Vec<PoleRecord>,
    pub b_pole_divisor: Vec<Point>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PoleRecord {
    pub at: Point,
    pub order: u32,
    pub residue: C64,
}

impl std::fmt::Debug for OneForm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("OneForm").field("poles", &self.poles).finish()
    }
}

impl OneForm {
    pub fn new(eval: impl Fn(Point) -> Result<C64> + Send + Sync + 'static, poles: Vec<PoleRecord>) -> Self {
        OneForm { eval: Arc::new(eval), poles, b_pole_divisor: Vec::new() }
    }

    /// Value per unit at `p`.
    pub fn eval(&self, p: Point) -> Result<C64> {
        (self.eval)(p)
    }
}

/// `Theta = y dx / s(x)` with b-poles at the twist-zero preimages.
pub fn theta_form(curve: &SpectralCurve) -> OneForm {
    let c = curve.clone();
    let poles = match (&curve.twist, &curve.model) {
        (Some(tw), CurveModel::Hyperelliptic { p }) => {
            let ds = tw.s.derivative();
            tw.zeros
                .iter()
                .flat_map(|&x0| {
                    let y0 = p.eval(x0).sqrt();
                    [y0, -y0].map(|y| PoleRecord { at: Point::XY { x: x0, y }, order: 1, residue: y / ds.eval(x0) })
                })
                .collect()
        }
        _ => Vec::new(),
    };
    let mut form = OneForm::new(
        move |p| {
            let (x, y) = c.xy(p);
            let dx = match (&c.model, p) {
                (CurveModel::Parametric { x: xr, .. }, Point::Z(z)) => xr.derivative_c(z),
                _ => C64::one(),
            };
            Ok(y * dx / c.twist_at(x))
        },
        poles,
    );
    form.b_pole_divisor = curve.b_divisor();
    form
}

/// Route from a base branch point to a point of the curve in the base chart.
#[derive(Clone, Debug)]
struct Ray {
    s_end: C64,
    track: SqrtTrack,
}

fn ray_to(q: &CPoly, h0: C64, x: C64, y: C64, base: C64) -> Result<Ray> {
    let s = (x - base).sqrt();
    let g = |u: f64| q.eval(s * s * u * u);
    let track = SqrtTrack::new(&g, h0)?;
    let y_end = s * track.end();
    let s_end = if (y_end - y).norm() <= (y_end + y).norm() { s } else { -s };
    Ok(Ray { s_end, track })
}

/// The normalized Cauchy kernel `omega^{a-b}(z) = int_b^a B(., z)`.
pub fn cauchy_kernel(curve: &SpectralCurve, b: &Bidifferential, pa: Point, pb: Point) -> Result<OneForm> {
    if pa == pb {
        return Err(Error::InvalidCurve("Cauchy kernel needs distinct points".into()));
    }
    let poles = vec![PoleRecord { at: pa, order: 1, residue: C64::one() }, PoleRecord { at: pb, order: 1, residue: -C64::one() }];
    match (&curve.model, pa, pb) {
        (CurveModel::Parametric { .. }, Point::Z(a), Point::Z(bz)) => Ok(OneForm::new(
            move |p| match p {
                Point::Z(z) => Ok((z - a).inv() - (z - bz).inv()),
                _ => Err(Error::InvalidCurve("point does not match curve model".into())),
            },
            poles,
        )),
        (CurveModel::Hyperelliptic { p }, Point::XY { x: xa, y: ya }, Point::XY { x: xb, y: yb }) => {
            let roots = curve.branch_points();
            // base branch point whose rays to a and b stay clear of the others
            let clearance = |e: C64| {
                let mut d = f64::INFINITY;
                for r in &roots {
                    if (r - e).norm() > 1e-12 {
                        for x in [xa, xb] {
                            let dd = x - e;
                            let t = ((r - e) * dd.conj()).re / dd.norm_sqr();
                            d = d.min((r - (e + dd * t.clamp(0.0, 1.0))).norm());
                        }
                    }
                }
                d
            };
            let base = roots.iter().copied().max_by(|a, b| clearance(*a).total_cmp(&clearance(*b))).unwrap();
            let q = chart_poly(p, RamLocation::X(base));
            let h0 = q.eval(C64::zero()).sqrt();
            let ra = ray_to(&q, h0, xa, ya, base)?;
            let rb = ray_to(&q, h0, xb, yb, base)?;
            let bb = b.clone();
            let qq = q.clone();
            Ok(OneForm::new(
                move |z| {
                    // int over s from s_b to 0 to s_a of B(point(s), z) 2s ds
                    let leg = |ray: &Ray| -> Result<C64> {
                        let f = |u: f64| {
                            let s = ray.s_end * u;
                            let h = ray.track.value(u, qq.eval(s * s));
                            let pt = Point::XY { x: base + s * s, y: s * h };
                            bb.eval(pt, z).map(|v| v * s * 2.0 * ray.s_end).unwrap_or(C64::new(f64::NAN, f64::NAN))
                        };
                        adaptive(&f, QuadOpts { max_panels: 1 << 14, ..QuadOpts::default() }, "Cauchy kernel")
                    };
                    Ok(leg(&ra)? - leg(&rb)?)
                },
                poles,
            ))
        }
        _ => Err(Error::InvalidCurve("point does not match curve model".into())),
    }
}

/// Residue of a one-form at a regular point, by the trapezoid rule on a small
/// circle in the local coordinate (`z`, or `x` with `y` continued).
pub fn residue_at(curve: &SpectralCurve, form: &OneForm, at: Point, radius: f64) -> Result<C64> {
    let f = |t: C64| -> Result<C64> {
        let p = match at {
            Point::Z(z) => Point::Z(z + t),
            Point::XY { x, y } => Point::XY { x: x + t, y: curve.y_near(x + t, y) },
        };
        form.eval(p)
    };
    crate::quad::circle_residue_checked(&f, radius, 64, 1e-9, "one-form residue")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::TwistSection;
    use crate::periods::{cycle_basis, normalized_basis, CycleOpts};

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn airy_kernel_series() {
        let airy = SpectralCurve::airy();
        let b = bergman(&airy, None).unwrap();
        let k = recursion_kernel(&airy, &b, 0, Variant::Ordinary).unwrap();
        let z0 = c(1.5, 0.0);
        let ks = k.series(&airy, Point::Z(z0), 6).unwrap();
        // 1 / (2 t (z0^2 - t^2)) = 1/(2 z0^2) t^-1 + 1/(2 z0^4) t + ...
        assert_eq!(ks.lowest_order(), -1);
        assert!((ks.coeff(-1).unwrap() - (z0 * z0 * 2.0).inv()).norm() < 1e-12);
        assert!(ks.coeff(0).unwrap().norm() < 1e-12);
        assert!((ks.coeff(1).unwrap() - (z0.powi(4) * 2.0).inv()).norm() < 1e-12);
        let t = c(0.1, 0.05);
        let direct = k.eval(&airy, Point::Z(z0), t).unwrap();
        let expected = (t * (z0 * z0 - t * t) * 2.0).inv();
        assert!((direct - expected).norm() < 1e-12 * expected.norm());
    }

    #[test]
    fn klein_kernel_is_normalized_and_matches_torus() {
        let tw = TwistSection::from_zeros(&[c(2.0, 0.0), c(3.0, 1.0)]).unwrap();
        let cur = SpectralCurve::hyperelliptic(CPoly::from_real(&[-1.0, 0.0, 0.0, 0.0, 1.0]), Some(tw)).unwrap();
        let cb = cycle_basis(&cur, CycleOpts::default()).unwrap();
        let b = symmetrize_b(&cur, &bergman(&cur, Some(&cb)).unwrap());
        let v = normalized_basis(&cur, &cb).unwrap();
        let opts = QuadOpts::default();
        for x2 in [c(0.3, 2.1), c(-2.2, -0.4), c(1.9, -1.7)] {
            let p2 = cur.point_over(x2, 1);
            let a = cb.a.integrate(&cur, &|x, y| b.eval(Point::XY { x, y }, p2).unwrap(), opts).unwrap();
            assert!(a.norm() < 1e-8, "A-period {a}");
            let bp = cb.b.integrate(&cur, &|x, y| b.eval(Point::XY { x, y }, p2).unwrap(), opts).unwrap();
            let (_, y2) = cur.xy(p2);
            let want = C64::new(0.0, 2.0 * std::f64::consts::PI) * v.per_dx(x2, y2);
            assert!((bp - want).norm() < 1e-6, "{bp} vs {want}");
        }
        let torus = b.torus().unwrap();
        assert!((torus.c - torus.lattice().g2_eisenstein()).norm() < 1e-8);
        for (x1, x2) in [(c(0.4, 0.3), c(-0.5, 0.8)), (c(1.3, -0.2), c(0.1, -0.9))] {
            let p1 = cur.point_over(x1, 1);
            let p2 = cur.point_over(x2, -1);
            let lhs = b.eval(p1, p2).unwrap();
            let rhs = torus.eval(cur.xy(p1), cur.xy(p2)).unwrap();
            assert!((lhs - rhs).norm() < 1e-8 * lhs.norm().max(1.0), "{lhs} vs {rhs}");
        }
    }

    #[test]
    fn sigma_diagonal_limit() {
        let cur = SpectralCurve::hyperelliptic(CPoly::from_real(&[-1.0, 0.0, 0.0, 0.0, 1.0]), None).unwrap();
        let cb = cycle_basis(&cur, CycleOpts::default()).unwrap();
        let b = bergman(&cur, Some(&cb)).unwrap();
        let x = c(0.7, 0.4);
        let p = cur.point_over(x, 1);
        let (_, y) = cur.xy(p);
        let eps = c(1e-4, 0.0);
        let q = Point::XY { x: x + eps, y: -cur.y_near(x + eps, y) };
        let lim = b.at_sigma_diagonal(p).unwrap();
        assert!((b.eval(p, q).unwrap() - lim).norm() < 1e-3 * lim.norm().max(1.0));
    }
}
