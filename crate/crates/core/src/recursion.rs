//! The residue recursion for `W_{g,n}`: exact rational mode on genus-0
//! parametric curves with rational ramification points, and a pointwise
//! evaluable mode by nested contour quadrature on any supported curve.

use std::collections::HashMap;
use std::sync::{Arc, RwLock};

use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::curve::{x_series_q, involution_from_x, CurveModel, Point, RamLocation, SpectralCurve};
use crate::error::{Error, Result};
use crate::kernels::{bergman, recursion_kernel, symmetrize_b, variant_factor, Bidifferential, Chart, RecursionKernel, Variant};
use crate::mpoly::{MPoly, Monomial, Substitution};
use crate::periods::CycleBasis;
use crate::poly::{CPoly, QPoly, QRat};
use crate::quad::circle_residue_checked;
use crate::series::{rat, rational_to_f64, LocalSeries, EXACT};

type C64 = Complex64;
type QSeries = LocalSeries<BigRational>;
type MSeries = LocalSeries<MPoly>;

/// Exact rational expressions or pointwise evaluation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Mode {
    Exact,
    Evaluable,
}

/// Overall scale of the stable differentials.
///
/// `SigmaBase` is the literal recursion with kernel base point `sigma(z)`.
/// `ResidueLemma` rescales `W_{g,n}` by `(-1/2)^{2g-2+n}` so that
/// `W_{0,3} = sum_a Res B B B / (dx dy)` exactly.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Normalization {
    SigmaBase,
    ResidueLemma,
}

impl Normalization {
    pub fn factor(self, g: u32, n: u32) -> f64 {
        match self {
            Normalization::SigmaBase => 1.0,
            Normalization::ResidueLemma => (-0.5f64).powi(2 * g as i32 - 2 + n as i32),
        }
    }

    fn factor_q(self, g: u32, n: u32) -> BigRational {
        match self {
            Normalization::SigmaBase => BigRational::one(),
            Normalization::ResidueLemma => {
                let k = 2 * g as i32 - 2 + n as i32;
                let mut f = BigRational::one();
                for _ in 0..k {
                    f *= rat(-1, 2);
                }
                f
            }
        }
    }
}

/// Recursion settings.
#[derive(Clone, Debug)]
pub struct RecursionSetup {
    pub variant: Variant,
    pub normalization: Normalization,
    /// `W01 = f(x) y dx` for the Hitchin-global variant.
    pub w01_factor: QPoly,
    pub contour_nodes: usize,
    pub residue_tol: f64,
    /// Floor on the exact truncation order at each ramification point.
    pub series_order: i32,
}

impl Default for RecursionSetup {
    fn default() -> Self {
        RecursionSetup {
            variant: Variant::Ordinary,
            normalization: Normalization::SigmaBase,
            w01_factor: QPoly::new(vec![BigRational::one()]),
            contour_nodes: 64,
            residue_tol: 1e-9,
            series_order: 0,
        }
    }
}

impl RecursionSetup {
    pub fn with_variant(variant: Variant) -> Self {
        RecursionSetup { variant, ..Default::default() }
    }
}

struct ExactData {
    x: QRat,
    y: QRat,
    twist: Option<QPoly>,
    centers: Vec<BigRational>,
    centers_c: Vec<C64>,
}

/// Local data at one exact ramification point to a fixed order.
struct ExactLocal {
    sigma: QSeries,
    dsigma: QSeries,
    /// `rho / ((y - y o sigma) x')`.
    d: QSeries,
    /// `W01` per `dt` as a series in `t`.
    w01: QSeries,
    /// `x'` and `y'` at `a + t`.
    dx: QSeries,
    dy: QSeries,
    rho: QSeries,
}

/// Recursion engine over one curve and one setup; memoizes exact results.
pub struct Engine {
    pub curve: SpectralCurve,
    pub b: Bidifferential,
    pub setup: RecursionSetup,
    kernels: Vec<RecursionKernel>,
    exact: Option<ExactData>,
    store: RwLock<HashMap<(u32, u32), Arc<MPoly>>>,
}

impl std::fmt::Debug for Engine {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Engine").field("variant", &self.setup.variant).finish()
    }
}

impl Engine {
    pub fn new(curve: &SpectralCurve, cycles: Option<&CycleBasis>, setup: RecursionSetup) -> Result<Arc<Self>> {
        let ram = curve.ramification_points()?;
        if setup.variant == Variant::Twisted && curve.twist.is_none() {
            return Err(Error::UnsupportedMode("twisted recursion needs a twist".into()));
        }
        let mut b = bergman(curve, cycles)?;
        if setup.variant == Variant::Twisted {
            b = symmetrize_b(curve, &b);
        }
        let w01c = setup.w01_factor.to_cpoly();
        let kernels = (0..ram.len())
            .map(|i| Ok(recursion_kernel(curve, &b, i, setup.variant)?.with_w01_factor(w01c.clone())))
            .collect::<Result<Vec<_>>>()?;
        let exact = match &curve.model {
            CurveModel::Parametric { x, y } if ram.iter().all(|r| r.exact.is_some()) => {
                let twist = curve.twist.as_ref().and_then(|t| t.exact.clone());
                if setup.variant == Variant::Twisted && twist.is_none() {
                    None
                } else {
                    let centers: Vec<BigRational> = ram.iter().map(|r| r.exact.clone().unwrap()).collect();
                    let centers_c = centers.iter().map(|c| C64::new(rational_to_f64(c), 0.0)).collect();
                    Some(ExactData { x: x.clone(), y: y.clone(), twist, centers, centers_c })
                }
            }
            _ => None,
        };
        Ok(Arc::new(Engine { curve: curve.clone(), b, setup, kernels, exact, store: RwLock::new(HashMap::new()) }))
    }

    pub fn supports_exact(&self) -> bool {
        self.exact.is_some()
    }

    fn exact_data(&self) -> Result<&ExactData> {
        self.exact.as_ref().ok_or_else(|| {
            Error::UnsupportedMode("exact mode needs a genus-0 parametric curve with rational ramification points".into())
        })
    }

    /// Exact centers (ramification points) used by exact expressions.
    pub fn centers(&self) -> Result<&[BigRational]> {
        Ok(&self.exact_data()?.centers)
    }

    pub fn compute_w(self: &Arc<Self>, g: u32, n: u32, mode: Mode) -> Result<MultiDifferential> {
        if n == 0 || (2 * g as i64 - 2 + n as i64) < 0 {
            return Err(Error::InvalidCurve(format!("W_{{{g},{n}}} is not defined")));
        }
        let repr = match mode {
            Mode::Exact => {
                self.exact_data()?;
                match (g, n) {
                    (0, 1) => ExactForm::W01,
                    (0, 2) => ExactForm::Bergman,
                    _ => {
                        let p = self.exact_w(g, n)?;
                        ExactForm::Poly(Arc::new(p.scale(&self.setup.normalization.factor_q(g, n))))
                    }
                }
                .into()
            }
            Mode::Evaluable => Representation::Evaluable,
        };
        Ok(MultiDifferential {
            g,
            n,
            variant: self.setup.variant,
            mode,
            repr,
            b_pole_divisor: self.curve.b_divisor(),
            engine: self.clone(),
        })
    }

    // ---------------------------------------------------------------- exact

    fn exact_local(&self, k: usize, order: i32) -> Result<ExactLocal> {
        let ex = self.exact_data()?;
        let a = &ex.centers[k];
        let xs = x_series_q(&ex.x, a, order + 2)?;
        let sigma = involution_from_x(&xs)?.truncate(order);
        let dsigma = sigma.derivative();
        let z = QSeries::var(order + 2).add_const(a.clone());
        let ys = ex.y.on_series(&z)?;
        let ysig = ys.compose(&sigma)?;
        let dx = xs.derivative();
        let dy = ys.derivative();
        let xfull = xs.add_const(ex.x.eval(a).unwrap());
        let rho = match self.setup.variant {
            Variant::Ordinary => QSeries::constant(BigRational::one(), EXACT),
            Variant::Twisted => ex.twist.as_ref().unwrap().on_series(&xfull),
            Variant::HitchinGlobal => self.setup.w01_factor.on_series(&xfull).recip()?,
        };
        let d = rho.checked_div(&(&(&ys - &ysig) * &dx))?;
        let w01 = &(&ys * &dx) * &rho.recip()?;
        Ok(ExactLocal { sigma, dsigma, d, w01, dx, dy, rho })
    }

    fn exact_w(&self, g: u32, n: u32) -> Result<MPoly> {
        if let Some(p) = self.store.read().unwrap().get(&(g, n)) {
            return Ok((**p).clone());
        }
        let p = self.exact_stable(g, n)?;
        self.store.write().unwrap().entry((g, n)).or_insert_with(|| Arc::new(p.clone()));
        Ok(p)
    }

    /// Bound on the pole order at a ramification point of `W_{g,n}` in one slot.
    fn slot_pole(g: u32, n: u32) -> i32 {
        match (g, n) {
            (0, 1) | (0, 2) => 0,
            _ => 2 * (3 * g as i32 - 2 + n as i32),
        }
    }

    /// Bound on the pole order in `t` of the recursion bracket.
    fn bracket_pole(g: u32, n: u32) -> i32 {
        let mut p = 0;
        if g >= 1 {
            p = if (g - 1, n + 1) == (0, 2) { 2 } else { 2 * Self::slot_pole(g - 1, n + 1) };
        }
        for g1 in 0..=g {
            for i in 0..n {
                p = p.max(Self::slot_pole(g1, i + 1) + Self::slot_pole(g - g1, n - i));
            }
        }
        p
    }

    /// The `t^-1` coefficient of `N D S` at center `k`, where `S` is built by
    /// `bracket` up to order 0 from substitutions known to `order`.
    fn residue_at_center<F>(&self, k: usize, pole: i32, bracket: F) -> Result<MPoly>
    where
        F: Fn(&ExactLocal, &Substitution, &Substitution, i32) -> Result<MSeries>,
    {
        let order = (2 * pole + 4).max(self.setup.series_order);
        let loc = self.exact_local(k, order)?;
        let tsub = Substitution { center: k as u8, u: QSeries::var(order), jacobian: QSeries::constant(BigRational::one(), EXACT) };
        let ssub = Substitution { center: k as u8, u: loc.sigma.clone(), jacobian: loc.dsigma.clone() };
        let s = bracket(&loc, &tsub, &ssub, order)?;
        let nd = &self.n_series(k as u8, &loc.sigma, pole + 1) * &loc.d.truncate(pole).map(|c| MPoly::constant(c.clone()));
        let mut acc = MPoly::zero();
        for j in s.lowest_order()..=0 {
            let (Some(a), Some(b)) = (s.coeff(j), nd.coeff(-1 - j)) else {
                return Err(Error::TruncationWindow { needed: -1 - j, available: nd.truncation_order() });
            };
            if !a.is_zero() && !b.is_zero() {
                acc = acc + a * b;
            }
        }
        Ok(acc)
    }

    fn exact_stable(&self, g: u32, n: u32) -> Result<MPoly> {
        let ex = self.exact_data()?;
        let pole = Self::bracket_pole(g, n);
        let rest: Vec<u8> = (1..n as u8).collect();
        let mut total = MPoly::zero();
        for k in 0..ex.centers.len() {
            total = total
                + self.residue_at_center(k, pole, |loc, tsub, ssub, order| {
                    let mut s = MSeries::zero(0);
                    if g >= 1 {
                        s = &s + &self.two_arg(g - 1, n + 1, tsub, ssub, loc, order, 0)?;
                    }
                    for g1 in 0..=g {
                        for mask in 0u32..(1 << rest.len()) {
                            let i_set: Vec<u8> = rest.iter().enumerate().filter(|(b, _)| mask >> b & 1 == 1).map(|(_, s)| *s).collect();
                            let j_set: Vec<u8> = rest.iter().enumerate().filter(|(b, _)| mask >> b & 1 == 0).map(|(_, s)| *s).collect();
                            let g2 = g - g1;
                            if (g1 == 0 && i_set.is_empty()) || (g2 == 0 && j_set.is_empty()) {
                                continue;
                            }
                            let pa = Self::slot_pole(g1, i_set.len() as u32 + 1);
                            let pb = Self::slot_pole(g2, j_set.len() as u32 + 1);
                            let a = self.one_arg(g1, &i_set, tsub, order, pb)?;
                            let b = self.one_arg(g2, &j_set, ssub, order, pa)?;
                            s = &s + &(&a * &b).truncate(0);
                        }
                    }
                    Ok(s)
                })?;
        }
        Ok(total)
    }

    /// `int_{sigma z}^{z} B(., z0) = sum_m (t^m - sigma^m) Z0^{-m-1}` to `order`.
    fn n_series(&self, center: u8, sigma: &QSeries, order: i32) -> MSeries {
        let mut acc = MSeries::zero(order);
        let t = QSeries::var(order);
        let sigma = sigma.truncate(order);
        let mut tp = t.clone();
        let mut sp = sigma.clone();
        for m in 1..=order + 1 {
            let diff = &tp - &sp;
            let mono = MPoly::term(Monomial::single(0, center, -m - 1), BigRational::one());
            acc = &acc + &diff.map(|c| mono.scale(c));
            tp = &tp * &t;
            sp = &sp * &sigma;
        }
        acc.truncate(order)
    }

    /// `W_{g', |I|+1}(u, I) du/dt` up to order `need`.
    fn one_arg(&self, g: u32, slots: &[u8], sub: &Substitution, order: i32, need: i32) -> Result<MSeries> {
        match (g, slots.len()) {
            (0, 0) => {
                let loc = self.exact_local(sub.center as usize, order)?;
                let w = loc.w01.compose(&sub.u)?;
                Ok((&w * &sub.jacobian).truncate(need).map(|c| MPoly::constant(c.clone())))
            }
            (0, 1) => Ok(bergman_expansion(sub, slots[0], need)),
            _ => {
                let w = self.exact_w(g, slots.len() as u32 + 1)?;
                let w = w.relabel(&|s| if s == 0 { 200 } else { slots[s as usize - 1] });
                w.substitute_upto(&[(200, sub)], &self.exact_data()?.centers, need)
            }
        }
    }

    /// `W_{g', n'}(t, sigma t, J) dt d(sigma)/dt` up to order `need`.
    #[allow(clippy::too_many_arguments)]
    fn two_arg(&self, g: u32, n: u32, tsub: &Substitution, ssub: &Substitution, loc: &ExactLocal, order: i32, need: i32) -> Result<MSeries> {
        if (g, n) == (0, 2) {
            let t = QSeries::var(order);
            let d = &t - &loc.sigma;
            let b = loc.dsigma.checked_div(&(&d * &d))?;
            return Ok(b.truncate(need).map(|c| MPoly::constant(c.clone())));
        }
        let w = self.exact_w(g, n)?;
        let w = w.relabel(&|s| match s {
            0 => 200,
            1 => 201,
            s => s - 1,
        });
        w.substitute_upto(&[(200, tsub), (201, ssub)], &self.exact_data()?.centers, need)
    }

    /// Exact `sum_a Res B(., z0) B(., z1) B(., z2) rho / (dx dy)`, scaled to the
    /// engine's normalization (`-2` times the residue sum for `SigmaBase`).
    pub fn w03_direct_exact(&self) -> Result<MPoly> {
        let ex = self.exact_data()?;
        let order = 24;
        let mut total = MPoly::zero();
        for k in 0..ex.centers.len() {
            let loc = self.exact_local(k, order)?;
            let tsub = Substitution { center: k as u8, u: QSeries::var(order), jacobian: QSeries::constant(BigRational::one(), EXACT) };
            let mut prod = bergman_expansion(&tsub, 0, order);
            prod = &prod * &bergman_expansion(&tsub, 1, order);
            prod = &prod * &bergman_expansion(&tsub, 2, order);
            let den = loc.rho.checked_div(&(&loc.dx * &loc.dy))?;
            let integrand = &prod * &den.map(|c| MPoly::constant(c.clone()));
            total = total + integrand.residue()?;
        }
        Ok(match self.setup.normalization {
            Normalization::SigmaBase => total.scale(&rat(-2, 1)),
            Normalization::ResidueLemma => total,
        })
    }

    /// `Res K (W01(t) W_{g,n}(sigma t, J) + W_{g,n}(t, J) W01(sigma t))`: the
    /// terms the recursion excludes, evaluated with the current `W_{g,n}`.
    pub fn excluded_terms(&self, g: u32, n: u32) -> Result<MPoly> {
        let ex = self.exact_data()?;
        let rest: Vec<u8> = (1..n as u8).collect();
        let p = Self::slot_pole(g, n);
        let mut total = MPoly::zero();
        for k in 0..ex.centers.len() {
            total = total
                + self.residue_at_center(k, p, |_, tsub, ssub, order| {
                    let a = &self.one_arg(0, &[], tsub, order, p)? * &self.one_arg(g, &rest, ssub, order, 0)?;
                    let b = &self.one_arg(g, &rest, tsub, order, 0)? * &self.one_arg(0, &[], ssub, order, p)?;
                    Ok((&a + &b).truncate(0))
                })?;
        }
        Ok(total)
    }

    // ------------------------------------------------------------ evaluable

    /// `W_{g,n}` at `points`, per unit in each argument, in the engine's normalization.
    pub fn eval_w(&self, g: u32, n: u32, points: &[Point]) -> Result<C64> {
        if points.len() != n as usize {
            return Err(Error::InvalidCurve(format!("W_{{{g},{n}}} needs {n} points")));
        }
        Ok(self.eval_sb(g, points)? * self.setup.normalization.factor(g, n))
    }

    fn w01_value(&self, p: Point) -> Result<C64> {
        let (x, y) = self.curve.xy(p);
        let dx = match (&self.curve.model, p) {
            (CurveModel::Parametric { x: xr, .. }, Point::Z(z)) => xr.derivative_c(z),
            _ => C64::one(),
        };
        let rho = variant_factor(&self.curve, self.setup.variant, &self.setup.w01_factor.to_cpoly(), x)?;
        Ok(y * dx / rho)
    }

    fn eval_sb(&self, g: u32, points: &[Point]) -> Result<C64> {
        let n = points.len();
        match (g, n) {
            (0, 1) => return self.w01_value(points[0]),
            (0, 2) => {
                return match (points[0], points[1]) {
                    (Point::XY { x: x1, y: y1 }, Point::XY { x: x2, y: y2 }) if x1 == x2 && y1 == -y2 => {
                        self.b.at_sigma_diagonal(points[0])
                    }
                    (p, q) => self.b.eval(p, q),
                }
            }
            _ => {}
        }
        let mut total = C64::zero();
        for (k, kern) in self.kernels.iter().enumerate() {
            let chart = &kern.chart;
            let r = self.radius(k, points)?;
            let f = |s: C64| -> Result<C64> {
                let kv = kern.eval(&self.curve, points[0], s)?;
                let z = chart.point(s);
                let jz = chart.unit_ds(s);
                let (zs, jzs) = chart.sigma(s)?;
                let mut acc = C64::zero();
                if g >= 1 {
                    let mut args = vec![z, zs];
                    args.extend_from_slice(&points[1..]);
                    acc += self.eval_sb(g - 1, &args)?;
                }
                let rest = &points[1..];
                for g1 in 0..=g {
                    for mask in 0u32..(1 << rest.len()) {
                        let mut a = vec![z];
                        let mut b = vec![zs];
                        for (i, p) in rest.iter().enumerate() {
                            if mask >> i & 1 == 1 {
                                a.push(*p)
                            } else {
                                b.push(*p)
                            }
                        }
                        let g2 = g - g1;
                        if (g1 == 0 && a.len() == 1) || (g2 == 0 && b.len() == 1) {
                            continue;
                        }
                        acc += self.eval_sb(g1, &a)? * self.eval_sb(g2, &b)?;
                    }
                }
                Ok(kv * acc * jz * jzs)
            };
            total += circle_residue_checked(&f, r, self.setup.contour_nodes, self.setup.residue_tol, "recursion residue")?;
        }
        Ok(total)
    }

    /// Contour radius at the `k`-th ramification point: a fifth of the chart
    /// distance to the nearest other ramification point, twist zero or argument.
    fn radius(&self, k: usize, points: &[Point]) -> Result<f64> {
        let chart = &self.kernels[k].chart;
        let mut d = f64::INFINITY;
        for (j, other) in self.kernels.iter().enumerate() {
            if j != k {
                if let Some(p) = centre_point(&other.chart) {
                    d = d.min(chart.s_distance(&p));
                }
            }
        }
        if let Some(tw) = &self.curve.twist {
            let own = centre_point(chart).map(|p| p.x_coord());
            for z in &tw.zeros {
                let pts: Vec<Point> = match &self.curve.model {
                    CurveModel::Hyperelliptic { .. } => vec![Point::XY { x: *z, y: C64::zero() }],
                    CurveModel::Parametric { .. } => self.curve.b_divisor(),
                };
                for p in pts {
                    let x_here = match (&self.curve.model, own) {
                        (CurveModel::Hyperelliptic { .. }, Some(o)) => (o - z).norm() < 1e-9,
                        (CurveModel::Parametric { x, .. }, Some(o)) => (x.eval_c(o) - z).norm() < 1e-9,
                        _ => false,
                    };
                    if !x_here {
                        d = d.min(chart.s_distance(&p));
                    }
                }
            }
        }
        for p in points {
            d = d.min(chart.s_distance(p));
        }
        if !d.is_finite() || d <= 0.0 {
            return Err(Error::FramePole("argument at a ramification point".into()));
        }
        Ok(0.2 * d)
    }

    /// `sum_a Res B(., p0) B(., p1) B(., p2) rho / (dx dy)` by contour
    /// quadrature, scaled to the engine's normalization.
    pub fn w03_direct(&self, p: [Point; 3]) -> Result<C64> {
        let mut total = C64::zero();
        let w01c = self.setup.w01_factor.to_cpoly();
        for (k, kern) in self.kernels.iter().enumerate() {
            let chart = &kern.chart;
            let r = self.radius(k, &p)?;
            let f = |s: C64| -> Result<C64> {
                let q = chart.point(s);
                let j = chart.unit_ds(s);
                let mut prod = C64::one();
                for pi in &p {
                    prod *= self.b.eval(q, *pi)? * j;
                }
                let (x, dy_ds) = match (&self.curve.model, q) {
                    (CurveModel::Hyperelliptic { p: poly }, Point::XY { x, y }) => (x, poly.derivative().eval(x) / (y * 2.0) * chart.dx_ds(s)),
                    (CurveModel::Parametric { x, y }, Point::Z(z)) => (x.eval_c(z), y.derivative_c(z)),
                    _ => unreachable!(),
                };
                let rho = variant_factor(&self.curve, self.setup.variant, &w01c, x)?;
                Ok(prod * rho / (chart.dx_ds(s) * dy_ds))
            };
            total += circle_residue_checked(&f, r, self.setup.contour_nodes, self.setup.residue_tol, "W03 residue")?;
        }
        Ok(match self.setup.normalization {
            Normalization::SigmaBase => total * -2.0,
            Normalization::ResidueLemma => total,
        })
    }

    pub fn chart(&self, k: usize) -> &Chart {
        &self.kernels[k].chart
    }

    pub fn ram_count(&self) -> usize {
        self.kernels.len()
    }
}

fn centre_point(chart: &Chart) -> Option<Point> {
    match chart {
        Chart::Branch { loc: RamLocation::X(a), .. } => Some(Point::XY { x: *a, y: C64::zero() }),
        Chart::Branch { .. } => None,
        Chart::Param { a, .. } => Some(Point::Z(*a)),
    }
}

/// `B(a + u, z_slot) du/dt = sum_m (m + 1) u^m (z_slot - a)^{-m-2} du/dt`.
fn bergman_expansion(sub: &Substitution, slot: u8, order: i32) -> MSeries {
    let mut acc = MSeries::zero(order);
    let mut up = QSeries::constant(BigRational::one(), EXACT);
    for m in 0..=order {
        let mono = MPoly::term(Monomial::single(slot, sub.center, -m - 2), BigRational::from_integer((m + 1).into()));
        acc = &acc + &up.truncate(order).map(|c| mono.scale(c));
        up = (&up * &sub.u).truncate(order);
    }
    (&acc * &sub.jacobian.truncate(order).map(|c| MPoly::constant(c.clone()))).truncate(order)
}

/// Closed forms held by an exact differential.
#[derive(Clone, Debug)]
pub enum ExactForm {
    Poly(Arc<MPoly>),
    W01,
    Bergman,
}

#[derive(Clone, Debug)]
pub enum Representation {
    ExactRational(ExactForm),
    Evaluable,
}

impl From<ExactForm> for Representation {
    fn from(e: ExactForm) -> Self {
        Representation::ExactRational(e)
    }
}

/// A computed `W_{g,n}`.
#[derive(Clone, Debug)]
pub struct MultiDifferential {
    pub g: u32,
    pub n: u32,
    pub variant: Variant,
    pub mode: Mode,
    pub repr: Representation,
    pub b_pole_divisor: Vec<Point>,
    engine: Arc<Engine>,
}

impl MultiDifferential {
    pub fn engine(&self) -> &Arc<Engine> {
        &self.engine
    }

    pub fn exact_poly(&self) -> Option<&MPoly> {
        match &self.repr {
            Representation::ExactRational(ExactForm::Poly(p)) => Some(p),
            _ => None,
        }
    }

    /// Canonical text form of an exact differential.
    pub fn serialize(&self) -> Result<String> {
        let n = self.n as usize;
        match &self.repr {
            Representation::ExactRational(ExactForm::Poly(p)) => Ok(p.serialize(n, self.engine.centers()?)),
            Representation::ExactRational(ExactForm::Bergman) => Ok("1 * (z0 - z1)^-2 * dz0dz1".into()),
            Representation::ExactRational(ExactForm::W01) => Ok("y(z0) * dx(z0)".into()),
            Representation::Evaluable => Err(Error::UnsupportedMode("evaluable differentials have no closed form".into())),
        }
    }
}

/// Value per unit `dz_i` (or `dx_i`) at `points`.
pub fn evaluate_w(w: &MultiDifferential, points: &[Point]) -> Result<C64> {
    if points.len() != w.n as usize {
        return Err(Error::InvalidCurve(format!("expected {} points", w.n)));
    }
    match &w.repr {
        Representation::ExactRational(ExactForm::Poly(p)) => {
            let zs: Vec<C64> = points
                .iter()
                .map(|p| match p {
                    Point::Z(z) => Ok(*z),
                    _ => Err(Error::InvalidCurve("exact differentials take z points".into())),
                })
                .collect::<Result<_>>()?;
            let centers = &w.engine.exact_data()?.centers_c;
            if zs.iter().any(|z| centers.iter().any(|c| (z - c).norm() < 1e-300)) {
                return Err(Error::FramePole("point at a ramification point".into()));
            }
            Ok(p.eval(&zs, centers))
        }
        _ => w.engine.eval_w(w.g, w.n, points),
    }
}

/// Direct residue formula for `W_{0,3}` at three points.
pub fn w03_direct(engine: &Engine, p0: Point, p1: Point, p2: Point) -> Result<C64> {
    engine.w03_direct([p0, p1, p2])
}

/// Outcome of [`check_properties`].
#[derive(Clone, Debug, Default, Serialize)]
pub struct PropertyReport {
    pub symmetry_defect: f64,
    /// Largest coefficient of the polar part of `W(t) + W(sigma t)` (exact), or
    /// the relative size of the sum near the ramification points (evaluable).
    pub oddness_defect: f64,
    /// Whether the whole truncated sum vanishes (exact mode only).
    pub odd_exactly: bool,
    /// For `W_{0,2}` on degree-2 covers: size of `B(z1,z2) + B(sigma z1, z2)`
    /// and its deviation from `dx dx / (x1 - x2)^2`.
    pub anomaly: Option<(f64, f64)>,
    pub pole_centers_ok: bool,
    pub max_pole_order: i32,
    pub pole_order_bound: i32,
    /// Growth ratio of `|W|` approaching regular points (about 1 without a pole).
    pub growth_ratio: Option<f64>,
}

impl PropertyReport {
    pub fn pass(&self, tol: f64) -> bool {
        self.symmetry_defect <= tol
            && self.oddness_defect <= tol
            && self.pole_centers_ok
            && self.max_pole_order <= self.pole_order_bound
            && self.growth_ratio.is_none_or(|r| r < 10.0)
            && self.anomaly.is_none_or(|(_, dev)| dev <= tol.max(1e-8))
    }
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for i in 0..=p.len() {
            let mut q = p.clone();
            q.insert(i, n - 1);
            out.push(q);
        }
    }
    out
}

/// Symmetry, oddness and pole checks.
pub fn check_properties(w: &MultiDifferential, samples: &[Vec<Point>]) -> Result<PropertyReport> {
    let eng = &w.engine;
    let (g, n) = (w.g, w.n);
    let mut rep = PropertyReport {
        pole_order_bound: if 3 * g as i32 - 2 + n as i32 > 0 { 2 * (3 * g as i32 - 2 + n as i32) } else { 2 },
        pole_centers_ok: true,
        ..Default::default()
    };
    if (g, n) == (0, 2) {
        let global = match &eng.curve.model {
            CurveModel::Hyperelliptic { .. } => true,
            CurveModel::Parametric { x, .. } => x.num.degree().max(x.den.degree()) == 2,
        };
        if global {
            rep.anomaly = Some(w02_anomaly(eng, samples)?);
        }
        rep.odd_exactly = false;
        rep.max_pole_order = 2;
        return Ok(rep);
    }
    if let Some(p) = w.exact_poly() {
        let centers = eng.centers()?.to_vec();
        for perm in permutations(n as usize) {
            let q = p.relabel(&|s| perm[s as usize] as u8);
            rep.symmetry_defect = rep.symmetry_defect.max((q - p.clone()).max_abs());
        }
        rep.odd_exactly = true;
        let order = 2 * (0..n as u8).map(|s| p.max_pole_order(s)).max().unwrap_or(0) + 4;
        for k in 0..centers.len() {
            let loc = eng.exact_local(k, order)?;
            let tsub = Substitution { center: k as u8, u: QSeries::var(order), jacobian: QSeries::constant(BigRational::one(), EXACT) };
            let ssub = Substitution { center: k as u8, u: loc.sigma.clone(), jacobian: loc.dsigma.clone() };
            for slot in 0..n as u8 {
                let sum = &p.substitute(&[(slot, &tsub)], &centers)? + &p.substitute(&[(slot, &ssub)], &centers)?;
                let lo = sum.lowest_order();
                for (i, c) in sum.coeffs().iter().enumerate() {
                    let e = lo + i as i32;
                    if e < 0 {
                        rep.oddness_defect = rep.oddness_defect.max(c.max_abs());
                    }
                    if !c.is_zero() {
                        rep.odd_exactly = false;
                    }
                }
            }
        }
        for m in p.terms.keys() {
            for &(_, ce, e) in &m.0 {
                if ce as usize >= centers.len() || e >= 0 {
                    rep.pole_centers_ok = false;
                }
            }
        }
        rep.max_pole_order = (0..n as u8).map(|s| p.max_pole_order(s)).max().unwrap_or(0);
        return Ok(rep);
    }
    // evaluable mode
    let eval = |pts: &[Point]| eng.eval_w(g, n, pts);
    for tuple in samples {
        let base = eval(tuple)?;
        for perm in permutations(n as usize) {
            let q: Vec<Point> = perm.iter().map(|&i| tuple[i]).collect();
            let v = eval(&q)?;
            rep.symmetry_defect = rep.symmetry_defect.max((v - base).norm() / base.norm().max(1e-300));
        }
    }
    if let Some(tuple) = samples.first() {
        for k in 0..eng.ram_count() {
            let chart = eng.chart(k);
            let rest: Vec<Point> = tuple[1..].to_vec();
            let dmin = rest.iter().map(|p| chart.s_distance(p)).fold(f64::INFINITY, f64::min);
            let s = C64::from_polar(0.05 * dmin.min(1.0), 0.3);
            let p = chart.point(s);
            let (ps, jac) = chart.sigma(s)?;
            let j = jac / chart.unit_ds(s);
            let mut a = vec![p];
            a.extend_from_slice(&rest);
            let mut b = vec![ps];
            b.extend_from_slice(&rest);
            let va = eval(&a)?;
            let vb = eval(&b)? * j;
            rep.oddness_defect = rep.oddness_defect.max((va + vb).norm() / va.norm().max(1e-300));
        }
        // growth probe at the first sample's first point, which is regular
        let q0 = tuple[0];
        let shifted = |eps: f64| -> Result<C64> {
            let p = match q0 {
                Point::Z(z) => Point::Z(z + C64::from_polar(eps, 0.7)),
                Point::XY { x, y } => {
                    let xn = x + C64::from_polar(eps, 0.7);
                    Point::XY { x: xn, y: eng.curve.y_near(xn, y) }
                }
            };
            let mut a = vec![p];
            a.extend_from_slice(&tuple[1..]);
            eval(&a)
        };
        let r1 = shifted(1e-3)?.norm();
        let r2 = shifted(1e-4)?.norm();
        rep.growth_ratio = Some(r2 / r1.max(1e-300));
    }
    Ok(rep)
}

fn w02_anomaly(eng: &Engine, samples: &[Vec<Point>]) -> Result<(f64, f64)> {
    let mut size: f64 = 0.0;
    let mut dev: f64 = 0.0;
    for k in 0..eng.ram_count() {
        let chart = eng.chart(k);
        for tuple in samples {
            let q = tuple[1];
            let s = C64::from_polar(0.2 * chart.s_distance(&q).min(1.0), 0.4);
            let p = chart.point(s);
            let (ps, jac) = chart.sigma(s)?;
            let j = jac / chart.unit_ds(s);
            let sum = eng.b.eval(p, q)? + eng.b.eval(ps, q)? * j;
            let expected = match (&eng.curve.model, p, q) {
                (CurveModel::Parametric { x, .. }, Point::Z(z1), Point::Z(z2)) => {
                    let d = x.eval_c(z1) - x.eval_c(z2);
                    x.derivative_c(z1) * x.derivative_c(z2) / (d * d)
                }
                (CurveModel::Hyperelliptic { .. }, Point::XY { x: x1, .. }, Point::XY { x: x2, .. }) => (x1 - x2).powi(-2),
                _ => return Err(Error::InvalidCurve("point does not match curve model".into())),
            };
            size = size.max(sum.norm());
            dev = dev.max((sum - expected).norm() / expected.norm().max(1e-300));
        }
    }
    Ok((size, dev))
}

/// Convenience for tests and the CLI: a complex polynomial as a `QPoly` when
/// every coefficient is a finite real float.
pub fn qpoly_from_cpoly(p: &CPoly) -> Option<QPoly> {
    p.0.iter()
        .map(|c| if c.im == 0.0 { BigRational::from_float(c.re) } else { None })
        .collect::<Option<Vec<_>>>()
        .map(QPoly::new)
}
