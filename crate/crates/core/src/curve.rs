//! Spectral curves: parametrized genus-0 covers and hyperelliptic genus-1
//! curves, their ramification points, local involutions, local frames, and
//! the twist section.

use std::sync::OnceLock;

use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::poly::{min_separation, CPoly, QPoly, QRat};
use crate::series::{Branch, LocalSeries, DEFAULT_ORDER, EXACT};

pub type C64 = Complex64;
type CSeries = LocalSeries<C64>;
type QSeries = LocalSeries<BigRational>;

/// Default separation threshold, in units of the minimal branch-point spacing.
pub const DEFAULT_SEPARATION: f64 = 0.1;

/// A twist section `s` on the base, given by its coefficients in `x`.
#[derive(Clone, Debug, PartialEq)]
pub struct TwistSection {
    pub s: CPoly,
    /// Exact coefficients when available (needed by the exact recursion).
    pub exact: Option<QPoly>,
    pub zeros: Vec<C64>,
}

impl TwistSection {
    pub fn new(s: CPoly) -> Result<Self> {
        let zeros = s.distinct_roots()?;
        Ok(TwistSection { s, exact: None, zeros })
    }

    pub fn exact(s: QPoly) -> Result<Self> {
        let c = s.to_cpoly();
        let zeros = c.distinct_roots()?;
        Ok(TwistSection { s: c, exact: Some(s), zeros })
    }

    /// Monic section with the given zeros.
    pub fn from_zeros(zeros: &[C64]) -> Result<Self> {
        Self::new(CPoly::from_roots(zeros))
    }

    /// The section `s = c` with no zeros.
    pub fn constant(c: C64) -> Self {
        TwistSection { s: CPoly(vec![c]), exact: None, zeros: Vec::new() }
    }

    pub fn eval(&self, x: C64) -> C64 {
        self.s.eval(x)
    }
}

/// The two supported curve models.
#[derive(Clone, Debug, PartialEq)]
pub enum CurveModel {
    /// `x = x(z)`, `y = y(z)` rational in a global coordinate `z`.
    Parametric { x: QRat, y: QRat },
    /// `y^2 = P(x)` with `deg P` in {3, 4}.
    Hyperelliptic { p: CPoly },
}

/// A point of the curve in the model's natural coordinates.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Point {
    Z(C64),
    XY { x: C64, y: C64 },
}

impl Point {
    pub fn x_coord(&self) -> C64 {
        match self {
            Point::Z(z) => *z,
            Point::XY { x, .. } => *x,
        }
    }
}

/// Where a ramification point sits.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum RamLocation {
    /// Parametric curve, at `z`.
    Z(C64),
    /// Hyperelliptic branch point over `x`.
    X(C64),
    /// Hyperelliptic branch point over `x = infinity`.
    Infinity,
}

/// A simple ramification point with its local data.
#[derive(Clone, Debug)]
pub struct RamPoint {
    pub location: RamLocation,
    pub at_infinity: bool,
    /// Exact location for parametric curves with a rational ramification point.
    pub exact: Option<BigRational>,
    /// Local involution in the point's local coordinate.
    pub involution: CSeries,
    pub exact_involution: Option<QSeries>,
}

impl RamPoint {
    /// `x` value of the point (infinite for the chart at infinity).
    pub fn x_value(&self, curve: &SpectralCurve) -> Option<C64> {
        match (&self.location, &curve.model) {
            (RamLocation::Z(z), CurveModel::Parametric { x, .. }) => Some(x.eval_c(*z)),
            (RamLocation::X(a), _) => Some(*a),
            _ => None,
        }
    }
}

/// Result of [`SpectralCurve::validate_good`].
#[derive(Clone, Debug)]
pub struct GoodReport {
    pub ramification: Vec<RamPoint>,
    pub all_simple: bool,
    pub dx_dy_disjoint: bool,
    pub twist_disjoint: bool,
    pub issues: Vec<String>,
}

impl GoodReport {
    pub fn good(&self) -> bool {
        self.all_simple && self.dx_dy_disjoint && self.twist_disjoint
    }
}

/// Local expansions of `x`, `y` and `s(x)` in a local coordinate `t`.
#[derive(Clone, Debug)]
pub struct LocalFrame {
    pub x: CSeries,
    pub y: CSeries,
    pub s: Option<CSeries>,
}

/// Where to center a local frame.
#[derive(Clone, Copy, Debug)]
pub enum FrameAt {
    /// The `i`-th ramification point.
    Ram(usize),
    /// A regular point; the local coordinate is `z - z0` or `x - x0`.
    Regular(Point),
}

#[derive(Clone, Debug)]
pub struct SpectralCurve {
    pub model: CurveModel,
    pub twist: Option<TwistSection>,
    pub genus: u32,
    ram: OnceLock<std::result::Result<Vec<RamPoint>, Error>>,
}

impl PartialEq for SpectralCurve {
    fn eq(&self, other: &Self) -> bool {
        self.model == other.model && self.twist == other.twist
    }
}

impl SpectralCurve {
    /// Genus-0 curve `x = x(z)`, `y = y(z)`.
    pub fn parametric(x: QRat, y: QRat) -> Result<Self> {
        if x.den.is_zero() || y.den.is_zero() {
            return Err(Error::InvalidCurve("zero denominator".into()));
        }
        if x.is_constant() {
            return Err(Error::InvalidCurve("x is constant".into()));
        }
        Ok(SpectralCurve { model: CurveModel::Parametric { x, y }, twist: None, genus: 0, ram: OnceLock::new() })
    }

    /// The Airy curve `x = z^2`, `y = z`.
    pub fn airy() -> Self {
        let q = |v: i64| BigRational::from_integer(v.into());
        let x = QRat::poly(QPoly::new(vec![q(0), q(0), q(1)]));
        let y = QRat::poly(QPoly::new(vec![q(0), q(1)]));
        Self::parametric(x, y).expect("airy is valid")
    }

    /// `y^2 = P(x)`, with an optional twist whose zeros must avoid the branch points.
    pub fn hyperelliptic(p: CPoly, twist: Option<TwistSection>) -> Result<Self> {
        Self::hyperelliptic_with(p, twist, true)
    }

    /// As [`Self::hyperelliptic`]; `check_twist = false` allows twist zeros on
    /// branch points (the degenerate `s ~ P` direction).
    pub fn hyperelliptic_with(p: CPoly, twist: Option<TwistSection>, check_twist: bool) -> Result<Self> {
        let d = p.degree();
        if d != 3 && d != 4 {
            return Err(Error::InvalidCurve(format!("degree {d} not in {{3, 4}}")));
        }
        let roots = p.distinct_roots()?;
        if let (Some(tw), true) = (&twist, check_twist) {
            let sep = 1e-6 * min_separation(&roots).min(1.0);
            for z in &tw.zeros {
                if roots.iter().any(|r| (r - z).norm() < sep) {
                    return Err(Error::TwistCollision(format!("{z}")));
                }
            }
        }
        Ok(SpectralCurve { model: CurveModel::Hyperelliptic { p }, twist, genus: 1, ram: OnceLock::new() })
    }

    pub fn with_twist(&self, twist: Option<TwistSection>) -> Result<Self> {
        match &self.model {
            CurveModel::Parametric { .. } => {
                let mut c = self.clone();
                c.twist = twist;
                c.ram = OnceLock::new();
                Ok(c)
            }
            CurveModel::Hyperelliptic { p } => Self::hyperelliptic(p.clone(), twist),
        }
    }

    pub fn hyper_poly(&self) -> Option<&CPoly> {
        match &self.model {
            CurveModel::Hyperelliptic { p } => Some(p),
            _ => None,
        }
    }

    pub fn twist_at(&self, x: C64) -> C64 {
        self.twist.as_ref().map(|t| t.eval(x)).unwrap_or(C64::one())
    }

    /// Finite branch points of a hyperelliptic curve.
    pub fn branch_points(&self) -> Vec<C64> {
        match &self.model {
            CurveModel::Hyperelliptic { p } => p.roots().unwrap_or_default(),
            _ => Vec::new(),
        }
    }

    /// Minimal distance between finite branch points.
    pub fn branch_spacing(&self) -> f64 {
        min_separation(&self.branch_points())
    }

    /// Principal square root of `P(x)` continued towards `y_ref`.
    pub fn y_near(&self, x: C64, y_ref: C64) -> C64 {
        let p = self.hyper_poly().expect("hyperelliptic");
        let y = p.eval(x).sqrt();
        if (y - y_ref).norm() <= (y + y_ref).norm() {
            y
        } else {
            -y
        }
    }

    /// Point over `x` on the sheet `sheet` (+1 principal root, -1 the other).
    pub fn point_over(&self, x: C64, sheet: i8) -> Point {
        let p = self.hyper_poly().expect("hyperelliptic");
        Point::XY { x, y: p.eval(x).sqrt() * sheet as f64 }
    }

    /// The global hyperelliptic involution, if the model has one.
    pub fn sigma(&self, p: Point) -> Option<Point> {
        match p {
            Point::XY { x, y } => Some(Point::XY { x, y: -y }),
            Point::Z(_) => None,
        }
    }

    /// `(x, y)` values at a point.
    pub fn xy(&self, p: Point) -> (C64, C64) {
        match (p, &self.model) {
            (Point::Z(z), CurveModel::Parametric { x, y }) => (x.eval_c(z), y.eval_c(z)),
            (Point::XY { x, y }, _) => (x, y),
            _ => panic!("point does not match curve model"),
        }
    }

    /// Checks simple ramification, disjoint zeros of `dx` and `dy`, and twist
    /// zeros away from ramification, collecting the ramification data.
    pub fn validate_good(&self) -> GoodReport {
        let mut issues = Vec::new();
        let mut all_simple = true;
        let mut dx_dy_disjoint = true;
        let mut twist_disjoint = true;
        let ramification = match &self.model {
            CurveModel::Parametric { x, y } => {
                let (points, mults) = parametric_dx_zeros(x);
                let mut ram = Vec::new();
                for (z, m) in points.iter().zip(mults.iter()) {
                    if *m > 1 {
                        all_simple = false;
                        issues.push(format!("ramification of order {} at z = {}", m + 1, z.0));
                        continue;
                    }
                    let dy_num = y.derivative_numerator();
                    let scale: f64 = dy_num.0.iter().map(|c| crate::series::rational_to_f64(c).abs()).sum::<f64>().max(1.0);
                    if dy_num.eval_c(z.0).norm() < 1e-12 * scale {
                        dx_dy_disjoint = false;
                        issues.push(format!("dx and dy vanish together at z = {}", z.0));
                        continue;
                    }
                    match parametric_ram_point(x, z.0, z.1.clone()) {
                        Ok(rp) => ram.push(rp),
                        Err(e) => {
                            all_simple = false;
                            issues.push(format!("involution at z = {}: {e}", z.0));
                        }
                    }
                }
                ram
            }
            CurveModel::Hyperelliptic { p } => hyperelliptic_ram_points(p),
        };
        if let Some(tw) = &self.twist {
            for r in &ramification {
                if let Some(xr) = r.x_value(self) {
                    if tw.zeros.iter().any(|z| (z - xr).norm() < 1e-9) {
                        twist_disjoint = false;
                        issues.push(format!("twist zero at ramification point x = {xr}"));
                    }
                }
            }
        }
        GoodReport { ramification, all_simple, dx_dy_disjoint, twist_disjoint, issues }
    }

    /// Ramification points; computed once and cached.
    pub fn ramification_points(&self) -> Result<&[RamPoint]> {
        let r = self.ram.get_or_init(|| {
            let rep = self.validate_good();
            if !rep.all_simple || !rep.dx_dy_disjoint {
                return Err(Error::InvalidCurve(rep.issues.join("; ")));
            }
            Ok(rep.ramification)
        });
        match r {
            Ok(v) => Ok(v.as_slice()),
            Err(e) => Err(e.clone()),
        }
    }

    /// Local involution at the `i`-th ramification point to `order` terms.
    pub fn local_involution(&self, i: usize, order: i32) -> Result<CSeries> {
        let rp = &self.ramification_points()?[i];
        match (&self.model, &rp.location) {
            (CurveModel::Parametric { x, .. }, RamLocation::Z(z)) => {
                if let Some(a) = &rp.exact {
                    return Ok(involution_from_x(&x_series_q(x, a, order)?)?.to_c64());
                }
                involution_from_x(&x_series_c(x, *z, order)?)
            }
            _ => Ok(CSeries::monomial(1, C64::new(-1.0, 0.0), EXACT)),
        }
    }

    /// Expansions of `x`, `y`, `s(x)` around a ramification point or a regular point.
    ///
    /// With `pole_free`, a frame centered at a twist zero is refused.
    pub fn local_frame(&self, at: FrameAt, order: i32, pole_free: bool) -> Result<LocalFrame> {
        let frame = match (&self.model, at) {
            (CurveModel::Parametric { x, y }, FrameAt::Ram(i)) => {
                let rp = &self.ramification_points()?[i];
                let RamLocation::Z(z) = rp.location else { unreachable!() };
                LocalFrame { x: x_series_c(x, z, order)?.add_const(x.eval_c(z)), y: rat_series_c(y, z, order)?, s: None }
            }
            (CurveModel::Parametric { x, y }, FrameAt::Regular(Point::Z(z))) => {
                LocalFrame { x: rat_series_c(x, z, order)?, y: rat_series_c(y, z, order)?, s: None }
            }
            (CurveModel::Hyperelliptic { p }, FrameAt::Ram(i)) => {
                let rp = &self.ramification_points()?[i];
                branch_frame(p, rp.location, order)?
            }
            (CurveModel::Hyperelliptic { p }, FrameAt::Regular(Point::XY { x: x0, y: y0 })) => {
                if y0.norm() < 1e-12 {
                    return Err(Error::FramePole("regular frame at a branch point".into()));
                }
                let xs = CSeries::var(order).add_const(x0);
                let ratio = p.on_series(&xs).scale(&(y0 * y0).inv());
                let ys = ratio.sqrt(Branch::Plus)?.scale(&y0);
                LocalFrame { x: xs, y: ys, s: None }
            }
            _ => return Err(Error::InvalidCurve("point does not match curve model".into())),
        };
        let s = match &self.twist {
            Some(tw) => {
                let s = tw.s.on_series(&frame.x);
                if pole_free && s.valuation().is_some_and(|v| v > 0) {
                    return Err(Error::FramePole("frame centered at a twist zero".into()));
                }
                Some(s)
            }
            None => None,
        };
        Ok(LocalFrame { s, ..frame })
    }

    /// Preimages of the twist zeros (the tagged b-pole divisor).
    pub fn b_divisor(&self) -> Vec<Point> {
        let Some(tw) = &self.twist else { return Vec::new() };
        match &self.model {
            CurveModel::Hyperelliptic { p } => tw
                .zeros
                .iter()
                .flat_map(|&z| {
                    let y = p.eval(z).sqrt();
                    [Point::XY { x: z, y }, Point::XY { x: z, y: -y }]
                })
                .collect(),
            CurveModel::Parametric { x, .. } => tw
                .zeros
                .iter()
                .flat_map(|&x0| {
                    let eq = x.num.to_cpoly().add(&x.den.to_cpoly().scale(-x0));
                    eq.roots().unwrap_or_default().into_iter().map(Point::Z)
                })
                .collect(),
        }
    }
}

/// Zeros of `x'` that are not poles of `x`, with multiplicities and exact values when rational.
fn parametric_dx_zeros(x: &QRat) -> (Vec<(C64, Option<BigRational>)>, Vec<usize>) {
    let dnum = x.derivative_numerator();
    let exact = dnum.rational_roots();
    let mut pts: Vec<(C64, Option<BigRational>)> = Vec::new();
    let mut mults = Vec::new();
    let mut rest = dnum.to_cpoly();
    for r in &exact {
        let m = dnum.root_multiplicity(r);
        let rc = C64::new(crate::series::rational_to_f64(r), 0.0);
        for _ in 0..m {
            rest = rest.deflate(rc);
        }
        if x.den.eval(r).is_zero() {
            continue;
        }
        pts.push((rc, Some(r.clone())));
        mults.push(m);
    }
    if let Ok(roots) = rest.roots() {
        let mut used = vec![false; roots.len()];
        for i in 0..roots.len() {
            if used[i] {
                continue;
            }
            let mut m = 1;
            for j in i + 1..roots.len() {
                if !used[j] && (roots[i] - roots[j]).norm() < 1e-6 {
                    used[j] = true;
                    m += 1;
                }
            }
            if x.den.eval_c(roots[i]).norm() < 1e-9 {
                continue;
            }
            pts.push((roots[i], None));
            mults.push(m);
        }
    }
    (pts, mults)
}

fn parametric_ram_point(x: &QRat, z: C64, exact: Option<BigRational>) -> Result<RamPoint> {
    let order = DEFAULT_ORDER;
    let (involution, exact_involution) = match &exact {
        Some(a) => {
            let s = involution_from_x(&x_series_q(x, a, order)?)?;
            (s.to_c64(), Some(s))
        }
        None => (involution_from_x(&x_series_c(x, z, order)?)?, None),
    };
    Ok(RamPoint { location: RamLocation::Z(z), at_infinity: false, exact, involution, exact_involution })
}

fn hyperelliptic_ram_points(p: &CPoly) -> Vec<RamPoint> {
    let sigma = CSeries::monomial(1, C64::new(-1.0, 0.0), EXACT);
    let mut out: Vec<RamPoint> = p
        .roots()
        .unwrap_or_default()
        .into_iter()
        .map(|a| RamPoint {
            location: RamLocation::X(a),
            at_infinity: false,
            exact: None,
            involution: sigma.clone(),
            exact_involution: None,
        })
        .collect();
    if p.degree() == 3 {
        out.push(RamPoint {
            location: RamLocation::Infinity,
            at_infinity: true,
            exact: None,
            involution: sigma,
            exact_involution: None,
        });
    }
    out
}

/// `x(a + t) - x(a)` with exact coefficients.
pub(crate) fn x_series_q(x: &QRat, a: &BigRational, order: i32) -> Result<QSeries> {
    let z = QSeries::var(order).add_const(a.clone());
    let xa = x.eval(a).ok_or_else(|| Error::FramePole("x has a pole".into()))?;
    Ok(x.on_series(&z)?.add_const(-xa))
}

/// `x(a + t) - x(a)` with complex coefficients.
fn x_series_c(x: &QRat, a: C64, order: i32) -> Result<CSeries> {
    Ok(rat_series_c(x, a, order)?.add_const(-x.eval_c(a)))
}

/// Taylor series of a rational function at `a`.
pub(crate) fn rat_series_c(f: &QRat, a: C64, order: i32) -> Result<CSeries> {
    let z = CSeries::var(order).add_const(a);
    let n = f.num.to_cpoly().on_series(&z);
    let d = f.den.to_cpoly().on_series(&z);
    n.checked_div(&d)
}

/// Solves `x(sigma(t)) = x(t)` for the non-trivial branch, given `X(t) = x(a+t) - x(a)`.
pub(crate) fn involution_from_x<C: crate::series::FieldCoeff>(xs: &LocalSeries<C>) -> Result<LocalSeries<C>> {
    if xs.valuation() != Some(2) {
        return Err(Error::ZeroPivot);
    }
    let c2 = xs.coeff(2).unwrap();
    let c2_inv = c2.checked_inv().ok_or(Error::ZeroPivot)?;
    // X = c2 phi^2 with phi = t + O(t^2); sigma = phi^{-1}(-phi).
    let unit = xs.shift(-2).scale(&c2_inv);
    let phi = unit.sqrt(Branch::Plus)?.shift(1);
    let phi_inv = phi.invert()?;
    phi_inv.compose(&(-&phi))
}

/// Frame at a hyperelliptic branch point.
pub fn branch_frame(p: &CPoly, loc: RamLocation, order: i32) -> Result<LocalFrame> {
    let q = chart_poly(p, loc);
    let t = CSeries::var(order);
    let w = &t * &t;
    let h = q.on_series(&w).sqrt(Branch::Plus)?;
    match loc {
        RamLocation::X(a) => Ok(LocalFrame { x: w.add_const(a), y: &t * &h, s: None }),
        RamLocation::Infinity => {
            let x = CSeries::monomial(-2, C64::one(), EXACT);
            let y = h.shift(-3);
            Ok(LocalFrame { x, y, s: None })
        }
        RamLocation::Z(_) => Err(Error::InvalidCurve("parametric point in hyperelliptic frame".into())),
    }
}

/// Polynomial `Q(w)` with `y^2 = t^2 Q(t^2)` in the branch-point chart
/// (`x = a + t^2`), or `y^2 = t^-6 Q(t^2)` in the chart at infinity (`x = t^-2`).
pub fn chart_poly(p: &CPoly, loc: RamLocation) -> CPoly {
    match loc {
        RamLocation::X(a) => {
            let shifted = p.shift(a);
            CPoly::new(shifted.0[1..].to_vec())
        }
        RamLocation::Infinity => {
            let mut c = p.0.clone();
            c.resize(4, C64::zero());
            c.reverse();
            CPoly::new(c)
        }
        RamLocation::Z(_) => CPoly(vec![C64::one()]),
    }
}
