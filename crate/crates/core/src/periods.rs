//! Cycles on genus-1 hyperelliptic curves, normalized holomorphic
//! differential, period matrix, Abel map, the twisted one-form and its
//! A-periods.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::curve::{chart_poly, RamLocation, SpectralCurve, DEFAULT_SEPARATION};
use crate::elliptic::Lattice;
use crate::error::{Error, Result};
use crate::poly::min_separation;
use crate::quad::{adaptive, QuadOpts};

type C64 = Complex64;
const I: C64 = C64::new(0.0, 1.0);

/// One piece of a closed contour in the x-plane.
///
/// `sheet` is the sign of `y` at the start of the piece relative to the
/// principal square root of `P` there.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Piece {
    Circular { center: C64, radius: f64, start_angle: f64, sweep: f64, sheet: i8 },
    Segment { from: C64, to: C64, sheet: i8 },
}

impl Piece {
    pub fn at(&self, s: f64) -> C64 {
        match *self {
            Piece::Circular { center, radius, start_angle, sweep, .. } => {
                center + C64::from_polar(radius, start_angle + sweep * s)
            }
            Piece::Segment { from, to, .. } => from + (to - from) * s,
        }
    }

    pub fn derivative(&self, s: f64) -> C64 {
        match *self {
            Piece::Circular { radius, start_angle, sweep, .. } => {
                I * sweep * C64::from_polar(radius, start_angle + sweep * s)
            }
            Piece::Segment { from, to, .. } => to - from,
        }
    }

    pub fn sheet(&self) -> i8 {
        match *self {
            Piece::Circular { sheet, .. } | Piece::Segment { sheet, .. } => sheet,
        }
    }

    fn with_sheet(self, sh: i8) -> Self {
        match self {
            Piece::Circular { center, radius, start_angle, sweep, .. } => {
                Piece::Circular { center, radius, start_angle, sweep, sheet: sh }
            }
            Piece::Segment { from, to, .. } => Piece::Segment { from, to, sheet: sh },
        }
    }

    fn reversed(self) -> Self {
        match self {
            Piece::Circular { center, radius, start_angle, sweep, sheet } => {
                Piece::Circular { center, radius, start_angle: start_angle + sweep, sweep: -sweep, sheet }
            }
            Piece::Segment { from, to, sheet } => Piece::Segment { from: to, to: from, sheet },
        }
    }
}

/// Square root tracked continuously along a parameter `s` in [0, 1].
#[derive(Clone, Debug)]
pub struct SqrtTrack {
    anchors: Vec<C64>,
}

impl SqrtTrack {
    /// Tracks `sqrt(g(s))` starting from `start` (which fixes the sign).
    pub fn new<G: Fn(f64) -> C64>(g: &G, start: C64) -> Result<Self> {
        let mut n = 64usize;
        'outer: loop {
            let mut anchors = Vec::with_capacity(n + 1);
            anchors.push(pick(g(0.0).sqrt(), start));
            for j in 1..=n {
                let prev = anchors[j - 1];
                let next = pick(g(j as f64 / n as f64).sqrt(), prev);
                if (next - prev).norm() > 0.25 * prev.norm().max(next.norm()) {
                    if n >= 1 << 16 {
                        return Err(Error::Corridor("path passes through a branch point".into()));
                    }
                    n *= 4;
                    continue 'outer;
                }
                anchors.push(next);
            }
            return Ok(SqrtTrack { anchors });
        }
    }

    /// The tracked root at `s`, given the value `g(s)` of its square.
    pub fn value(&self, s: f64, square: C64) -> C64 {
        let n = self.anchors.len() - 1;
        let j = ((s * n as f64).round() as usize).min(n);
        pick(square.sqrt(), self.anchors[j])
    }

    pub fn start(&self) -> C64 {
        self.anchors[0]
    }

    pub fn end(&self) -> C64 {
        *self.anchors.last().unwrap()
    }
}

fn pick(root: C64, reference: C64) -> C64 {
    if (root - reference).norm() <= (root + reference).norm() {
        root
    } else {
        -root
    }
}

/// A closed contour with `y` tracked on a particular curve.
#[derive(Clone, Debug)]
pub struct TrackedCycle {
    pub pieces: Vec<Piece>,
    tracks: Vec<SqrtTrack>,
}

impl TrackedCycle {
    /// Tracks `y` along the pieces, starting with the first piece's sheet and
    /// continuing across piece boundaries; sheet flags are rewritten to match.
    pub fn track(curve: &SpectralCurve, pieces: &[Piece]) -> Result<Self> {
        let p = curve.hyper_poly().ok_or_else(|| Error::InvalidCurve("cycles need a hyperelliptic curve".into()))?;
        let mut out = Vec::with_capacity(pieces.len());
        let mut tracks = Vec::with_capacity(pieces.len());
        let mut y_ref = p.eval(pieces[0].at(0.0)).sqrt() * pieces[0].sheet() as f64;
        for piece in pieces {
            let g = |s: f64| p.eval(piece.at(s));
            let tr = SqrtTrack::new(&g, y_ref)?;
            let principal = g(0.0).sqrt();
            let sheet = if (tr.start() - principal).norm() <= (tr.start() + principal).norm() { 1 } else { -1 };
            out.push(piece.with_sheet(sheet));
            y_ref = tr.end();
            tracks.push(tr);
        }
        let first = tracks[0].start();
        if (y_ref - first).norm() > 1e-6 * first.norm().max(1e-12) {
            return Err(Error::Corridor("contour does not close on the curve".into()));
        }
        Ok(TrackedCycle { pieces: out, tracks })
    }

    /// Tracks `y` piecewise from each piece's own sheet flag.
    pub fn from_sheets(curve: &SpectralCurve, pieces: &[Piece]) -> Result<Self> {
        let p = curve.hyper_poly().ok_or_else(|| Error::InvalidCurve("cycles need a hyperelliptic curve".into()))?;
        let tracks = pieces
            .iter()
            .map(|piece| {
                let g = |s: f64| p.eval(piece.at(s));
                SqrtTrack::new(&g, g(0.0).sqrt() * piece.sheet() as f64)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(TrackedCycle { pieces: pieces.to_vec(), tracks })
    }

    /// The same contour on a nearby curve, each value continued from this one.
    pub fn retrack(&self, curve: &SpectralCurve) -> Result<Self> {
        let p = curve.hyper_poly().ok_or_else(|| Error::InvalidCurve("cycles need a hyperelliptic curve".into()))?;
        let start = pick(p.eval(self.pieces[0].at(0.0)).sqrt(), self.tracks[0].start());
        let principal = p.eval(self.pieces[0].at(0.0)).sqrt();
        let sheet = if (start - principal).norm() <= (start + principal).norm() { 1 } else { -1 };
        let mut pieces = self.pieces.clone();
        pieces[0] = pieces[0].with_sheet(sheet);
        Self::track(curve, &pieces)
    }

    /// Reverses orientation.
    pub fn reversed(&self, curve: &SpectralCurve) -> Result<Self> {
        let mut pieces: Vec<Piece> = self.pieces.iter().rev().map(|p| p.reversed()).collect();
        let p = curve.hyper_poly().unwrap();
        let y0 = self.tracks.last().unwrap().end();
        let principal = p.eval(pieces[0].at(0.0)).sqrt();
        let sheet = if (y0 - principal).norm() <= (y0 + principal).norm() { 1 } else { -1 };
        pieces[0] = pieces[0].with_sheet(sheet);
        Self::track(curve, &pieces)
    }

    /// `y` at parameter `s` of piece `k`.
    pub fn y_at(&self, curve: &SpectralCurve, k: usize, s: f64) -> C64 {
        let p = curve.hyper_poly().unwrap();
        self.tracks[k].value(s, p.eval(self.pieces[k].at(s)))
    }

    /// Start point `(x, y)` of the contour.
    pub fn start(&self) -> (C64, C64) {
        (self.pieces[0].at(0.0), self.tracks[0].start())
    }

    /// `oint f(x, y) dx`.
    pub fn integrate<F>(&self, curve: &SpectralCurve, f: &F, opts: QuadOpts) -> Result<C64>
    where
        F: Fn(C64, C64) -> C64 + Sync,
    {
        let mut acc = C64::new(0.0, 0.0);
        for (k, piece) in self.pieces.iter().enumerate() {
            let g = |s: f64| {
                let x = piece.at(s);
                f(x, self.y_at(curve, k, s)) * piece.derivative(s)
            };
            acc += adaptive(&g, opts, "cycle integral")?;
        }
        Ok(acc)
    }

    /// Quadrature nodes `(x, y, weight * dx/ds)` of a fixed composite rule, for
    /// tensor-product integrals.
    pub fn nodes(&self, curve: &SpectralCurve, order: usize, panels: usize) -> Vec<(C64, C64, C64)> {
        let rule = crate::quad::gauss_legendre(order);
        let mut out = Vec::new();
        for (k, piece) in self.pieces.iter().enumerate() {
            let h = 1.0 / panels as f64;
            for p in 0..panels {
                for &(x, w) in rule {
                    let s = p as f64 * h + 0.5 * h * (x + 1.0);
                    out.push((piece.at(s), self.y_at(curve, k, s), piece.derivative(s) * (w * 0.5 * h)));
                }
            }
        }
        out
    }
}

/// Stadium contour around the segment `[e1, e2]`, counterclockwise.
pub fn capsule(e1: C64, e2: C64, r: f64) -> Vec<Piece> {
    let d = e2 - e1;
    let u = d / d.norm();
    let n = I * u;
    let an = n.arg();
    vec![
        Piece::Segment { from: e1 - n * r, to: e2 - n * r, sheet: 1 },
        Piece::Circular { center: e2, radius: r, start_angle: an - std::f64::consts::PI, sweep: std::f64::consts::PI, sheet: 1 },
        Piece::Segment { from: e2 + n * r, to: e1 + n * r, sheet: 1 },
        Piece::Circular { center: e1, radius: r, start_angle: an, sweep: std::f64::consts::PI, sheet: 1 },
    ]
}

fn dist_to_segment(p: C64, a: C64, b: C64) -> f64 {
    let d = b - a;
    let t = ((p - a) * d.conj()).re / d.norm_sqr();
    (p - (a + d * t.clamp(0.0, 1.0))).norm()
}

/// Options for [`cycle_basis`].
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct CycleOpts {
    /// Required clearance of contours from other branch points and twist
    /// zeros, in units of the minimal branch-point spacing.
    pub separation: f64,
    /// Explicit branch-point pairs `(A, B)`; the B pair must share one point with A.
    pub pairs: Option<([C64; 2], [C64; 2])>,
}

impl Default for CycleOpts {
    fn default() -> Self {
        CycleOpts { separation: DEFAULT_SEPARATION, pairs: None }
    }
}

/// Symplectic basis `(A, B)` with `A . B = 1`.
#[derive(Clone, Debug)]
pub struct CycleBasis {
    pub a: TrackedCycle,
    pub b: TrackedCycle,
    pub a_pair: [C64; 2],
    pub b_pair: [C64; 2],
    pub radius: f64,
    pub separation: f64,
}

impl CycleBasis {
    pub fn intersection_matrix(&self) -> [[i32; 2]; 2] {
        [[0, 1], [-1, 0]]
    }

    pub fn retrack(&self, curve: &SpectralCurve) -> Result<Self> {
        Ok(CycleBasis { a: self.a.retrack(curve)?, b: self.b.retrack(curve)?, ..self.clone() })
    }

    /// A capsule homologous to B with radius `r`, on the same sheet.
    pub fn nested_b(&self, curve: &SpectralCurve, r: f64) -> Result<TrackedCycle> {
        let [e1, e2] = self.b_pair;
        let pieces = capsule(e1, e2, r);
        let (x0, y0) = self.b.start();
        let x1 = pieces[0].at(0.0);
        let p = curve.hyper_poly().unwrap();
        let path = |s: f64| p.eval(x0 + (x1 - x0) * s);
        let y1 = SqrtTrack::new(&path, y0)?.end();
        let principal = p.eval(x1).sqrt();
        let sheet = if (y1 - principal).norm() <= (y1 + principal).norm() { 1 } else { -1 };
        let mut pieces = pieces;
        pieces[0] = pieces[0].with_sheet(sheet);
        let t = TrackedCycle::track(curve, &pieces)?;
        // orientation follows the stored B cycle
        let same = (self.b.pieces[0].at(0.5) - self.b.pieces[0].at(0.0)) / (e2 - e1);
        if same.re < 0.0 {
            t.reversed(curve)
        } else {
            Ok(t)
        }
    }

    /// JSON export of both contours.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({ "a": self.a.pieces, "b": self.b.pieces })
    }
}

/// Builds the standard basis: A encircles one pair of finite branch points,
/// B a pair sharing one point with it; B is oriented so that `Im tau > 0`.
pub fn cycle_basis(curve: &SpectralCurve, opts: CycleOpts) -> Result<CycleBasis> {
    if curve.genus != 1 {
        return Err(Error::InvalidCurve("cycle basis requires a genus-1 curve".into()));
    }
    let roots = curve.branch_points();
    let spacing = min_separation(&roots);
    let sep = opts.separation * spacing;
    let twist: Vec<C64> = curve
        .twist
        .as_ref()
        .map(|t| t.zeros.iter().copied().filter(|z| roots.iter().all(|r| (r - z).norm() > 1e-9)).collect())
        .unwrap_or_default();
    let clearance = |a: usize, b: usize| -> f64 {
        let mut d = f64::INFINITY;
        for (k, r) in roots.iter().enumerate() {
            if k != a && k != b {
                d = d.min(dist_to_segment(*r, roots[a], roots[b]));
            }
        }
        for z in &twist {
            d = d.min(dist_to_segment(*z, roots[a], roots[b]));
        }
        d - sep
    };
    let nearest = |z: C64| -> usize {
        (0..roots.len()).min_by(|&i, &j| (roots[i] - z).norm().total_cmp(&(roots[j] - z).norm())).unwrap()
    };
    let (ia, ja, kb) = match opts.pairs {
        Some((a, b)) => {
            let (i, j) = (nearest(a[0]), nearest(a[1]));
            let (k, l) = (nearest(b[0]), nearest(b[1]));
            let (shared, other) = if k == i || k == j { (k, l) } else if l == i || l == j { (l, k) } else {
                return Err(Error::InvalidCurve("B pair must share a branch point with A".into()));
            };
            let first = if shared == i { j } else { i };
            (first, shared, other)
        }
        None => {
            let n = roots.len();
            let mut best: Option<((usize, usize, usize), f64)> = None;
            for i in 0..n {
                for j in 0..n {
                    for k in 0..n {
                        if i == j || j == k || i == k || i > k {
                            continue;
                        }
                        let c = clearance(i, j).min(clearance(j, k));
                        if best.is_none_or(|(_, b)| c > b + 1e-12) {
                            best = Some(((i, j, k), c));
                        }
                    }
                }
            }
            best.ok_or_else(|| Error::InvalidCurve("not enough branch points".into()))?.0
        }
    };
    let ca = clearance(ia, ja);
    let cb = clearance(ja, kb);
    let c = ca.min(cb);
    if c <= 0.0 {
        return Err(Error::Corridor(format!(
            "a branch point or twist zero lies within the separation {sep:.3e} of a cycle"
        )));
    }
    let r = (0.5 * c).min(0.25 * spacing);
    let a = TrackedCycle::track(curve, &capsule(roots[ia], roots[ja], r))?;
    let mut b = TrackedCycle::track(curve, &capsule(roots[ja], roots[kb], r))?;
    let opts_q = QuadOpts::default();
    let dxy = |_: C64, y: C64| y.inv();
    let a0 = a.integrate(curve, &dxy, opts_q)?;
    let b0 = b.integrate(curve, &dxy, opts_q)?;
    let mut b_pair = [roots[ja], roots[kb]];
    if (b0 / a0).im < 0.0 {
        b = b.reversed(curve)?;
        b_pair = [roots[ja], roots[kb]];
    }
    Ok(CycleBasis { a, b, a_pair: [roots[ia], roots[ja]], b_pair, radius: r, separation: sep })
}

/// Normalized holomorphic differential `v = dx / (y A0)`.
#[derive(Clone, Copy, Debug)]
pub struct HolomorphicDifferential {
    /// `oint_A dx / y`.
    pub a_period: C64,
}

impl HolomorphicDifferential {
    /// Value per unit `dx`.
    pub fn per_dx(&self, _x: C64, y: C64) -> C64 {
        (y * self.a_period).inv()
    }
}

pub fn normalized_basis(curve: &SpectralCurve, cycles: &CycleBasis) -> Result<HolomorphicDifferential> {
    let a0 = cycles.a.integrate(curve, &|_, y: C64| y.inv(), QuadOpts::default())?;
    if a0.norm() < 1e-14 {
        return Err(Error::Quadrature { what: "A-period of dx/y vanishes".into(), estimate: a0.norm() });
    }
    Ok(HolomorphicDifferential { a_period: a0 })
}

/// `tau = oint_B v`.
pub fn period_matrix(curve: &SpectralCurve, cycles: &CycleBasis) -> Result<C64> {
    let v = normalized_basis(curve, cycles)?;
    cycles.b.integrate(curve, &|x, y| v.per_dx(x, y), QuadOpts::default())
}

/// Abel map based at a finite branch point.
#[derive(Clone, Debug)]
pub struct Uniformization {
    pub base: C64,
    pub v: HolomorphicDifferential,
    pub tau: C64,
    pub lattice: Lattice,
    chart: crate::poly::CPoly,
}

pub fn uniformize(curve: &SpectralCurve, cycles: &CycleBasis) -> Result<Uniformization> {
    let v = normalized_basis(curve, cycles)?;
    let tau = cycles.b.integrate(curve, &|x, y| v.per_dx(x, y), QuadOpts::default())?;
    let base = cycles.a_pair[0];
    let chart = chart_poly(curve.hyper_poly().unwrap(), RamLocation::X(base));
    Ok(Uniformization { base, v, tau, lattice: Lattice::new(tau), chart })
}

impl Uniformization {
    /// `u(p) = int_base^p v` along the straight path in `x`, with the sign
    /// fixed by the sheet of `p`.
    pub fn abel(&self, x: C64, y: C64) -> Result<C64> {
        let tp = (x - self.base).sqrt();
        let q = &self.chart;
        let g = |s: f64| q.eval(tp * tp * s * s);
        let track = SqrtTrack::new(&g, q.eval(C64::new(0.0, 0.0)).sqrt())
            .map_err(|_| Error::Uniformization("Abel path meets a branch point".into()))?;
        let h0 = track.start().norm();
        if track.anchors.iter().any(|h| h.norm() < 1e-3 * h0) {
            return Err(Error::Uniformization("Abel path passes too close to a branch point".into()));
        }
        let f = |s: f64| {
            let h = track.value(s, g(s));
            tp * 2.0 / (h * self.v.a_period)
        };
        let u = adaptive(&f, QuadOpts::default(), "Abel map")?;
        let y_end = tp * track.end();
        Ok(if (y_end - y).norm() <= (y_end + y).norm() { u } else { -u })
    }
}

/// `Theta = y dx / s(x)`, as a value per unit `dx`.
pub fn theta_per_dx(curve: &SpectralCurve, x: C64, y: C64) -> C64 {
    y / curve.twist_at(x)
}

/// Residue of `Theta` at the preimage `(x0, y0)` of a simple twist zero.
pub fn theta_residue(curve: &SpectralCurve, x0: C64, y0: C64) -> C64 {
    let s = &curve.twist.as_ref().expect("twisted curve").s;
    y0 / s.derivative().eval(x0)
}

/// `lambda = oint_A Theta`.
pub fn lambda_coordinate(curve: &SpectralCurve, cycles: &CycleBasis) -> Result<C64> {
    cycles.a.integrate(curve, &|x, y| theta_per_dx(curve, x, y), QuadOpts::default())
}

/// Collected period data.
#[derive(Clone, Debug, Serialize)]
pub struct PeriodData {
    pub a_period: C64,
    pub b_period: C64,
    pub tau: C64,
    pub lambda: Option<C64>,
}

pub fn period_data(curve: &SpectralCurve, cycles: &CycleBasis) -> Result<PeriodData> {
    let v = normalized_basis(curve, cycles)?;
    let b0 = cycles.b.integrate(curve, &|_, y: C64| y.inv(), QuadOpts::default())?;
    let lambda = if curve.twist.is_some() { Some(lambda_coordinate(curve, cycles)?) } else { None };
    Ok(PeriodData { a_period: v.a_period, b_period: b0, tau: b0 / v.a_period, lambda })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::TwistSection;
    use crate::poly::CPoly;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn quartic() -> SpectralCurve {
        let tw = TwistSection::from_zeros(&[c(2.0, 0.0), c(3.0, 0.0), c(5.0, 0.0), c(7.0, 0.0)]).unwrap();
        SpectralCurve::hyperelliptic(CPoly::from_real(&[-1.0, 0.0, 0.0, 0.0, 1.0]), Some(tw)).unwrap()
    }

    #[test]
    fn capsules_close_and_tau_is_in_upper_half_plane() {
        let cur = quartic();
        let cb = cycle_basis(&cur, CycleOpts::default()).unwrap();
        let tau = period_matrix(&cur, &cb).unwrap();
        assert!(tau.im > 0.0);
        let v = normalized_basis(&cur, &cb).unwrap();
        let a = cb.a.integrate(&cur, &|x, y| v.per_dx(x, y), QuadOpts::default()).unwrap();
        assert!((a - c(1.0, 0.0)).norm() < 1e-10);
    }

    #[test]
    fn lemniscatic_tau_is_i() {
        let cur = SpectralCurve::hyperelliptic(CPoly::from_real(&[0.0, -4.0, 0.0, 4.0]), None).unwrap();
        let cb = cycle_basis(&cur, CycleOpts::default()).unwrap();
        let tau = crate::elliptic::reduce_tau(period_matrix(&cur, &cb).unwrap());
        assert!((tau - I).norm() < 1e-8, "{tau}");
    }

    #[test]
    fn twist_zero_in_corridor_is_rejected() {
        let tw = TwistSection::from_zeros(&[c(1.05, 0.0), c(3.0, 0.0), c(5.0, 0.0), c(7.0, 0.0)]).unwrap();
        let cur = SpectralCurve::hyperelliptic(CPoly::from_real(&[-1.0, 0.0, 0.0, 0.0, 1.0]), Some(tw)).unwrap();
        let opts = CycleOpts { pairs: Some(([c(1.0, 0.0), c(-1.0, 0.0)], [c(-1.0, 0.0), c(0.0, 1.0)])), ..Default::default() };
        assert!(matches!(cycle_basis(&cur, opts), Err(Error::Corridor(_))));
    }

    #[test]
    fn genus_zero_has_no_cycle_basis() {
        assert!(cycle_basis(&SpectralCurve::airy(), CycleOpts::default()).is_err());
    }
}
