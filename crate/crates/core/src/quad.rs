//! Quadrature rules: adaptive Gauss-Legendre on intervals and the
//! trapezoid rule on circles.

use std::f64::consts::PI;
use std::num::NonZeroUsize;
use std::sync::OnceLock;

use gauss_quad::GaussLegendre;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};

/// Gauss-Legendre nodes and weights on [-1, 1], cached per order.
pub fn gauss_legendre(n: usize) -> &'static [(f64, f64)] {
    static CACHE: OnceLock<std::sync::Mutex<Vec<Option<&'static [(f64, f64)]>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| std::sync::Mutex::new(vec![None; 257]));
    let mut guard = cache.lock().unwrap();
    if n < guard.len() {
        if let Some(r) = guard[n] {
            return r;
        }
    }
    let rule = GaussLegendre::new(NonZeroUsize::new(n).expect("positive order"));
    let mut pairs: Vec<(f64, f64)> = rule.as_node_weight_pairs().to_vec();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let leaked: &'static [(f64, f64)] = Box::leak(pairs.into_boxed_slice());
    if n < guard.len() {
        guard[n] = Some(leaked);
    }
    leaked
}

/// Gauss-Legendre estimate of `int_0^1 f` split into `panels` equal panels.
pub fn gl_panels<F>(f: &F, order: usize, panels: usize) -> Complex64
where
    F: Fn(f64) -> Complex64 + Sync,
{
    let rule = gauss_legendre(order);
    let h = 1.0 / panels as f64;
    let parts: Vec<Complex64> = (0..panels)
        .into_par_iter()
        .map(|p| {
            let a = p as f64 * h;
            rule.iter().map(|&(x, w)| f(a + 0.5 * h * (x + 1.0)) * w).sum::<Complex64>() * (0.5 * h)
        })
        .collect();
    parts.into_iter().sum()
}

/// Settings for [`adaptive`].
#[derive(Clone, Copy, Debug)]
pub struct QuadOpts {
    pub order: usize,
    pub tol: f64,
    pub max_panels: usize,
}

impl Default for QuadOpts {
    fn default() -> Self {
        QuadOpts { order: 20, tol: 1e-10, max_panels: 4096 }
    }
}

/// `int_0^1 f`, doubling the panel count until two successive estimates agree.
pub fn adaptive<F>(f: &F, opts: QuadOpts, what: &str) -> Result<Complex64>
where
    F: Fn(f64) -> Complex64 + Sync,
{
    let mut panels = 1;
    let mut prev = gl_panels(f, opts.order, panels);
    loop {
        panels *= 2;
        let next = gl_panels(f, opts.order, panels);
        let err = (next - prev).norm();
        if err <= opts.tol * next.norm().max(1.0) {
            return Ok(next);
        }
        if panels >= opts.max_panels || !err.is_finite() {
            return Err(Error::Quadrature { what: what.to_string(), estimate: err });
        }
        prev = next;
    }
}

/// `int_a^b f` with a fixed Gauss-Legendre rule of `order` nodes.
pub fn gl_fixed<F>(f: F, a: Complex64, b: Complex64, order: usize) -> Complex64
where
    F: Fn(Complex64) -> Complex64,
{
    let mid = (a + b) * 0.5;
    let half = (b - a) * 0.5;
    gauss_legendre(order).iter().map(|&(x, w)| f(mid + half * x) * w).sum::<Complex64>() * half
}

/// Nodes `center + r e^{2 pi i k / n}` of the trapezoid rule.
pub fn circle_nodes(center: Complex64, radius: f64, n: usize) -> Vec<Complex64> {
    (0..n)
        .map(|k| center + Complex64::from_polar(radius, 2.0 * PI * k as f64 / n as f64))
        .collect()
}

/// `(1 / 2 pi i) oint_{|t|=r} f(t) dt` by the `n`-node trapezoid rule.
///
/// Summation order is fixed so the result is deterministic.
pub fn circle_residue<F>(f: &F, radius: f64, n: usize) -> Result<Complex64>
where
    F: Fn(Complex64) -> Result<Complex64> + Sync,
{
    let vals: Vec<Result<Complex64>> = circle_nodes(Complex64::new(0.0, 0.0), radius, n)
        .into_par_iter()
        .map(|t| f(t).map(|v| v * t))
        .collect();
    let mut acc = Complex64::new(0.0, 0.0);
    for v in vals {
        acc += v?;
    }
    Ok(acc / n as f64)
}

/// Trapezoid residue at `n` and `2n` nodes; fails when the two differ by
/// more than `tol` (absolute, scaled by the larger of 1 and the value).
/// The `n`-node rule reuses every other node of the `2n`-node rule.
pub fn circle_residue_checked<F>(f: &F, radius: f64, n: usize, tol: f64, what: &str) -> Result<Complex64>
where
    F: Fn(Complex64) -> Result<Complex64> + Sync,
{
    let vals: Vec<Result<Complex64>> = circle_nodes(Complex64::new(0.0, 0.0), radius, 2 * n)
        .into_par_iter()
        .map(|t| f(t).map(|v| v * t))
        .collect();
    let mut coarse = Complex64::new(0.0, 0.0);
    let mut fine = Complex64::new(0.0, 0.0);
    for (k, v) in vals.into_iter().enumerate() {
        let v = v?;
        fine += v;
        if k % 2 == 0 {
            coarse += v;
        }
    }
    let a = coarse / n as f64;
    let b = fine / (2 * n) as f64;
    let err = (a - b).norm();
    if err > tol * b.norm().max(1.0) || !err.is_finite() {
        return Err(Error::Quadrature { what: what.to_string(), estimate: err });
    }
    Ok(b)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gl_integrates_polynomials() {
        let v = gl_panels(&|x: f64| Complex64::new(x.powi(7), 0.0), 4, 1);
        assert!((v.re - 0.125).abs() < 1e-14);
    }

    #[test]
    fn adaptive_handles_smooth_integrand() {
        let v = adaptive(&|x: f64| Complex64::new((10.0 * x).sin(), 0.0), QuadOpts::default(), "sin").unwrap();
        let exact = (1.0 - 10f64.cos()) / 10.0;
        assert!((v.re - exact).abs() < 1e-12);
    }

    #[test]
    fn trapezoid_residue() {
        let f = |t: Complex64| Ok((t * t).exp() / (t * t * t));
        let r = circle_residue_checked(&f, 0.5, 64, 1e-12, "exp").unwrap();
        assert!((r - Complex64::new(1.0, 0.0)).norm() < 1e-13);
    }
}
