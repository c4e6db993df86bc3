//! Dense univariate polynomials (lowest degree first) and root finding.

use nalgebra::DMatrix;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::{rational_to_f64, Coeff, LocalSeries};

/// Roots closer than this are declared repeated.
pub const REPEATED_ROOT: f64 = 1e-9;

/// Complex polynomial, coefficients lowest degree first.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CPoly(pub Vec<Complex64>);

impl CPoly {
    pub fn new(mut c: Vec<Complex64>) -> Self {
        while c.len() > 1 && c.last().is_some_and(|z| z.norm() == 0.0) {
            c.pop();
        }
        CPoly(c)
    }

    pub fn from_real(c: &[f64]) -> Self {
        Self::new(c.iter().map(|&r| Complex64::new(r, 0.0)).collect())
    }

    /// Monic polynomial with the given roots.
    pub fn from_roots(roots: &[Complex64]) -> Self {
        let mut p = CPoly(vec![Complex64::one()]);
        for &r in roots {
            p = p.mul(&CPoly(vec![-r, Complex64::one()]));
        }
        p
    }

    pub fn degree(&self) -> usize {
        if self.0.iter().all(|c| c.norm() == 0.0) {
            0
        } else {
            self.0.len() - 1
        }
    }

    pub fn coeff(&self, k: usize) -> Complex64 {
        self.0.get(k).copied().unwrap_or_default()
    }

    pub fn eval(&self, x: Complex64) -> Complex64 {
        self.0.iter().rev().fold(Complex64::zero(), |acc, &c| acc * x + c)
    }

    pub fn derivative(&self) -> Self {
        if self.0.len() <= 1 {
            return CPoly(vec![Complex64::zero()]);
        }
        CPoly(self.0.iter().enumerate().skip(1).map(|(k, &c)| c * k as f64).collect())
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut out = vec![Complex64::zero(); self.0.len() + other.0.len() - 1];
        for (i, &a) in self.0.iter().enumerate() {
            for (j, &b) in other.0.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        CPoly::new(out)
    }

    pub fn scale(&self, c: Complex64) -> Self {
        CPoly::new(self.0.iter().map(|&a| a * c).collect())
    }

    pub fn add(&self, other: &Self) -> Self {
        let n = self.0.len().max(other.0.len());
        CPoly::new((0..n).map(|k| self.coeff(k) + other.coeff(k)).collect())
    }

    /// `p(x)` with `x = a + w`, as a polynomial in `w`.
    pub fn shift(&self, a: Complex64) -> Self {
        let mut out = vec![Complex64::zero(); self.0.len()];
        for &c in self.0.iter().rev() {
            for k in (1..out.len()).rev() {
                out[k] = out[k] * a + out[k - 1];
            }
            out[0] = out[0] * a + c;
        }
        CPoly::new(out)
    }

    /// Quotient by `(x - r)`, discarding the remainder.
    pub fn deflate(&self, r: Complex64) -> Self {
        let n = self.0.len();
        if n <= 1 {
            return CPoly(vec![Complex64::zero()]);
        }
        let mut q = vec![Complex64::zero(); n - 1];
        let mut acc = Complex64::zero();
        for k in (1..n).rev() {
            acc = acc * r + self.0[k];
            q[k - 1] = acc;
        }
        CPoly::new(q)
    }

    /// `w^d p(1/w)`, the reversed coefficient list.
    pub fn reversed(&self) -> Self {
        let mut c = self.0.clone();
        c.reverse();
        CPoly::new(c)
    }

    /// Roots via companion-matrix eigenvalues followed by one Newton step.
    pub fn roots(&self) -> Result<Vec<Complex64>> {
        let d = self.degree();
        if d == 0 {
            return Ok(Vec::new());
        }
        let lead = self.0[d];
        if d == 1 {
            return Ok(vec![-self.0[0] / lead]);
        }
        let mut m = DMatrix::<Complex64>::zeros(d, d);
        for i in 1..d {
            m[(i, i - 1)] = Complex64::one();
        }
        for i in 0..d {
            m[(i, d - 1)] = -self.0[i] / lead;
        }
        let eig = m
            .eigenvalues()
            .ok_or_else(|| Error::RootFinding("companion eigenvalue iteration did not converge".into()))?;
        let dp = self.derivative();
        let mut roots: Vec<Complex64> = eig
            .iter()
            .map(|&z| {
                let d = dp.eval(z);
                if d.norm() > 0.0 {
                    z - self.eval(z) / d
                } else {
                    z
                }
            })
            .collect();
        if roots.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::RootFinding("non-finite root".into()));
        }
        roots.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
        Ok(roots)
    }

    /// Roots, failing when two of them are closer than [`REPEATED_ROOT`].
    pub fn distinct_roots(&self) -> Result<Vec<Complex64>> {
        let roots = self.roots()?;
        let sep = min_separation(&roots);
        if sep < REPEATED_ROOT {
            return Err(Error::RepeatedRoot(sep));
        }
        // A double root splits by about sqrt(eps) under round-off; catch it
        // through the derivative at the midpoint of any suspiciously close pair.
        let dp = self.derivative();
        let scale: f64 = self.0.iter().map(|c| c.norm()).sum();
        for i in 0..roots.len() {
            for j in i + 1..roots.len() {
                let d = (roots[i] - roots[j]).norm();
                if d < 1e-5 {
                    let mid = (roots[i] + roots[j]) * 0.5;
                    let size = scale * mid.norm().max(1.0).powi(self.degree() as i32);
                    if dp.eval(mid).norm() < 1e-6 * size {
                        return Err(Error::RepeatedRoot(d));
                    }
                }
            }
        }
        Ok(roots)
    }

    /// The polynomial evaluated on a series.
    pub fn on_series(&self, s: &LocalSeries<Complex64>) -> LocalSeries<Complex64> {
        LocalSeries::eval_poly(&self.0, s)
    }
}

pub fn min_separation(points: &[Complex64]) -> f64 {
    let mut sep = f64::INFINITY;
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            sep = sep.min((points[i] - points[j]).norm());
        }
    }
    sep
}

/// Polynomial with exact rational coefficients, lowest degree first.
#[derive(Clone, Debug, PartialEq)]
pub struct QPoly(pub Vec<BigRational>);

impl QPoly {
    pub fn new(mut c: Vec<BigRational>) -> Self {
        while c.len() > 1 && c.last().is_some_and(|z| z.is_zero()) {
            c.pop();
        }
        if c.is_empty() {
            c.push(BigRational::zero());
        }
        QPoly(c)
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|c| c.is_zero())
    }

    pub fn degree(&self) -> usize {
        self.0.len() - 1
    }

    pub fn eval(&self, x: &BigRational) -> BigRational {
        self.0.iter().rev().fold(BigRational::zero(), |acc, c| acc * x + c)
    }

    pub fn eval_c(&self, x: Complex64) -> Complex64 {
        self.to_cpoly().eval(x)
    }

    pub fn derivative(&self) -> Self {
        if self.0.len() <= 1 {
            return QPoly::new(vec![]);
        }
        QPoly::new(
            self.0
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, c)| c * BigRational::from_int(k as i64))
                .collect(),
        )
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut out = vec![BigRational::zero(); self.0.len() + other.0.len() - 1];
        for (i, a) in self.0.iter().enumerate() {
            for (j, b) in other.0.iter().enumerate() {
                out[i + j] = &out[i + j] + a * b;
            }
        }
        QPoly::new(out)
    }

    pub fn sub(&self, other: &Self) -> Self {
        let n = self.0.len().max(other.0.len());
        let z = BigRational::zero();
        QPoly::new((0..n).map(|k| self.0.get(k).unwrap_or(&z) - other.0.get(k).unwrap_or(&z)).collect())
    }

    pub fn to_cpoly(&self) -> CPoly {
        CPoly::new(self.0.iter().map(|c| Complex64::new(rational_to_f64(c), 0.0)).collect())
    }

    pub fn on_series(&self, s: &LocalSeries<BigRational>) -> LocalSeries<BigRational> {
        LocalSeries::eval_poly(&self.0, s)
    }

    /// Multiplicity of `r` as a root.
    pub fn root_multiplicity(&self, r: &BigRational) -> usize {
        let mut p = self.clone();
        let mut m = 0;
        while !p.is_zero() && p.eval(r).is_zero() {
            m += 1;
            p = p.derivative();
        }
        m
    }

    /// All rational roots (without multiplicity), by the rational root test.
    pub fn rational_roots(&self) -> Vec<BigRational> {
        use num_bigint::BigInt;
        use num_integer::Integer;
        if self.is_zero() {
            return Vec::new();
        }
        let mut lcm = BigInt::one();
        for c in &self.0 {
            lcm = lcm.lcm(c.denom());
        }
        let ints: Vec<BigInt> = self.0.iter().map(|c| (c * BigRational::from_integer(lcm.clone())).to_integer()).collect();
        let mut out = Vec::new();
        let low = ints.iter().position(|c| !c.is_zero()).unwrap_or(0);
        if low > 0 {
            out.push(BigRational::zero());
        }
        let a0 = ints[low].abs();
        let an = ints.last().unwrap().abs();
        let small = |n: &BigInt| -> Vec<BigInt> {
            use num_traits::ToPrimitive;
            let n = n.to_u64().unwrap_or(0);
            (1..=n.min(1_000_000)).filter(|d| n.is_multiple_of(*d)).map(BigInt::from).collect()
        };
        for p in small(&a0) {
            for q in small(&an) {
                for sign in [1, -1] {
                    let r = BigRational::new(&p * BigInt::from(sign), q.clone());
                    if !out.contains(&r) && self.eval(&r).is_zero() {
                        out.push(r);
                    }
                }
            }
        }
        out.sort();
        out
    }
}

/// Rational function with exact coefficients.
#[derive(Clone, Debug)]
pub struct QRat {
    pub num: QPoly,
    pub den: QPoly,
    float: std::sync::OnceLock<[CPoly; 3]>,
}

impl PartialEq for QRat {
    fn eq(&self, other: &Self) -> bool {
        self.num == other.num && self.den == other.den
    }
}

impl QRat {
    pub fn new(num: QPoly, den: QPoly) -> Self {
        QRat { num, den, float: std::sync::OnceLock::new() }
    }

    pub fn poly(p: QPoly) -> Self {
        QRat::new(p, QPoly::new(vec![BigRational::one()]))
    }

    // numerator, denominator and derivative numerator in floats
    fn floats(&self) -> &[CPoly; 3] {
        self.float.get_or_init(|| [self.num.to_cpoly(), self.den.to_cpoly(), self.derivative_numerator().to_cpoly()])
    }

    pub fn is_constant(&self) -> bool {
        // n' d - n d' == 0
        self.num.derivative().mul(&self.den).sub(&self.num.mul(&self.den.derivative())).is_zero()
    }

    pub fn eval_c(&self, z: Complex64) -> Complex64 {
        let [n, d, _] = self.floats();
        n.eval(z) / d.eval(z)
    }

    pub fn eval(&self, z: &BigRational) -> Option<BigRational> {
        let d = self.den.eval(z);
        if d.is_zero() {
            None
        } else {
            Some(self.num.eval(z) / d)
        }
    }

    /// Numerator of the derivative, `n' d - n d'`.
    pub fn derivative_numerator(&self) -> QPoly {
        self.num.derivative().mul(&self.den).sub(&self.num.mul(&self.den.derivative()))
    }

    pub fn derivative_c(&self, z: Complex64) -> Complex64 {
        let [_, d, dn] = self.floats();
        let d = d.eval(z);
        dn.eval(z) / (d * d)
    }

    pub fn on_series(&self, s: &LocalSeries<BigRational>) -> Result<LocalSeries<BigRational>> {
        self.num.on_series(s).checked_div(&self.den.on_series(s))
    }
}
