//! Truncated Laurent series in a single local coordinate `t`.
//!
//! A [`LocalSeries`] stores the coefficients from its lowest order up to its
//! truncation order; everything above the truncation order is unknown. All
//! arithmetic propagates the truncation order, so a coefficient reported by
//! the result is always correct. Coefficients live in any [`Coeff`] ring:
//! exact rationals, complex floats, or the multivariate polynomials used by
//! the exact recursion engine.

use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};

/// Default number of orders kept beyond the lowest order.
pub const DEFAULT_ORDER: i32 = 24;

/// Magnitude below which floating coefficients count as zero when normalizing.
pub const FLOAT_ZERO: f64 = 1e-13;

/// Coefficient ring for series.
pub trait Coeff:
    Clone
    + Debug
    + PartialEq
    + Send
    + Sync
    + Zero
    + One
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
{
    fn from_int(n: i64) -> Self;

    /// Whether this coefficient is stripped during normalization.
    fn negligible(&self) -> bool {
        self.is_zero()
    }
}

/// Which square root to take of a leading coefficient.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    Plus,
    Minus,
}

impl Branch {
    fn sign(self) -> i64 {
        match self {
            Branch::Plus => 1,
            Branch::Minus => -1,
        }
    }
}

/// Coefficients that form a field (division, square roots of leading terms).
pub trait FieldCoeff: Coeff + Div<Output = Self> {
    fn checked_inv(&self) -> Option<Self>;
    fn sqrt_branch(&self, branch: Branch) -> Option<Self>;
    fn to_c64(&self) -> Complex64;
}

impl Coeff for Complex64 {
    fn from_int(n: i64) -> Self {
        Complex64::new(n as f64, 0.0)
    }

    fn negligible(&self) -> bool {
        self.norm() < FLOAT_ZERO
    }
}

impl FieldCoeff for Complex64 {
    fn checked_inv(&self) -> Option<Self> {
        if self.norm() == 0.0 {
            None
        } else {
            Some(self.inv())
        }
    }

    fn sqrt_branch(&self, branch: Branch) -> Option<Self> {
        Some(self.sqrt() * branch.sign() as f64)
    }

    fn to_c64(&self) -> Complex64 {
        *self
    }
}

impl Coeff for BigRational {
    fn from_int(n: i64) -> Self {
        BigRational::from_integer(BigInt::from(n))
    }
}

impl FieldCoeff for BigRational {
    fn checked_inv(&self) -> Option<Self> {
        if self.is_zero() {
            None
        } else {
            Some(self.recip())
        }
    }

    fn sqrt_branch(&self, branch: Branch) -> Option<Self> {
        if self.is_negative() {
            return None;
        }
        let n = self.numer().sqrt();
        let d = self.denom().sqrt();
        if &n * &n != *self.numer() || &d * &d != *self.denom() {
            return None;
        }
        let root = BigRational::new(n, d);
        Some(match branch {
            Branch::Plus => root,
            Branch::Minus => -root,
        })
    }

    fn to_c64(&self) -> Complex64 {
        Complex64::new(rational_to_f64(self), 0.0)
    }
}

pub fn rational_to_f64(r: &BigRational) -> f64 {
    use num_traits::ToPrimitive;
    r.to_f64().unwrap_or(f64::NAN)
}

/// A truncated Laurent series `sum_{k=lo}^{trunc} c_k t^k + O(t^{trunc+1})`.
///
/// Coefficients past the stored ones and up to `trunc` are zero. The
/// identically zero series has no stored coefficients. Exact polynomials use
/// [`EXACT`] as their truncation order.
#[derive(Clone, Debug, PartialEq)]
pub struct LocalSeries<C> {
    lo: i32,
    coeffs: Vec<C>,
    trunc: i32,
}

/// Truncation order marking a series as exact (a Laurent polynomial).
pub const EXACT: i32 = i32::MAX / 8;

impl<C: Coeff> LocalSeries<C> {
    /// Series with coefficients starting at order `lo`, known up to `trunc`.
    pub fn from_terms(lo: i32, coeffs: Vec<C>, trunc: i32) -> Self {
        let mut s = Self { lo, coeffs, trunc };
        s.normalize();
        s
    }

    /// Series whose truncation order is the last stored coefficient.
    pub fn new(lo: i32, coeffs: Vec<C>) -> Self {
        let trunc = lo + coeffs.len() as i32 - 1;
        Self::from_terms(lo, coeffs, trunc)
    }

    pub fn zero(trunc: i32) -> Self {
        Self { lo: trunc + 1, coeffs: Vec::new(), trunc }
    }

    pub fn constant(c: C, trunc: i32) -> Self {
        Self::from_terms(0, vec![c], trunc)
    }

    /// `c * t^k`, known up to `trunc`.
    pub fn monomial(k: i32, c: C, trunc: i32) -> Self {
        Self::from_terms(k, vec![c], trunc)
    }

    /// The local coordinate `t` itself.
    pub fn var(trunc: i32) -> Self {
        Self::monomial(1, C::one(), trunc)
    }

    pub fn lowest_order(&self) -> i32 {
        if self.coeffs.is_empty() {
            self.trunc + 1
        } else {
            self.lo
        }
    }

    pub fn truncation_order(&self) -> i32 {
        self.trunc
    }

    pub fn is_exact(&self) -> bool {
        self.trunc >= EXACT
    }

    /// Stored coefficients from the lowest order; later ones up to the
    /// truncation order are zero.
    pub fn coeffs(&self) -> &[C] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Lowest order with a nonzero coefficient, `None` for the zero series.
    pub fn valuation(&self) -> Option<i32> {
        if self.coeffs.is_empty() {
            None
        } else {
            Some(self.lo)
        }
    }

    /// Coefficient of `t^k`; `None` when `k` is above the truncation order.
    pub fn coeff(&self, k: i32) -> Option<C> {
        if k > self.trunc {
            None
        } else {
            Some(self.coeff_or_zero(k))
        }
    }

    fn coeff_or_zero(&self, k: i32) -> C {
        if k < self.lo || k > self.trunc {
            return C::zero();
        }
        self.coeffs.get((k - self.lo) as usize).cloned().unwrap_or_else(C::zero)
    }

    fn normalize(&mut self) {
        let keep = (self.trunc as i64 - self.lo as i64 + 1).max(0) as usize;
        self.coeffs.truncate(keep);
        let skip = self.coeffs.iter().take_while(|c| c.negligible()).count();
        if skip > 0 {
            self.coeffs.drain(..skip);
            self.lo += skip as i32;
        }
        while self.coeffs.last().is_some_and(|c| c.is_zero()) {
            self.coeffs.pop();
        }
        if self.coeffs.is_empty() {
            self.lo = self.trunc + 1;
        }
    }

    /// Drops every coefficient above `trunc`.
    pub fn truncate(&self, trunc: i32) -> Self {
        if trunc >= self.trunc {
            return self.clone();
        }
        Self::from_terms(self.lo, self.coeffs.clone(), trunc)
    }

    /// Multiplies by `t^k`.
    pub fn shift(&self, k: i32) -> Self {
        let trunc = if self.is_exact() { self.trunc } else { self.trunc + k };
        Self { lo: self.lo + k, coeffs: self.coeffs.clone(), trunc }
    }

    pub fn scale(&self, c: &C) -> Self {
        Self::from_terms(self.lo, self.coeffs.iter().map(|x| x.clone() * c.clone()).collect(), self.trunc)
    }

    pub fn map<D: Coeff>(&self, f: impl Fn(&C) -> D) -> LocalSeries<D> {
        LocalSeries::from_terms(self.lo, self.coeffs.iter().map(f).collect(), self.trunc)
    }

    /// Term-wise derivative `d/dt`.
    pub fn derivative(&self) -> Self {
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(i, c)| c.clone() * C::from_int((self.lo + i as i32) as i64))
            .collect();
        let trunc = if self.is_exact() { self.trunc } else { self.trunc - 1 };
        Self::from_terms(self.lo - 1, coeffs, trunc)
    }

    /// Coefficient of `t^-1`.
    pub fn residue(&self) -> Result<C> {
        self.coeff(-1).ok_or(Error::TruncationWindow { needed: -1, available: self.trunc })
    }

    /// Non-negative integer power by binary exponentiation.
    pub fn powu(&self, k: u32) -> Self {
        let mut acc = Self::constant(C::one(), EXACT);
        let mut base = self.clone();
        let mut k = k;
        while k > 0 {
            if k & 1 == 1 {
                acc = &acc * &base;
            }
            k >>= 1;
            if k > 0 {
                base = &base * &base;
            }
        }
        acc
    }

    /// Evaluates a polynomial (lowest degree first) at this series.
    pub fn eval_poly(coeffs: &[C], at: &Self) -> Self {
        let mut acc = Self::zero(EXACT);
        for c in coeffs.iter().rev() {
            acc = &(&acc * at) + &Self::constant(c.clone(), EXACT);
        }
        acc
    }

    fn add_impl(&self, rhs: &Self, negate: bool) -> Self {
        let trunc = self.trunc.min(rhs.trunc);
        if self.is_zero() && rhs.is_zero() {
            return Self::zero(trunc);
        }
        let lo = self.lowest_order().min(rhs.lowest_order());
        if trunc < lo {
            return Self::zero(trunc);
        }
        let end = |s: &Self| if s.coeffs.is_empty() { i32::MIN } else { s.lo + s.coeffs.len() as i32 - 1 };
        let hi = end(self).max(end(rhs)).min(trunc);
        let coeffs = (lo..=hi)
            .map(|k| {
                let b = rhs.coeff_or_zero(k);
                let b = if negate { -b } else { b };
                self.coeff_or_zero(k) + b
            })
            .collect();
        Self::from_terms(lo, coeffs, trunc)
    }

    fn mul_impl(&self, rhs: &Self) -> Self {
        let t1 = if rhs.is_exact() { EXACT } else { self.lowest_order().saturating_add(rhs.trunc) };
        let t2 = if self.is_exact() { EXACT } else { rhs.lowest_order().saturating_add(self.trunc) };
        let trunc = t1.min(t2).min(EXACT);
        if self.is_zero() || rhs.is_zero() {
            return Self::zero(trunc);
        }
        let lo = self.lo + rhs.lo;
        let full = self.coeffs.len() + rhs.coeffs.len() - 1;
        let len = ((trunc as i64 - lo as i64 + 1).max(0) as usize).min(full);
        let mut out = vec![C::zero(); len];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() || i >= len {
                continue;
            }
            for (j, b) in rhs.coeffs.iter().enumerate() {
                if i + j >= len {
                    break;
                }
                out[i + j] = out[i + j].clone() + a.clone() * b.clone();
            }
        }
        Self::from_terms(lo, out, trunc)
    }

    /// Adds a constant term without affecting the truncation order.
    pub fn add_const(&self, c: C) -> Self {
        self + &Self::constant(c, EXACT)
    }
}

impl<C: FieldCoeff> LocalSeries<C> {
    /// Multiplicative inverse; fails for the zero series.
    ///
    /// The inverse of an exact series is expanded to [`DEFAULT_ORDER`] terms.
    pub fn recip(&self) -> Result<Self> {
        let b0 = self
            .coeffs
            .first()
            .and_then(|c| c.checked_inv())
            .ok_or(Error::DivisionByZeroSeries)?;
        let n = if self.is_exact() {
            if self.coeffs.len() == 1 {
                return Ok(Self::monomial(-self.lo, b0, EXACT));
            }
            DEFAULT_ORDER as usize + 1
        } else {
            (self.trunc - self.lo + 1) as usize
        };
        let mut inv: Vec<C> = Vec::with_capacity(n);
        inv.push(b0.clone());
        for k in 1..n {
            let mut acc = C::zero();
            for j in 1..=k.min(self.coeffs.len() - 1) {
                acc = acc + self.coeffs[j].clone() * inv[k - j].clone();
            }
            inv.push(-(acc * b0.clone()));
        }
        Ok(Self::from_terms(-self.lo, inv, -self.lo + n as i32 - 1))
    }

    pub fn checked_div(&self, rhs: &Self) -> Result<Self> {
        Ok(self * &rhs.recip()?)
    }

    /// Integer power; negative exponents go through the inverse.
    pub fn powi(&self, k: i32) -> Result<Self> {
        if k >= 0 {
            Ok(self.powu(k as u32))
        } else {
            Ok(self.recip()?.powu((-k) as u32))
        }
    }

    /// `f(g(t))`.
    ///
    /// When `g` has a constant term, `f` must have no poles and is read as a
    /// polynomial in its known coefficients.
    pub fn compose(&self, g: &Self) -> Result<Self> {
        let f = self;
        let g_val = g.lowest_order();
        if g_val < 0 || (g_val == 0 && f.lowest_order() < 0) {
            return Err(Error::CompositionPole);
        }
        if f.is_exact() && f.is_zero() {
            return Ok(Self::zero(EXACT));
        }
        // O(t^{T+1}) in f becomes O(t^{g_val (T+1)}).
        let cap = if f.is_exact() || g_val == 0 {
            EXACT
        } else {
            (g_val as i64 * (f.trunc as i64 + 1) - 1).min(EXACT as i64) as i32
        };
        let last = if f.is_exact() {
            f.lo + f.coeffs.len() as i32 - 1
        } else {
            f.trunc
        };
        let start = f.lowest_order();
        let mut acc = Self::zero(cap);
        let mut power = if start >= 0 { g.powu(start as u32) } else { g.recip()?.powu((-start) as u32) };
        for k in start..=last {
            if k > start {
                power = &power * g;
            }
            let c = f.coeff_or_zero(k);
            if !c.is_zero() {
                acc = &acc + &power.scale(&c);
            }
        }
        Ok(acc.truncate(cap))
    }

    /// Functional inverse `g` with `f(g(t)) = t` up to truncation.
    pub fn invert(&self) -> Result<Self> {
        if self.lowest_order() != 1 {
            return Err(Error::VanishingLinearCoefficient);
        }
        let f1_inv = self.coeffs[0].checked_inv().ok_or(Error::VanishingLinearCoefficient)?;
        let trunc = if self.is_exact() { DEFAULT_ORDER } else { self.trunc };
        let mut g = vec![f1_inv.clone()];
        for n in 2..=trunc {
            let mut trial = g.clone();
            trial.push(C::zero());
            let gs = LocalSeries::from_terms(1, trial.clone(), n);
            let fg = self.compose(&gs)?;
            let cn = fg.coeff(n).ok_or(Error::TruncationWindow { needed: n, available: fg.trunc })?;
            let last = trial.len() - 1;
            trial[last] = -(cn * f1_inv.clone());
            g = trial;
        }
        Ok(LocalSeries::from_terms(1, g, trunc))
    }

    /// Square root with the leading coefficient on the requested branch.
    pub fn sqrt(&self, branch: Branch) -> Result<Self> {
        if self.coeffs.is_empty() {
            return Ok(Self::zero(self.trunc.div_euclid(2)));
        }
        if self.lo % 2 != 0 {
            return Err(Error::BadSquareRoot(format!("odd lowest order {}", self.lo)));
        }
        let s0 = self.coeffs[0]
            .sqrt_branch(branch)
            .ok_or_else(|| Error::BadSquareRoot(format!("leading coefficient {:?}", self.coeffs[0])))?;
        let two_s0_inv = (s0.clone() + s0.clone())
            .checked_inv()
            .ok_or_else(|| Error::BadSquareRoot("zero leading root".into()))?;
        let n = if self.is_exact() {
            DEFAULT_ORDER as usize + 1
        } else {
            (self.trunc - self.lo + 1) as usize
        };
        let mut s = vec![s0];
        for k in 1..n {
            let mut acc = self.coeff_or_zero(self.lo + k as i32);
            for j in 1..k {
                acc = acc - s[j].clone() * s[k - j].clone();
            }
            s.push(acc * two_s0_inv.clone());
        }
        let lo = self.lo / 2;
        Ok(Self::from_terms(lo, s, lo + n as i32 - 1))
    }

    /// Numerical value of the truncated sum at `t`.
    pub fn eval(&self, t: Complex64) -> Complex64 {
        let mut acc = Complex64::zero();
        for c in self.coeffs.iter().rev() {
            acc = acc * t + c.to_c64();
        }
        acc * t.powi(self.lo)
    }

    pub fn to_c64(&self) -> LocalSeries<Complex64> {
        LocalSeries::from_terms(self.lo, self.coeffs.iter().map(|c| c.to_c64()).collect(), self.trunc)
    }
}

macro_rules! forward_binop {
    ($tr:ident, $m:ident, $body:expr) => {
        impl<'a, C: Coeff> $tr<&'a LocalSeries<C>> for &'a LocalSeries<C> {
            type Output = LocalSeries<C>;
            fn $m(self, rhs: &'a LocalSeries<C>) -> LocalSeries<C> {
                $body(self, rhs)
            }
        }
        impl<C: Coeff> $tr<LocalSeries<C>> for LocalSeries<C> {
            type Output = LocalSeries<C>;
            fn $m(self, rhs: LocalSeries<C>) -> LocalSeries<C> {
                $body(&self, &rhs)
            }
        }
    };
}

forward_binop!(Add, add, |a: &LocalSeries<C>, b: &LocalSeries<C>| a.add_impl(b, false));
forward_binop!(Sub, sub, |a: &LocalSeries<C>, b: &LocalSeries<C>| a.add_impl(b, true));
forward_binop!(Mul, mul, |a: &LocalSeries<C>, b: &LocalSeries<C>| a.mul_impl(b));

impl<C: Coeff> Neg for &LocalSeries<C> {
    type Output = LocalSeries<C>;
    fn neg(self) -> LocalSeries<C> {
        LocalSeries { lo: self.lo, coeffs: self.coeffs.iter().map(|c| -c.clone()).collect(), trunc: self.trunc }
    }
}

/// Convenience: exact rational `p/q`.
pub fn rat(p: i64, q: i64) -> BigRational {
    BigRational::new(BigInt::from(p), BigInt::from(q))
}

#[cfg(test)]
mod tests {
    use super::*;

    type Q = LocalSeries<BigRational>;

    fn q(coeffs: &[(i64, i64)], lo: i32, trunc: i32) -> Q {
        Q::from_terms(lo, coeffs.iter().map(|&(p, d)| rat(p, d)).collect(), trunc)
    }

    #[test]
    fn monomial_product() {
        let a = q(&[(1, 1), (1, 1)], -1, 10);
        let t = Q::var(10);
        let p = &a * &t;
        assert_eq!(p.lowest_order(), 0);
        assert_eq!(p.coeff(0), Some(rat(1, 1)));
        assert_eq!(p.coeff(1), Some(rat(1, 1)));
        assert_eq!(p.coeff(2), Some(rat(0, 1)));
    }

    #[test]
    fn geometric_series() {
        let one = Q::constant(rat(1, 1), 8);
        let d = q(&[(1, 1), (-1, 1)], 0, 8);
        let g = one.checked_div(&d).unwrap();
        for k in 0..=8 {
            assert_eq!(g.coeff(k), Some(rat(1, 1)));
        }
        let tm2 = Q::monomial(-2, rat(1, 1), 6);
        let h = tm2.checked_div(&d).unwrap();
        assert_eq!(h.lowest_order(), -2);
        for k in -2..=h.truncation_order() {
            assert_eq!(h.coeff(k), Some(rat(1, 1)));
        }
        assert_eq!(h.residue().unwrap(), rat(1, 1));
    }

    #[test]
    fn division_by_zero_series_fails() {
        let z = Q::zero(5);
        assert_eq!(Q::constant(rat(1, 1), 5).checked_div(&z), Err(Error::DivisionByZeroSeries));
    }

    #[test]
    fn compose_examples() {
        let f = Q::monomial(2, rat(1, 1), 10);
        let g = q(&[(1, 1), (1, 1)], 1, 10);
        let h = f.compose(&g).unwrap();
        assert_eq!(h.coeff(2), Some(rat(1, 1)));
        assert_eq!(h.coeff(3), Some(rat(2, 1)));
        assert_eq!(h.coeff(4), Some(rat(1, 1)));
        assert_eq!(h.coeff(5), Some(rat(0, 1)));

        let f = Q::monomial(-1, rat(1, 1), 8);
        let h = f.compose(&g).unwrap();
        assert_eq!(h.lowest_order(), -1);
        for k in -1..=h.truncation_order() {
            let sign = if (k + 1) % 2 == 0 { 1 } else { -1 };
            assert_eq!(h.coeff(k), Some(rat(sign, 1)));
        }

        let f = q(&[(1, 1), (1, 1)], 0, 1);
        let h = f.compose(&Q::zero(0)).unwrap();
        assert_eq!(h.coeff(0), Some(rat(1, 1)));
        assert_eq!(h.truncation_order(), 0);
    }

    #[test]
    fn compose_constant_led_into_pole_fails() {
        let f = Q::monomial(-1, rat(1, 1), 4);
        let g = q(&[(1, 1), (1, 1)], 0, 4);
        assert_eq!(f.compose(&g), Err(Error::CompositionPole));
    }

    #[test]
    fn invert_examples() {
        let t = Q::var(6);
        assert_eq!(t.invert().unwrap(), t);
        let f = q(&[(1, 1), (1, 1)], 1, 6);
        let g = f.invert().unwrap();
        // Catalan numbers with alternating signs
        let expect = [(1, 1), (-1, 1), (2, 1), (-5, 1), (14, 1), (-42, 1)];
        for (i, &(p, d)) in expect.iter().enumerate() {
            assert_eq!(g.coeff(i as i32 + 1), Some(rat(p, d)));
        }
        let f = Q::monomial(1, rat(2, 1), 6);
        assert_eq!(f.invert().unwrap().coeff(1), Some(rat(1, 2)));
        assert_eq!(Q::monomial(2, rat(1, 1), 6).invert(), Err(Error::VanishingLinearCoefficient));
    }

    #[test]
    fn sqrt_examples() {
        let f = q(&[(1, 1), (2, 1)], 0, 6);
        let s = f.sqrt(Branch::Plus).unwrap();
        assert_eq!(s.coeff(0), Some(rat(1, 1)));
        assert_eq!(s.coeff(1), Some(rat(1, 1)));
        assert_eq!(s.coeff(2), Some(rat(-1, 2)));
        assert_eq!(s.coeff(3), Some(rat(1, 2)));
        let t2 = Q::monomial(2, rat(1, 1), 8);
        let s = t2.sqrt(Branch::Plus).unwrap();
        assert_eq!(s.lowest_order(), 1);
        assert_eq!(s.coeff(1), Some(rat(1, 1)));
        let four = Q::constant(rat(4, 1), 3);
        assert_eq!(four.sqrt(Branch::Plus).unwrap().coeff(0), Some(rat(2, 1)));
        assert_eq!(four.sqrt(Branch::Minus).unwrap().coeff(0), Some(rat(-2, 1)));
        assert!(matches!(Q::var(4).sqrt(Branch::Plus), Err(Error::BadSquareRoot(_))));
    }

    #[test]
    fn residue_examples() {
        let f = q(&[(1, 1), (0, 1), (3, 1), (1, 1)], -1, 4);
        assert_eq!(f.residue().unwrap(), rat(1, 1));
        assert_eq!(Q::monomial(-2, rat(1, 1), 3).residue().unwrap(), rat(0, 1));
        let d = q(&[(1, 1), (-1, 1)], 0, 5).shift(2);
        let inv = Q::constant(rat(1, 1), 5).checked_div(&d).unwrap();
        assert_eq!(inv.residue().unwrap(), rat(1, 1));
        let short = Q::from_terms(-4, vec![rat(1, 1)], -2);
        assert_eq!(short.residue(), Err(Error::TruncationWindow { needed: -1, available: -2 }));
    }

    #[test]
    fn float_normalization_strips_roundoff() {
        let s = LocalSeries::new(0, vec![Complex64::new(1e-15, 0.0), Complex64::new(2.0, 0.0)]);
        assert_eq!(s.lowest_order(), 1);
    }
}
