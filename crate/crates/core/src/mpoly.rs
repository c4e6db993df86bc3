//! Exact rational expressions in several variables `z_i`, each a sum of
//! products of powers `(z_i - c)^e` with `c` taken from a fixed list of
//! centers. Used by the exact recursion, where every stable differential is
//! a sum of such products with poles at the ramification points.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::error::Result;
use crate::series::{rational_to_f64, Coeff, LocalSeries};

type QSeries = LocalSeries<BigRational>;

/// Product of `(z_slot - center)^exp`, sorted by `(slot, center)`, no zero exponents.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Monomial(pub Vec<(u8, u8, i32)>);

impl Monomial {
    pub fn single(slot: u8, center: u8, exp: i32) -> Self {
        if exp == 0 {
            Monomial(Vec::new())
        } else {
            Monomial(vec![(slot, center, exp)])
        }
    }

    fn mul(&self, other: &Self) -> Self {
        let mut out: Vec<(u8, u8, i32)> = Vec::with_capacity(self.0.len() + other.0.len());
        let (mut i, mut j) = (0, 0);
        while i < self.0.len() || j < other.0.len() {
            let take_left = j >= other.0.len() || (i < self.0.len() && (self.0[i].0, self.0[i].1) <= (other.0[j].0, other.0[j].1));
            let f = if take_left {
                i += 1;
                self.0[i - 1]
            } else {
                j += 1;
                other.0[j - 1]
            };
            match out.last_mut() {
                Some(last) if (last.0, last.1) == (f.0, f.1) => {
                    last.2 += f.2;
                    if last.2 == 0 {
                        out.pop();
                    }
                }
                _ => out.push(f),
            }
        }
        Monomial(out)
    }

    /// Exponent of `slot` (summed over centers) and the center used, if unique.
    pub fn slot_factor(&self, slot: u8) -> Option<(u8, i32)> {
        self.0.iter().find(|f| f.0 == slot).map(|f| (f.1, f.2))
    }
}

/// Sparse rational combination of monomials.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct MPoly {
    pub terms: BTreeMap<Monomial, BigRational>,
}

impl MPoly {
    pub fn constant(c: BigRational) -> Self {
        let mut p = MPoly::default();
        if !c.is_zero() {
            p.terms.insert(Monomial::default(), c);
        }
        p
    }

    pub fn term(m: Monomial, c: BigRational) -> Self {
        let mut p = MPoly::default();
        if !c.is_zero() {
            p.terms.insert(m, c);
        }
        p
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    fn add_term(&mut self, m: Monomial, c: BigRational) {
        if c.is_zero() {
            return;
        }
        match self.terms.get_mut(&m) {
            Some(v) => {
                *v += c;
                if v.is_zero() {
                    self.terms.remove(&m);
                }
            }
            None => {
                self.terms.insert(m, c);
            }
        }
    }

    pub fn scale(&self, c: &BigRational) -> Self {
        if c.is_zero() {
            return MPoly::default();
        }
        MPoly { terms: self.terms.iter().map(|(m, v)| (m.clone(), v * c)).collect() }
    }

    /// Renames slots through `map` (old slot -> new slot).
    pub fn relabel(&self, map: &dyn Fn(u8) -> u8) -> Self {
        let mut out = MPoly::default();
        for (m, c) in &self.terms {
            let mut f: Vec<(u8, u8, i32)> = m.0.iter().map(|&(s, ce, e)| (map(s), ce, e)).collect();
            f.sort();
            out.add_term(Monomial::default().mul(&Monomial(f)), c.clone());
        }
        out
    }

    /// Replaces each listed slot by `centers[at] + u(t)` and multiplies by the
    /// given Jacobian, giving a series in `t` with coefficients in the
    /// remaining slots.
    pub fn substitute(&self, subs: &[(u8, &Substitution)], centers: &[BigRational]) -> Result<LocalSeries<MPoly>> {
        self.substitute_upto(subs, centers, crate::series::EXACT)
    }

    /// As [`Self::substitute`], keeping orders up to `max_order` only.
    pub fn substitute_upto(&self, subs: &[(u8, &Substitution)], centers: &[BigRational], max_order: i32) -> Result<LocalSeries<MPoly>> {
        let mut cache: HashMap<(u8, u8, i32), QSeries> = HashMap::new();
        let mut acc: BTreeMap<i32, MPoly> = BTreeMap::new();
        let mut trunc = max_order;
        for (m, c) in &self.terms {
            let mut series = QSeries::constant(BigRational::one(), crate::series::EXACT);
            let mut rest = Vec::new();
            for &(slot, center, e) in &m.0 {
                match subs.iter().find(|(s, _)| *s == slot) {
                    Some((_, sub)) => {
                        let key = (slot, center, e);
                        if !cache.contains_key(&key) {
                            let delta = &centers[sub.center as usize] - &centers[center as usize];
                            let base = sub.u.add_const(delta);
                            cache.insert(key, base.powi(e)?);
                        }
                        series = &series * &cache[&key];
                    }
                    None => rest.push((slot, center, e)),
                }
            }
            for (_, sub) in subs {
                series = &series * &sub.jacobian;
            }
            trunc = trunc.min(series.truncation_order());
            let rest = Monomial(rest);
            let lo = series.lowest_order();
            for (k, sc) in series.coeffs().iter().enumerate() {
                if sc.is_zero() || lo + k as i32 > max_order {
                    continue;
                }
                acc.entry(lo + k as i32).or_default().add_term(rest.clone(), sc * c);
            }
        }
        acc.retain(|k, _| *k <= trunc);
        let Some((&lo, _)) = acc.iter().next() else { return Ok(LocalSeries::zero(trunc)) };
        let hi = *acc.keys().last().unwrap();
        let coeffs = (lo..=hi).map(|k| acc.remove(&k).unwrap_or_default()).collect();
        Ok(LocalSeries::from_terms(lo, coeffs, trunc))
    }

    /// Numerical value with `z_slot = values[slot]`.
    pub fn eval(&self, values: &[Complex64], centers: &[Complex64]) -> Complex64 {
        let mut acc = Complex64::zero();
        for (m, c) in &self.terms {
            let mut v = Complex64::new(rational_to_f64(c), 0.0);
            for &(s, ce, e) in &m.0 {
                v *= (values[s as usize] - centers[ce as usize]).powi(e);
            }
            acc += v;
        }
        acc
    }

    /// Largest `-exp` over all factors in `slot`.
    pub fn max_pole_order(&self, slot: u8) -> i32 {
        self.terms
            .keys()
            .flat_map(|m| m.0.iter().filter(|f| f.0 == slot).map(|f| -f.2))
            .max()
            .unwrap_or(0)
            .max(0)
    }

    /// Largest absolute coefficient, as a float.
    pub fn max_abs(&self) -> f64 {
        self.terms.values().map(|c| rational_to_f64(&c.abs())).fold(0.0, f64::max)
    }

    /// Canonical text form `coeff * z0^e0 * ... * dz0dz1...`; terms sorted by
    /// their exponent tuples.
    pub fn serialize(&self, n: usize, centers: &[BigRational]) -> String {
        if self.terms.is_empty() {
            return "0".into();
        }
        let key = |m: &Monomial| -> Vec<(i32, u8)> {
            (0..n as u8)
                .map(|s| m.0.iter().find(|f| f.0 == s).map(|f| (f.2, f.1)).unwrap_or((0, 0)))
                .collect()
        };
        let mut terms: Vec<(&Monomial, &BigRational)> = self.terms.iter().collect();
        terms.sort_by(|a, b| key(a.0).cmp(&key(b.0)).then_with(|| a.0.cmp(b.0)));
        let mut out = String::new();
        let dz: String = (0..n).map(|i| format!("dz{i}")).collect();
        for (i, (m, c)) in terms.iter().enumerate() {
            if i > 0 {
                out.push_str(" + ");
            }
            out.push_str(&fmt_rational(c));
            for &(s, ce, e) in &m.0 {
                let base = fmt_base(s, &centers[ce as usize]);
                let _ = write!(out, " * {base}^{e}");
            }
            let _ = write!(out, " * {dz}");
        }
        out
    }
}

fn fmt_rational(c: &BigRational) -> String {
    if c.denom().is_one() {
        c.numer().to_string()
    } else {
        format!("{}/{}", c.numer(), c.denom())
    }
}

fn fmt_base(slot: u8, center: &BigRational) -> String {
    if center.is_zero() {
        format!("z{slot}")
    } else if center.is_negative() {
        format!("(z{slot} + {})", fmt_rational(&-center))
    } else {
        format!("(z{slot} - {})", fmt_rational(center))
    }
}

/// Data for [`MPoly::substitute`]: `z = centers[center] + u(t)` with `dz/dt`.
#[derive(Clone, Debug)]
pub struct Substitution {
    pub center: u8,
    pub u: QSeries,
    pub jacobian: QSeries,
}

impl Add for MPoly {
    type Output = MPoly;
    fn add(mut self, rhs: MPoly) -> MPoly {
        for (m, c) in rhs.terms {
            self.add_term(m, c);
        }
        self
    }
}

impl Sub for MPoly {
    type Output = MPoly;
    fn sub(self, rhs: MPoly) -> MPoly {
        self + (-rhs)
    }
}

impl Neg for MPoly {
    type Output = MPoly;
    fn neg(self) -> MPoly {
        MPoly { terms: self.terms.into_iter().map(|(m, c)| (m, -c)).collect() }
    }
}

impl Mul for MPoly {
    type Output = MPoly;
    fn mul(self, rhs: MPoly) -> MPoly {
        let mut out = MPoly::default();
        for (m1, c1) in &self.terms {
            for (m2, c2) in &rhs.terms {
                out.add_term(m1.mul(m2), c1 * c2);
            }
        }
        out
    }
}

impl Zero for MPoly {
    fn zero() -> Self {
        MPoly::default()
    }
    fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }
}

impl One for MPoly {
    fn one() -> Self {
        MPoly::constant(BigRational::one())
    }
}

impl Coeff for MPoly {
    fn from_int(n: i64) -> Self {
        MPoly::constant(BigRational::from_integer(n.into()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::rat;

    #[test]
    fn products_merge_powers() {
        let a = MPoly::term(Monomial::single(0, 0, -2), rat(1, 2));
        let b = MPoly::term(Monomial::single(0, 0, 1), rat(4, 1));
        assert_eq!(a * b, MPoly::term(Monomial::single(0, 0, -1), rat(2, 1)));
    }

    #[test]
    fn serialization_grammar() {
        let m = Monomial(vec![(0, 0, -2), (1, 0, -2), (2, 0, -2)]);
        let p = MPoly::term(m, rat(-1, 1));
        assert_eq!(p.serialize(3, &[rat(0, 1)]), "-1 * z0^-2 * z1^-2 * z2^-2 * dz0dz1dz2");
        let q = MPoly::term(Monomial::single(0, 1, -3), rat(3, 4));
        assert_eq!(q.serialize(1, &[rat(0, 1), rat(-1, 2)]), "3/4 * (z0 + 1/2)^-3 * dz0");
    }

    #[test]
    fn substitution_at_other_center_is_taylor() {
        // 1/(z - 1) at z = t: -1 - t - t^2 - ...
        let p = MPoly::term(Monomial::single(0, 1, -1), rat(1, 1));
        let sub = Substitution { center: 0, u: QSeries::var(5), jacobian: QSeries::constant(rat(1, 1), crate::series::EXACT) };
        let s = p.substitute(&[(0, &sub)], &[rat(0, 1), rat(1, 1)]).unwrap();
        for k in 0..=5 {
            assert_eq!(s.coeff(k).unwrap(), MPoly::constant(rat(-1, 1)));
        }
    }
}
