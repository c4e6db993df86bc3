//! Elliptic functions for the lattice `Z + tau Z`: Weierstrass p and zeta
//! via q-series, an Eisenstein lattice-sum oracle, the j-invariant, and the
//! arithmetic-geometric mean.

use std::f64::consts::PI;

use num_complex::Complex64;

const I: Complex64 = Complex64::new(0.0, 1.0);

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// Lattice data with precomputed nome.
#[derive(Clone, Copy, Debug)]
pub struct Lattice {
    pub tau: Complex64,
    pub q: Complex64,
    terms: usize,
}

impl Lattice {
    pub fn new(tau: Complex64) -> Self {
        assert!(tau.im > 0.0, "tau must lie in the upper half plane");
        let q = (2.0 * PI * I * tau).exp();
        // |q|^{n/2} below 1e-18 suffices after reduction of u.
        let terms = ((-18.0 * 10f64.ln()) / (0.5 * q.norm().ln())).ceil().max(4.0) as usize + 2;
        Lattice { tau, q, terms }
    }

    /// Reduces `u` modulo the lattice so that |Im u| <= Im tau / 2 and |Re u| <= 1/2.
    pub fn reduce(&self, u: Complex64) -> (Complex64, Complex64) {
        let n = (u.im / self.tau.im).round();
        let u1 = u - self.tau * n;
        let m = u1.re.round();
        (u1 - m, c(m) + self.tau * n)
    }

    /// Quasi-period constant `G2 = sum' 1/omega^2` (Eisenstein summation).
    pub fn g2_eisenstein(&self) -> Complex64 {
        let mut s = Complex64::new(0.0, 0.0);
        let mut qn = Complex64::new(1.0, 0.0);
        for n in 1..=self.terms {
            qn *= self.q;
            s += qn * n as f64 / (c(1.0) - qn);
        }
        c(PI * PI / 3.0) * (c(1.0) - s * 24.0)
    }

    /// Weierstrass p.
    pub fn wp(&self, u: Complex64) -> Complex64 {
        let (u, _) = self.reduce(u);
        let w = (2.0 * PI * I * u).exp();
        let wi = w.inv();
        let s = (PI * u).sin();
        let mut acc = c(PI * PI) / (s * s);
        let mut tail = c(1.0 / 12.0);
        let mut qn = c(1.0);
        for _ in 1..=self.terms {
            qn *= self.q;
            let a = qn * w;
            let b = qn * wi;
            tail += a / ((c(1.0) - a) * (c(1.0) - a)) + b / ((c(1.0) - b) * (c(1.0) - b))
                - qn * 2.0 / ((c(1.0) - qn) * (c(1.0) - qn));
        }
        acc += (2.0 * PI * I).powi(2) * tail;
        acc
    }

    /// Weierstrass p', by the derivative of the same q-series.
    pub fn wp_prime(&self, u: Complex64) -> Complex64 {
        let (u, _) = self.reduce(u);
        let w = (2.0 * PI * I * u).exp();
        let wi = w.inv();
        let s = (PI * u).sin();
        let cs = (PI * u).cos();
        let mut acc = c(-2.0 * PI.powi(3)) * cs / (s * s * s);
        let mut tail = c(0.0);
        let mut qn = c(1.0);
        for _ in 1..=self.terms {
            qn *= self.q;
            let a = qn * w;
            let b = qn * wi;
            // d/du [x/(1-x)^2] = x(1+x)/(1-x)^3 * dx/du / x
            tail += a * (c(1.0) + a) / (c(1.0) - a).powi(3) - b * (c(1.0) + b) / (c(1.0) - b).powi(3);
        }
        acc += (2.0 * PI * I).powi(3) * tail;
        acc
    }

    /// Weierstrass zeta with `zeta(u + 1) = zeta(u) + G2` and
    /// `zeta(u + tau) = zeta(u) + G2 tau - 2 pi i`.
    pub fn zeta(&self, u: Complex64) -> Complex64 {
        let (ur, shift) = self.reduce(u);
        let g2 = self.g2_eisenstein();
        let w = (2.0 * PI * I * ur).exp();
        let wi = w.inv();
        let mut acc = g2 * ur + c(PI) * (PI * ur).cos() / (PI * ur).sin();
        let mut qm = c(1.0);
        for _ in 1..=self.terms {
            qm *= self.q;
            let a = qm * w;
            let b = qm * wi;
            acc -= 2.0 * PI * I * (a / (c(1.0) - a) - b / (c(1.0) - b));
        }
        // undo the reduction with the quasi-periods
        let n = (shift.im / self.tau.im).round();
        let m = (shift - self.tau * n).re.round();
        acc + g2 * m + (g2 * self.tau - 2.0 * PI * I) * n
    }

    /// Oracle: p from row sums `pi^2 / sin^2` over the lattice, independent of the q-series.
    pub fn wp_lattice_sum(&self, u: Complex64, rows: i64) -> Complex64 {
        let mut g2 = c(PI * PI / 3.0);
        for n in 1..=rows {
            let s = (PI * self.tau * n as f64).sin();
            g2 += c(2.0 * PI * PI) / (s * s);
        }
        let mut acc = c(0.0);
        for n in -rows..=rows {
            let s = (PI * (u - self.tau * n as f64)).sin();
            acc += c(PI * PI) / (s * s);
        }
        acc - g2
    }

    /// Eisenstein series E4 and E6 (normalized to 1 at the cusp).
    pub fn e4_e6(&self) -> (Complex64, Complex64) {
        let mut e4 = c(1.0);
        let mut e6 = c(1.0);
        let mut qn = c(1.0);
        for n in 1..=self.terms * 2 {
            qn *= self.q;
            let nf = n as f64;
            let d = c(1.0) - qn;
            e4 += qn * 240.0 * nf.powi(3) / d;
            e6 -= qn * 504.0 * nf.powi(5) / d;
        }
        (e4, e6)
    }
}

/// Moves `tau` into the standard fundamental domain of SL(2, Z).
pub fn reduce_tau(mut tau: Complex64) -> Complex64 {
    for _ in 0..100 {
        tau -= c(tau.re.round());
        if tau.norm_sqr() < 1.0 - 1e-14 {
            tau = -tau.inv();
        } else {
            break;
        }
    }
    tau
}

/// Klein j-invariant of `tau`.
pub fn j_invariant(tau: Complex64) -> Complex64 {
    let l = Lattice::new(reduce_tau(tau));
    let (e4, e6) = l.e4_e6();
    let e43 = e4 * e4 * e4;
    e43 * 1728.0 / (e43 - e6 * e6)
}

/// j-invariant of `y^2 = P(x)` for cubic or quartic `P` (coefficients lowest
/// first) from the binary-quartic invariants.
pub fn j_invariant_of_poly(p: &[Complex64]) -> Complex64 {
    let g = |k: usize| p.get(k).copied().unwrap_or_default();
    let (e, d, cc, b, a) = (g(0), g(1), g(2), g(3), g(4));
    let inv_i = a * e * 12.0 - b * d * 3.0 + cc * cc;
    let inv_j = a * cc * e * 72.0 + b * cc * d * 9.0 - a * d * d * 27.0 - e * b * b * 27.0 - cc * cc * cc * 2.0;
    let i3 = inv_i * inv_i * inv_i;
    i3 * 6912.0 / (i3 * 4.0 - inv_j * inv_j)
}

/// Arithmetic-geometric mean of two positive reals.
pub fn agm(mut a: f64, mut b: f64) -> f64 {
    for _ in 0..64 {
        let an = 0.5 * (a + b);
        let bn = (a * b).sqrt();
        a = an;
        b = bn;
        if (a - b).abs() <= 1e-16 * a {
            break;
        }
    }
    a
}

/// Period ratio of `y^2 = k (x - e1)(x - e2)(x - e3)` with real roots
/// `e1 > e2 > e3`, from the AGM.
pub fn tau_from_real_roots(e1: f64, e2: f64, e3: f64) -> Complex64 {
    let w1 = PI / agm((e1 - e3).sqrt(), (e1 - e2).sqrt());
    let w2 = PI / agm((e1 - e3).sqrt(), (e2 - e3).sqrt());
    Complex64::new(0.0, w2 / w1)
}
