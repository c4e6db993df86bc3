//! Curves shared by the benchmarks.

use num_complex::Complex64 as C;
use twistrec::series::rat;
use twistrec::{CPoly, QPoly, QRat, SpectralCurve, TwistSection};

/// `x = z^3 - 3z`, `y = z^2`.
pub fn cubic_cover() -> SpectralCurve {
    let q = |c: &[i64]| QPoly::new(c.iter().map(|&v| rat(v, 1)).collect());
    SpectralCurve::parametric(QRat::poly(q(&[0, -3, 0, 1])), QRat::poly(q(&[0, 0, 1]))).expect("cubic cover")
}

/// Generic twisted quartic of genus one.
pub fn twisted_quartic() -> SpectralCurve {
    let p = CPoly::new(vec![C::new(-1.0, 0.2), C::new(0.3, 0.0), C::new(0.1, -0.1), C::new(0.0, 0.0), C::new(1.0, 0.0)]);
    let s = TwistSection::from_zeros(&[C::new(2.0, 0.5), C::new(-2.5, 0.3), C::new(0.4, 2.2), C::new(0.3, -2.4)]).expect("twist");
    SpectralCurve::hyperelliptic(p, Some(s)).expect("quartic")
}
