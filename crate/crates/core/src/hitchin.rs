//! Riemann-Roch bookkeeping for moduli of twisted Higgs bundles: moduli
//! dimension, Hitchin base, effective base and spectral genus.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Rank, degree and twisting data. Line bundles are tracked by degree, with
/// `l_is_canonical` marking the untwisted case `L = K`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModuliSpec {
    pub rank: i64,
    pub degree: i64,
    pub genus: i64,
    pub deg_l: i64,
    #[serde(default)]
    pub trace_free: bool,
    #[serde(default)]
    pub l_is_canonical: bool,
}

impl ModuliSpec {
    pub fn twisted(rank: i64, deg_l: i64, genus: i64) -> Self {
        ModuliSpec { rank, degree: 0, genus, deg_l, trace_free: false, l_is_canonical: false }
    }

    pub fn canonical(rank: i64, genus: i64) -> Self {
        ModuliSpec { rank, degree: 0, genus, deg_l: 2 * genus - 2, trace_free: false, l_is_canonical: true }
    }

    fn check(&self) -> Result<()> {
        if self.rank < 1 || self.genus < 0 {
            return Err(Error::InvalidModuli(format!("rank {} genus {}", self.rank, self.genus)));
        }
        if self.l_is_canonical && self.deg_l != 2 * self.genus - 2 {
            return Err(Error::InvalidModuli("deg L must be 2g - 2 when L = K".into()));
        }
        Ok(())
    }

    /// `(degree, power of K if the bundle is K^n)` of `L^i (x) K^j`.
    fn bundle(&self, i: i64, j: i64) -> (i64, Option<i64>) {
        let deg = i * self.deg_l + j * (2 * self.genus - 2);
        let kpow = if self.l_is_canonical { Some(i + j) } else if i == 0 { Some(j) } else { None };
        (deg, kpow)
    }
}

/// `(h0, h1)` of a line bundle of degree `deg` on a genus-`g` curve, where the
/// degree alone determines them.
pub fn h0_h1(g: i64, deg: i64) -> Result<(i64, i64)> {
    let h0 = if g == 0 {
        (deg + 1).max(0)
    } else if deg > 2 * g - 2 {
        deg + 1 - g
    } else if deg < 0 {
        0
    } else {
        return Err(Error::SpecialDivisorRange { genus: g, degree: deg });
    };
    Ok((h0, h0 - (deg + 1 - g)))
}

/// `h0` of `K^n`.
pub fn h0_canonical_power(g: i64, n: i64) -> i64 {
    match (g, n) {
        (_, 0) => 1,
        (0, _) => h0_h1(0, n * -2).unwrap().0,
        (1, _) => 1,
        (_, 1) => g,
        (_, n) if n > 1 => (2 * n - 1) * (g - 1),
        _ => 0,
    }
}

fn h0(spec: &ModuliSpec, i: i64, j: i64) -> Result<i64> {
    match spec.bundle(i, j) {
        (_, Some(n)) => Ok(h0_canonical_power(spec.genus, n)),
        (deg, None) => h0_h1(spec.genus, deg).map(|v| v.0),
    }
}

pub fn moduli_dim(spec: &ModuliSpec) -> Result<i64> {
    spec.check()?;
    let r2 = spec.rank * spec.rank;
    if spec.l_is_canonical {
        return Ok(if spec.trace_free { (r2 - 1) * (2 * spec.genus - 2) } else { 2 * r2 * (spec.genus - 1) + 2 });
    }
    if spec.deg_l <= 2 * spec.genus - 2 {
        return Err(Error::InvalidModuli(format!("deg L = {} must exceed deg K = {}", spec.deg_l, 2 * spec.genus - 2)));
    }
    Ok(if spec.trace_free { spec.deg_l * (r2 - 1) } else { r2 * spec.deg_l + 1 })
}

/// `sum_i h0(L^i)` over `i = 1..r` (or `2..r` when trace-free).
pub fn hitchin_base_dim(spec: &ModuliSpec) -> Result<i64> {
    spec.check()?;
    let start = if spec.trace_free { 2 } else { 1 };
    (start..=spec.rank).map(|i| h0(spec, i, 0)).sum()
}

/// `sum_{i=0}^{r-1} h0(L^i (x) K)`.
pub fn effective_base_dim(spec: &ModuliSpec) -> Result<i64> {
    spec.check()?;
    (0..spec.rank).map(|i| h0(spec, i, 1)).sum()
}

/// `sum_{i=0}^{r-1} h1(L^-i)`, the Serre-dual count of the same space.
pub fn effective_base_dim_dual(spec: &ModuliSpec) -> Result<i64> {
    spec.check()?;
    (0..spec.rank)
        .map(|i| {
            let (deg, _) = spec.bundle(-i, 0);
            let h0 = h0(spec, -i, 0)?;
            Ok(h0 - (deg + 1 - spec.genus))
        })
        .sum()
}

/// `1 + r(g - 1) + r(r - 1) deg L / 2`.
pub fn adjunction_genus(spec: &ModuliSpec) -> i64 {
    1 + spec.rank * (spec.genus - 1) + spec.rank * (spec.rank - 1) * spec.deg_l / 2
}

/// Spectral genus, computed two ways; errors when they disagree.
pub fn spectral_genus(spec: &ModuliSpec) -> Result<i64> {
    let effective = effective_base_dim(spec)?;
    let dual = effective_base_dim_dual(spec)?;
    let adjunction = adjunction_genus(spec);
    if effective != adjunction || effective != dual {
        return Err(Error::SpectralGenusMismatch { effective, adjunction });
    }
    Ok(effective)
}

/// All four numbers at once.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DimensionTable {
    pub moduli_dim: i64,
    pub hitchin_base_dim: i64,
    pub effective_base_dim: i64,
    pub spectral_genus: i64,
}

pub fn dimension_table(spec: &ModuliSpec) -> Result<DimensionTable> {
    Ok(DimensionTable {
        moduli_dim: moduli_dim(spec)?,
        hitchin_base_dim: hitchin_base_dim(spec)?,
        effective_base_dim: effective_base_dim(spec)?,
        spectral_genus: spectral_genus(spec)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn projective_line_example() {
        let t = dimension_table(&ModuliSpec { degree: -1, ..ModuliSpec::twisted(2, 2, 0) }).unwrap();
        assert_eq!(t, DimensionTable { moduli_dim: 9, hitchin_base_dim: 8, effective_base_dim: 1, spectral_genus: 1 });
    }

    #[test]
    fn h0_examples() {
        assert_eq!(h0_h1(0, 4).unwrap(), (5, 0));
        assert_eq!(h0_h1(0, -2).unwrap(), (0, 1));
        assert_eq!(h0_h1(3, -1).unwrap(), (0, 3));
        assert!(matches!(h0_h1(2, 1), Err(Error::SpecialDivisorRange { .. })));
        for g in 2..6 {
            for n in 2..5 {
                let (h, _) = h0_h1(g, n * (2 * g - 2)).unwrap();
                assert_eq!(h, (g - 1) * (2 * n - 1));
                assert_eq!(h0_canonical_power(g, n), h);
            }
        }
    }

    #[test]
    fn moduli_examples() {
        assert_eq!(moduli_dim(&ModuliSpec::canonical(2, 2)).unwrap(), 10);
        let tf = ModuliSpec { trace_free: true, ..ModuliSpec::twisted(2, 2, 0) };
        assert_eq!(moduli_dim(&tf).unwrap(), 6);
        assert_eq!(hitchin_base_dim(&tf).unwrap(), 5);
        assert!(moduli_dim(&ModuliSpec::twisted(2, 2, 2)).is_err());
        assert_eq!(effective_base_dim(&ModuliSpec::twisted(1, 3, 0)).unwrap(), 0);
        assert_eq!(spectral_genus(&ModuliSpec::canonical(2, 2)).unwrap(), 5);
    }
}
