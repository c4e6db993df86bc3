use std::path::PathBuf;
use std::str::FromStr;

use num_complex::Complex64 as C;
use num_rational::BigRational;
use serde::{Deserialize, Serialize};
use twistrec::{CPoly, Mode, ModuliSpec, Normalization, QPoly, QRat, SpectralCurve, TwistSection, Variant};

use crate::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Dims,
    Recursion,
    Periods,
    Verify,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    Properties,
    Rauch,
    DmCubic,
    Taylor,
    BergmanNormalization,
}

impl Suite {
    pub const ALL: [Suite; 5] = [Suite::Properties, Suite::Rauch, Suite::DmCubic, Suite::Taylor, Suite::BergmanNormalization];
}

impl FromStr for Suite {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        serde_json::from_value(serde_json::Value::String(s.into())).map_err(|_| CliError::Config(format!("unknown suite `{s}`")))
    }
}

/// A rational function as numerator and denominator coefficients, lowest
/// degree first, each written `p` or `p/q`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RationalSpec {
    pub num: Vec<String>,
    #[serde(default = "one")]
    pub den: Vec<String>,
}

fn one() -> Vec<String> {
    vec!["1".into()]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum CurveSpec {
    /// `x = z^2`, `y = z`.
    Airy,
    Parametric { x: RationalSpec, y: RationalSpec },
    /// `y^2 = P(x)` with complex coefficients `[re, im]`, lowest degree first.
    Hyperelliptic {
        p: Vec<[f64; 2]>,
        /// Allow twist zeros on branch points (the degenerate direction).
        #[serde(default)]
        twist_on_branch_points: bool,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum TwistSpec {
    Zeros { zeros: Vec<[f64; 2]> },
    Poly { coeffs: Vec<[f64; 2]> },
    /// Rational coefficients, usable in exact mode.
    Exact { coeffs: Vec<String> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FamilySpec {
    /// `P_t = P_0 + t * direction * s`.
    pub direction: [f64; 2],
    pub radius: f64,
    /// Finite-difference step in `t`.
    pub steps: f64,
    /// Gauss-Legendre nodes per piece for the triple B-period.
    pub quadrature_order: usize,
    pub quadrature_panels: usize,
    pub rauch_pairs: usize,
}

impl Default for FamilySpec {
    fn default() -> Self {
        FamilySpec { direction: [0.01, 0.0], radius: 0.05, steps: 1e-3, quadrature_order: 12, quadrature_panels: 1, rauch_pairs: 5 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RecursionSpec {
    pub g_max: u32,
    pub n_max: u32,
    /// Only the top pair `(g_max, n_max)` instead of every stable pair below it.
    pub single: bool,
    pub variant: Variant,
    pub mode: Mode,
    pub normalization: Normalization,
    pub series_order: i32,
    pub contour_nodes: usize,
    /// Largest allowed `2g - 2 + n`.
    pub max_weight: u32,
    /// `W01 = f(x) y dx` factor for the Hitchin-global variant.
    pub w01_factor: Vec<String>,
}

impl Default for RecursionSpec {
    fn default() -> Self {
        RecursionSpec {
            g_max: 1,
            n_max: 1,
            single: false,
            variant: Variant::Ordinary,
            mode: Mode::Exact,
            normalization: Normalization::SigmaBase,
            series_order: 0,
            contour_nodes: 64,
            max_weight: 8,
            w01_factor: one(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub properties: f64,
    pub rauch: f64,
    pub dm_cubic: f64,
    pub degenerate: f64,
    pub taylor: f64,
    pub bergman_a: f64,
    pub bergman_b: f64,
    pub residue: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { properties: 1e-10, rauch: 1e-4, dm_cubic: 1e-3, degenerate: 1e-7, taylor: 1e-3, bergman_a: 1e-8, bergman_b: 1e-6, residue: 1e-9 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSpec {
    pub dir: PathBuf,
    pub report: String,
    pub csv_prefix: String,
}

impl Default for OutputSpec {
    fn default() -> Self {
        OutputSpec { dir: PathBuf::from("twistrec-out"), report: "report.jsonl".into(), csv_prefix: "samples".into() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub command: Command,
    pub curve: CurveSpec,
    pub twist: Option<TwistSpec>,
    pub family: FamilySpec,
    pub recursion: RecursionSpec,
    pub moduli: ModuliSpec,
    pub suite: Vec<Suite>,
    pub tolerances: Tolerances,
    /// Contour clearance in units of the branch-point spacing.
    pub separation: f64,
    pub samples: usize,
    pub seed: u64,
    pub output: OutputSpec,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            command: Command::Verify,
            curve: CurveSpec::Airy,
            twist: None,
            family: FamilySpec::default(),
            recursion: RecursionSpec::default(),
            moduli: ModuliSpec::twisted(2, 2, 0),
            suite: vec![Suite::Properties],
            tolerances: Tolerances::default(),
            separation: twistrec::periods::CycleOpts::default().separation,
            samples: 10,
            seed: 0,
            output: OutputSpec::default(),
        }
    }
}

fn complex(v: &[[f64; 2]]) -> Vec<C> {
    v.iter().map(|&[re, im]| C::new(re, im)).collect()
}

fn rational(s: &str) -> Result<BigRational, CliError> {
    BigRational::from_str(s.trim()).map_err(|_| CliError::Config(format!("not a rational number: `{s}`")))
}

pub fn qpoly(coeffs: &[String]) -> Result<QPoly, CliError> {
    Ok(QPoly::new(coeffs.iter().map(|c| rational(c)).collect::<Result<_, _>>()?))
}

fn qrat(r: &RationalSpec) -> Result<QRat, CliError> {
    Ok(QRat::new(qpoly(&r.num)?, qpoly(&r.den)?))
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Config(m));
        let t = &self.tolerances;
        for (name, v) in [
            ("properties", t.properties),
            ("rauch", t.rauch),
            ("dm_cubic", t.dm_cubic),
            ("degenerate", t.degenerate),
            ("taylor", t.taylor),
            ("bergman_a", t.bergman_a),
            ("bergman_b", t.bergman_b),
            ("residue", t.residue),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return bad(format!("tolerance `{name}` must be positive, got {v}"));
            }
        }
        let r = &self.recursion;
        if 2 * r.g_max + r.n_max > r.max_weight + 2 {
            return bad(format!("2g - 2 + n = {} exceeds max_weight {}", 2 * r.g_max as i64 - 2 + r.n_max as i64, r.max_weight));
        }
        if r.n_max == 0 || (r.single && 2 * r.g_max + r.n_max <= 2) {
            return bad(format!("({}, {}) is not a stable pair", r.g_max, r.n_max));
        }
        if r.contour_nodes < 8 {
            return bad(format!("contour_nodes must be at least 8, got {}", r.contour_nodes));
        }
        let f = &self.family;
        if !(f.radius > 0.0 && f.steps > 0.0 && f.steps < f.radius) {
            return bad(format!("family needs 0 < steps < radius, got steps {} radius {}", f.steps, f.radius));
        }
        if f.quadrature_order < 2 || f.quadrature_panels == 0 || f.rauch_pairs == 0 {
            return bad("family quadrature order, panels and rauch_pairs must be positive".into());
        }
        if !(self.separation.is_finite() && self.separation > 0.0) || self.samples == 0 {
            return bad("separation and samples must be positive".into());
        }
        if self.command == Command::Verify && self.suite.is_empty() {
            return bad("verify needs at least one suite".into());
        }
        Ok(())
    }

    pub fn build_twist(&self) -> Result<Option<TwistSection>, CliError> {
        let t = match &self.twist {
            None => return Ok(None),
            Some(TwistSpec::Zeros { zeros }) => TwistSection::from_zeros(&complex(zeros)),
            Some(TwistSpec::Poly { coeffs }) => TwistSection::new(CPoly::new(complex(coeffs))),
            Some(TwistSpec::Exact { coeffs }) => TwistSection::exact(qpoly(coeffs)?),
        };
        t.map(Some).map_err(|e| CliError::Config(format!("twist: {e}")))
    }

    pub fn build_curve(&self) -> Result<SpectralCurve, CliError> {
        let twist = self.build_twist()?;
        let cur = match &self.curve {
            CurveSpec::Airy => SpectralCurve::airy().with_twist(twist),
            CurveSpec::Parametric { x, y } => SpectralCurve::parametric(qrat(x)?, qrat(y)?).and_then(|c| c.with_twist(twist)),
            CurveSpec::Hyperelliptic { p, twist_on_branch_points } => {
                SpectralCurve::hyperelliptic_with(CPoly::new(complex(p)), twist, !twist_on_branch_points)
            }
        };
        cur.map_err(|e| CliError::Config(format!("curve: {e}")))
    }
}
