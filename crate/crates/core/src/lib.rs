pub mod elliptic;
pub mod curve;
pub mod deform;
pub mod error;
pub mod hitchin;
pub mod kernels;
pub mod mpoly;
pub mod periods;
pub mod poly;
pub mod quad;
pub mod recursion;
pub mod series;

pub use error::{Error, Result};
pub use series::{Branch, Coeff, FieldCoeff, LocalSeries};
pub use curve::{Point, SpectralCurve, TwistSection};
pub use deform::{CheckRecord, CurveFamily};
pub use hitchin::{DimensionTable, ModuliSpec};
pub use kernels::{Bidifferential, Variant};
pub use periods::{CycleBasis, PeriodData};
pub use poly::{CPoly, QPoly, QRat};
pub use recursion::{Engine, Mode, MultiDifferential, Normalization, RecursionSetup};
