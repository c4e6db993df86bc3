use thiserror::Error;

/// Errors raised anywhere in the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("division by an identically zero series")]
    DivisionByZeroSeries,
    #[error("cannot compose a series with poles with an inner series that has a constant term")]
    CompositionPole,
    #[error("series is not invertible: linear coefficient vanishes or lowest order is not 1")]
    VanishingLinearCoefficient,
    #[error("square root needs an even lowest order and a square leading coefficient: {0}")]
    BadSquareRoot(String),
    #[error("truncation window exhausted: need order {needed}, series known up to order {available}")]
    TruncationWindow { needed: i32, available: i32 },
    #[error("invalid curve: {0}")]
    InvalidCurve(String),
    #[error("polynomial has repeated roots (separation {0:e})")]
    RepeatedRoot(f64),
    #[error("twist zero at {0} collides with a branch point")]
    TwistCollision(String),
    #[error("root finding failed: {0}")]
    RootFinding(String),
    #[error("order-by-order solve hit a zero pivot at a non-simple point")]
    ZeroPivot,
    #[error("frame is placed at a pole: {0}")]
    FramePole(String),
    #[error("unsupported mode: {0}")]
    UnsupportedMode(String),
    #[error("uniformization unavailable: {0}")]
    Uniformization(String),
    #[error("corridor violation: {0}")]
    Corridor(String),
    #[error("quadrature did not converge ({what}): error estimate {estimate:e}")]
    Quadrature { what: String, estimate: f64 },
    #[error("family not admissible: {0}")]
    Admissibility(String),
    #[error("h0 is not determined by the degree alone (genus {genus}, degree {degree})")]
    SpecialDivisorRange { genus: i64, degree: i64 },
    #[error("invalid moduli specification: {0}")]
    InvalidModuli(String),
    #[error("spectral genus methods disagree: effective base gives {effective}, adjunction gives {adjunction}")]
    SpectralGenusMismatch { effective: i64, adjunction: i64 },
    #[error("singular coordinate: {0}")]
    SingularCoordinate(String),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
