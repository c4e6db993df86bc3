//! Configuration, orchestration and output for the `twistrec` binary.

mod config;
mod run;

pub use config::{Command, CurveSpec, FamilySpec, OutputSpec, RationalSpec, RecursionSpec, RunConfig, Suite, Tolerances, TwistSpec};
pub use run::{run, Outcome};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("numerical non-convergence: {0}")]
    NonConvergence(String),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::Io(_) => 2,
            CliError::NonConvergence(_) => 3,
        }
    }
}

impl From<twistrec::Error> for CliError {
    fn from(e: twistrec::Error) -> Self {
        use twistrec::Error as E;
        match e {
            E::Quadrature { .. } | E::TruncationWindow { .. } | E::RootFinding(_) | E::SingularCoordinate(_) | E::ZeroPivot => {
                CliError::NonConvergence(e.to_string())
            }
            _ => CliError::Config(e.to_string()),
        }
    }
}
