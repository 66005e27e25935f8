use std::fmt;

use cqed_core::circuit_quantize::CircuitError;
use cqed_core::hilbert::HilbertError;
use cqed_core::jc_site::JcError;
use cqed_core::jchm_lattice::LatticeError;
use cqed_core::lindblad::LindbladError;
use cqed_core::meanfield::MeanFieldError;
use cqed_core::resonator::ResonatorError;

#[derive(Debug)]
pub enum CliError {
    /// Bad configuration or input data; exit status 1.
    Input(String),
    /// A solver failed to converge or met a degenerate problem; exit status 2.
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Input(_) => 1,
            Self::Numerical(_) => 2,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Input(m) => write!(f, "input error: {m}"),
            Self::Numerical(m) => write!(f, "numerical error: {m}"),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::Input(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        Self::Input(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        Self::Input(e.to_string())
    }
}

impl From<JcError> for CliError {
    fn from(e: JcError) -> Self {
        Self::Input(e.to_string())
    }
}

impl From<HilbertError> for CliError {
    fn from(e: HilbertError) -> Self {
        Self::Input(e.to_string())
    }
}

impl From<LatticeError> for CliError {
    fn from(e: LatticeError) -> Self {
        match e {
            LatticeError::EigenNotConverged { .. } => Self::Numerical(e.to_string()),
            _ => Self::Input(e.to_string()),
        }
    }
}

impl From<ResonatorError> for CliError {
    fn from(e: ResonatorError) -> Self {
        match e {
            ResonatorError::BracketEscape { .. } | ResonatorError::Unnormalized { .. } => Self::Numerical(e.to_string()),
            _ => Self::Input(e.to_string()),
        }
    }
}

impl From<CircuitError> for CliError {
    fn from(e: CircuitError) -> Self {
        Self::Input(e.to_string())
    }
}

impl From<LindbladError> for CliError {
    fn from(e: LindbladError) -> Self {
        use LindbladError::*;
        match e {
            DegenerateSteadyState { .. } | NotConverged { .. } | ResidualTooLarge { .. } | Factorization(_) | Integration(_) => {
                Self::Numerical(e.to_string())
            }
            _ => Self::Input(e.to_string()),
        }
    }
}

impl From<MeanFieldError> for CliError {
    fn from(e: MeanFieldError) -> Self {
        use MeanFieldError::*;
        match e {
            Lindblad(inner) => inner.into(),
            NegativeHopping(_) | InvalidOption(_) | Site(_) | Hilbert(_) | OutsideWindow { .. } => Self::Input(e.to_string()),
            _ => Self::Numerical(e.to_string()),
        }
    }
}
