//! Uniform exit-code scheme: 2 for validation failures (bad arguments,
//! malformed inputs, violated preconditions), 3 for numeric failures
//! (solvers, certification of computed data, output writes), 4 for
//! exhausted iteration or subdivision budgets.

use blaschke_div_core::blaschke::BlaschkeError;
use blaschke_div_core::dimension::DimensionError;
use blaschke_div_core::divisor::DivisorError;
use blaschke_div_core::io::IoError;
use blaschke_div_core::model::ModelError;
use blaschke_div_core::parabolic::ParabolicError;
use blaschke_div_core::polydyn::PolyDynError;
use blaschke_div_core::scheme::SchemeError;

#[derive(Debug)]
pub enum CliError {
    Validation(String),
    Numeric(String),
    Budget(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Numeric(_) => 3,
            CliError::Budget(_) => 4,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CliError::Validation(m) | CliError::Numeric(m) | CliError::Budget(m) => m,
        }
    }
}

impl From<DivisorError> for CliError {
    fn from(e: DivisorError) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<SchemeError> for CliError {
    fn from(e: SchemeError) -> Self {
        match e {
            SchemeError::Blaschke(inner) => inner.into(),
            other => CliError::Validation(other.to_string()),
        }
    }
}

impl From<BlaschkeError> for CliError {
    fn from(e: BlaschkeError) -> Self {
        match e {
            BlaschkeError::BoundaryZero(_)
            | BlaschkeError::OneInEscapedSupport
            | BlaschkeError::CompactSetHitsEscapedSupport(_)
            | BlaschkeError::Divisor(_) => CliError::Validation(e.to_string()),
            _ => CliError::Numeric(e.to_string()),
        }
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        match e {
            ModelError::SubdivisionBudgetExceeded => CliError::Budget(e.to_string()),
            ModelError::ZeroMultiplier | ModelError::NotPreperiodic => {
                CliError::Validation(e.to_string())
            }
            ModelError::Scheme(inner) => inner.into(),
            ModelError::Blaschke(inner) => inner.into(),
            _ => CliError::Numeric(e.to_string()),
        }
    }
}

impl From<PolyDynError> for CliError {
    fn from(e: PolyDynError) -> Self {
        match e {
            PolyDynError::NoLandingAtBudget | PolyDynError::MotionNotConverged => {
                CliError::Budget(e.to_string())
            }
            PolyDynError::InvalidPolynomial
            | PolyDynError::InvalidAngle
            | PolyDynError::EmptyRaster
            | PolyDynError::SetNotInvariant
            | PolyDynError::SetNotExpanding { .. }
            | PolyDynError::InsidePullbackRegion
            | PolyDynError::DegenerateFit(_) => CliError::Validation(e.to_string()),
            _ => CliError::Numeric(e.to_string()),
        }
    }
}

impl From<DimensionError> for CliError {
    fn from(e: DimensionError) -> Self {
        match e {
            DimensionError::DepthBudgetExceeded => CliError::Budget(e.to_string()),
            DimensionError::EigenvalueNotConverged => CliError::Numeric(e.to_string()),
            _ => CliError::Validation(e.to_string()),
        }
    }
}

impl From<ParabolicError> for CliError {
    fn from(e: ParabolicError) -> Self {
        match e {
            ParabolicError::InvalidMap(_)
            | ParabolicError::InvalidRotation
            | ParabolicError::MultiplierMismatch { .. }
            | ParabolicError::RequiresParabolic
            | ParabolicError::UnsupportedRotation
            | ParabolicError::SectorViolated
            | ParabolicError::NotInPetal => CliError::Validation(e.to_string()),
            _ => CliError::Numeric(e.to_string()),
        }
    }
}

/// Output-side IO failures are numeric (exit 3); input reads are wrapped
/// into validation errors at the call site instead.
impl From<IoError> for CliError {
    fn from(e: IoError) -> Self {
        CliError::Numeric(e.to_string())
    }
}
