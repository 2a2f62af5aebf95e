//! Error-to-exit-code mapping: 1 when the computation itself produced no
//! usable result, 2 for bad flags or inconsistent inputs, 3 for unreadable
//! or unparseable files.

use std::fmt;

use opfx::case_model::{AdmittanceError, ParseError};
use opfx::exhaustive_sampler::SampleError;
use opfx::persist::PersistError;
use opfx::sequential_collector::CollectError;
use opfx::set_metrics::SetMetricsError;

#[derive(Debug)]
pub enum Failure {
    /// Infeasible or failure-dominated run (exit 1).
    Run(String),
    /// Usage error: bad flag values or mismatched inputs (exit 2).
    Usage(String),
    /// I/O or parse error (exit 3).
    Io(String),
}

impl Failure {
    pub fn code(&self) -> i32 {
        match self {
            Failure::Run(_) => 1,
            Failure::Usage(_) => 2,
            Failure::Io(_) => 3,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Run(m) | Failure::Usage(m) | Failure::Io(m) => f.write_str(m),
        }
    }
}

pub type CliResult<T = ()> = Result<T, Failure>;

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Io(e.to_string())
    }
}

impl From<PersistError> for Failure {
    fn from(e: PersistError) -> Self {
        Failure::Io(e.to_string())
    }
}

impl From<ParseError> for Failure {
    fn from(e: ParseError) -> Self {
        Failure::Io(format!("case parse: {e}"))
    }
}

impl From<AdmittanceError> for Failure {
    fn from(e: AdmittanceError) -> Self {
        Failure::Io(format!("case data: {e}"))
    }
}

impl From<CollectError> for Failure {
    fn from(e: CollectError) -> Self {
        match e {
            CollectError::UnknownObjective(_) | CollectError::BadConfig(_) => {
                Failure::Usage(e.to_string())
            }
            CollectError::Network(inner) => inner.into(),
            CollectError::SeedInfeasible(_) | CollectError::Aborted { .. } => {
                Failure::Run(e.to_string())
            }
        }
    }
}

impl From<SampleError> for Failure {
    fn from(e: SampleError) -> Self {
        match e {
            SampleError::BadConfig(_) => Failure::Usage(e.to_string()),
            SampleError::PartitionCap { .. } => {
                Failure::Usage(format!("{e}; choose a smaller --m"))
            }
            SampleError::Network(inner) => inner.into(),
            SampleError::BoxNotFeasible { .. } => Failure::Run(e.to_string()),
        }
    }
}

impl From<SetMetricsError> for Failure {
    fn from(e: SetMetricsError) -> Self {
        match e {
            SetMetricsError::UnknownNorm(_) | SetMetricsError::UnknownScope(_) => {
                Failure::Usage(e.to_string())
            }
            SetMetricsError::EmptySet | SetMetricsError::DimensionMismatch(_, _) => {
                Failure::Io(e.to_string())
            }
        }
    }
}
