use episim_core::abm::AbmError;
use episim_core::calibrate::CalibrateError;
use episim_core::data::DataError;
use episim_core::forecast::ForecastError;
use episim_core::report::ReportError;
use episim_core::tsa::TsaError;

/// Failure classes, each with its own process exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Data(String),
    #[error("{0}")]
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }

    pub fn data(msg: impl std::fmt::Display) -> Self {
        CliError::Data(msg.to_string())
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;

impl From<DataError> for CliError {
    fn from(e: DataError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<TsaError> for CliError {
    fn from(e: TsaError) -> Self {
        match e {
            TsaError::Data(d) => d.into(),
            TsaError::SeriesTooShort { .. }
            | TsaError::TooFewWeeks { .. }
            | TsaError::InvalidArgument(_) => CliError::Data(e.to_string()),
            other => CliError::Numerical(other.to_string()),
        }
    }
}

impl From<ForecastError> for CliError {
    fn from(e: ForecastError) -> Self {
        match e {
            ForecastError::Data(d) => d.into(),
            ForecastError::Tsa(t) => t.into(),
            ForecastError::SeriesTooShort { .. } | ForecastError::InvalidArgument(_) => {
                CliError::Data(e.to_string())
            }
            other => CliError::Numerical(other.to_string()),
        }
    }
}

impl From<AbmError> for CliError {
    fn from(e: AbmError) -> Self {
        match e {
            AbmError::InvalidParams(_) | AbmError::InvalidDistribution(_) => {
                CliError::Data(e.to_string())
            }
            AbmError::TestsSeriesTooShort { .. } => CliError::Data(e.to_string()),
        }
    }
}

impl From<CalibrateError> for CliError {
    fn from(e: CalibrateError) -> Self {
        match e {
            CalibrateError::Abm(a) => a.into(),
            CalibrateError::Data(d) => d.into(),
            CalibrateError::InvalidSpace(_) | CalibrateError::InvalidConfig(_) => {
                CliError::Data(e.to_string())
            }
            CalibrateError::WindowMismatch { .. }
            | CalibrateError::MissingStatistic(_)
            | CalibrateError::ZeroNormalizer(_)
            | CalibrateError::WindowWithoutData(_) => CliError::Data(e.to_string()),
            CalibrateError::StoreTooSmall(_) | CalibrateError::EmptyPoints => {
                CliError::Numerical(e.to_string())
            }
        }
    }
}

impl From<ReportError> for CliError {
    fn from(e: ReportError) -> Self {
        match e {
            ReportError::Abm(a) => a.into(),
            ReportError::Forecast(f) => f.into(),
            ReportError::InvalidArgument(_) => CliError::Data(e.to_string()),
            ReportError::EnsembleTooSmall(_) | ReportError::RaggedEnsemble => {
                CliError::Numerical(e.to_string())
            }
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Data(e.to_string())
    }
}
