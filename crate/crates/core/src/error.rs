use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Failures raised by the model, the retarget kinematics and the simulators.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("period {period} is outside the schedule ({first}..={last})")]
    ScheduleBounds { period: u32, first: u32, last: u32 },

    #[error("total hash rate is zero{}", match .period { Some(p) => format!(" in period {p}"), None => String::new() })]
    DegenerateNetwork { period: Option<u32> },

    #[error("{0}")]
    Domain(String),

    #[error("invalid {field}: {reason}")]
    Validation { field: String, reason: String },

    #[error("unknown pool `{0}`")]
    UnknownPool(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Validation {
            field: field.into(),
            reason: reason.into(),
        }
    }
}
