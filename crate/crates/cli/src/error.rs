use std::fmt;

use rankone_core::Error;

/// Failures surfaced by the harness, each with its exit code.
#[derive(Debug)]
pub enum CliError {
    /// Malformed configuration or arguments; names the offending field.
    Validation(String),
    /// A core error, optionally tagged with the config field it came from.
    Core { field: Option<&'static str>, error: Error },
    Io(String),
}

impl CliError {
    pub fn field(field: &'static str, error: Error) -> Self {
        CliError::Core { field: Some(field), error }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Core { error, .. } => match error {
                Error::SearchExhausted(_) => 4,
                e if e.is_resource_guard() => 3,
                Error::ThreadPool(_) | Error::NoConvergence { .. } | Error::NoConditioningEvents { .. } => 1,
                _ => 2,
            },
            CliError::Io(_) => 1,
        }
    }

    fn hint(&self) -> Option<&'static str> {
        match self {
            CliError::Core { error: Error::WordCap { .. }, .. } => Some("raise --cap-words or use fewer sampling times"),
            CliError::Core { error: Error::HeightOverflow { .. }, .. } => {
                Some("use fewer stages; tower queries need heights below 2^64")
            }
            CliError::Core { error: Error::SizeGuard { .. }, .. } => Some("shrink the instance"),
            CliError::Core { error: Error::SearchExhausted(_), .. } => Some("raise trial_cap or relax N - N0"),
            _ => None,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Validation(m) => write!(f, "validation error: {m}")?,
            CliError::Core { field: Some(field), error } => write!(f, "{field}: {error}")?,
            CliError::Core { field: None, error } => write!(f, "{error}")?,
            CliError::Io(m) => write!(f, "i/o error: {m}")?,
        }
        if let Some(h) = self.hint() {
            write!(f, " (hint: {h})")?;
        }
        Ok(())
    }
}

impl std::error::Error for CliError {}

impl From<Error> for CliError {
    fn from(error: Error) -> Self {
        CliError::Core { field: None, error }
    }
}
