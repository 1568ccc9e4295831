use std::fmt;

use pprec::Error;

/// Exit status for usage and input errors.
pub const EXIT_USAGE: u8 = 2;
/// Exit status for failures inside a pipeline stage.
pub const EXIT_INTERNAL: u8 = 1;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Stage { stage: &'static str, source: Error },
}

impl CliError {
    pub fn usage(msg: impl Into<String>) -> Self {
        CliError::Usage(msg.into())
    }

    pub fn message(&self) -> String {
        match self {
            CliError::Usage(m) => m.clone(),
            CliError::Stage { source, .. } => source.to_string(),
        }
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Stage { stage, source } => match source {
                Error::Usage(_) | Error::Domain(_) | Error::UnknownStrategy(_) => EXIT_USAGE,
                Error::Io { .. } | Error::Parse { .. } | Error::EmptyRecords if *stage == "load" => EXIT_USAGE,
                _ => EXIT_INTERNAL,
            },
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "{m}"),
            CliError::Stage { stage, source } => write!(f, "{stage} stage failed: {source}"),
        }
    }
}

/// Tags a library error with the pipeline stage it came from.
pub trait StageExt<T> {
    fn stage(self, stage: &'static str) -> Result<T, CliError>;
}

impl<T> StageExt<T> for pprec::Result<T> {
    fn stage(self, stage: &'static str) -> Result<T, CliError> {
        self.map_err(|source| CliError::Stage { stage, source })
    }
}
