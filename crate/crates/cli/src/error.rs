use std::process::ExitCode;

use floodxai::Error as CoreError;

/// Failure of one command, carrying the process exit status.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Bad flags, unreadable or malformed input, inconsistent files.
    #[error("{0}")]
    Usage(String),
    /// The inputs were valid but the computation or an output write failed.
    #[error("{0}")]
    Runtime(String),
}

pub type CliResult<T> = Result<T, CliError>;

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        match self {
            CliError::Usage(_) => ExitCode::from(2),
            CliError::Runtime(_) => ExitCode::from(3),
        }
    }

    pub fn usage(msg: impl Into<String>) -> Self {
        CliError::Usage(msg.into())
    }

    pub fn runtime(msg: impl Into<String>) -> Self {
        CliError::Runtime(msg.into())
    }
}

/// Hyperparameter errors name the command-line flag that set the value.
fn describe(err: &CoreError) -> String {
    match err {
        CoreError::Hyperparameter { name, reason } => {
            format!("invalid value for --{name}: {reason}")
        }
        CoreError::SampleBudget { budget, minimum } => {
            format!("invalid value for --samples: {budget} is below the minimum {minimum}")
        }
        other => other.to_string(),
    }
}

/// Classify a library error; `context` is prefixed to the message.
pub fn from_core(context: &str, err: CoreError) -> CliError {
    let msg = if context.is_empty() {
        describe(&err)
    } else {
        format!("{context}: {}", describe(&err))
    };
    match err {
        CoreError::Degenerate(_) | CoreError::LengthMismatch { .. } => CliError::Runtime(msg),
        _ => CliError::Usage(msg),
    }
}

pub trait Context<T> {
    fn context(self, context: &str) -> CliResult<T>;
}

impl<T> Context<T> for floodxai::Result<T> {
    fn context(self, context: &str) -> CliResult<T> {
        self.map_err(|e| from_core(context, e))
    }
}
