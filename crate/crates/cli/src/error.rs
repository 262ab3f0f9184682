use std::fmt;

use lav_core::Error as CoreError;

/// Failure classes, one per exit code.
#[derive(Debug)]
pub enum CliError {
    Usage(anyhow::Error),
    Input(anyhow::Error),
    Numeric(anyhow::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Input(_) => 2,
            CliError::Numeric(_) => 3,
        }
    }

    pub fn usage(msg: impl fmt::Display) -> Self {
        CliError::Usage(anyhow::anyhow!("{msg}"))
    }

    pub fn numeric(msg: impl fmt::Display) -> Self {
        CliError::Numeric(anyhow::anyhow!("{msg}"))
    }

    /// Adds context while keeping the failure class.
    pub fn context(self, ctx: impl fmt::Display + Send + Sync + 'static) -> Self {
        match self {
            CliError::Usage(e) => CliError::Usage(e.context(ctx)),
            CliError::Input(e) => CliError::Input(e.context(ctx)),
            CliError::Numeric(e) => CliError::Numeric(e.context(ctx)),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let e = match self {
            CliError::Usage(e) | CliError::Input(e) | CliError::Numeric(e) => e,
        };
        if f.alternate() {
            write!(f, "{e:#}")
        } else {
            write!(f, "{e}")
        }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::BadParameter(_)
            | CoreError::BadWindows(_)
            | CoreError::BadGroups(_)
            | CoreError::WindowTooLarge { .. } => CliError::Usage(e.into()),
            _ => CliError::Input(e.into()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Input(e.into())
    }
}
