use std::fmt;

use gramtraj::Error;

pub const EXIT_INPUT: u8 = 2;
pub const EXIT_SHAPE: u8 = 3;
pub const EXIT_PROTOCOL: u8 = 4;
pub const EXIT_NUMERICAL: u8 = 5;

/// A message for stderr together with the process exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn input(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_INPUT,
            message: message.into(),
        }
    }

    pub fn shape(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_SHAPE,
            message: message.into(),
        }
    }

    /// Prefixes the message, keeping the exit code.
    pub fn context(self, prefix: impl fmt::Display) -> Self {
        Self {
            code: self.code,
            message: format!("{prefix}: {}", self.message),
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

pub fn exit_code(e: &Error) -> u8 {
    match e.root() {
        Error::DimensionMismatch(_)
        | Error::Shape { .. }
        | Error::PartTooSmall { .. }
        | Error::TooShort(_) => EXIT_SHAPE,
        Error::ProtocolInfeasible(_) | Error::SingleClass => EXIT_PROTOCOL,
        Error::DegenerateConfig { .. } | Error::NotSpd { .. } | Error::UnreachableLength { .. } => {
            EXIT_NUMERICAL
        }
        _ => EXIT_INPUT,
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Self {
            code: exit_code(&e),
            message: e.to_string(),
        }
    }
}

pub type CliResult<T> = Result<T, Failure>;

pub trait WithPath<T> {
    /// Converts a library error, naming `path` in the message.
    fn at(self, path: &std::path::Path) -> CliResult<T>;
}

impl<T> WithPath<T> for gramtraj::Result<T> {
    fn at(self, path: &std::path::Path) -> CliResult<T> {
        self.map_err(|e| {
            let named = e.to_string().contains(&path.display().to_string());
            let f = Failure::from(e);
            if named {
                f
            } else {
                f.context(path.display())
            }
        })
    }
}
