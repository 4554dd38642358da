use std::fmt;
use std::process::ExitCode;

/// A command failure, classified by the exit code it maps to.
#[derive(Debug)]
pub enum Failure {
    /// Invalid configuration or arguments (exit 2).
    Config(String),
    /// Unreadable input or unwritable output (exit 3).
    Io(String),
    /// Anything else (exit 1).
    Other(String),
}

impl Failure {
    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(match self {
            Failure::Config(_) => 2,
            Failure::Io(_) => 3,
            Failure::Other(_) => 1,
        })
    }

    pub fn io(path: &std::path::Path, e: std::io::Error) -> Self {
        Failure::Io(format!("{}: {e}", path.display()))
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Config(m) => write!(f, "configuration error: {m}"),
            Failure::Io(m) => write!(f, "I/O error: {m}"),
            Failure::Other(m) => write!(f, "error: {m}"),
        }
    }
}

impl From<tdlab_core::Error> for Failure {
    fn from(e: tdlab_core::Error) -> Self {
        use tdlab_core::Error as E;
        match e {
            E::InvalidArgument(_) | E::UnknownAlgorithm(_) => Failure::Config(e.to_string()),
            E::Io(_) => Failure::Io(e.to_string()),
            E::Csv(ref c) if c.is_io_error() => Failure::Io(e.to_string()),
            other => Failure::Other(other.to_string()),
        }
    }
}
