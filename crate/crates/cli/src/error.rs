use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] pagexplain::Error),
    #[error("{}: {source}", path.display())]
    File {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}")]
    Usage(String),
    #[error("replay did not reproduce the recorded outputs: {0}")]
    Mismatch(String),
}

impl CliError {
    pub fn file(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::File { path: path.into(), source }
    }

    /// 2 input, 3 knowledge inconsistency, 4 internal.
    pub fn exit_code(&self) -> i32 {
        use pagexplain::Error as E;
        match self {
            CliError::Core(e) => match e.root() {
                E::Knowledge(_) => 3,
                E::Internal(_) => 4,
                _ => 2,
            },
            CliError::File { .. } | CliError::Usage(_) => 2,
            CliError::Mismatch(_) => 4,
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
