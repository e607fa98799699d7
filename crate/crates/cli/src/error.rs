use std::path::{Path, PathBuf};

use thiserror::Error;

pub const EXIT_OTHER: i32 = 1;
pub const EXIT_PARSE: i32 = 3;
pub const EXIT_PARAMETER: i32 = 4;
pub const EXIT_DEGENERATE: i32 = 5;
pub const EXIT_IO: i32 = 6;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] hicmapper::Error),
    #[error("{}: {source}", path.display())]
    InFile { path: PathBuf, source: hicmapper::Error },
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{}: malformed JSON: {message}", path.display())]
    Json { path: PathBuf, message: String },
    #[error("invalid argument: {0}")]
    Parameter(String),
    #[error("{0}")]
    Input(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        use hicmapper::Error as E;
        let core = match self {
            CliError::Core(e) | CliError::InFile { source: e, .. } => e,
            CliError::Io { .. } => return EXIT_IO,
            CliError::Json { .. } | CliError::Input(_) => return EXIT_PARSE,
            CliError::Parameter(_) => return EXIT_PARAMETER,
        };
        match core {
            E::Parse { .. } | E::Dimension(_) => EXIT_PARSE,
            E::Parameter(_) | E::Range { .. } => EXIT_PARAMETER,
            E::Degenerate(_) | E::RankDeficient { .. } => EXIT_DEGENERATE,
        }
    }

    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io { path: path.to_path_buf(), source }
    }

    pub(crate) fn in_file(path: &Path, source: hicmapper::Error) -> Self {
        CliError::InFile { path: path.to_path_buf(), source }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
