use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error(transparent)]
    Core(#[from] oscerr::Error),

    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },

    #[error("{path}: {source}")]
    Csv { path: String, source: csv::Error },

    #[error("config {path}: {message}")]
    Config { path: String, message: String },

    #[error("plot {path}: {message}")]
    Plot { path: String, message: String },
}

impl CliError {
    pub fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        CliError::Io { path: path.as_ref().display().to_string(), source }
    }

    pub fn csv(path: impl AsRef<std::path::Path>, source: csv::Error) -> Self {
        CliError::Csv { path: path.as_ref().display().to_string(), source }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
