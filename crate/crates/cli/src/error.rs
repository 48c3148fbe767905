use std::path::Path;

use thiserror::Error;

/// Misconfiguration of any kind. All of these map to exit code 2.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("field `{field}`: {message}")]
    Field { field: String, message: String },

    #[error("{path}: {message}")]
    Io { path: String, message: String },

    #[error("{0}")]
    Core(#[from] anticoncentration::Error),

    #[error("{file}: {source}")]
    InFile {
        file: String,
        #[source]
        source: Box<CliError>,
    },
}

impl CliError {
    pub fn in_file(self, path: &Path) -> CliError {
        CliError::InFile {
            file: path.display().to_string(),
            source: Box::new(self),
        }
    }
}
