use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Core(#[from] dynrmt::Error),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("rerun is not byte-identical: {0}")]
    Irreproducible(String),
}

impl CliError {
    /// 2 for bad input (including unusable paths), 3 for numerical or
    /// reproducibility failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(e) if e.is_numerical() => 3,
            CliError::Irreproducible(_) => 3,
            CliError::Config(_) | CliError::Core(_) | CliError::Io(_) => 2,
        }
    }
}
