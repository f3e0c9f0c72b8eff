use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid study: {0}")]
    Spec(String),

    #[error("level {level}: {source}")]
    Level {
        level: usize,
        #[source]
        source: fracdiff_core::Error,
    },

    #[error("fine-solve reference error estimate {estimate:e} exceeds 5% of the coarsest study error {coarsest:e}")]
    UnresolvedReference { estimate: f64, coarsest: f64 },

    #[error(transparent)]
    Numerical(#[from] fracdiff_core::Error),

    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    /// 2 for configuration problems, 3 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Spec(_) | CliError::Io(_) => 2,
            CliError::Level { .. } | CliError::UnresolvedReference { .. } | CliError::Numerical(_) => 3,
        }
    }
}
