use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] exitlab::Error),

    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("thread pool: {0}")]
    Threads(#[from] rayon::ThreadPoolBuildError),

    #[error("{0}")]
    Usage(String),
}

impl CliError {
    /// Process exit code: 2 for bad invocations, 1 for everything else.
    pub fn code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Core(e) if is_input_error(e) => 2,
            _ => 1,
        }
    }
}

fn is_input_error(e: &exitlab::Error) -> bool {
    use exitlab::Error::*;
    matches!(e, InvalidParameter { .. } | InvalidSettings(_) | Parse { .. } | EmptySeries)
}
