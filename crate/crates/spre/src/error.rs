use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum SpreError {
    /// Bad scenario, config value or command-line input.
    #[error("{0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] spre_core::Error),
    #[error("cannot read {}: {source}", path.display())]
    MissingInput { path: PathBuf, source: std::io::Error },
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{}:{line}: {msg}", path.display())]
    Parse { path: PathBuf, line: usize, msg: String },
    #[error("insufficient data: {0}")]
    InsufficientData(String),
}

pub type Result<T> = std::result::Result<T, SpreError>;

impl SpreError {
    /// 1 for configuration errors, 2 for failures while running.
    pub fn exit_code(&self) -> i32 {
        match self {
            SpreError::Config(_) | SpreError::MissingInput { .. } => 1,
            SpreError::Core(spre_core::Error::InvalidConfig(_)) => 1,
            _ => 2,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> SpreError {
        let path = path.into();
        move |source| SpreError::Io { path, source }
    }
}
