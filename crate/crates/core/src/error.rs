use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Errors raised across the workbench.
///
/// The variants are grouped by how the CLI reports them: input problems,
/// configuration problems and runtime failures map to distinct exit codes.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("input file not found: {}", .0.display())]
    MissingInput(PathBuf),

    #[error("malformed input: {0}")]
    Malformed(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("sequencing error: {0}")]
    Sequencing(String),

    #[error("checkpoint error: {0}")]
    Checkpoint(#[from] crate::mlm::CheckpointError),

    #[error("training diverged at step {step}: loss = {loss}")]
    Diverged { step: u64, loss: f64 },

    #[error(
        "power iteration did not converge after {iterations} iterations (residual {residual:e})"
    )]
    NotConverged { iterations: usize, residual: f64 },

    #[error("degenerate task: {0}")]
    Degenerate(String),

    #[error("out of vocabulary: {0}")]
    OutOfVocabulary(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        let path = path.as_ref();
        if source.kind() == std::io::ErrorKind::NotFound {
            return Error::MissingInput(path.to_path_buf());
        }
        Error::Io {
            path: path.display().to_string(),
            source,
        }
    }
}
