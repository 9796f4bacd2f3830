use thiserror::Error;

/// Errors produced anywhere in the clustering pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid input: {0}")]
    Validation(String),

    #[error("layer {layer} is degenerate: its centered low-rank approximation has zero norm")]
    DegenerateLayer { layer: usize },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("infeasible configuration: {0}")]
    Infeasible(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    /// Coordinate descent ran out of sweeps. `best` is the last iterate.
    #[error(
        "lasso for layer {target} did not converge after {sweeps} sweeps \
         (kkt residual {kkt_residual:.3e})"
    )]
    NotConverged {
        target: usize,
        sweeps: usize,
        kkt_residual: f64,
        best: Vec<f64>,
    },

    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error("{file}:{line}: {message}")]
    Parse {
        file: String,
        line: usize,
        message: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn in_stage(self, stage: &'static str) -> Error {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) trait StageExt<T> {
    fn stage(self, stage: &'static str) -> Result<T>;
}

impl<T> StageExt<T> for Result<T> {
    fn stage(self, stage: &'static str) -> Result<T> {
        self.map_err(|e| e.in_stage(stage))
    }
}
