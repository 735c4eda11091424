use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("geometry error on element {element}: {message}")]
    Geometry { element: usize, message: String },

    #[error("usage error: {0}")]
    Usage(String),

    #[error("internal consistency error: {0}")]
    Internal(String),

    #[error("solver error: {message} (relative residual {residual:.3e})")]
    Solver { message: String, residual: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn geometry(element: usize, msg: impl Into<String>) -> Self {
        Error::Geometry {
            element,
            message: msg.into(),
        }
    }
}
