use thiserror::Error;

/// Crate-wide error type. Variants are grouped by how a driver should treat
/// them: configuration/validation problems (reject the input) versus
/// numerical failures (the input was legal but a computation did not land).
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("curve validation failed: {0}")]
    Curve(String),

    #[error("{op} requires a fixture declared {requirement}")]
    DeclarationRequired {
        op: &'static str,
        requirement: &'static str,
    },

    #[error("point ({u:.6}, {v:.6}) lies outside the chart domain")]
    OutsideDomain { u: f64, v: f64 },

    #[error("chart parametrisation is singular at ({u:.6}, {v:.6})")]
    ChartSingular { u: f64, v: f64 },

    #[error("no geodesic connector found within length budget {max_len:.6}")]
    NoConnector { max_len: f64 },

    #[error("numerical failure in {context}: {detail}")]
    Numerical {
        context: &'static str,
        detail: String,
    },

    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit code a CLI driver should use for this error:
    /// 2 for configuration/validation problems, 3 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_)
            | Error::Curve(_)
            | Error::DeclarationRequired { .. }
            | Error::Io(_)
            | Error::Json(_) => 2,
            Error::OutsideDomain { .. }
            | Error::ChartSingular { .. }
            | Error::NoConnector { .. }
            | Error::Numerical { .. } => 3,
        }
    }

    pub fn numerical(context: &'static str, detail: impl Into<String>) -> Self {
        Error::Numerical {
            context,
            detail: detail.into(),
        }
    }
}
