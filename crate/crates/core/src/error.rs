use thiserror::Error;

/// Failure modes shared by every layer of the engine.
#[derive(Debug, Error)]
pub enum Error {
    #[error("removable singularity at k = {k}: (h - cos k)^2 + kappa^2 sin^2 k vanishes; perturb k")]
    RemovableSingularity { k: f64 },

    #[error("degenerate ground state at k = {k} (gap {gap:.3e}); perturb the momentum grid")]
    DegenerateGround { k: f64, gap: f64 },

    #[error("mode norm underflow at k = {k}, t = {t}; evaluate at an earlier time or rescale")]
    NormUnderflow { k: f64, t: f64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid argument: {0}")]
    Invalid(String),

    #[error("quadrature did not converge: residual {residual:.3e} exceeds {tol:.3e}")]
    Quadrature { residual: f64, tol: f64 },

    #[error("linear algebra failure: {0}")]
    Linalg(String),

    #[error("config field `{field}`: {msg}")]
    Config { field: String, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn config(field: &str, msg: impl Into<String>) -> Self {
        Error::Config { field: field.to_string(), msg: msg.into() }
    }
}
