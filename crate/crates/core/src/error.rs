use std::path::PathBuf;

/// Errors produced by the simulator library.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParam { field: &'static str, reason: String },

    #[error("elevation angle {0}° outside (0, 90]")]
    ElevationDomain(f64),

    #[error("small cell and NFP are colocated (zero link distance)")]
    Colocated,

    #[error("target path loss {target} dB is below the zero-offset path loss {floor} dB")]
    NoPathLossSolution { target: f64, floor: f64 },

    #[error("cannot pack {n_target} points with separation {min_sep} m into a {area_side} m square")]
    Packing {
        n_target: usize,
        min_sep: f64,
        area_side: f64,
    },

    #[error("no hard-core realization with {n_target} survivors after {attempts} attempts")]
    GenerationFailed { n_target: usize, attempts: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("solver {solver} produced an infeasible association for seed {seed}: {violations}")]
    AuditFailed {
        solver: String,
        seed: u64,
        violations: String,
    },

    #[error("malformed association CSV: {0}")]
    MalformedCsv(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(field: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParam {
        field,
        reason: reason.into(),
    }
}

pub(crate) fn io_err(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> Error {
    let path = path.into();
    move |source| Error::Io { path, source }
}
