use thiserror::Error;

/// Errors produced by the laboratory.
#[derive(Debug, Error)]
pub enum LabError {
    #[error("invalid model: {0}")]
    InvalidSpec(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("dimension {dim} exceeds the dense limit {limit}")]
    DenseLimit { dim: usize, limit: usize },

    #[error("shift {shift} stays singular after {retries} perturbation retries")]
    SingularShift { shift: f64, retries: usize },

    #[error("eigensolver failed: {0}")]
    Eigensolver(String),

    #[error("Fermi energy {energy} is within {distance:e} of an eigenvalue")]
    DegenerateFermiLevel { energy: f64, distance: f64 },

    #[error("spectral gap closes at Fermi energy {energy} near twist index ({i}, {j})")]
    GapClosing { energy: f64, i: usize, j: usize },

    #[error("empty grid: {0}")]
    EmptyGrid(&'static str),

    #[error("quadrature did not converge: achieved {achieved:e}, requested {requested:e}")]
    Quadrature { achieved: f64, requested: f64 },

    #[error(
        "wave packet reaches the boundary at t = {time} (leakage {leakage:e}); largest admissible time is {max_admissible}"
    )]
    BoundaryLeak {
        time: f64,
        leakage: f64,
        max_admissible: f64,
    },

    #[error("too few levels: {found} found, {required} required")]
    TooFewLevels { found: usize, required: usize },

    #[error("vector is not normalized (norm {norm})")]
    NotNormalized { norm: f64 },

    #[error("band {band} not resolved: {detail}")]
    BandNotResolved { band: usize, detail: String },

    #[error("energy region violation: {0}")]
    EnergyRegion(String),

    #[error("invalid config:\n  {}", .0.join("\n  "))]
    Config(Vec<String>),

    #[error("{experiment} (seed {seed}): {source}")]
    Experiment {
        experiment: String,
        seed: u64,
        #[source]
        source: Box<LabError>,
    },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Serialization(String),
}

pub type Result<T> = std::result::Result<T, LabError>;
