use thiserror::Error;

/// Failures raised by the numerical routines.
///
/// The variant names double as the machine-readable error names printed by
/// the command-line front end.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("NewtonDivergence: inverse branch for target {target} did not converge (residual {residual:e})")]
    NewtonDivergence { target: f64, residual: f64 },

    #[error("NotExpanding: |T'(x)| = {derivative} at x = {x} is below the expansion floor")]
    NotExpanding { x: f64, derivative: f64 },

    #[error("BranchExplosion: {branches} branches exceed the budget of {budget}")]
    BranchExplosion { branches: usize, budget: usize },

    #[error("DegenerateLead: leading spectral gap {gap:e} is below the simplicity threshold")]
    DegenerateLead { gap: f64 },

    #[error("NearSingular: {0}")]
    NearSingular(String),

    #[error("ContourTooClose: eigenvalue {eigenvalue} lies within {distance:e} of the contour (guard {guard:e})")]
    ContourTooClose {
        eigenvalue: String,
        distance: f64,
        guard: f64,
    },

    #[error("MatchFailure: {coarse} eigenvalues above the floor at the coarse grid, {fine} at the fine grid")]
    MatchFailure { coarse: usize, fine: usize },

    #[error("EmptyProbeSet: operator norm estimate needs at least one probe with positive norm")]
    EmptyProbeSet,

    #[error("DegenerateFit: only {usable} usable offsets, need at least 3")]
    DegenerateFit { usable: usize },

    #[error("InvalidInput: {0}")]
    InvalidInput(String),
}

impl Error {
    /// Short variant name, e.g. `"ContourTooClose"`.
    pub fn name(&self) -> &'static str {
        match self {
            Error::NewtonDivergence { .. } => "NewtonDivergence",
            Error::NotExpanding { .. } => "NotExpanding",
            Error::BranchExplosion { .. } => "BranchExplosion",
            Error::DegenerateLead { .. } => "DegenerateLead",
            Error::NearSingular(_) => "NearSingular",
            Error::ContourTooClose { .. } => "ContourTooClose",
            Error::MatchFailure { .. } => "MatchFailure",
            Error::EmptyProbeSet => "EmptyProbeSet",
            Error::DegenerateFit { .. } => "DegenerateFit",
            Error::InvalidInput(_) => "InvalidInput",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
