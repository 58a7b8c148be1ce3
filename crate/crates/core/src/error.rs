use thiserror::Error;

/// Everything that can go wrong while building, evolving or solving for a hypersurface.
///
/// Variants map one-to-one onto the terminal events and failure signals used by
/// the flow runner and the command line front end.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid radius {r} for curvature K = {k}")]
    InvalidRadius { r: f64, k: f64 },

    #[error("geodesic sphere of radius {r} is not strictly convex for K = {k}")]
    NonConvexSphere { r: f64, k: f64 },

    #[error("invalid space form: {0}")]
    InvalidSpaceForm(String),

    #[error("invalid profile: {0}")]
    InvalidProfile(String),

    #[error("corrupt profile: non-finite derivative at grid index {0}")]
    CorruptProfile(usize),

    #[error("profile lost starshapedness at grid index {0}")]
    LostStarshapedness(usize),

    #[error("new origin at axial shift {0} lies outside the enclosed domain")]
    OriginEscape(f64),

    #[error("recentering failed: {0}")]
    RecenterFailure(String),

    #[error("no geodesic ball with quermassintegral {0}")]
    NoBall(f64),

    #[error("quermassintegral {w} is not below the hemisphere value {w_hemi}")]
    NotStrictlyInterior { w: f64, w_hemi: f64 },

    #[error("curvature tuple is not in the positive cone")]
    NotConvex,

    #[error("denominator of the global term is {0} (hypersurface crosses the equator)")]
    EquatorCrossing(f64),

    #[error("strict convexity lost at t = {t} (min curvature {min_kappa})")]
    StopNonconvex { t: f64, min_kappa: f64 },

    #[error("graph representation degenerates at t = {0}; origin must be moved")]
    NeedsRecenter(f64),

    #[error("time step underflow at t = {t} (dt = {dt})")]
    StiffBlowup { t: f64, dt: f64 },

    #[error("origin configuration infeasible: {0}")]
    ConfigInfeasible(String),

    #[error("mean curvature is not positive at grid index {0}")]
    NotMeanConvex(usize),

    #[error("series has non-positive samples; decay fit skipped")]
    AlreadyConverged,

    #[error("decay fit needs at least 10 samples, got {0}")]
    TooFewSamples(usize),

    #[error("sphere fit did not converge after {0} iterations")]
    FitFailed(usize),

    #[error("curvature argument outside the positive cone")]
    OutOfCone,

    #[error("Newton solve failed: {0}")]
    SolveFailed(String),

    #[error("Gauss map duality failed: {0}")]
    DualityFailed(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
