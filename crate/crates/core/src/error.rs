//! Error type shared by every module of the crate.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Everything that can go wrong when building grids, fields, expressions,
/// functionals, or probes.
#[derive(Debug, Error)]
pub enum Error {
    #[error("grid size {0} must be a power of two and at least 16")]
    BadGridSize(usize),

    #[error("field has {got} samples but the grid has {expected} points")]
    SampleCountMismatch { expected: usize, got: usize },

    #[error("field contains a non-finite sample at index {0}")]
    NonFiniteSample(usize),

    #[error(
        "derivative order {order} exceeds the aliasing guard {guard} (= n/4); \
         spectral derivatives beyond the guard amplify unresolved modes"
    )]
    AliasingGuard { order: usize, guard: usize },

    #[error("band limit {band} exceeds the guard {guard} (= n/4)")]
    BandLimit { band: usize, guard: usize },

    #[error("support window contains no grid point")]
    EmptyWindow,

    #[error("window radius {0} is out of range for this operation")]
    BadWindowRadius(f64),

    #[error("x = {0} is not a grid node")]
    NotAGridNode(f64),

    #[error("fields live on different grids ({0} vs {1} points)")]
    GridMismatch(usize, usize),

    #[error("jet of order {have} cannot evaluate an expression that uses u{need}")]
    JetOrderTooSmall { need: usize, have: usize },

    #[error("jet values must be finite")]
    NonFiniteJet,

    #[error("expression parse error at byte {at}: {msg}")]
    Parse { at: usize, msg: String },

    #[error("invalid coefficient-field name {0:?}")]
    BadCoefficientName(String),

    #[error("csv decode error on line {line}: {msg}")]
    Csv { line: usize, msg: String },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("directional derivative order {0} is not supported (1..=4)")]
    BadDerivativeOrder(usize),

    #[error("functional evaluation was non-finite at stencil offset t = {0:?}")]
    NonFiniteEvaluation(Vec<f64>),

    #[error("delta-coefficient extraction is limited to k_max <= 6, got {0}")]
    IllConditionedVandermonde(usize),

    #[error("order undefined (zero derivative): all probe pairings below {0:e}")]
    ZeroDerivative(f64),

    #[error(
        "mollifier width {lambda} is below the resolvability limit {min} \
         (16 grid cells)"
    )]
    UnresolvableMollifier { lambda: f64, min: f64 },

    #[error("mollifier width {0} must lie in (0, 1]")]
    BadMollifierWidth(f64),

    #[error("point set must be nonempty with pairwise distinct points")]
    BadPointSet,

    #[error(
        "trial function does not vanish to order {order} on the point set \
         (jet residual {residual:e} at x = {at})"
    )]
    VanishingPrecondition { order: usize, residual: f64, at: f64 },

    #[error("expressions containing the bare coordinate x are not periodic; \
             use a periodic coefficient field instead")]
    NonPeriodicCoordinate,

    #[error("field range [{lo}, {hi}] needs derivative orders beyond the guard {guard}")]
    RangeBeyondGuard { lo: f64, hi: f64, guard: usize },

    #[error("configuration error: {0}")]
    Config(String),
}
