use thiserror::Error;

/// Errors produced by the library.
///
/// Parameter and range rejections carry the offending value and the
/// admissible bounds so callers can surface actionable messages.
#[derive(Debug, Error)]
pub enum Error {
    #[error("grid dimension n = {n} is not supported; the theorems require n >= 2")]
    GridDimension { n: usize },

    #[error("samples per axis N = {samples} must be a power of two and at least 8")]
    GridSamples { samples: usize },

    #[error("grid period L = {period} must be a positive finite real")]
    GridPeriod { period: f64 },

    #[error("sampler returned a non-finite value at grid index {index:?}")]
    NonFiniteSample { index: Vec<usize> },

    #[error("field expects {expected} samples but {found} were provided")]
    ValueCountMismatch { expected: usize, found: usize },

    #[error("lp_norm supports p in {{1, 2}}, got p = {p}")]
    UnsupportedNorm { p: f64 },

    #[error("shift {shift} on axis {axis} is outside [0, {samples})")]
    ShiftOutOfRange {
        axis: usize,
        shift: i64,
        samples: usize,
    },

    #[error("bad magic bytes; not a field file")]
    BadMagic,

    #[error("field file header dimensions are invalid (n = {n}, N = {samples})")]
    DimensionMismatch { n: u32, samples: u32 },

    #[error("truncated payload: expected {expected} samples, found {found}")]
    TruncatedPayload { expected: usize, found: usize },

    #[error("field file has {extra} trailing bytes after the payload")]
    TrailingBytes { extra: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("binomial order k = {k} is outside [1, 20]")]
    BinomialOrder { k: usize },

    #[error("alpha = {alpha} is outside the admissible range ({lo}, {hi})")]
    AlphaRange { alpha: f64, lo: f64, hi: f64 },

    #[error("alpha = {alpha} violates the theorem range {lo} < alpha < {hi}; pass the override flag to explore outside it")]
    TheoremRange { alpha: f64, lo: f64, hi: f64 },

    #[error("the Riesz kernel is singular at the origin")]
    OriginSingularity,

    #[error("{what} must be nonzero")]
    ZeroVector { what: &'static str },

    #[error("quadrature did not reach the requested relative tolerance {requested:e}; achieved {achieved:e}")]
    QuadratureNonConvergence { achieved: f64, requested: f64 },

    #[error("invalid radii: {0}")]
    InvalidRadii(&'static str),

    #[error("scale t = {t} is outside the admissible range [{lo}, {hi}]")]
    ScaleOutOfRange { t: f64, lo: f64, hi: f64 },

    #[error("kernel support k*t = {support} wraps the torus: limit is {limit}")]
    SupportViolation { support: f64, limit: f64 },

    #[error("operation requires a mean-zero field")]
    NotMeanZero,

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("scale grid was built for a different sampling grid")]
    ScaleGridMismatch,

    #[error("scale grid is empty or its bounds are inverted")]
    EmptyScaleGrid,

    #[error("dimension n = {n} is not supported for {context}")]
    UnsupportedDimension { n: usize, context: &'static str },

    #[error("invalid recipe parameter: {what}")]
    RecipeParameter { what: String },

    #[error("tolerance {tol} is outside the admissible range [{lo}, {hi}]")]
    ToleranceRange { tol: f64, lo: f64, hi: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
