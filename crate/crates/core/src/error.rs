use thiserror::Error;

/// Errors raised anywhere in the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("non-finite entry in {0}")]
    NonFinite(&'static str),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("vector lengths differ ({0} vs {1})")]
    LengthMismatch(usize, usize),

    #[error("eigenvalue iteration did not converge after {0} sweeps")]
    NonConvergence(usize),

    #[error("matrix is numerically singular (sigma_min/sigma_max = {ratio:.3e})")]
    SingularMatrix { ratio: f64 },

    #[error("singular system is not solvable: |<null_left, d>| = {residual:.3e}")]
    NotSolvable { residual: f64 },

    #[error("unknown model preset '{0}'")]
    UnknownPreset(String),

    #[error("parameter {name} = {value} out of range: {reason}")]
    ParameterOutOfRange {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("step size underflow at t = {t} (h = {h:.3e})")]
    StepSizeUnderflow { t: f64, h: f64 },

    #[error("state became non-finite at t = {t}")]
    NonFiniteState { t: f64 },

    #[error("H0 eigenvalues are not distinct (indices {0} and {1})")]
    DegenerateInput(usize, usize),

    #[error("Fourier recursion hit a singular matrix at harmonic l = {l} (Floquet EP nearby)")]
    SingularHarmonic { l: i64 },

    #[error("Fourier coefficients did not decay below tolerance by l = {l_max} (tail {tail:.3e})")]
    TruncationNotConverged { l_max: i64, tail: f64 },

    #[error("eigenvalues {0} and {1} are not separated by an integer multiple of omega")]
    NotResonant(usize, usize),

    #[error("beta table requested up to n = {0}, above the exact-factorial cap")]
    Overflow(u32),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("instantaneous eigenvalues collapse at t = {t} (gap {gap:.3e})")]
    GapCollapse { t: f64, gap: f64 },

    #[error("ambiguous eigenvector matching at t = {t}; refine the sampling")]
    AmbiguousMatching { t: f64 },

    #[error("frames do not span one period: {0}")]
    BadSpan(String),

    #[error("biorthogonal norm vanishes for state {n} at t = {t}")]
    VanishingNorm { n: usize, t: f64 },

    #[error("trajectory and frame times are not aligned at sample {0}")]
    Misaligned(usize),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Configuration problems are reported with a different exit code than numerical ones.
    pub fn is_config_error(&self) -> bool {
        matches!(
            self,
            Error::Config(_)
                | Error::Json(_)
                | Error::UnknownPreset(_)
                | Error::ParameterOutOfRange { .. }
                | Error::InvalidArgument(_)
                | Error::DimensionMismatch { .. }
                | Error::NotSquare { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
