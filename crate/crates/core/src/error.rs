use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Parameters outside their documented domain.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dispersive approximation violated for resonator {resonator}: g/|detuning| = {ratio:.4} (must be < {limit})")]
    NotDispersive {
        resonator: char,
        ratio: f64,
        limit: f64,
    },

    #[error("drive frequency {omega_d} GHz outside nesting window ({low:.6}, {high:.6}) GHz")]
    OutsideNestingWindow { omega_d: f64, low: f64, high: f64 },

    #[error("frame error: {0}")]
    Frame(String),

    #[error("dressed levels {0} and {1} are degenerate (gap {2:.3e} rad/ns); labels would be ambiguous")]
    Degenerate(usize, usize, f64),

    #[error("dressed level {label} has no dominant bare component (max overlap {overlap:.3})")]
    AmbiguousLabel { label: usize, overlap: f64 },

    #[error("no sign change of the impedance-matching condition on [{low}, {high}] MHz; widen the bracket or move the drive closer to omega_q - 2 chi_a")]
    NoBracket { low: f64, high: f64 },

    #[error("stationary state is not unique (generator rank deficit {0})")]
    DegenerateSteadyState(usize),

    #[error("weak-drive precondition violated: steady <a^dag a> = {0:.4e}")]
    NotWeak(f64),

    /// Integrator or truncation refinement changed the result beyond tolerance.
    #[error("convergence failure ({check}): deviation {deviation:.3e} exceeds {tolerance:.1e}; {advice}")]
    Convergence {
        check: &'static str,
        deviation: f64,
        tolerance: f64,
        advice: &'static str,
    },

    #[error("fit failure: {0}")]
    Fit(String),

    #[error("threshold {0} never crossed")]
    ThresholdNotCrossed(f64),

    #[error("at grid point {index} ({coords}): {source}")]
    GridPoint {
        index: usize,
        coords: String,
        #[source]
        source: Box<Error>,
    },

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    pub(crate) fn at(index: usize, coords: impl Into<String>, source: Error) -> Self {
        Error::GridPoint {
            index,
            coords: coords.into(),
            source: Box::new(source),
        }
    }

    /// True for failures of numerical refinement checks, as opposed to bad input.
    pub fn is_convergence(&self) -> bool {
        match self {
            Error::Convergence { .. } | Error::Fit(_) => true,
            Error::GridPoint { source, .. } => source.is_convergence(),
            _ => false,
        }
    }
}
