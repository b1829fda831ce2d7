use alloc::string::String;

/// Errors reported by the simulation and analysis routines.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[non_exhaustive]
pub enum Error {
    #[error("invalid value for `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("degenerate frequency grid: {0}")]
    DegenerateGrid(&'static str),

    #[error("frequency grid holds only {coverage:.6} of the spectral mass, at least {required} is required; widen the span")]
    InsufficientCoverage { coverage: f64, required: f64 },

    #[error(
        "delay pushes {lost_fraction:.3e} of the wavepacket off the time grid; \
         a half-window of at least {required_half_window_fs:.1} fs is needed \
         (the grid provides {available_half_window_fs:.1} fs)"
    )]
    GridTooShort {
        lost_fraction: f64,
        required_half_window_fs: f64,
        available_half_window_fs: f64,
    },

    #[error("input is not time-ordered at index {index}")]
    Unordered { index: usize },

    #[error("interference point violates its invariants: {0}")]
    InvalidPoint(String),

    #[error("fit did not converge; best iterate: visibility {v:.4}, width {w:.2} fs", v = .0.visibility, w = .0.width_fs)]
    NoConvergence(crate::analysis::VisibilityFit),

    #[error("cannot estimate: {0}")]
    Degenerate(&'static str),
}

pub type Result<T> = core::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
