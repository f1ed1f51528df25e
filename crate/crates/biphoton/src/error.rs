use thiserror::Error;

/// Everything that can go wrong inside the library.
///
/// Variants carry enough context to print a useful one-line message; callers
/// that need to branch (the CLI exit codes, the acceptance tests) match on the
/// variant rather than the text.
#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("{name} must be positive, got {value}")]
    NonPositiveParameter { name: &'static str, value: f64 },

    #[error("{name} must be finite and non-negative, got {value}")]
    NegativeParameter { name: &'static str, value: f64 },

    #[error("slits overlap: separation {separation} m is smaller than slit width {width} m")]
    OverlappingSlits { separation: f64, width: f64 },

    #[error("slit transmission modulus {0} exceeds 1")]
    TransmissionTooLarge(f64),

    #[error("classical visibility {0} outside [0, 0.5]")]
    VisibilityOutOfRange(f64),

    #[error("classical singles envelope needs a finite slit width, got width 0")]
    ZeroSlitWidth,

    #[error("detection window is degenerate (x_min {x_min} >= x_max {x_max})")]
    DegenerateWindow { x_min: f64, x_max: f64 },

    #[error("detection window half-width {half_width} m is not small against the propagation distance {distance} m")]
    ParaxialViolation { half_width: f64, distance: f64 },

    #[error("grid needs at least 3 points per axis, got {0}")]
    GridTooSmall(usize),

    #[error("grid mean is zero, cannot normalize")]
    ZeroMeanGrid,

    #[error("grid is not symmetric under detector exchange (max deviation {0:.3e})")]
    AsymmetricGrid(f64),

    #[error("quadrature did not converge: doubling nodes moved the result by {delta:.3e} (tolerance {tolerance:.3e})")]
    QuadratureNonConvergence { delta: f64, tolerance: f64 },

    #[error("invalid quadrature spec: {0}")]
    InvalidQuadratureSpec(String),

    #[error("aperture has non-empty cross-polarization channels, which the amplitude model does not scatter")]
    CrossChannelAperture,

    #[error("aperture channel {0} is empty")]
    EmptyApertureChannel(&'static str),

    #[error("no coincidence model registered under `{0}`")]
    UnknownModel(String),

    #[error("model `{0}` cannot provide an analytic density bound for event sampling")]
    NoDensityBound(&'static str),

    #[error("sampled density {density:.6e} exceeds the declared envelope {bound:.6e}")]
    DensityAboveBound { density: f64, bound: f64 },

    #[error("histogram needs at least 2 bins, got {0}")]
    TooFewBins(usize),

    #[error("histogram is empty")]
    EmptyHistogram,

    #[error("aperture block line {line}: {message}")]
    ApertureParse { line: usize, message: String },

    #[error("record on line {line}: {message}")]
    MalformedRecord { line: usize, message: String },

    #[error("cut arrays disagree in length: {deltas} separations vs {values} values")]
    MismatchedCut { deltas: usize, values: usize },

    #[error("{0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
