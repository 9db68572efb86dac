use thiserror::Error;

/// Errors raised by the lacunary library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("base {0} outside supported range 2..=36")]
    InvalidBase(u32),

    #[error("digit {digit} at position {position} is not valid in base {base}")]
    InvalidDigit { digit: u32, position: usize, base: u32 },

    #[error("precision must be at least {min}, got {got}")]
    Precision { min: usize, got: usize },

    #[error("malformed number `{text}`: {reason}")]
    Parse { text: String, reason: String },

    #[error("index {name}={value} outside 1..={max}")]
    IndexOutOfRange { name: &'static str, value: usize, max: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("expansion of `{name}` has {available} fractional digits, {required} required")]
    InsufficientExpansion { name: String, available: usize, required: usize },

    #[error("value at step {step} lies within 1e-{guard} of a digit boundary")]
    BoundaryProximity { step: usize, guard: usize },

    #[error("orbit degenerated at step {step}: {reason}")]
    DegenerateOrbit { step: usize, reason: String },

    #[error("unknown constant `{0}`")]
    UnknownConstant(String),

    #[error("unknown record id `{0}`")]
    UnknownRecord(String),

    #[error("partial averages were not retained")]
    MissingPartials,

    #[error("empty sample")]
    EmptySample,

    #[error("i/o: {0}")]
    Io(String),

    #[error("csv: {0}")]
    Csv(String),
}

impl Error {
    /// True for failures caused by finite working precision rather than bad input.
    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            Error::BoundaryProximity { .. }
                | Error::DegenerateOrbit { .. }
                | Error::InsufficientExpansion { .. }
        )
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Csv(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
