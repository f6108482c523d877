use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix is not Hermitian (max deviation {0:e})")]
    NotHermitian(f64),

    #[error("invalid density matrix: {0}")]
    InvalidState(String),

    #[error("observable is not dichotomic (max |A^2 - I| = {0:e})")]
    NotDichotomic(f64),

    #[error("degenerate observable: proportional to the identity")]
    DegenerateObservable,

    #[error("invalid measurement settings: {0}")]
    InvalidSettings(String),

    #[error("{name} = {value} outside [{min}, {max}]")]
    OutOfRange {
        name: &'static str,
        value: f64,
        min: f64,
        max: f64,
    },

    #[error("invalid probability vector: {0}")]
    InvalidDistribution(String),

    #[error("no sign change of {what} on [{lo}, {hi}]")]
    NoSignChange { what: String, lo: f64, hi: f64 },

    #[error("no key possible at visibility {nu}: rate is non-positive for every efficiency")]
    NoKeyPossible { nu: f64 },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("variant {0} is not supported here")]
    UnsupportedVariant(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Errors caused by bad caller input rather than by the physics of the
    /// requested point.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::OutOfRange { .. }
                | Error::InvalidGrid(_)
                | Error::InvalidSettings(_)
                | Error::InvalidDistribution(_)
                | Error::UnsupportedVariant(_)
                | Error::DimensionMismatch { .. }
        )
    }
}

pub(crate) fn check_range(name: &'static str, value: f64, min: f64, max: f64) -> Result<f64> {
    if value.is_nan() || value < min || value > max {
        return Err(Error::OutOfRange {
            name,
            value,
            min,
            max,
        });
    }
    Ok(value)
}
