use thiserror::Error;

/// Errors raised by ingestion, classification, scoring and tuning.
#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    /// A required column is absent or a cell could not be parsed.
    #[error("format error: {0}")]
    Format(String),

    /// Timestamps are not strictly increasing at the given (0-based) data row.
    #[error("ordering error: timestamp at row {row} is not greater than its predecessor")]
    Ordering { row: usize },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// Every sample of a dispersion window is flagged invalid.
    #[error("dispersion undefined: window contains no valid samples")]
    UndefinedDispersion,

    #[error("upsampling unsupported: target {target_hz} Hz exceeds native {native_hz} Hz")]
    UpsamplingUnsupported { target_hz: f64, native_hz: f64 },

    /// A two-state estimate found no sample assigned to `class`.
    #[error("class {class} has no samples")]
    EmptyClass { class: usize },

    /// A behavioral score whose denominator is empty.
    #[error("score {score} is undefined: {reason}")]
    UndefinedScore { score: &'static str, reason: String },

    #[error("unsupported stimulus: {0}")]
    UnsupportedStimulus(String),

    #[error("invalid stimulus spec: {0}")]
    Spec(String),

    #[error("no feasible threshold cell in the grid")]
    NoFeasibleThreshold,

    #[error("internal consistency error: {0}")]
    Internal(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    /// True for errors caused by unreadable or malformed input rather than
    /// by the classification domain itself.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::Io(_)
                | Error::Csv(_)
                | Error::Json(_)
                | Error::Format(_)
                | Error::Ordering { .. }
                | Error::UpsamplingUnsupported { .. }
                | Error::Spec(_)
                | Error::InvalidParameter(_)
        )
    }
}
