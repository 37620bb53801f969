use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Mismatched vector/matrix shapes or out-of-range indices.
    #[error("contract violation: {0}")]
    Contract(String),

    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("domain error: {0}")]
    Domain(String),

    /// An objective evaluation returned NaN or infinity. `sample` is `None`
    /// for the base point and `Some(n)` for the n-th perturbation.
    #[error("objective returned non-finite value {value} at {}", describe_sample(.sample))]
    NonFinite { sample: Option<usize>, value: f64 },

    #[error("simulation aborted after {events} events (cap {cap}) at t = {time}")]
    EventCap { events: u64, cap: u64, time: f64 },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

fn describe_sample(sample: &Option<usize>) -> String {
    match sample {
        None => "the base point".to_string(),
        Some(n) => format!("perturbation sample {n}"),
    }
}

impl Error {
    pub(crate) fn contract(msg: impl Into<String>) -> Self {
        Error::Contract(msg.into())
    }

    pub(crate) fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: msg.into(),
        }
    }
}
