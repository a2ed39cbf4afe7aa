use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("base mismatch: {0}")]
    BaseMismatch(String),
    #[error("not a unit: {0}")]
    NotUnit(String),
    #[error("integrality violation in universal polynomial {0}")]
    Integrality(String),
    #[error("undecidable at current precision: {0}")]
    Undecidable(String),
    #[error("ambiguous tie in ultrametric minimum: {0}")]
    AmbiguousTie(String),
    #[error("module is not of height <= {r}")]
    NotHeightR { r: u32 },
    #[error("u^{n_exp} does not vanish in W_n[u]/E^r")]
    NTooSmall { n_exp: u64 },
    #[error("insufficient precision: {0}")]
    Precision(String),
    #[error("enumeration cap exceeded: {needed} candidates > cap {cap}")]
    CapExceeded { needed: String, cap: u64 },
    #[error("no convergence: {0}")]
    NonConvergence(String),
    #[error("not a solution: {0}")]
    NotASolution(String),
}

impl Error {
    /// Process exit status used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::CapExceeded { .. } => 3,
            Error::NonConvergence(_) | Error::Precision(_) | Error::Undecidable(_) => 4,
            _ => 2,
        }
    }
}

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidInput(msg.into()))
}
