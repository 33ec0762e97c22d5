use alloc::string::String;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("{what} = {value} is below the domain start {min}")]
    BelowDomain { what: &'static str, value: f64, min: f64 },
    #[error("invalid parameter {name} = {value}: {constraint}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        constraint: &'static str,
    },
    #[error("unsupported regime: {0}")]
    UnsupportedRegime(&'static str),
    #[error("window of {cells} cells exceeds the memory budget of {budget_bytes} bytes ({budget_cells} cells)")]
    BudgetExceeded {
        cells: u64,
        budget_cells: u64,
        budget_bytes: u64,
    },
    #[error("{what} did not converge after {iterations} iterations")]
    NoConvergence { what: &'static str, iterations: usize },
    #[error("growth function slice is not monotone near ln u = {ln_u}")]
    NonMonotoneSlice { ln_u: f64 },
    #[error("no threshold found up to index {i_max}: {detail}")]
    NoThreshold { i_max: u64, detail: String },
    #[error("subsequence coupling mismatch: expected c = {expected}, found {found}")]
    CouplingMismatch { expected: f64, found: f64 },
    #[error("closed-form tail not available for {0}")]
    TailUnavailable(&'static str),
}

impl Error {
    pub(crate) fn param(name: &'static str, value: f64, constraint: &'static str) -> Self {
        Error::InvalidParameter {
            name,
            value,
            constraint,
        }
    }
}
