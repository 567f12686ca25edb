use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("subset mask {mask:#b} has bits outside 0..{m}")]
    MaskOutOfRange { mask: u64, m: usize },

    #[error("table holds layers up to {have}, need {need}")]
    TableTooShallow { have: usize, need: usize },

    #[error("subset has total probability 1; I_J is undefined")]
    FullMass,

    #[error("table would need {entries} entries, cap is {cap}")]
    TooManyEntries { entries: u128, cap: u128 },

    #[error("permutation enumeration over {size} items exceeds cap {cap}")]
    PermutationCap { size: usize, cap: usize },

    #[error("{count} ordered tuples exceed the enumeration budget {budget}")]
    TupleBudget { count: u128, budget: u128 },

    #[error("missing table entry for item {item} and subset {mask:#b}")]
    MissingEntry { item: usize, mask: u64 },

    #[error("quadrature did not reach {tol:e} within {evaluations} evaluations (estimate {estimate:e})")]
    QuadratureBudget {
        tol: f64,
        evaluations: usize,
        estimate: f64,
    },

    #[error("identity violated at j={j}: discrepancy {discrepancy:e} > {tol:e}")]
    IdentityViolated { j: usize, discrepancy: f64, tol: f64 },

    #[error("parse error: {0}")]
    Parse(String),
}
