use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("step law has no atoms")]
    EmptyStepLaw,
    #[error("step law weight for offset {0} must be at least 1")]
    ZeroWeight(i64),
    #[error("duplicate offset {0} in step law")]
    DuplicateOffset(i64),
    #[error("step law violates gcd(supp μ − supp μ) = 1 (gcd of differences is {0})")]
    GcdViolation(u64),
    #[error("multiplier a must be at least 2, got {0}")]
    BadMultiplier(u64),
    #[error("scale factor must be nonzero")]
    ZeroScale,
    #[error("modulus must be at least {min}, got {got}")]
    BadModulus { min: u64, got: u64 },
    #[error("{0} is not a probability measure (total mass {1})")]
    NotProbability(&'static str, f64),
    #[error("modulus mismatch: {0} vs {1}")]
    ModulusMismatch(u64, u64),
    #[error("gcd(q, a) = gcd({q}, {a}) ≠ 1")]
    NotCoprime { q: u64, a: u64 },
    #[error("{q0} does not divide {q}")]
    NotDivisor { q0: u64, q: u64 },
    #[error("{what} = {got} exceeds the configured cap {cap}")]
    CapExceeded { what: &'static str, got: u64, cap: u64 },
    #[error("typical set is empty for α = {0}")]
    EmptyTypicalSet(f64),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

impl Error {
    pub fn is_cap(&self) -> bool {
        matches!(self, Error::CapExceeded { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;
