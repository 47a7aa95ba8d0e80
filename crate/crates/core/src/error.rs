use thiserror::Error;

/// Failures raised by the constructions in this crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("modulus must satisfy Im(tau) > 0, got {0}")]
    BadModulus(f64),

    #[error("gcd({n}, {k}) = {gcd}, expected coprime parameters")]
    NotCoprime { n: usize, k: usize, gcd: usize },

    #[error("theta truncation budget of {budget} coefficients exceeded (|q| too close to 1)")]
    TruncationBudget { budget: usize },

    #[error("root finding failed: {0}")]
    RootFinding(String),

    #[error("pencil member is identically zero at u = {0}")]
    DegeneratePencil(String),

    #[error("sections have a common zero (certificate value {0:e})")]
    CommonZero(f64),

    #[error("sections share a root: {0}")]
    SharedRoot(String),

    #[error("parameter u = {0} is not regular")]
    NotRegular(String),

    #[error("collocation system ill-conditioned (condition number {cond:e}) after {attempts} attempts")]
    IllConditioned { cond: f64, attempts: usize },

    #[error("decomposition residual {residual:e} exceeds tolerance {tol:e}")]
    DecompositionResidual { residual: f64, tol: f64 },

    #[error("exact system is singular: {0}")]
    Singular(String),

    #[error("shift vector is not admissible (u^2 residual {0:e})")]
    NotAdmissible(f64),

    #[error("unsupported schema version {found}, expected {expected}")]
    SchemaVersion { found: u64, expected: u64 },

    #[error("malformed document: {0}")]
    Malformed(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Checks `1 <= k < n` and `gcd(n, k) = 1`.
pub fn check_coprime(n: usize, k: usize) -> Result<()> {
    if n < 2 || k < 1 || k >= n {
        return Err(Error::InvalidParameter(format!(
            "need 1 <= k < n with n >= 2, got n = {n}, k = {k}"
        )));
    }
    let g = gcd(n, k);
    if g != 1 {
        return Err(Error::NotCoprime { n, k, gcd: g });
    }
    Ok(())
}
