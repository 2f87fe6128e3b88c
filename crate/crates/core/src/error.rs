use thiserror::Error;

/// Errors raised by the numerical routines of this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the domain of the function.
    #[error("domain error in {func}: {detail}")]
    Domain { func: &'static str, detail: String },

    /// The admissibility integral diverges (alpha <= 0).
    #[error("admissibility constant diverges for alpha = {alpha}")]
    DivergentAdmissibility { alpha: f64 },

    /// Successive quadrature refinements disagree by more than the tolerance.
    #[error("quadrature did not converge: |I_fine - I_coarse| = {disagreement:.3e} > {tolerance:.3e}")]
    Accuracy { disagreement: f64, tolerance: f64 },

    /// The requested method does not apply to this domain.
    #[error("method {method} unsupported for domain {domain}")]
    UnsupportedMethod {
        method: &'static str,
        domain: String,
    },

    /// Word enumeration hit its budget before leaving the ball.
    #[error("orbit enumeration truncated after {visited} words ({partial_count} points counted)")]
    Truncated { visited: usize, partial_count: usize },

    /// Input matrix is not Hermitian within tolerance.
    #[error("matrix not Hermitian: max |A - A^*| = {defect:.3e}")]
    NotHermitian { defect: f64 },

    /// Finite-difference probe sits too close to the real axis.
    #[error("probe Im = {s} too close to the boundary for step h = {h}")]
    StepSize { s: f64, h: f64 },

    /// A configuration value is inconsistent or missing.
    #[error("configuration error: {0}")]
    Config(String),

    /// Gram matrix built from coincident points only.
    #[error("degenerate point set: {0}")]
    Degenerate(String),

    /// Eigenvalues of nested Gram matrices failed to interlace.
    #[error("interlacing violated at radius {radius}: {detail}")]
    Interlacing { radius: f64, detail: String },

    /// An iterative solver hit its iteration cap.
    #[error("{what} did not converge in {iterations} iterations")]
    NoConvergence { what: &'static str, iterations: usize },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(func: &'static str, detail: impl Into<String>) -> Error {
    Error::Domain {
        func,
        detail: detail.into(),
    }
}
