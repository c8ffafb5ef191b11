//! Error taxonomy shared by all modules.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument is outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A structural parameter (grid size, truncation, block count) is invalid.
    #[error("configuration error: {0}")]
    Config(String),

    /// A quadrature failed its doubled-resolution convergence check twice.
    /// Both values are carried so the caller can judge the discrepancy.
    #[error("quadrature accuracy error in {context}: coarse={coarse:.16e}, fine={fine:.16e}")]
    Accuracy {
        context: String,
        coarse: f64,
        fine: f64,
    },

    /// Operator assembly failed its convergence check; the worst entry is named.
    #[error("assembly accuracy error at entry ({row},{col}): relative discrepancy {rel:.3e} exceeds {tol:.3e}")]
    AssemblyAccuracy {
        row: usize,
        col: usize,
        rel: f64,
        tol: f64,
    },

    /// The computed ‖b·h_k‖ profile never drops below the enclosure threshold;
    /// the potential is (empirically) not in V. Bounded perturbations of norm
    /// below one are still covered by the dissipative-spectrum machinery.
    #[error(
        "profile stays above {threshold:.6} over {computed_len} computed indices; \
         potential is not (empirically) in V — use the bounded-perturbation route"
    )]
    NotInV {
        threshold: f64,
        computed_len: usize,
    },

    /// A resolvent solve was requested too close to an eigenvalue.
    #[error("pole error in {context}: reciprocal condition estimate {rcond:.3e}")]
    Pole { context: String, rcond: f64 },

    /// A contour passes unacceptably close to the spectrum.
    #[error("contour error: {0}")]
    Contour(String),

    /// An iterative method failed to converge.
    #[error("convergence failure in {context}: {detail}")]
    Convergence { context: String, detail: String },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("format error: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, Error>;
