use thiserror::Error;

/// Crate-wide error type. Every failure carries enough context to act on:
/// required cutoffs, measured residuals, offending dimensions.
#[derive(Error, Debug, Clone, PartialEq)]
pub enum Error {
    #[error(
        "Fock cutoff {cutoff} too small for coherent label |alpha| = {alpha_abs:.6}: \
         truncated tail mass {tail_mass:.3e} exceeds {limit:.1e}; need cutoff >= {required}"
    )]
    CutoffTooSmall {
        cutoff: usize,
        alpha_abs: f64,
        tail_mass: f64,
        limit: f64,
        required: usize,
    },

    #[error("space mismatch: operand dimensions {left} vs {right}")]
    SpaceMismatch { left: usize, right: usize },

    #[error("mode cutoffs differ: {left} vs {right}; two-mode constructions need equal cutoffs")]
    CutoffMismatch { left: usize, right: usize },

    #[error(
        "off resonance: |omega - delta| = {detuning:.3e} > {limit:.1e}; \
         closed forms here assume delta = omega"
    )]
    OffResonance { detuning: f64, limit: f64 },

    #[error(
        "total occupation {occupation} exceeds the truncation-safe threshold {threshold} \
         (cutoff {cutoff}); results past it are corrupted by truncation"
    )]
    ThresholdExceeded {
        occupation: usize,
        threshold: usize,
        cutoff: usize,
    },

    #[error("operators do not commute: max |[h, c]| = {residual:.3e} > {limit:.1e}")]
    NotCommuting { residual: f64, limit: f64 },

    #[error("eigendecomposition failed: {reason} (residual {residual:.3e})")]
    DiagonalizationFailure { reason: String, residual: f64 },

    #[error(
        "level ({n1}, {n2}) is degenerate: partner at energy gap {gap:.3e} couples with \
         |<j|H1|k>| = {coupling:.3e}; nondegenerate perturbation theory does not apply"
    )]
    DegenerateLevel {
        n1: usize,
        n2: usize,
        gap: f64,
        coupling: f64,
    },

    #[error(
        "series truncation at n_max = {n_max} is insufficient: tail bound {tail_bound:.3e} \
         exceeds requested tolerance {tolerance:.1e}"
    )]
    TruncationInsufficient {
        n_max: usize,
        tail_bound: f64,
        tolerance: f64,
    },

    #[error("observable is not Hermitian-flagged; time series store real expectations only")]
    NonHermitianObservable,

    #[error("run validity check failed: {what} = {value:.3e} exceeds {limit:.1e}")]
    ValidityFailure {
        what: String,
        value: f64,
        limit: f64,
    },

    #[error("invalid configuration:\n{}", .0.join("\n"))]
    Config(Vec<String>),

    #[error("I/O failure on {path}: {message}")]
    Io { path: String, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;
