use thiserror::Error;

/// Errors produced by grid/parameter construction and validation.
#[derive(Debug, Error)]
pub enum DomainError {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
    #[error("non-finite value for `{name}`")]
    NonFinite { name: &'static str },
}

/// Errors raised by the PDE solvers during a run.
#[derive(Debug, Error)]
pub enum SolverError {
    #[error("field blow-up at t = {t:.3e} s: |A|max = {max_abs:.3e} exceeds {limit:.3e}")]
    FieldBlowUp { t: f64, max_abs: f64, limit: f64 },
    #[error("coherence blow-up at t = {t:.3e} s: |rho|max = {max_abs:.3e}")]
    CoherenceBlowUp { t: f64, max_abs: f64 },
    #[error("non-finite value encountered at t = {t:.3e} s in {field}")]
    NonFinite { t: f64, field: &'static str },
    #[error(
        "step control violated: dt*rate = {phase:.3} rad exceeds {limit} \
         (dt = {dt:.3e} s, fastest rate = {rate:.3e} rad/s); reduce dt"
    )]
    StepControl { dt: f64, rate: f64, phase: f64, limit: f64 },
    #[error("schedule segments do not tile the run duration: {reason}")]
    BadSchedule { reason: String },
    #[error("hand-off rejected: {reason}")]
    HandoffRejected { reason: String },
    #[error("{0}")]
    Domain(#[from] DomainError),
}

/// Errors from the analysis/detection stages.
#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("trace contains non-finite samples")]
    NonFinite,
    #[error("trace too short: {len} samples, need at least {min}")]
    TooShort { len: usize, min: usize },
    #[error("traces have mismatched lengths ({a} vs {b})")]
    LengthMismatch { a: usize, b: usize },
    #[error("zero-energy input where a signal is required")]
    ZeroEnergy,
    #[error("gaussian fit did not converge after {iters} iterations")]
    NoConvergence { iters: usize },
    #[error("data is not a single dominant lobe (peak/median = {ratio:.2}); use peak_find")]
    MultiLobe { ratio: f64 },
    #[error("LO offset {lo:.3e} rad/s aliases on the grid (|lo|*dt >= pi)")]
    LoAliasing { lo: f64 },
    #[error("single-sideband condition violated: |lo| = {lo:.3e} < {required:.3e} rad/s")]
    SidebandViolation { lo: f64, required: f64 },
}
