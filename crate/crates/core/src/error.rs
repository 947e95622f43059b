//! Error type shared by all modules.

/// Errors surfaced by the library. Domain errors (bad inputs, excluded
/// parameter ranges) are distinct from verification failures, which carry
/// the offending location and value so reports stay actionable.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("out of range: {0}")]
    OutOfRange(String),

    #[error("negative u = {0:e} passed to the inverse renormalization")]
    NegativeU(f64),

    #[error("cubic root solve failed: {0}")]
    RootFailure(String),

    #[error("{curve} evaluated at its pole tau = {tau:e}")]
    Pole { curve: &'static str, tau: f64 },

    #[error("integer resonance: |R - {n}| = {dist:e} below guard {guard:e}")]
    IntegerResonance { n: u32, dist: f64, guard: f64 },

    #[error("precision exhausted: {0}")]
    PrecisionExhausted(String),

    #[error("degenerate reformulation: A2^2 - A1 A3 vanished at working precision")]
    DegenerateK,

    #[error("negative discriminant for mu*_{n}: {value:e} (R below the validated regime)")]
    NegativeDiscriminant { n: usize, value: f64 },

    #[error("not converged: {0}")]
    NotConverged(String),

    #[error("series tail {tail:e} at the handoff point exceeds budget {budget:e}")]
    TailTooLarge { tail: f64, budget: f64 },

    #[error("event missed: {0}")]
    EventMissed(String),

    #[error("funnel violation at tau = {tau:e}: u = {u:e} outside ({lo:e}, {hi:e})")]
    SandwichViolation { tau: f64, u: f64, lo: f64, hi: f64 },

    #[error("step underflow at abscissa {abscissa:e}: step {step:e}")]
    StepUnderflow { abscissa: f64, step: f64 },

    #[error("curve met Delta_2 = 0 at sigma = {sigma:e} before reaching the origin")]
    SonicEscapeFailed { sigma: f64 },

    #[error("barrier violation at sigma = {sigma:e}: w = {w:e} <= a(1+a) sigma^2 = {bound:e}")]
    BarrierViolation { sigma: f64, w: f64, bound: f64 },

    #[error("x(sigma) lost strict monotonicity near sigma = {0:e}")]
    NonMonotone(f64),

    #[error("matching gap {gap:e} below combined noise estimate {noise:e}")]
    GapBelowNoise { gap: f64, noise: f64 },

    #[error(
        "no sign bracket for N = {n}: gap({r_lo}) = {gap_lo:e}, gap({r_hi}) = {gap_hi:e} \
         (expected +, -)"
    )]
    NoBracket { n: u32, r_lo: f64, gap_lo: f64, r_hi: f64, gap_hi: f64 },

    #[error("precision limit: {0}")]
    PrecisionLimit(String),

    #[error("stitch mismatch at abscissa {abscissa:e}: |{a:e} - {b:e}| exceeds {tol:e}")]
    StitchMismatch { abscissa: f64, a: f64, b: f64, tol: f64 },

    #[error("nonpositive margin {name} at x = {x:e}: {value:e}")]
    MarginNonpositive { name: &'static str, x: f64, value: f64 },

    #[error("certificate {name} failed at {at:e}: value {value:e}")]
    CertificateFailed { name: String, at: f64, value: f64 },

    #[error("checkpoint: {0}")]
    Checkpoint(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
