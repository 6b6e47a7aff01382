use crate::coefficients::Family;

/// Errors raised by the solvers and constructors in this crate.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("empty domain [{0}, {1}]")]
    EmptyDomain(f64, f64),

    #[error("r = {0} lies outside the envelope region [delta, 1/3) U (2/3, 1 - delta]")]
    OutsideEnvelope(f64),

    #[error("weight overflow at element {element} for s = {s}: exponent {exponent:.3e} exceeds the representable span")]
    WeightOverflow { element: usize, s: f64, exponent: f64 },

    #[error("non-positive mass pivot at row {0} (assembly bug)")]
    NegativeMassPivot(usize),

    #[error("inverse iteration did not converge in {0} iterations")]
    InverseIteration(usize),

    #[error("shooting miss function has no sign change on [{lo}, {hi}]")]
    NoBracket { lo: f64, hi: f64 },

    #[error("Pruefer integration failed at r = {r}: {reason}")]
    Integration { r: f64, reason: String },

    #[error("potential family mismatch: expected {expected:?}")]
    FamilyMismatch { expected: Family },

    #[error("kappa = {0} is not a zero-contact point of the potential")]
    NotContact(f64),

    #[error("tau = {tau:.3e} is below the deepest retained amplitude {deepest:.3e}; build a deeper schedule")]
    TruncationTooShallow { tau: f64, deepest: f64 },

    #[error("switch search failed: best gap {best_gap:.6e} at s = {best_s:.6e} (cap {cap:.3e}, required gap {gap:.6e})")]
    SwitchSearch { best_gap: f64, best_s: f64, cap: f64, gap: f64 },

    #[error("target {target} outside the admissible band [{lo}, {hi}]")]
    UnreachableTarget { target: f64, lo: f64, hi: f64 },

    #[error("degenerate configuration: rho = {0} is not positive")]
    DegenerateGap(f64),

    #[error("reference eigenvalue ordering violated: {0}")]
    Ordering(String),

    #[error("too few samples: need at least {need}, got {got}")]
    TooFewSamples { need: usize, got: usize },

    #[error("Rayleigh quotient has a zero denominator")]
    ZeroDenominator,

    #[error("family membership check failed: {0}")]
    Membership(String),
}

pub type Result<T> = std::result::Result<T, Error>;
