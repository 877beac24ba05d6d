use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("bad rational literal `{literal}`")]
pub struct ParseRationalError {
    pub literal: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SeriesError {
    #[error("shape mismatch: ({left_vars} vars, order {left_order}) vs ({right_vars} vars, order {right_order})")]
    ShapeMismatch {
        left_vars: usize,
        left_order: u32,
        right_vars: usize,
        right_order: u32,
    },
    #[error("substitution has {got} components, expected {expected}")]
    ArityMismatch { expected: usize, got: usize },
    #[error("component {index} of the substitution has a nonzero constant term")]
    NonzeroConstant { index: usize },
    #[error("linear part is singular")]
    SingularLinearPart,
    #[error("exponent has {got} entries, expected {expected}")]
    BadExponent { expected: usize, got: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SpectrumError {
    #[error("linear part is not square or not real")]
    BadMatrix,
    #[error("root finder did not converge (ill-conditioned characteristic polynomial)")]
    RootFinderFailed,
    #[error("mixed spectrum: {0}")]
    MixedSpectrum(String),
    #[error("eigenvalue ratios are not rational within the denominator bound: {0}")]
    NonCommensurable(String),
    #[error("semisimple part of the linear part vanishes")]
    AllZero,
    #[error("linear part is not canonicalizable over the rationals: {0}")]
    NotCanonicalizable(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum InvariantError {
    #[error("resonance vector must have a nonzero entry")]
    ZeroResonance,
    #[error("Hilbert basis did not saturate below degree cap {cap}")]
    DegreeCapExceeded { cap: u32 },
    #[error("series is not annihilated by the linear field (first violation at degree {degree})")]
    NotInvariant { degree: u32 },
    #[error("no representation in the generators at degree {degree}")]
    NoRepresentation { degree: u32 },
    #[error(transparent)]
    Series(#[from] SeriesError),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum IntegrabilityError {
    #[error("expected {expected} first integrals, got {got}")]
    WrongIntegralCount { expected: usize, got: usize },
    #[error("first integral {index} is not conserved (X(F) has a term of degree {degree})")]
    NotIntegrable { index: usize, degree: u32 },
    #[error("first integrals are not independent within order {order}")]
    NotIndependent { order: u32 },
    #[error("cannot straighten the zero block: {0}")]
    StraighteningFailed(String),
    #[error("implicit solve failed: the d/dx coefficient vanishes at the origin")]
    ImplicitSolveFailed,
    #[error("{0}")]
    Unsupported(String),
    #[error(transparent)]
    Spectrum(#[from] SpectrumError),
    #[error(transparent)]
    Series(#[from] SeriesError),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NormalizeError {
    #[error("hypothesis violation: {0}")]
    HypothesisViolation(String),
    #[error("nonzero obstruction at degree {degree}; increase N or the hypotheses fail at higher order")]
    ObstructionNonzero { degree: u32 },
    #[error("linear part is not in canonical form for the spectrum class")]
    NotCanonical,
    #[error("transported first integral {index} is not annihilated at degree {degree}")]
    TransportAnnihilationFailed { index: usize, degree: u32 },
    #[error(transparent)]
    Integrability(#[from] IntegrabilityError),
    #[error(transparent)]
    Spectrum(#[from] SpectrumError),
    #[error(transparent)]
    Series(#[from] SeriesError),
    #[error(transparent)]
    Invariant(#[from] InvariantError),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NumericError {
    #[error("step size underflow at t = {t}")]
    StepSizeUnderflow { t: f64 },
    #[error("trajectory left the working ball at t = {t}")]
    LeftDomain { t: f64 },
    #[error("step budget exhausted at t = {t}")]
    TooManySteps { t: f64 },
    #[error("no section return within {limit}")]
    NoReturn { limit: f64 },
    #[error("root not bracketed at y = {y}")]
    RootNotBracketed { y: f64 },
    #[error("invalid input: {0}")]
    InvalidInput(String),
}
