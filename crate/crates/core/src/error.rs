//! Crate-wide error type.
//!
//! Every fallible operation in the library returns [`Result`]. Variants are
//! grouped by the subsystem that raises them; the CLI maps any error to exit
//! code 1 (run failures) or 2 (configuration/usage failures, see
//! [`Error::is_usage`]).

/// Reason the admissibility check of a traveling wave failed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AdmissibilityFailure {
    /// The end-state equation has no root in the admissible interval.
    NoRoot,
    /// The characteristic speed does not stay strictly above the wave speed
    /// between the end states.
    DegenerateCharacteristic,
    /// The wave speed does not exceed the characteristic speed of the ahead
    /// state (no compressive jump).
    WrongEndState,
}

impl std::fmt::Display for AdmissibilityFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::NoRoot => write!(f, "no end state root"),
            Self::DegenerateCharacteristic => write!(f, "degenerate characteristic speed"),
            Self::WrongEndState => write!(f, "ahead-state characteristic not slower than wave"),
        }
    }
}

/// Which blowup detector latched when an ensemble stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BlowupTrigger {
    /// The compression factor dropped below its floor.
    RhoFloor,
    /// A characteristic gradient component exceeded its ceiling.
    GradientCeiling,
}

impl std::fmt::Display for BlowupTrigger {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::RhoFloor => write!(f, "compression-factor floor"),
            Self::GradientCeiling => write!(f, "gradient ceiling"),
        }
    }
}

/// Crate-wide error enumeration.
#[derive(Debug, Clone, thiserror::Error)]
pub enum Error {
    // ----- flux / equation of state -----
    #[error("u = {u} outside the certified interval [{lo}, {hi}]")]
    OutOfInterval { u: f64, lo: f64, hi: f64 },
    #[error("derivative order {0} not supported (maximum 3)")]
    UnsupportedOrder(usize),
    #[error("non-physical gas state: v = {v}, internal energy = {e}")]
    NonPhysicalState { v: f64, e: f64 },
    #[error("state not hyperbolic: p·p_E − p_v = {discriminant} ≤ 0")]
    NotHyperbolic { discriminant: f64 },

    // ----- traveling-wave profile -----
    #[error("wave speed σ = {0} is not positive")]
    NonPositiveSpeed(f64),
    #[error("wave inadmissible: {0}")]
    Inadmissible(AdmissibilityFailure),
    #[error("profile ODE stiffness failure at x = {x}: f′(ū) − σ = {gap} below floor")]
    StiffnessFailure { x: f64, gap: f64 },

    // ----- shock-frame simulation -----
    #[error("initial data support touches the shock (|x| < {gap}, first hit at x = {x})")]
    SupportTouchesShock { x: f64, gap: f64 },
    #[error("initial amplitude {amp} exceeds admissible bound {bound}")]
    AmplitudeTooLarge { amp: f64, bound: f64 },
    #[error("jump denominator {denominator} smaller than u0/2 = {floor}")]
    DegenerateJump { denominator: f64, floor: f64 },
    #[error("CFL violation: speed·dt/h = {number} > {limit}")]
    CflViolation { number: f64, limit: f64 },

    // ----- weighted energies -----
    #[error("x = {x} on the wrong side for this weight variant")]
    WrongSide { x: f64 },
    #[error("weighted tail not resolved: boundary contribution fraction {fraction} > 0.01")]
    TailNotResolved { fraction: f64 },
    #[error("coefficient selection infeasible: inequality {index} fails by {margin}")]
    Infeasible { index: usize, margin: f64 },
    #[error("energy series not positive at sample {index} (value {value})")]
    NonPositiveEnergy { index: usize, value: f64 },

    // ----- characteristic fields -----
    #[error("matrix not strictly hyperbolic: eigenvalue gap {gap} < {floor}")]
    NotStrictlyHyperbolic { gap: f64, floor: f64 },
    #[error("ensemble blown up at t = {time} (family {family}, {trigger})")]
    BlownUp {
        family: usize,
        time: f64,
        trigger: BlowupTrigger,
    },
    #[error("family not genuinely nonlinear: |γ_iii| = {gamma} ≤ {tolerance}")]
    NonGenuinelyNonlinear { gamma: f64, tolerance: f64 },

    // ----- blowup laboratory -----
    #[error("support distance {d} below requirement {required}")]
    DistanceTooSmall { d: f64, required: f64 },
    #[error("temperature guard violated at x = {x}: T = {t} ≤ ignition {t_i}")]
    TemperatureGuardViolated { x: f64, t: f64, t_i: f64 },

    // ----- configuration / CLI -----
    #[error("config parse error at line {line}: {message}")]
    ParseError { line: usize, message: String },
    #[error("unknown config key '{0}'")]
    UnknownKey(String),
    #[error("config value out of range: {key} = {value} ({reason})")]
    RangeError {
        key: String,
        value: String,
        reason: String,
    },
    #[error("i/o failure on {path}: {message}")]
    Io { path: String, message: String },
}

impl Error {
    /// True for errors caused by bad configuration or usage rather than a
    /// failed computation; the CLI maps these to exit code 2.
    pub fn is_usage(&self) -> bool {
        matches!(
            self,
            Error::ParseError { .. }
                | Error::UnknownKey(_)
                | Error::RangeError { .. }
                | Error::UnsupportedOrder(_)
        )
    }
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
