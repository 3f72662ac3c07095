use thiserror::Error;

/// Errors raised by every module of the crate.
///
/// Messages always name the offending field so front ends can surface them
/// unchanged.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("{field}: value {value} is outside [0, 1]")]
    OutOfRange { field: &'static str, value: f64 },

    #[error("counts: response table total is zero")]
    EmptyTable,

    #[error("{field}: {reason}")]
    Invalid { field: &'static str, reason: String },

    #[error("alpha: {alpha} is outside the feasible range [{lo}, {hi}] for these rates")]
    AlphaInfeasible { alpha: f64, lo: f64, hi: f64 },

    #[error("{field}: n * {value} = {scaled} is not an integer")]
    NonIntegralRates { field: &'static str, value: f64, scaled: f64 },

    #[error("constraints: no response table with n = {n} satisfies the constraints")]
    InfeasibleConstraints { n: u64 },

    #[error("attrition: excluded + withdrawn = {total} exceeds 1")]
    BadAttrition { total: f64 },

    #[error("assigned: cohort has no treatment assignment")]
    MissingAssignment,

    #[error("outcomes: potential outcome missing for individual {individual}, arm {arm}")]
    MissingPotentialOutcome { individual: usize, arm: usize },

    #[error("n_star: opposites design size is required")]
    MissingNStar,

    #[error("q: randomized cells imply q = {randomized}, opposites cells imply q = {opposites}")]
    MismatchedQ { randomized: f64, opposites: f64 },

    #[error("members[{member}]: variance unavailable ({reason})")]
    VarianceUnavailable { member: usize, reason: String },

    #[error("subsets: C({n}, {m}) = {size} exceeds the enumeration cap {cap}")]
    SpaceTooLarge { n: usize, m: usize, size: u128, cap: u64 },

    #[error("distribution: shape mismatch ({left_n}, {left_m}) vs ({right_n}, {right_m})")]
    ShapeMismatch { left_n: usize, left_m: usize, right_n: usize, right_m: usize },

    #[error("delta: no simulated individual on the {side} side of the cutoff inside the window")]
    DegenerateWindow { side: &'static str },

    #[error("grid: conditional density has zero mass on the grid")]
    ZeroMass,

    #[error("calibration: {0}")]
    CalibrationFailed(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn invalid(field: &'static str, reason: impl Into<String>) -> Self {
        Error::Invalid { field, reason: reason.into() }
    }
}
