use thiserror::Error;

/// Errors produced by the simulation library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("unit index {index} out of range for {n} units")]
    UnitOutOfRange { index: usize, n: usize },

    #[error("negative interference weight {weight} at ({i}, {j})")]
    NegativeWeight { i: usize, j: usize, weight: f64 },

    #[error("non-finite interference weight at ({i}, {j})")]
    NonFiniteWeight { i: usize, j: usize },

    #[error("unit {0} cannot interfere with itself (nonzero diagonal)")]
    NonzeroDiagonal(usize),

    #[error("invalid clustering: {0}")]
    InvalidClustering(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("arm {arm} out of range for {k} arms")]
    ArmOutOfRange { arm: usize, k: usize },

    #[error("unit {0} has zero total neighbor weight; the neighborhood threshold mapping is undefined")]
    IsolatedUnit(usize),

    #[error("enumeration of {required} elements exceeds budget {budget}")]
    BudgetExceeded { required: u128, budget: u128 },

    #[error("exposure space has {0} arms; at least 2 are required")]
    TooFewArms(usize),

    #[error("exposure super arm is not realizable by any super arm")]
    NotRealizable,

    #[error("exposure super arm is not in the exposure space")]
    UnknownExposureArm,

    #[error("invalid label: {0}")]
    InvalidLabel(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("no mean recorded for {0}")]
    MissingOutcome(String),

    #[error("mean outcome {value} outside the admissible range [{lo}, {hi}]")]
    OutcomeOutOfRange { value: f64, lo: f64, hi: f64 },

    #[error("reward range violated at round {round}: mean {mean} leaves [{lo}, {hi}]")]
    RewardRange { round: usize, mean: f64, lo: f64, hi: f64 },

    #[error("policy called past its horizon (round {round} > {horizon})")]
    PastHorizon { round: usize, horizon: usize },

    #[error("arm {0} has not been pulled")]
    UncoveredArm(usize),

    #[error("reward {0} outside [0, 1]")]
    RewardOutOfUnit(f64),

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, Error>;
