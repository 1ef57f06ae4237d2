use thiserror::Error;

use crate::random::generic::GenericnessReport;

/// Everything that can go wrong in the core crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("stage {stage}: {reason}")]
    MalformedStage { stage: usize, reason: String },

    #[error("invalid stacking data: {0}")]
    InvalidStacking(String),

    #[error("tower height overflows 64 bits at stage {stage}; tower queries need h_n < 2^64")]
    HeightOverflow { stage: usize },

    #[error("stage {stage} out of range 1..={max}")]
    StageOutOfRange { stage: usize, max: usize },

    #[error("level {level} out of range for stage {stage} (height {height})")]
    LevelOutOfRange { stage: usize, level: u64, height: u64 },

    #[error("reference stage {reference} exceeds stage {stage}")]
    ReferenceAboveStage { reference: usize, stage: usize },

    #[error("refined coding needs a finite spacer cap")]
    UnboundedSpacerCap,

    #[error("orbit leaves the tower at sample index {index}")]
    Escape { index: usize },

    #[error("empty valid-level set: t_N = {t_n} >= h_{stage} = {height}")]
    EmptyValidLevels { stage: usize, t_n: u64, height: u64 },

    #[error("word histogram exceeded {cap} distinct words")]
    WordCap { cap: usize },

    #[error("{what} = {size} exceeds the size guard {limit}")]
    SizeGuard { what: &'static str, size: u64, limit: u64 },

    #[error("sequence index {index} outside [{lo}, {hi}]")]
    IndexOutOfRange { index: u64, lo: u64, hi: u64 },

    #[error("sequence is not strictly increasing at index {index}")]
    NonMonotone { index: u64 },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: u64, residual: f64 },

    #[error("no conditioning events observed in {samples} samples")]
    NoConditioningEvents { samples: u64 },

    #[error("no stage satisfies the tower-selection threshold (t_N = {t_n})")]
    NoQualifyingStage { t_n: u64 },

    #[error("trial cap of {} exhausted without an accepting spacer sequence", .0.trials_used)]
    SearchExhausted(Box<GenericnessReport>),

    #[error(transparent)]
    ThreadPool(#[from] rayon::ThreadPoolBuildError),
}

impl Error {
    /// Memory and overflow guards, as opposed to malformed input.
    pub fn is_resource_guard(&self) -> bool {
        matches!(
            self,
            Error::HeightOverflow { .. } | Error::WordCap { .. } | Error::SizeGuard { .. }
        )
    }

    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter { name, reason: reason.into() }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
