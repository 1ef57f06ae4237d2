//! Experiment configuration: one JSON document describing the system, the
//! sampling sequence and the operations to run.

use std::path::Path;

use rankone_core::bounds::{CSchedule, Phi};
use rankone_core::random::recipe::{recipe_stacking, RecipeBundle};
use rankone_core::random::RecipeInput;
use rankone_core::{CodingMode, Rational, SamplingSequence, StackingData};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliError;

pub const DEFAULT_WORD_CAP: usize = rankone_core::entropy::DEFAULT_WORD_CAP;

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stacking: Option<StackingData>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub recipe: Option<RecipeSource>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sequence: Option<SamplingSequence>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub caps: Caps,
    pub operations: Vec<Operation>,
}

/// Stacking data grown by a construction recipe with seeded spacers.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RecipeSource {
    pub params: RecipeInput,
    pub initial_height: u64,
    pub stages: usize,
    /// Spacer seed; the experiment seed when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Caps {
    /// Distinct words a histogram may hold.
    pub words: usize,
}

impl Default for Caps {
    fn default() -> Self {
        Caps { words: DEFAULT_WORD_CAP }
    }
}

fn default_one() -> usize {
    1
}

fn default_c() -> CSchedule {
    CSchedule::Constant { value: 1 }
}

fn default_ts() -> Vec<f64> {
    vec![0.05, 0.1, 0.2]
}

fn default_alphabet() -> u32 {
    2
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case", deny_unknown_fields)]
pub enum Operation {
    /// `(1/N) H` of the coded orbits at one stage, for each `N`.
    Entropy {
        /// Defaults to the top tower.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        stage: Option<usize>,
        #[serde(default = "default_one")]
        reference: usize,
        #[serde(default = "default_mode")]
        mode: CodingMode,
        n_terms: Vec<usize>,
        /// Sampled enumeration with this many levels; exact when absent.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        samples: Option<u64>,
    },
    /// Profile at stage and reference `τ(N)`.
    Profile {
        n_terms: Vec<usize>,
        #[serde(default = "default_c")]
        c: CSchedule,
        #[serde(default = "default_mode")]
        mode: CodingMode,
    },
    /// Terms, gaps, the K estimate and the dilation heuristic.
    Sequence {
        count: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        kvalue: Option<KValue>,
    },
    /// Stationary vectors and, optionally, a Monte Carlo conditional limit.
    Markov {
        #[serde(default)]
        periods: Vec<usize>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        limit: Option<MarkovLimit>,
    },
    /// Tail probabilities of random window processes against the bound.
    Hoeffding {
        processes: u64,
        max_m: u32,
        n: u64,
        #[serde(default = "default_ts")]
        ts: Vec<f64>,
        trials: u64,
    },
    /// Random spacer search on top of the configured tower.
    Generic {
        q: u64,
        n0: u64,
        n_terms: usize,
        #[serde(default = "default_alphabet")]
        alphabet: u32,
        trial_cap: u64,
        #[serde(default)]
        survey: bool,
    },
    /// Balancing diagnostics of the sampling sequence.
    Bounds {
        phi: Phi,
        #[serde(default = "default_c")]
        c: CSchedule,
        horizon: u64,
    },
    /// Distinct words against the word-count bound.
    Words {
        n_terms: Vec<usize>,
        #[serde(default = "default_c")]
        c: CSchedule,
    },
    /// Per-stage recipe bundles of the configured recipe.
    Recipe,
    /// Flexibility bounds over a grid; `kappa` defaults to the critical value.
    Flexibility {
        #[serde(rename = "L")]
        l: Vec<u32>,
        beta: Vec<Rational>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        kappa: Option<Rational>,
    },
}

fn default_mode() -> CodingMode {
    CodingMode::Base
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KValue {
    pub r: u64,
    pub n: u64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MarkovLimit {
    pub h: u32,
    /// Internal spacers of the block word, each 0 or 1.
    pub pattern: Vec<u8>,
    pub l0: u32,
    /// Target symbols; every symbol of the alphabet when empty.
    #[serde(default)]
    pub l1: Vec<u32>,
    pub n: u64,
    /// Lag; the settling lag of the recursion when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s: Option<u64>,
    pub samples: u64,
}

impl Operation {
    pub fn name(&self) -> &'static str {
        match self {
            Operation::Entropy { .. } => "entropy",
            Operation::Profile { .. } => "profile",
            Operation::Sequence { .. } => "sequence",
            Operation::Markov { .. } => "markov",
            Operation::Hoeffding { .. } => "hoeffding",
            Operation::Generic { .. } => "generic",
            Operation::Bounds { .. } => "bounds",
            Operation::Words { .. } => "words",
            Operation::Recipe => "recipe",
            Operation::Flexibility { .. } => "flexibility",
        }
    }
}

/// What the operations run against, derived once from the config.
pub struct Resolved {
    pub stacking: Option<StackingData>,
    pub bundles: Vec<RecipeBundle>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let cfg: ExperimentConfig =
            serde_json::from_str(text).map_err(|e| CliError::Validation(format!("config: {e}")))?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// SHA-256 of the canonical (compact) JSON form.
    pub fn hash(&self) -> String {
        sha256_hex(serde_json::to_string(self).expect("config serializes").as_bytes())
    }

    pub fn validate(&self) -> Result<Resolved, CliError> {
        if self.operations.is_empty() {
            return Err(CliError::Validation("operations: at least one operation is required".into()));
        }
        if self.caps.words == 0 {
            return Err(CliError::Validation("caps.words: must be positive".into()));
        }
        let (stacking, bundles) = match (&self.stacking, &self.recipe) {
            (Some(_), Some(_)) => {
                return Err(CliError::Validation("stacking, recipe: give one source of stacking data, not both".into()))
            }
            (Some(sd), None) => {
                sd.validate().map_err(|e| CliError::Validation(format!("stacking: {e}")))?;
                (Some(sd.clone()), vec![])
            }
            (None, Some(r)) => {
                let (sd, bundles) = recipe_stacking(&r.params, r.initial_height, r.stages, r.seed.unwrap_or(self.seed))
                    .map_err(|e| CliError::field("recipe", e))?;
                (Some(sd), bundles)
            }
            (None, None) => (None, vec![]),
        };
        for op in &self.operations {
            let needs_tower = matches!(
                op,
                Operation::Entropy { .. } | Operation::Profile { .. } | Operation::Generic { .. } | Operation::Words { .. }
            );
            if needs_tower && stacking.is_none() {
                return Err(CliError::Validation(format!("stacking: operation `{}` needs stacking data or a recipe", op.name())));
            }
            let needs_seq = matches!(
                op,
                Operation::Entropy { .. }
                    | Operation::Profile { .. }
                    | Operation::Sequence { .. }
                    | Operation::Generic { .. }
                    | Operation::Bounds { .. }
                    | Operation::Words { .. }
            );
            if needs_seq && self.sequence.is_none() {
                return Err(CliError::Validation(format!("sequence: operation `{}` needs a sampling sequence", op.name())));
            }
            if matches!(op, Operation::Recipe) && self.recipe.is_none() {
                return Err(CliError::Validation("recipe: operation `recipe` needs a recipe source".into()));
            }
        }
        Ok(Resolved { stacking, bundles })
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}
