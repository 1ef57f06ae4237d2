//! Probabilistic machinery: random spacers, the spacer Markov chain, Hoeffding
//! bounds for `m`-dependent indicators, the genericness search and the
//! parameter recipes of the randomized constructions.

pub mod generic;
pub mod hoeffding;
pub mod markov;
pub mod recipe;
pub mod spacer;

pub use generic::{genericness_search, GenericnessReport, SearchMode, TrialRecord};
pub use hoeffding::{hoeffding_bound, WindowProcess};
pub use markov::{MarkovModel, StationaryReport};
pub use recipe::{flexibility_bounds, recipe_params, FlexibilityBounds, RecipeBundle, RecipeInput, Construction};
pub use spacer::SpacerProcess;
