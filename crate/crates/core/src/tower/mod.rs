//! Towers built from stacking data, queried without materialising their words.

mod build;
mod coding;
mod stacking;

pub use build::{LevelLocator, LocatorStep, Tower, ValidLevels};
pub use coding::{CodedWord, CodingMode, CodingSpec, Symbol};
pub use stacking::{SpacerDistribution, Spacers, Stage, StackingData};
