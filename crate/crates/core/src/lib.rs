//! Simulator and measurement laboratory for rank-one systems built by cut-and-stack.
//!
//! A rank-one system only ever exists here through its symbolic towers: the word
//! `Φ_r(S_n)` coding tower `S_n` against the partition induced by `S_r` is never
//! materialised, every symbol is answered by descending the stacking recursion.
//!
//! - [`tower`]: stacking data, implicit tower words, valid-level sets, orbit coding.
//! - [`sequence`]: sampling sequences `A = {t_n}` and their gap diagnostics.
//! - [`entropy`]: Shannon entropy of partitions, empirical sequence entropy, inequality checkers.
//! - [`random`]: random spacer processes, the spacer Markov chain, Hoeffding bounds,
//!   the genericness search and the parameter recipes.
//! - [`bounds`]: word-count bounds, tower selection and balancing diagnostics.

#![forbid(unsafe_code)]

pub mod bounds;
pub mod entropy;
pub mod error;
pub mod rational;
pub mod random;
pub mod rng;
pub mod sequence;
pub mod tower;

pub use error::{Error, Result};
pub use rational::Rational;
pub use sequence::{SamplingSequence, SequenceKind};
pub use tower::{CodedWord, CodingMode, CodingSpec, Spacers, SpacerDistribution, Stage, StackingData, Symbol, Tower};
