use std::fmt;

use serde::{Deserialize, Serialize};

/// A tower-alphabet symbol. `0` is a spacer (base mode) or "outside the tower".
pub type Symbol = u32;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CodingMode {
    /// Alphabet `{0, 1, …, h_r}`; every spacer codes to 0.
    Base,
    /// Spacer position `j` of a block codes to `h_r + j + 1`;
    /// alphabet `{0, …, h_r + L − 1}` with 0 never emitted inside the tower.
    Refined,
}

impl fmt::Display for CodingMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CodingMode::Base => "base",
            CodingMode::Refined => "refined",
        })
    }
}

/// Which partition codes the levels: the one induced by `S_reference`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CodingSpec {
    pub reference: usize,
    pub mode: CodingMode,
}

impl CodingSpec {
    pub fn base(reference: usize) -> Self {
        CodingSpec { reference, mode: CodingMode::Base }
    }

    pub fn refined(reference: usize) -> Self {
        CodingSpec { reference, mode: CodingMode::Refined }
    }
}

/// Symbols seen along an `A`-orbit, rendered as `2,0,1`.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CodedWord(pub Vec<Symbol>);

impl CodedWord {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn symbols(&self) -> &[Symbol] {
        &self.0
    }
}

impl fmt::Display for CodedWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, s) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{s}")?;
        }
        Ok(())
    }
}

impl From<Vec<Symbol>> for CodedWord {
    fn from(v: Vec<Symbol>) -> Self {
        CodedWord(v)
    }
}
