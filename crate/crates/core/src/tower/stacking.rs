use num_bigint::BigUint;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::random::spacer::SpacerProcess;

/// Defining data of a finite-stage rank-one construction.
///
/// `stages[m - 1]` cuts `S_m` into `q` slices and stacks them with spacer blocks,
/// giving `h_{m+1} = q·h_m + a_m`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StackingData {
    pub initial_height: u64,
    /// `L`: every spacer count lies in `[0, L − 1]`. Absent means unbounded.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spacer_cap: Option<u32>,
    #[serde(default)]
    pub stages: Vec<Stage>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Stage {
    pub q: u64,
    #[serde(flatten)]
    pub spacers: Spacers,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Spacers {
    /// `a_{n,1}, …, a_{n,q−1}`.
    Explicit { spacers: Vec<u32> },
    /// Every block has the same size.
    Constant { spacers: ConstantSpacer },
    /// Regenerated from a counter-based process keyed by `(seed, stage index)`.
    Seeded { seed: u64, distribution: SpacerDistribution },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstantSpacer {
    pub constant: u32,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpacerDistribution {
    /// Uniform on `{0, 1}`.
    Binary,
    /// Uniform on `{0, …, L − 1}`.
    Uniform,
}

impl Stage {
    pub fn explicit(q: u64, spacers: Vec<u32>) -> Self {
        Stage { q, spacers: Spacers::Explicit { spacers } }
    }

    pub fn constant(q: u64, spacer: u32) -> Self {
        Stage { q, spacers: Spacers::Constant { spacers: ConstantSpacer { constant: spacer } } }
    }

    pub fn seeded(q: u64, seed: u64, distribution: SpacerDistribution) -> Self {
        Stage { q, spacers: Spacers::Seeded { seed, distribution } }
    }
}

impl StackingData {
    pub fn new(initial_height: u64, spacer_cap: Option<u32>, stages: Vec<Stage>) -> Result<Self> {
        let sd = StackingData { initial_height, spacer_cap, stages };
        sd.validate()?;
        Ok(sd)
    }

    /// Number of towers `S_1, …, S_M` described.
    pub fn num_towers(&self) -> usize {
        self.stages.len() + 1
    }

    pub fn validate(&self) -> Result<()> {
        if self.initial_height == 0 {
            return Err(Error::InvalidStacking("initial_height must be positive".into()));
        }
        if self.spacer_cap == Some(0) {
            return Err(Error::InvalidStacking("spacer_cap must be positive".into()));
        }
        let max = self.spacer_cap.map(|l| l - 1);
        for (idx, stage) in self.stages.iter().enumerate() {
            let n = idx + 1;
            let bad = |reason: String| Error::MalformedStage { stage: n, reason };
            if stage.q < 2 {
                return Err(bad(format!("q = {} but at least 2 slices are required", stage.q)));
            }
            match &stage.spacers {
                Spacers::Explicit { spacers } => {
                    if spacers.len() as u64 != stage.q - 1 {
                        return Err(bad(format!(
                            "expected q - 1 = {} spacer counts, found {}",
                            stage.q - 1,
                            spacers.len()
                        )));
                    }
                    if let (Some(max), Some((i, &a))) =
                        (max, spacers.iter().enumerate().find(|(_, &a)| Some(a) > max))
                    {
                        return Err(bad(format!("spacer a_{{{n},{}}} = {a} exceeds L - 1 = {max}", i + 1)));
                    }
                }
                Spacers::Constant { spacers } => {
                    if let Some(max) = max.filter(|&m| spacers.constant > m) {
                        return Err(bad(format!("constant spacer {} exceeds L - 1 = {max}", spacers.constant)));
                    }
                }
                Spacers::Seeded { distribution, .. } => match (distribution, self.spacer_cap) {
                    (SpacerDistribution::Uniform, None) => {
                        return Err(bad("uniform spacers need a finite spacer_cap".into()));
                    }
                    (SpacerDistribution::Binary, Some(1)) => {
                        return Err(bad("binary spacers need spacer_cap >= 2".into()));
                    }
                    _ => {}
                },
            }
        }
        Ok(())
    }

    /// Spacer process behind a seeded stage (1-based stage index).
    pub(crate) fn process(&self, stage: usize) -> Option<SpacerProcess> {
        match self.stages[stage - 1].spacers {
            Spacers::Seeded { seed, distribution } => {
                let alphabet = match distribution {
                    SpacerDistribution::Binary => 2,
                    SpacerDistribution::Uniform => self.spacer_cap.unwrap_or(2),
                };
                Some(SpacerProcess::new(alphabet, seed, stage as u64).expect("alphabet >= 1"))
            }
            _ => None,
        }
    }

    /// Total spacer count `a_n` of a stage (1-based). Seeded stages are regenerated.
    pub fn spacer_total(&self, stage: usize) -> u64 {
        let s = &self.stages[stage - 1];
        match &s.spacers {
            Spacers::Explicit { spacers } => spacers.iter().map(|&a| u64::from(a)).sum(),
            Spacers::Constant { spacers } => (s.q - 1) * u64::from(spacers.constant),
            Spacers::Seeded { .. } => {
                let p = self.process(stage).expect("seeded");
                let mut total = 0u64;
                let mut i = 0;
                while i < s.q - 1 {
                    let end = (i + (1 << 16)).min(s.q - 1);
                    total += p.chunk(i..end).iter().map(|&a| u64::from(a)).sum::<u64>();
                    i = end;
                }
                total
            }
        }
    }

    /// Heights `h_1, …, h_M` in arbitrary precision.
    pub fn heights_big(&self) -> Result<Vec<BigUint>> {
        self.validate()?;
        let mut heights = vec![BigUint::from(self.initial_height)];
        for (idx, stage) in self.stages.iter().enumerate() {
            let next = heights[idx].clone() * stage.q + self.spacer_total(idx + 1);
            heights.push(next);
        }
        Ok(heights)
    }

    /// Heights with checked 64-bit arithmetic.
    pub fn heights(&self) -> Result<Vec<u64>> {
        self.validate()?;
        let mut heights = vec![self.initial_height];
        for (idx, stage) in self.stages.iter().enumerate() {
            let next = heights[idx]
                .checked_mul(stage.q)
                .and_then(|x| x.checked_add(self.spacer_total(idx + 1)))
                .ok_or(Error::HeightOverflow { stage: idx + 2 })?;
            heights.push(next);
        }
        Ok(heights)
    }
}
