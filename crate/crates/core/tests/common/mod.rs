#![allow(dead_code)]

use proptest::prelude::*;
use rankone_core::random::SpacerProcess;
use rankone_core::{CodingMode, SpacerDistribution, Spacers, StackingData, Stage, Symbol};

/// Spacer counts of a stage (1-based), seeded stages regenerated one by one.
pub fn spacers_of(sd: &StackingData, stage: usize) -> Vec<u32> {
    let s = &sd.stages[stage - 1];
    match &s.spacers {
        Spacers::Explicit { spacers } => spacers.clone(),
        Spacers::Constant { spacers } => vec![spacers.constant; (s.q - 1) as usize],
        Spacers::Seeded { seed, distribution } => {
            let alphabet = match distribution {
                SpacerDistribution::Binary => 2,
                SpacerDistribution::Uniform => sd.spacer_cap.unwrap(),
            };
            let p = SpacerProcess::new(alphabet, *seed, stage as u64).unwrap();
            (0..s.q - 1).map(|i| p.symbol(i)).collect()
        }
    }
}

/// The whole word of `S_n` coded against `S_r`, built by concatenation.
pub fn materialize(sd: &StackingData, r: usize, n: usize, mode: CodingMode) -> Vec<Symbol> {
    let mut h = sd.initial_height;
    for m in 1..r {
        h = h * sd.stages[m - 1].q + spacers_of(sd, m).iter().map(|&a| u64::from(a)).sum::<u64>();
    }
    let mut word: Vec<Symbol> = (1..=h as Symbol).collect();
    for m in r..n {
        let q = sd.stages[m - 1].q as usize;
        let spacers = spacers_of(sd, m);
        let mut next = Vec::new();
        for i in 0..q {
            next.extend_from_slice(&word);
            if let Some(&a) = spacers.get(i) {
                for j in 0..a {
                    next.push(match mode {
                        CodingMode::Base => 0,
                        CodingMode::Refined => h as Symbol + j + 1,
                    });
                }
            }
        }
        word = next;
    }
    word
}

/// Level `k` of `S_n` sits in a spacer added when `S_n` was stacked.
pub fn newest_spacer_mask(sd: &StackingData, n: usize) -> Vec<bool> {
    if n == 1 {
        return vec![false; sd.initial_height as usize];
    }
    materialize(sd, n - 1, n, CodingMode::Base).iter().map(|&s| s == 0).collect()
}

fn stage_from(kind: u8, q: u64, raw: &[u32], l: u32, seed: u64) -> Stage {
    match kind {
        0 => Stage::explicit(q, raw[..(q - 1) as usize].iter().map(|a| a % l).collect()),
        1 => Stage::constant(q, raw[0] % l),
        _ => Stage::seeded(q, seed, SpacerDistribution::Uniform),
    }
}

/// Random stacking data with `h_M ≤ max_height`, `q ≤ 6`, `L ≤ 3`, up to 5 stages.
pub fn stacking(max_height: u64) -> impl Strategy<Value = StackingData> {
    (
        1u64..=4,
        1u32..=3,
        prop::collection::vec((0u8..3, 2u64..=6, prop::collection::vec(0u32..3, 5), any::<u64>()), 0..=5),
    )
        .prop_map(move |(h1, l, raw)| {
            let mut sd = StackingData::new(h1, Some(l), vec![]).unwrap();
            for (kind, q, spacers, seed) in raw {
                sd.stages.push(stage_from(kind, q, &spacers, l, seed));
                if *sd.heights().unwrap().last().unwrap() > max_height {
                    sd.stages.pop();
                    break;
                }
            }
            sd
        })
}

/// Strictly increasing sampling times starting at 0 or above.
pub fn sampling_times(max_len: usize, max_gap: u64) -> impl Strategy<Value = Vec<u64>> {
    (0u64..3, prop::collection::vec(1u64..=max_gap, 1..=max_len)).prop_map(|(start, gaps)| {
        let mut t = start;
        gaps.iter()
            .map(|g| {
                let v = t;
                t += g;
                v
            })
            .collect()
    })
}
