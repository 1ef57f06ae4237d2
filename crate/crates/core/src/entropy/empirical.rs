use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::f;
use crate::error::{Error, Result};
use crate::tower::{CodedWord, CodingMode, CodingSpec, Symbol, Tower, ValidLevels};

/// Default bound on distinct words held in one histogram.
pub const DEFAULT_WORD_CAP: usize = 1 << 24;

const LEVEL_CHUNK: u64 = 1 << 13;
const SAMPLE_CHUNK: u64 = 1 << 12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum Enumeration {
    /// Every level of `K`.
    Exact,
    /// `count` levels drawn uniformly from `K`.
    Sampled { count: u64, seed: u64 },
}

#[derive(Clone, Copy, Debug)]
pub struct EntropyOptions {
    pub workers: usize,
    pub word_cap: usize,
}

impl Default for EntropyOptions {
    fn default() -> Self {
        EntropyOptions { workers: 1, word_cap: DEFAULT_WORD_CAP }
    }
}

impl EntropyOptions {
    pub(crate) fn pool(&self) -> Result<rayon::ThreadPool> {
        Ok(rayon::ThreadPoolBuilder::new().num_threads(self.workers.max(1)).build()?)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct HistogramMeta {
    pub stage: usize,
    pub reference: usize,
    pub mode: CodingMode,
    pub word_len: usize,
    pub valid_levels: u64,
    pub height: u64,
    /// `|K| / h_n`.
    pub coverage: f64,
    pub enumeration: Enumeration,
}

/// Word counts over `K`, each level weighted `1/|K|` (or each sample `1/count`).
#[derive(Clone, Debug, PartialEq)]
pub struct WordHistogram {
    /// Sorted by word.
    pub words: Vec<(CodedWord, u64)>,
    pub total: u64,
    pub meta: HistogramMeta,
}

impl WordHistogram {
    pub fn distinct(&self) -> usize {
        self.words.len()
    }

    pub fn count(&self, word: &CodedWord) -> u64 {
        self.words.binary_search_by(|(w, _)| w.cmp(word)).map_or(0, |i| self.words[i].1)
    }

    pub fn frequency(&self, word: &CodedWord) -> f64 {
        self.count(word) as f64 / self.total as f64
    }

    /// Plug-in entropy `Σ f(count/total)` in nats.
    pub fn entropy(&self) -> f64 {
        let total = self.total as f64;
        self.words.iter().map(|(_, c)| f(*c as f64 / total)).sum()
    }

    pub fn max_count(&self) -> u64 {
        self.words.iter().map(|(_, c)| *c).max().unwrap_or(0)
    }
}

type Counts = HashMap<Vec<Symbol>, u64>;

fn merge(into: &mut Counts, from: Counts, cap: usize) -> Result<()> {
    for (w, c) in from {
        *into.entry(w).or_default() += c;
    }
    if into.len() > cap {
        return Err(Error::WordCap { cap });
    }
    Ok(())
}

/// Histogram of the words coding the orbits `k + t_1, …, k + t_N` for `k ∈ K`.
pub fn word_histogram(
    tower: &Tower,
    spec: CodingSpec,
    levels: &ValidLevels<'_>,
    terms: &[u64],
    enumeration: Enumeration,
    opts: EntropyOptions,
) -> Result<WordHistogram> {
    let n = levels.stage();
    tower.validate_spec(spec, n)?;
    if levels.is_empty() {
        return Err(Error::EmptyValidLevels { stage: n, t_n: terms.last().copied().unwrap_or(0), height: tower.height(n)? });
    }
    let cap = opts.word_cap;
    let ranges: Vec<(u64, u64)> = match enumeration {
        Enumeration::Exact => (0..levels.bound().div_ceil(LEVEL_CHUNK))
            .map(|c| (c * LEVEL_CHUNK, ((c + 1) * LEVEL_CHUNK).min(levels.bound())))
            .collect(),
        Enumeration::Sampled { count, .. } => {
            if count == 0 {
                return Err(Error::param("count", "sample count must be positive"));
            }
            (0..count.div_ceil(SAMPLE_CHUNK)).map(|c| (c * SAMPLE_CHUNK, ((c + 1) * SAMPLE_CHUNK).min(count))).collect()
        }
    };
    let local = |&(lo, hi): &(u64, u64)| -> Result<Counts> {
        let mut counts = Counts::new();
        let mut add = |k: u64| -> Result<()> {
            let w = tower.code_orbit_unchecked(spec, n, k, terms)?;
            *counts.entry(w).or_default() += 1;
            Ok(())
        };
        match enumeration {
            Enumeration::Exact => {
                for k in levels.iter_range(lo, hi) {
                    add(k)?;
                }
            }
            Enumeration::Sampled { seed, .. } => {
                for i in lo..hi {
                    add(levels.sample(seed, i)?)?;
                }
            }
        }
        if counts.len() > cap {
            return Err(Error::WordCap { cap });
        }
        Ok(counts)
    };
    let parts: Vec<Result<Counts>> = opts.pool()?.install(|| ranges.par_iter().map(local).collect());
    let mut counts = Counts::new();
    for part in parts {
        merge(&mut counts, part?, cap)?;
    }
    let mut words: Vec<(CodedWord, u64)> = counts.into_iter().map(|(w, c)| (CodedWord(w), c)).collect();
    words.sort_unstable();
    let total = words.iter().map(|(_, c)| c).sum();
    let height = tower.height(n)?;
    Ok(WordHistogram {
        words,
        total,
        meta: HistogramMeta {
            stage: n,
            reference: spec.reference,
            mode: spec.mode,
            word_len: terms.len(),
            valid_levels: levels.len(),
            height,
            coverage: levels.len() as f64 / height as f64,
            enumeration,
        },
    })
}

/// `(1/N)·H(⋁_{k≤N} T^{−t_k} ξ_r)` on `S_n`, conditioned on the valid levels `K`.
///
/// `terms` holds `t_1, …, t_N`. Returns the per-symbol value and the histogram.
pub fn empirical_sequence_entropy(
    tower: &Tower,
    spec: CodingSpec,
    n: usize,
    terms: &[u64],
    enumeration: Enumeration,
    opts: EntropyOptions,
) -> Result<(f64, WordHistogram)> {
    let &t_n = terms.last().ok_or_else(|| Error::param("N", "need at least one sampling time"))?;
    let levels = tower.valid_levels(n, t_n)?;
    let hist = word_histogram(tower, spec, &levels, terms, enumeration, opts)?;
    Ok((hist.entropy() / terms.len() as f64, hist))
}

/// Join entropies over the full orbit and over the sub-orbit indexed by `j`
/// (1-based positions into `terms`), both on the `K` of the full orbit.
pub fn subsequence_entropy_check(
    tower: &Tower,
    spec: CodingSpec,
    n: usize,
    terms: &[u64],
    j: &[usize],
    enumeration: Enumeration,
    opts: EntropyOptions,
) -> Result<super::SubsequenceCheck> {
    if let Some(&bad) = j.iter().find(|&&i| i == 0 || i > terms.len()) {
        return Err(Error::Precondition(format!("index {bad} of J lies outside [1, {}]", terms.len())));
    }
    let &t_n = terms.last().ok_or_else(|| Error::param("N", "need at least one sampling time"))?;
    let levels = tower.valid_levels(n, t_n)?;
    let sub: Vec<u64> = j.iter().map(|&i| terms[i - 1]).collect();
    let full = word_histogram(tower, spec, &levels, terms, enumeration, opts)?.entropy();
    let restricted = if sub.is_empty() {
        0.0
    } else {
        word_histogram(tower, spec, &levels, &sub, enumeration, opts)?.entropy()
    };
    let mut distinct = j.to_vec();
    distinct.sort_unstable();
    distinct.dedup();
    Ok(super::SubsequenceCheck {
        full,
        restricted,
        density: distinct.len() as f64 / terms.len() as f64,
        holds: full + 1e-12 >= restricted,
    })
}
