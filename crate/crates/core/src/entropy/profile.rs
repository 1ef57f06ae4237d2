use serde::{Deserialize, Serialize};

use super::empirical::{empirical_sequence_entropy, Enumeration, EntropyOptions};
use crate::error::{Error, Result};
use crate::tower::{CodingMode, CodingSpec, Tower};

/// Which tower the profile codes at horizon `N`; the reference is always `τ(N)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileStage {
    /// Stage `τ(N)` itself.
    #[default]
    Tau,
    /// A fixed stage `n ≥ τ(N)`.
    Fixed(usize),
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProfileRow {
    pub n_terms: usize,
    pub stage: usize,
    pub reference: usize,
    pub h_nats: f64,
    pub h_per_n: f64,
    pub distinct_words: usize,
    pub coverage: f64,
}

/// `(1/N)·H(⋁_{k≤N} T^{−t_k} ξ_{τ(N)})` for each `N` in `ns`.
///
/// `terms` must hold at least `max(ns)` sampling times; `tau` must be
/// non-decreasing over `ns`.
#[allow(clippy::too_many_arguments)]
pub fn seq_entropy_upper_profile(
    tower: &Tower,
    terms: &[u64],
    ns: &[usize],
    tau: impl Fn(usize) -> Result<usize>,
    stage: ProfileStage,
    mode: CodingMode,
    enumeration: Enumeration,
    opts: EntropyOptions,
) -> Result<Vec<ProfileRow>> {
    let mut rows = Vec::with_capacity(ns.len());
    let mut last: Option<(usize, usize)> = None;
    for &n_terms in ns {
        if n_terms == 0 || n_terms > terms.len() {
            return Err(Error::param("N", format!("{n_terms} outside 1..={}", terms.len())));
        }
        let reference = tau(n_terms)?;
        if let Some((prev_n, prev_tau)) = last {
            if n_terms >= prev_n && reference < prev_tau {
                return Err(Error::Precondition(format!("tau decreases between N = {prev_n} and N = {n_terms}")));
            }
        }
        last = Some((n_terms, reference));
        let n = match stage {
            ProfileStage::Tau => reference,
            ProfileStage::Fixed(n) => n,
        };
        let spec = CodingSpec { reference, mode };
        let (h_per_n, hist) = empirical_sequence_entropy(tower, spec, n, &terms[..n_terms], enumeration, opts)?;
        rows.push(ProfileRow {
            n_terms,
            stage: n,
            reference,
            h_nats: h_per_n * n_terms as f64,
            h_per_n,
            distinct_words: hist.distinct(),
            coverage: hist.meta.coverage,
        });
    }
    Ok(rows)
}
