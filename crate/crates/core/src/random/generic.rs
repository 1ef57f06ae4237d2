//! Search for spacer sequences whose coded words are all rare.

use num_bigint::BigUint;
use serde::Serialize;

use super::spacer::SpacerProcess;
use crate::entropy::{word_histogram, Enumeration, EntropyOptions};
use crate::error::{Error, Result};
use crate::rng::streams;
use crate::tower::{CodingSpec, Stage, StackingData, Tower};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum SearchMode {
    /// Stop at the first accepting sequence.
    #[default]
    FirstAccept,
    /// Run every trial, for failure-rate estimates.
    Survey,
}

/// Worst word of one reference partition in one candidate.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReferenceStats {
    pub reference: usize,
    pub max_count: u64,
    /// `max_count / |K|`.
    pub max_frequency: f64,
    /// `2·h_r^{−(N−N⁰)}`, as a frequency.
    pub cap: f64,
    pub within_cap: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrialRecord {
    pub trial: u64,
    pub accepted: bool,
    pub valid_levels: u64,
    /// Largest `frequency / cap` over all references.
    pub worst_ratio: f64,
    pub worst_frequency: f64,
    pub cap: f64,
    pub references: Vec<ReferenceStats>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GenericnessReport {
    pub accepted: Option<Vec<u32>>,
    pub accepted_trial: Option<u64>,
    pub trials: Vec<TrialRecord>,
    pub trials_used: u64,
    pub failures: u64,
    pub empirical_failure_rate: f64,
    /// `(h_n+1) Σ_r (h_r+1)^N exp(−2 h_r^N)`.
    pub p_n: f64,
    /// Smallest `frequency / cap` among rejected trials.
    pub nearest_miss: Option<f64>,
    pub rng: &'static str,
}

/// Parameters of a search on top of `base`, whose last tower is `S_n`.
#[derive(Clone, Debug)]
pub struct SearchConfig<'a> {
    pub base: &'a StackingData,
    /// `t_1, …, t_N`.
    pub terms: &'a [u64],
    /// `N⁰`.
    pub n0: u64,
    pub q: u64,
    /// Spacer alphabet size `L` (2 for bits).
    pub alphabet: u32,
    pub trial_cap: u64,
    pub seed: u64,
    pub mode: SearchMode,
}

/// `(h_n+1) Σ_{r≤n} (h_r+1)^N exp(−2 h_r^N)`, evaluated in log space.
pub fn analytic_failure_bound(heights: &[u64], n_terms: u64) -> f64 {
    let h_n = *heights.last().expect("nonempty heights") as f64;
    let big_n = n_terms as f64;
    heights
        .iter()
        .map(|&h| {
            let h = h as f64;
            ((h_n + 1.0).ln() + big_n * (h + 1.0).ln() - 2.0 * h.powf(big_n)).exp()
        })
        .sum()
}

/// Checks one candidate stage: every reference `r ≤ n` must keep each word on at
/// most `2·h_r^{−(N−N⁰)}·|K|` levels of `K`. Compared exactly in integers.
pub fn evaluate_candidate(
    base: &StackingData,
    stage: Stage,
    terms: &[u64],
    n0: u64,
    opts: EntropyOptions,
) -> Result<(bool, u64, Vec<ReferenceStats>)> {
    let mut data = base.clone();
    data.stages.push(stage);
    data.validate()?;
    let tower = Tower::new(data)?;
    let n = base.num_towers();
    let &t_n = terms.last().ok_or_else(|| Error::param("N", "need at least one sampling time"))?;
    let levels = tower.valid_levels(n + 1, t_n)?;
    let k = levels.len();
    let big_n = terms.len() as u64;
    let mut stats = Vec::with_capacity(n);
    for r in 1..=n {
        let hist = word_histogram(&tower, CodingSpec::base(r), &levels, terms, Enumeration::Exact, opts)?;
        let h_r = tower.heights()[r - 1];
        let max_count = hist.max_count();
        // max_count ≤ 2·h_r^{−e}·|K|  ⇔  max_count·h_r^e ≤ 2|K| (e ≥ 0), or max_count ≤ 2|K|·h_r^{−e}.
        let within_cap = if big_n >= n0 {
            let e = u32::try_from(big_n - n0).map_err(|_| Error::param("N", "exponent too large"))?;
            BigUint::from(max_count) * BigUint::from(h_r).pow(e) <= BigUint::from(2 * k)
        } else {
            let e = u32::try_from(n0 - big_n).map_err(|_| Error::param("N0", "exponent too large"))?;
            BigUint::from(max_count) <= BigUint::from(2 * k) * BigUint::from(h_r).pow(e)
        };
        let cap = 2.0 * (h_r as f64).powf(-(big_n as f64 - n0 as f64));
        stats.push(ReferenceStats {
            reference: r,
            max_count,
            max_frequency: max_count as f64 / k as f64,
            cap,
            within_cap,
        });
    }
    Ok((stats.iter().all(|s| s.within_cap), k, stats))
}

/// Samples spacer sequences for the next stage until one passes [`evaluate_candidate`].
///
/// Trial `i` draws its spacers from the stream `(seed, SEARCH_TRIALS + i)`, so a
/// report is reproducible from the configuration alone.
pub fn genericness_search(cfg: &SearchConfig<'_>, opts: EntropyOptions) -> Result<GenericnessReport> {
    if cfg.q < 2 {
        return Err(Error::param("q", "need q >= 2"));
    }
    let heights = cfg.base.heights()?;
    let h_n = *heights.last().expect("nonempty");
    let &t_n = cfg.terms.last().ok_or_else(|| Error::param("N", "need at least one sampling time"))?;
    if u128::from(t_n) >= u128::from(cfg.q) * u128::from(h_n) {
        return Err(Error::Precondition(format!("t_N = {t_n} does not fit below q*h_n = {}", cfg.q * h_n)));
    }
    if let Some(cap) = cfg.base.spacer_cap {
        if cfg.alphabet > cap {
            return Err(Error::param("alphabet", format!("spacer alphabet {} exceeds spacer_cap {cap}", cfg.alphabet)));
        }
    }
    let p_n = analytic_failure_bound(&heights, cfg.terms.len() as u64);
    let mut trials = Vec::new();
    let mut accepted = None;
    let mut accepted_trial = None;
    for i in 0..cfg.trial_cap {
        let process = SpacerProcess::new(cfg.alphabet, cfg.seed, streams::SEARCH_TRIALS.wrapping_add(i))?;
        let spacers = process.chunk(0..cfg.q - 1);
        let (ok, k, refs) = evaluate_candidate(cfg.base, Stage::explicit(cfg.q, spacers.clone()), cfg.terms, cfg.n0, opts)?;
        let worst = refs
            .iter()
            .max_by(|a, b| (a.max_frequency / a.cap).total_cmp(&(b.max_frequency / b.cap)))
            .expect("n >= 1 references");
        trials.push(TrialRecord {
            trial: i,
            accepted: ok,
            valid_levels: k,
            worst_ratio: worst.max_frequency / worst.cap,
            worst_frequency: worst.max_frequency,
            cap: worst.cap,
            references: refs.clone(),
        });
        if ok && accepted.is_none() {
            accepted = Some(spacers);
            accepted_trial = Some(i);
            if cfg.mode == SearchMode::FirstAccept {
                break;
            }
        }
    }
    let trials_used = trials.len() as u64;
    let failures = trials.iter().filter(|t| !t.accepted).count() as u64;
    let nearest_miss = trials.iter().filter(|t| !t.accepted).map(|t| t.worst_ratio).min_by(f64::total_cmp);
    let report = GenericnessReport {
        accepted,
        accepted_trial,
        trials,
        trials_used,
        failures,
        empirical_failure_rate: if trials_used == 0 { 0.0 } else { failures as f64 / trials_used as f64 },
        p_n,
        nearest_miss,
        rng: crate::rng::RNG_ALGORITHM,
    };
    if report.accepted.is_none() {
        return Err(Error::SearchExhausted(Box::new(report)));
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base() -> StackingData {
        StackingData::new(2, Some(2), vec![]).unwrap()
    }

    #[test]
    fn vacuous_cap_accepts_first_trial() {
        let b = base();
        let cfg = SearchConfig {
            base: &b,
            terms: &[1, 3, 6],
            n0: 3,
            q: 6,
            alphabet: 2,
            trial_cap: 5,
            seed: 1,
            mode: SearchMode::FirstAccept,
        };
        let r = genericness_search(&cfg, Default::default()).unwrap();
        assert_eq!(r.accepted_trial, Some(0));
        assert_eq!(r.trials_used, 1);
    }

    #[test]
    fn search_is_reproducible() {
        let b = base();
        let cfg = SearchConfig {
            base: &b,
            terms: &[1, 3, 6],
            n0: 1,
            q: 6,
            alphabet: 2,
            trial_cap: 64,
            seed: 9,
            mode: SearchMode::Survey,
        };
        let a = genericness_search(&cfg, Default::default());
        let b2 = genericness_search(&cfg, EntropyOptions { workers: 3, ..Default::default() });
        match (a, b2) {
            (Ok(x), Ok(y)) => assert_eq!(x, y),
            (Err(Error::SearchExhausted(x)), Err(Error::SearchExhausted(y))) => assert_eq!(x, y),
            other => panic!("mismatch {other:?}"),
        }
    }

    #[test]
    fn orbit_must_fit() {
        let b = base();
        let cfg = SearchConfig {
            base: &b,
            terms: &[1, 3, 12],
            n0: 1,
            q: 6,
            alphabet: 2,
            trial_cap: 1,
            seed: 0,
            mode: SearchMode::FirstAccept,
        };
        assert!(matches!(genericness_search(&cfg, Default::default()), Err(Error::Precondition(_))));
    }

    #[test]
    fn analytic_bound_formula() {
        let p = analytic_failure_bound(&[2], 3);
        assert!((p - 3.0 * 27.0 * (-16f64).exp()).abs() < 1e-18);
    }
}
