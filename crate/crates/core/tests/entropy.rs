mod common;

use std::collections::HashMap;

use common::{materialize, newest_spacer_mask, sampling_times, stacking};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rankone_core::entropy::{
    empirical_sequence_entropy, lower_bound_disjoint, seq_entropy_upper_profile, subsequence_entropy_check,
    upper_bound_jensen, CyclicSystem, Enumeration, EntropyOptions, JensenVariant, ProfileStage,
};
use rankone_core::{CodingMode, CodingSpec, Error, Stage, StackingData, Tower};

/// Plug-in join entropy over the filtered levels, straight from the materialized word.
fn brute_entropy(sd: &StackingData, r: usize, n: usize, mode: CodingMode, terms: &[u64]) -> Option<f64> {
    let word = materialize(sd, r, n, mode);
    let mask = newest_spacer_mask(sd, n);
    let t_n = *terms.last().unwrap();
    if t_n >= word.len() as u64 {
        return None;
    }
    let mut counts: HashMap<Vec<u32>, u64> = HashMap::new();
    let mut total = 0u64;
    for k in 0..word.len() - t_n as usize {
        if !mask[k] {
            let w: Vec<u32> = terms.iter().map(|&t| word[k + t as usize]).collect();
            *counts.entry(w).or_default() += 1;
            total += 1;
        }
    }
    if total == 0 {
        return None;
    }
    Some(counts.values().map(|&c| c as f64 / total as f64).map(|p| -p * p.ln()).sum())
}

fn opts(workers: usize) -> EntropyOptions {
    EntropyOptions { workers, ..EntropyOptions::default() }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn exact_entropy_matches_brute_force(sd in stacking(4_000), terms in sampling_times(5, 7), refined: bool) {
        let tower = Tower::new(sd.clone()).unwrap();
        let n = tower.num_towers();
        let mode = if refined { CodingMode::Refined } else { CodingMode::Base };
        for r in 1..=n {
            let got = empirical_sequence_entropy(&tower, CodingSpec { reference: r, mode }, n, &terms, Enumeration::Exact, opts(1));
            match brute_entropy(&sd, r, n, mode, &terms) {
                None => prop_assert!(got.is_err()),
                Some(h) => {
                    let (per_n, hist) = got.unwrap();
                    prop_assert!((per_n * terms.len() as f64 - h).abs() < 1e-12);
                    prop_assert_eq!(hist.words.iter().map(|(_, c)| c).sum::<u64>(), hist.total);
                    prop_assert!(hist.words.iter().all(|(w, _)| w.len() == terms.len()));
                }
            }
        }
    }

    #[test]
    fn worker_count_does_not_change_histograms(sd in stacking(20_000), terms in sampling_times(4, 30), seed: u64) {
        let tower = Tower::new(sd).unwrap();
        let n = tower.num_towers();
        for e in [Enumeration::Exact, Enumeration::Sampled { count: 9_000, seed }] {
            let one = empirical_sequence_entropy(&tower, CodingSpec::base(1), n, &terms, e, opts(1));
            let four = empirical_sequence_entropy(&tower, CodingSpec::base(1), n, &terms, e, opts(4));
            match (one, four) {
                (Ok((a, ha)), Ok((b, hb))) => {
                    prop_assert_eq!(a.to_bits(), b.to_bits());
                    prop_assert_eq!(ha.words, hb.words);
                }
                (Err(_), Err(_)) => {}
                _ => prop_assert!(false, "worker counts disagree on success"),
            }
        }
    }

    #[test]
    fn joins_shrink_on_subsequences(sd in stacking(3_000), terms in sampling_times(6, 6), pick in prop::collection::vec(any::<bool>(), 6)) {
        let tower = Tower::new(sd).unwrap();
        let n = tower.num_towers();
        let j: Vec<usize> = (1..=terms.len()).filter(|&i| pick[i - 1]).collect();
        if let Ok(c) = subsequence_entropy_check(&tower, CodingSpec::base(1), n, &terms, &j, Enumeration::Exact, opts(1)) {
            prop_assert!(c.holds, "{c:?}");
            prop_assert!(c.full + 1e-12 >= c.restricted);
        }
    }
}

#[test]
fn sampled_error_medians_decrease() {
    // |K| below 10^4.
    let sd = StackingData::new(3, Some(3), vec![Stage::explicit(4, vec![1, 0, 2]), Stage::explicit(5, vec![2, 1, 0, 1])]).unwrap();
    let tower = Tower::new(sd).unwrap();
    let terms = [0, 2, 5];
    let spec = CodingSpec::base(2);
    let (exact, _) = empirical_sequence_entropy(&tower, spec, 3, &terms, Enumeration::Exact, opts(1)).unwrap();
    let mut medians = Vec::new();
    for count in [100u64, 1_000, 10_000] {
        let mut errs: Vec<f64> = (0..50)
            .map(|seed| {
                let (h, _) = empirical_sequence_entropy(&tower, spec, 3, &terms, Enumeration::Sampled { count, seed }, opts(2)).unwrap();
                (h - exact).abs()
            })
            .collect();
        errs.sort_by(f64::total_cmp);
        medians.push((errs[24] + errs[25]) / 2.0);
    }
    assert!(medians[0] > medians[1] && medians[1] > medians[2], "{medians:?}");
}

#[test]
fn word_cap_is_a_resource_guard() {
    let sd = StackingData::new(50, None, vec![Stage::explicit(3, vec![0, 0])]).unwrap();
    let tower = Tower::new(sd).unwrap();
    let small = EntropyOptions { workers: 1, word_cap: 10 };
    let err = empirical_sequence_entropy(&tower, CodingSpec::base(2), 2, &[0, 1], Enumeration::Exact, small).unwrap_err();
    assert!(matches!(err, Error::WordCap { cap: 10 }) && err.is_resource_guard());
}

#[test]
fn profile_with_constant_schedule_is_the_plain_profile() {
    let sd = StackingData::new(2, Some(2), vec![Stage::explicit(3, vec![1, 0]), Stage::explicit(2, vec![1])]).unwrap();
    let tower = Tower::new(sd).unwrap();
    let terms = [1, 2, 4, 7];
    let rows = seq_entropy_upper_profile(
        &tower,
        &terms,
        &[1, 2, 3, 4],
        |_| Ok(1),
        ProfileStage::Fixed(3),
        CodingMode::Base,
        Enumeration::Exact,
        opts(1),
    )
    .unwrap();
    for row in rows {
        let (h, _) =
            empirical_sequence_entropy(&tower, CodingSpec::base(1), 3, &terms[..row.n_terms], Enumeration::Exact, opts(1)).unwrap();
        assert_eq!(row.h_per_n.to_bits(), h.to_bits());
    }
}

#[test]
fn squaring_tower_profile_falls() {
    // h = 2, 4, 16, 256; t_n = ⌊n^{3/2}⌋; τ(N) is the first height above t_N.
    let sd = StackingData::new(2, None, vec![Stage::constant(2, 0), Stage::constant(4, 0), Stage::constant(16, 0)]).unwrap();
    let tower = Tower::new(sd).unwrap();
    let terms: Vec<u64> = (1..=24u64).map(|n| (n as f64).powf(1.5).floor() as u64).collect();
    let tau = |n: usize| Ok(tower.heights().iter().position(|&h| h > terms[n - 1]).unwrap() + 1);
    let rows = seq_entropy_upper_profile(&tower, &terms, &[4, 8, 24], tau, ProfileStage::Tau, CodingMode::Base, Enumeration::Exact, opts(2)).unwrap();
    // Each level of the self-coded tower is its own atom, so H = log(h − t_N).
    for row in &rows {
        let h = tower.heights()[row.stage - 1] - terms[row.n_terms - 1];
        assert!((row.h_nats - (h as f64).ln()).abs() < 1e-12);
    }
    assert!(rows[2].h_per_n < rows[1].h_per_n);
}

#[test]
fn concavity_and_jensen_checkers_hold_on_random_masses() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for _ in 0..1000 {
        let total: f64 = rng.random_range(0.05..1.0);
        let m = rng.random_range(1..12);
        let eps: f64 = rng.random_range(0.01..1.0);
        let masses: Vec<f64> = (0..m).map(|_| rng.random_range(0.0..=eps * total)).collect();
        let fill: f64 = masses.iter().sum();
        let masses: Vec<f64> = if fill > total { masses.iter().map(|x| x * total / fill).collect() } else { masses };
        assert!(lower_bound_disjoint(&masses, eps, total).unwrap().holds);
        assert!(upper_bound_jensen(&masses, total, JensenVariant::PieceMass).unwrap().holds);
        let scale: f64 = masses.iter().sum::<f64>() / total;
        // The printed bound is guaranteed when the pieces cover X.
        if scale > 0.0 {
            let cover: Vec<f64> = masses.iter().map(|x| x / scale).collect();
            assert!(upper_bound_jensen(&cover, total, JensenVariant::Printed).unwrap().holds);
        }
    }
}

#[test]
fn join_inequality_on_rotations() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..1000 {
        let size = rng.random_range(1..=64);
        let sys = CyclicSystem::new(size).unwrap();
        let a = rng.random_range(1..5);
        let eta: Vec<u32> = (0..size).map(|_| rng.random_range(0..a)).collect();
        let xi: Vec<u32> = (0..size).map(|_| rng.random_range(0..4)).collect();
        let len = rng.random_range(1..6);
        let mut t = 0;
        let terms: Vec<u64> = (0..len).map(|_| {
            t += rng.random_range(1..10);
            t
        }).collect();
        let (lhs, rhs) = sys.join_inequality(&eta, &xi, &terms).unwrap();
        assert!(lhs <= rhs + 1e-12, "{lhs} > {rhs}");
    }
}
