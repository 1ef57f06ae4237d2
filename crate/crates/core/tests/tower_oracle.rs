mod common;

use common::{materialize, newest_spacer_mask, sampling_times, spacers_of, stacking};
use proptest::prelude::*;
use rankone_core::tower::LocatorStep;
use rankone_core::{CodingMode, CodingSpec, Error, Tower};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn decoder_matches_materialized_words(sd in stacking(10_000)) {
        let tower = Tower::new(sd.clone()).unwrap();
        let m = tower.num_towers();
        for r in 1..=m {
            for mode in [CodingMode::Base, CodingMode::Refined] {
                let word = materialize(&sd, r, m, mode);
                prop_assert_eq!(word.len() as u64, tower.height(m).unwrap());
                for (k, &s) in word.iter().enumerate() {
                    prop_assert_eq!(tower.decode_symbol(CodingSpec { reference: r, mode }, m, k as u64).unwrap(), s);
                }
            }
        }
    }

    #[test]
    fn locate_then_recompose_is_identity(sd in stacking(5_000)) {
        let tower = Tower::new(sd).unwrap();
        for n in 1..=tower.num_towers() {
            for k in 0..tower.height(n).unwrap() {
                let loc = tower.locate_level(n, k).unwrap();
                prop_assert_eq!(loc.recompose(&tower), k);
                // A spacer step ends the chain.
                if let Some(pos) = loc.chain.iter().position(|s| matches!(s, LocatorStep::Spacer { .. })) {
                    prop_assert_eq!(pos + 1, loc.chain.len());
                }
            }
        }
    }

    #[test]
    fn spacer_count_identity(sd in stacking(10_000)) {
        let tower = Tower::new(sd.clone()).unwrap();
        let n = tower.num_towers();
        let zeros = materialize(&sd, 1, n, CodingMode::Base).iter().filter(|&&s| s == 0).count() as u64;
        let expected: u64 = (1..n)
            .map(|m| tower.copies(m + 1, n) * spacers_of(&sd, m).iter().map(|&a| u64::from(a)).sum::<u64>())
            .sum();
        prop_assert_eq!(zeros, expected);
    }

    #[test]
    fn valid_levels_match_filter(sd in stacking(5_000), t in 0u64..40) {
        let tower = Tower::new(sd.clone()).unwrap();
        for n in 1..=tower.num_towers() {
            let h = tower.height(n).unwrap();
            match tower.valid_levels(n, t) {
                Err(Error::EmptyValidLevels { .. }) => prop_assert!(t >= h),
                Err(e) => return Err(TestCaseError::fail(e.to_string())),
                Ok(levels) => {
                    let mask = newest_spacer_mask(&sd, n);
                    let brute: Vec<u64> = (0..h - t).filter(|&k| !mask[k as usize]).collect();
                    let got: Vec<u64> = levels.iter().collect();
                    prop_assert_eq!(levels.len(), brute.len() as u64);
                    prop_assert_eq!(got, brute.clone());
                    for k in 0..h {
                        prop_assert_eq!(levels.contains(k), brute.binary_search(&k).is_ok());
                    }
                    for i in 0..20 {
                        prop_assert!(brute.binary_search(&levels.sample(11, i).unwrap()).is_ok());
                    }
                }
            }
        }
    }

    #[test]
    fn orbits_read_the_materialized_word(sd in stacking(3_000), terms in sampling_times(6, 9)) {
        let tower = Tower::new(sd.clone()).unwrap();
        let n = tower.num_towers();
        let word = materialize(&sd, 1, n, CodingMode::Base);
        for k in 0..word.len() {
            let got = tower.code_orbit(CodingSpec::base(1), n, k as u64, &terms);
            match terms.iter().position(|&t| k as u64 + t >= word.len() as u64) {
                Some(i) => {
                    let escaped = matches!(got, Err(Error::Escape { index }) if index == i + 1);
                    prop_assert!(escaped);
                }
                None => {
                    let expect: Vec<u32> = terms.iter().map(|&t| word[k + t as usize]).collect();
                    prop_assert_eq!(got.unwrap().0, expect);
                }
            }
        }
    }
}

#[test]
fn large_seeded_stage_agrees_at_random_levels() {
    use rankone_core::{SpacerDistribution, Stage, StackingData};
    let sd = StackingData::new(
        3,
        Some(3),
        vec![Stage::seeded(5_000, 9, SpacerDistribution::Uniform), Stage::explicit(3, vec![2, 1])],
    )
    .unwrap();
    let tower = Tower::new(sd.clone()).unwrap();
    for mode in [CodingMode::Base, CodingMode::Refined] {
        let word = materialize(&sd, 1, 3, mode);
        for k in (0..word.len()).step_by(37) {
            assert_eq!(tower.decode_symbol(CodingSpec { reference: 1, mode }, 3, k as u64).unwrap(), word[k]);
        }
    }
}
