mod common;

use common::{sampling_times, stacking};
use num_bigint::BigUint;
use proptest::prelude::*;
use rankone_core::bounds::{brute_force_words, lambda_word_bound, select_tau, flexibility_upper_estimate, word_count_bound, TauRule};
use rankone_core::{CodingSpec, Error, Tower};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn distinct_words_never_exceed_the_bound(sd in stacking(3_000), terms in sampling_times(6, 8), c in 1u64..4) {
        let tower = Tower::new(sd).unwrap();
        let n = tower.num_towers();
        let t_n = *terms.last().unwrap();
        let Ok(tau) = select_tau(tower.heights(), t_n, c, terms.len() as u64, TauRule::Strict) else {
            return Ok(());
        };
        let h = tower.heights()[tau - 1];
        prop_assert!(t_n < c * h);
        let s = terms.windows(2).map(|w| w[1] - w[0]).max().unwrap_or(0);
        if let Ok(words) = brute_force_words(&tower, CodingSpec::base(tau), n, &terms) {
            prop_assert!(BigUint::from(words.len()) <= word_count_bound(terms.len() as u64, c, h, s));
        }
    }

    #[test]
    fn lambda_form_bounds_bounded_spacer_towers(sd in stacking(3_000), terms in sampling_times(6, 8), lambda_n in 1u64..6) {
        let tower = Tower::new(sd.clone()).unwrap();
        let n = tower.num_towers();
        let t_n = *terms.last().unwrap();
        let lambda = rankone_core::Rational::new(lambda_n as i64, terms.len() as i64).unwrap();
        let Ok(tau) = select_tau(tower.heights(), t_n, 1, terms.len() as u64, TauRule::Lambda { lambda }) else {
            return Ok(());
        };
        let l = sd.spacer_cap.unwrap().max(2);
        if let Ok(words) = brute_force_words(&tower, CodingSpec::base(tau), n, &terms) {
            prop_assert!(words.len() as f64 <= lambda_word_bound(tower.heights()[tau - 1], l, lambda_n as f64));
        }
    }

    #[test]
    fn tau_is_monotone(heights in prop::collection::vec(1u64..50, 1..6), c in 1u64..4, terms in sampling_times(20, 20)) {
        let mut h = heights;
        h.sort_unstable();
        h.dedup();
        let mut last = 0;
        for (i, &t) in terms.iter().enumerate() {
            match select_tau(&h, t, c, i as u64 + 1, TauRule::Strict) {
                Ok(tau) => {
                    prop_assert!(tau >= last);
                    last = tau;
                }
                Err(Error::NoQualifyingStage { .. }) => last = usize::MAX,
                Err(e) => return Err(TestCaseError::fail(e.to_string())),
            }
        }
    }
}

#[test]
fn flexibility_minimizer_balances_and_matches_closed_form() {
    for beta in [0.25, 0.5, 1.0, 2.0, 3.0] {
        for kappa in [1.1, 2f64.sqrt(), 2.0, 10.0] {
            for l in [2.0, 3.0, 8.0] {
                let (lambda, value) = flexibility_upper_estimate(kappa, beta, l).unwrap();
                let lhs = lambda.powf(-beta) * kappa.ln();
                let rhs = lambda * l.ln() / beta;
                assert!((lhs - rhs).abs() < 1e-12 * lhs.max(1.0));
                let closed = (1.0 + beta) * (kappa.ln() * l.ln().powf(beta) / beta.powf(beta)).powf(1.0 / (1.0 + beta));
                assert!((value - closed).abs() < 1e-12 * closed.max(1.0));
            }
        }
    }
    assert!(flexibility_upper_estimate(1.0, 1.0, 2.0).is_err());
}
