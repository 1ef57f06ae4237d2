//! Shannon entropy of weighted partitions and of coded `A`-orbits.
//!
//! Natural logarithms throughout.

mod checks;
mod empirical;
mod profile;

use std::collections::BTreeMap;

pub use checks::{
    lower_bound_disjoint, upper_bound_jensen, CyclicSystem, DisjointCheck, JensenCheck, JensenVariant,
    SubsequenceCheck,
};
pub use empirical::{
    empirical_sequence_entropy, subsequence_entropy_check, word_histogram, Enumeration, EntropyOptions,
    HistogramMeta, WordHistogram, DEFAULT_WORD_CAP,
};
pub use profile::{seq_entropy_upper_profile, ProfileRow, ProfileStage};

use crate::error::{Error, Result};

/// `f(x) = −x log x`, with `f(0) = 0`.
#[inline]
pub fn f(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        -x * x.ln()
    }
}

/// Atoms with nonnegative weights; the total is whatever the weights sum to.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightedPartition {
    weights: Vec<f64>,
}

impl WeightedPartition {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if let Some(i) = weights.iter().position(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::param("weights", format!("atom {i} has weight {}", weights[i])));
        }
        Ok(WeightedPartition { weights })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn total(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// `Σ f(w_i)`.
    pub fn entropy(&self) -> f64 {
        self.weights.iter().map(|&w| f(w)).sum()
    }
}

/// `Σ f(w_i)` of a weight vector, rejecting negative weights.
pub fn entropy(weights: &[f64]) -> Result<f64> {
    Ok(WeightedPartition::new(weights.to_vec())?.entropy())
}

/// Entropy of the partition by `labels` of an index set with the given point weights.
pub fn labeling_entropy<L: Ord>(labels: &[L], weights: &[f64]) -> Result<f64> {
    if labels.len() != weights.len() {
        return Err(Error::param("labels", "labeling and weights cover different index sets"));
    }
    let mut atoms: BTreeMap<&L, f64> = BTreeMap::new();
    for (l, &w) in labels.iter().zip(weights) {
        if !(w.is_finite() && w >= 0.0) {
            return Err(Error::param("weights", format!("negative or non-finite weight {w}")));
        }
        *atoms.entry(l).or_default() += w;
    }
    Ok(atoms.values().map(|&w| f(w)).sum())
}

/// `H(η|ξ) = H(η ∨ ξ) − H(ξ)` for two labelings of the same weighted index set.
pub fn conditional_entropy<A: Ord, B: Ord>(eta: &[A], xi: &[B], weights: &[f64]) -> Result<f64> {
    if eta.len() != xi.len() {
        return Err(Error::param("eta", "labelings cover different index sets"));
    }
    let joint: Vec<(&A, &B)> = eta.iter().zip(xi).collect();
    Ok((labeling_entropy(&joint, weights)? - labeling_entropy(xi, weights)?).max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::LN_2;

    #[test]
    fn entropy_examples() {
        assert!((entropy(&[0.25; 4]).unwrap() - 4f64.ln()).abs() < 1e-15);
        assert_eq!(entropy(&[1.0]).unwrap(), 0.0);
        assert!((entropy(&[0.5, 0.5]).unwrap() - LN_2).abs() < 1e-15);
        assert_eq!(entropy(&[0.0, 1.0]).unwrap(), 0.0);
        assert!(entropy(&[0.5, -0.1]).is_err());
    }

    #[test]
    fn conditional_examples() {
        let w = [0.25; 4];
        let xi = [0, 0, 1, 1];
        assert_eq!(conditional_entropy(&xi, &xi, &w).unwrap(), 0.0);
        let eta = [0, 1, 0, 1];
        assert!((conditional_entropy(&eta, &xi, &w).unwrap() - LN_2).abs() < 1e-15);
        let coarse = [7, 7, 7, 7];
        assert_eq!(conditional_entropy(&coarse, &xi, &w).unwrap(), 0.0);
        assert!(conditional_entropy(&eta[..3], &xi, &w).is_err());
    }
}
