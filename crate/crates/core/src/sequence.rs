//! Sampling sequences `A = {t_n}` and their gap diagnostics.

use num_rational::Ratio;
use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rational::Rational;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SequenceKind {
    /// `⌊n^α⌋`, exact for rational α.
    Polynomial { alpha: Rational },
    /// `⌊C·n·(log n)^α⌋`, evaluated in double precision.
    NLogN { c: Rational, alpha: Rational },
    /// `a·n + b`.
    Linear { a: u64, b: u64 },
    /// `t_1, t_2, …` given verbatim.
    Explicit { terms: Vec<u64> },
}

impl SequenceKind {
    /// The raw formula at index `i ≥ 1`, without range or monotonicity checks.
    pub fn term(&self, i: u64) -> Result<u64> {
        let too_big = || Error::param("sequence", format!("term t_{i} does not fit 64 bits"));
        match self {
            SequenceKind::Polynomial { alpha } => alpha.floor_power(i)?.to_u64().ok_or_else(too_big),
            SequenceKind::NLogN { c, alpha } => {
                let x = c.to_f64() * i as f64 * (i as f64).ln().powf(alpha.to_f64());
                if x >= 1.8e19 {
                    return Err(too_big());
                }
                Ok(x.floor() as u64)
            }
            SequenceKind::Linear { a, b } => a.checked_mul(i).and_then(|x| x.checked_add(*b)).ok_or_else(too_big),
            SequenceKind::Explicit { terms } => terms
                .get((i as usize).wrapping_sub(1))
                .copied()
                .ok_or(Error::IndexOutOfRange { index: i, lo: 1, hi: terms.len() as u64 }),
        }
    }
}

/// On-disk form of a sequence; `start` is recomputed and only checked if given.
#[derive(Clone, Debug, Serialize, Deserialize)]
struct SequenceSpec {
    #[serde(flatten)]
    kind: SequenceKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    horizon: Option<u64>,
}

/// A strictly increasing sequence on the index range `[n_0, horizon]`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "SequenceSpec", into = "SequenceSpec")]
pub struct SamplingSequence {
    kind: SequenceKind,
    start: u64,
    horizon: u64,
}

impl TryFrom<SequenceSpec> for SamplingSequence {
    type Error = Error;

    fn try_from(spec: SequenceSpec) -> Result<Self> {
        match (spec.kind, spec.horizon) {
            (SequenceKind::Explicit { terms }, _) => SamplingSequence::explicit(terms),
            (kind, Some(h)) => SamplingSequence::new(kind, h),
            (_, None) => Err(Error::param("horizon", "required for generated sequences")),
        }
    }
}

impl From<SamplingSequence> for SequenceSpec {
    fn from(seq: SamplingSequence) -> Self {
        let horizon = match seq.kind {
            SequenceKind::Explicit { .. } => None,
            _ => Some(seq.horizon),
        };
        SequenceSpec { kind: seq.kind, horizon }
    }
}

/// Output of [`SamplingSequence::dilation_diagnostic`].
#[derive(Clone, Debug, PartialEq)]
pub struct DilationReport {
    /// `tail_min[j]` = min of the gaps from the `j`-th gap to the horizon.
    pub tail_min: Vec<u64>,
    /// Indices `i` with `t_{i+1} − t_i < t_i − t_{i−1}`.
    pub decreasing_gaps: Vec<u64>,
    /// Finite-horizon heuristic: the tail minimum at 3/4 of the inspected gaps
    /// strictly exceeds the one at 1/4.
    pub dilating_on_horizon: bool,
}

impl SamplingSequence {
    /// Builds a generated sequence; `n_0` is the smallest index from which the
    /// terms are strictly increasing up to `horizon`.
    pub fn new(kind: SequenceKind, horizon: u64) -> Result<Self> {
        match &kind {
            SequenceKind::Polynomial { alpha } if !alpha.is_positive() => {
                return Err(Error::param("alpha", "polynomial exponent must be positive"));
            }
            SequenceKind::NLogN { c, alpha } if !c.is_positive() || alpha.numer() < 0 => {
                return Err(Error::param("c", "need C > 0 and alpha >= 0"));
            }
            SequenceKind::Linear { a: 0, .. } => return Err(Error::param("a", "linear slope must be positive")),
            SequenceKind::Explicit { terms } => return SamplingSequence::explicit(terms.clone()),
            _ => {}
        }
        if horizon < 1 {
            return Err(Error::param("horizon", "must be at least 1"));
        }
        let mut seq = SamplingSequence { kind, start: 1, horizon };
        seq.start = seq.compute_start()?;
        Ok(seq)
    }

    /// `t_1, …, t_len` verbatim; must be strictly increasing.
    pub fn explicit(terms: Vec<u64>) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::param("terms", "explicit sequence is empty"));
        }
        if let Some(i) = terms.windows(2).position(|w| w[0] >= w[1]) {
            return Err(Error::NonMonotone { index: i as u64 + 2 });
        }
        let horizon = terms.len() as u64;
        Ok(SamplingSequence { kind: SequenceKind::Explicit { terms }, start: 1, horizon })
    }

    pub fn polynomial(alpha: Rational, horizon: u64) -> Result<Self> {
        Self::new(SequenceKind::Polynomial { alpha }, horizon)
    }

    pub fn linear(a: u64, b: u64, horizon: u64) -> Result<Self> {
        Self::new(SequenceKind::Linear { a, b }, horizon)
    }

    pub fn kind(&self) -> &SequenceKind {
        &self.kind
    }

    /// `n_0`.
    pub fn start(&self) -> u64 {
        self.start
    }

    pub fn horizon(&self) -> u64 {
        self.horizon
    }

    /// Number of addressable terms.
    pub fn len(&self) -> u64 {
        self.horizon - self.start + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    fn compute_start(&self) -> Result<u64> {
        let monotone_from_one = match &self.kind {
            SequenceKind::Polynomial { alpha } => alpha.numer() >= alpha.denom(),
            SequenceKind::Linear { .. } | SequenceKind::Explicit { .. } => true,
            SequenceKind::NLogN { .. } => false,
        };
        if monotone_from_one {
            self.eval(self.horizon)?;
            return Ok(1);
        }
        let mut next = self.eval(self.horizon)?;
        let mut i = self.horizon;
        while i > 1 {
            let prev = self.eval(i - 1)?;
            if prev >= next {
                break;
            }
            next = prev;
            i -= 1;
        }
        Ok(i)
    }

    fn eval(&self, i: u64) -> Result<u64> {
        self.kind.term(i)
    }

    /// `t_i`.
    pub fn generate(&self, i: u64) -> Result<u64> {
        if i < self.start || i > self.horizon {
            return Err(Error::IndexOutOfRange { index: i, lo: self.start, hi: self.horizon });
        }
        self.eval(i)
    }

    /// The first `count` terms `t_{n_0}, …, t_{n_0+count−1}`.
    pub fn first(&self, count: usize) -> Result<Vec<u64>> {
        (0..count as u64).map(|j| self.generate(self.start + j)).collect()
    }

    /// `s_n`: the largest gap among the first `n` terms.
    pub fn max_gap(&self, n: u64) -> Result<u64> {
        if n < 2 {
            return Err(Error::param("n", "max_gap needs n >= 2"));
        }
        let terms = self.first(n as usize)?;
        Ok(terms.windows(2).map(|w| w[1] - w[0]).max().unwrap_or(0))
    }

    /// `(index, t_index, t_index − t_{index−1})` for the first `count` terms; the
    /// first gap is reported as 0.
    pub fn gaps(&self, count: usize) -> Result<Vec<(u64, u64, u64)>> {
        let terms = self.first(count)?;
        Ok(terms
            .iter()
            .enumerate()
            .map(|(j, &t)| (self.start + j as u64, t, if j == 0 { 0 } else { t - terms[j - 1] }))
            .collect())
    }

    /// Gap behaviour over the first `horizon` terms. A finite-horizon heuristic
    /// for `t_{n+1} − t_n → ∞`, not a proof of it.
    pub fn dilation_diagnostic(&self, horizon: u64) -> Result<DilationReport> {
        if horizon < 2 {
            return Err(Error::param("horizon", "dilation diagnostic needs at least 2 terms"));
        }
        let terms = self.first(horizon.min(self.len()) as usize)?;
        let gaps: Vec<u64> = terms.windows(2).map(|w| w[1] - w[0]).collect();
        let mut tail_min = gaps.clone();
        for j in (0..tail_min.len().saturating_sub(1)).rev() {
            tail_min[j] = tail_min[j].min(tail_min[j + 1]);
        }
        let decreasing_gaps = gaps
            .windows(2)
            .enumerate()
            .filter(|(_, w)| w[1] < w[0])
            .map(|(j, _)| self.start + j as u64 + 1)
            .collect();
        let g = tail_min.len();
        let dilating_on_horizon = g >= 2 && tail_min[(3 * g / 4).min(g - 1)] > tail_min[g / 4];
        Ok(DilationReport { tail_min, decreasing_gaps, dilating_on_horizon })
    }

    /// `(1/n)·#{t_i + j : 1 ≤ i ≤ n, −r ≤ j ≤ r}`, exactly.
    pub fn k_estimate(&self, r: u64, n: u64) -> Result<Rational> {
        if n == 0 {
            return Err(Error::param("n", "must be at least 1"));
        }
        let terms = self.first(n as usize)?;
        let r = i128::from(r);
        let mut count: i128 = 0;
        let mut covered_to = i128::MIN;
        for &t in &terms {
            let (lo, hi) = (i128::from(t) - r, i128::from(t) + r);
            let from = lo.max(covered_to + 1);
            if hi >= from {
                count += hi - from + 1;
                covered_to = hi;
            }
        }
        let count = i64::try_from(count).map_err(|_| Error::param("r", "count overflows"))?;
        Rational::new(count, n as i64)
    }
}

/// `|J ∩ [1, n]| / n`.
pub fn lower_density_estimate(j: &[u64], n: u64) -> Result<Rational> {
    if n == 0 {
        return Err(Error::param("n", "must be at least 1"));
    }
    let mut inside: Vec<u64> = j.iter().copied().filter(|&i| (1..=n).contains(&i)).collect();
    inside.sort_unstable();
    inside.dedup();
    Ok(Rational(Ratio::new(inside.len() as i64, n as i64)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::collections::BTreeSet;

    fn r(p: i64, q: i64) -> Rational {
        Rational::new(p, q).unwrap()
    }

    #[test]
    fn generate_examples() {
        let sq = SamplingSequence::polynomial(r(2, 1), 10).unwrap();
        assert_eq!(sq.first(4).unwrap(), vec![1, 4, 9, 16]);
        let nlog = SamplingSequence::new(SequenceKind::NLogN { c: r(1, 1), alpha: r(1, 1) }, 10).unwrap();
        assert_eq!(nlog.generate(3).unwrap(), 3);
        assert_eq!(SamplingSequence::linear(2, 0, 10).unwrap().generate(5).unwrap(), 10);
        assert!(matches!(sq.generate(11), Err(Error::IndexOutOfRange { .. })));
    }

    #[test]
    fn rational_exponents_are_exact() {
        let a = SamplingSequence::polynomial(r(3, 2), 100).unwrap();
        for n in 1..=100u64 {
            let t = a.generate(n).unwrap();
            // t^2 <= n^3 < (t+1)^2
            assert!(t * t <= n.pow(3) && (t + 1) * (t + 1) > n.pow(3));
        }
    }

    #[test]
    fn degenerate_prefix_is_cut() {
        // ⌊n^{1/2}⌋ repeats everywhere, so only the final index survives.
        let a = SamplingSequence::polynomial(r(1, 2), 50).unwrap();
        assert_eq!(a.start(), 50);
        let b = SamplingSequence::new(SequenceKind::NLogN { c: r(1, 2), alpha: r(1, 1) }, 1000).unwrap();
        let terms = b.first(b.len() as usize).unwrap();
        assert!(terms.windows(2).all(|w| w[0] < w[1]));
        assert!(b.start() > 1);
        assert!(b.generate(b.start() - 1).is_err());
    }

    #[test]
    fn explicit_must_increase() {
        assert!(matches!(SamplingSequence::explicit(vec![1, 3, 3]), Err(Error::NonMonotone { index: 3 })));
    }

    #[test]
    fn max_gap_examples() {
        assert_eq!(SamplingSequence::explicit(vec![1, 4, 9, 16]).unwrap().max_gap(4).unwrap(), 7);
        assert_eq!(SamplingSequence::linear(2, 0, 50).unwrap().max_gap(37).unwrap(), 2);
        assert_eq!(SamplingSequence::explicit(vec![0, 1, 10]).unwrap().max_gap(3).unwrap(), 9);
        assert!(SamplingSequence::linear(2, 0, 5).unwrap().max_gap(1).is_err());
    }

    #[test]
    fn dilation_examples() {
        let sq = SamplingSequence::polynomial(r(2, 1), 100).unwrap();
        let d = sq.dilation_diagnostic(100).unwrap();
        assert!(d.dilating_on_horizon && d.decreasing_gaps.is_empty());
        assert!(!SamplingSequence::linear(2, 0, 100).unwrap().dilation_diagnostic(100).unwrap().dilating_on_horizon);
        let e = SamplingSequence::explicit(vec![1, 2, 4, 8, 9]).unwrap().dilation_diagnostic(5).unwrap();
        assert_eq!(e.decreasing_gaps, vec![4]);
        assert!(!e.dilating_on_horizon);
    }

    #[test]
    fn three_halves_gaps_outgrow_a_fixed_bound() {
        let a = SamplingSequence::polynomial(r(3, 2), 100_000).unwrap();
        let d = a.dilation_diagnostic(100_000).unwrap();
        assert!(*d.tail_min.last().unwrap() > 100);
        assert!(d.dilating_on_horizon);
    }

    fn brute_k(terms: &[u64], r: u64) -> usize {
        let r = r as i64;
        terms.iter().flat_map(|&t| (-r..=r).map(move |j| t as i64 + j)).collect::<BTreeSet<_>>().len()
    }

    #[test]
    fn k_estimate_examples() {
        let even = SamplingSequence::linear(2, 0, 100).unwrap();
        assert_eq!(even.k_estimate(1, 10).unwrap(), r(21, 10));
        let id = SamplingSequence::linear(1, 0, 100).unwrap();
        assert_eq!(id.k_estimate(2, 10).unwrap(), r(14, 10));
        let sq = SamplingSequence::polynomial(r(2, 1), 100).unwrap();
        assert_eq!(sq.k_estimate(0, 5).unwrap(), r(1, 1));
    }

    #[test]
    fn k_estimate_matches_brute_force_on_linear_sequences() {
        for a in 1..=5 {
            for b in 0..3 {
                let seq = SamplingSequence::linear(a, b, 100).unwrap();
                for rr in 0..=5 {
                    for n in [1u64, 2, 7, 30, 100] {
                        let terms = seq.first(n as usize).unwrap();
                        let want = r(brute_k(&terms, rr) as i64, n as i64);
                        assert_eq!(seq.k_estimate(rr, n).unwrap(), want, "a={a} b={b} r={rr} n={n}");
                    }
                }
            }
        }
    }

    #[test]
    fn density_examples() {
        let evens: Vec<u64> = (1..=10).filter(|i| i % 2 == 0).collect();
        assert_eq!(lower_density_estimate(&evens, 10).unwrap(), r(1, 2));
        let all: Vec<u64> = (1..=7).collect();
        assert_eq!(lower_density_estimate(&all, 7).unwrap(), r(1, 1));
        assert_eq!(lower_density_estimate(&[1], 10).unwrap(), r(1, 10));
    }

    #[test]
    fn serde_round_trip() {
        let json = r#"{"kind":"polynomial","alpha":"3/2","horizon":64}"#;
        let a: SamplingSequence = serde_json::from_str(json).unwrap();
        assert_eq!(a.generate(4).unwrap(), 8);
        let back: SamplingSequence = serde_json::from_str(&serde_json::to_string(&a).unwrap()).unwrap();
        assert_eq!(back, a);
        let e: SamplingSequence = serde_json::from_str(r#"{"kind":"explicit","terms":[1,2]}"#).unwrap();
        assert_eq!(e.len(), 2);
        assert!(serde_json::from_str::<SamplingSequence>(r#"{"kind":"explicit","terms":[2,1]}"#).is_err());
    }

    proptest! {
        #[test]
        fn generated_sequences_increase(p in 1i64..8, q in 1i64..4, horizon in 2u64..400) {
            let a = SamplingSequence::polynomial(r(p, q), horizon).unwrap();
            let terms = a.first(a.len() as usize).unwrap();
            prop_assert!(terms.windows(2).all(|w| w[0] < w[1]));
        }

        #[test]
        fn k_estimate_matches_brute_force(terms in proptest::collection::btree_set(0u64..200, 1..30), rr in 0u64..6) {
            let terms: Vec<u64> = terms.into_iter().collect();
            let n = terms.len() as u64;
            let seq = SamplingSequence::explicit(terms.clone()).unwrap();
            prop_assert_eq!(seq.k_estimate(rr, n).unwrap(), r(brute_k(&terms, rr) as i64, n as i64));
        }
    }
}
