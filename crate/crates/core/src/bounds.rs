//! Word-count bounds, the tower-selection rule `τ(N)` and the balancing
//! diagnostics behind the zero-entropy criteria.

use std::collections::BTreeSet;

use num_bigint::BigUint;
use num_traits::One;
use serde::{Deserialize, Serialize};
use statrs::function::factorial::ln_binomial;

use crate::error::{Error, Result};
use crate::rational::Rational;
use crate::sequence::{SamplingSequence, SequenceKind};
use crate::tower::{CodedWord, CodingSpec, Tower};

/// `binom(n, k)` exactly.
pub fn binomial(n: u64, k: u64) -> BigUint {
    if k > n {
        return BigUint::ZERO;
    }
    let k = k.min(n - k);
    let mut acc = BigUint::one();
    for i in 0..k {
        acc = acc * (n - i) / (i + 1);
    }
    acc
}

/// `binom(N+c, N)·(h+1)·(s+1)^c`.
pub fn word_count_bound(n: u64, c: u64, h: u64, s: u64) -> BigUint {
    let c32 = u32::try_from(c).expect("c fits 32 bits");
    binomial(n + c, n) * (BigUint::from(h) + 1u32) * (BigUint::from(s) + 1u32).pow(c32)
}

/// `(h+1)·L^{λN+1}` for bounded spacers, in double precision.
pub fn lambda_word_bound(h: u64, l: u32, lambda_n: f64) -> f64 {
    (h as f64 + 1.0) * f64::from(l).powf(lambda_n + 1.0)
}

/// Largest valid-level set `brute_force_words` will enumerate.
pub const BRUTE_FORCE_LIMIT: u64 = 1_000_000;

/// Every distinct word coding an orbit `k + t_1, …, k + t_N`, `k ∈ K`.
pub fn brute_force_words(tower: &Tower, spec: CodingSpec, n: usize, terms: &[u64]) -> Result<BTreeSet<CodedWord>> {
    let levels = tower.valid_levels(n, terms.last().copied().unwrap_or(0))?;
    if levels.len() > BRUTE_FORCE_LIMIT {
        return Err(Error::SizeGuard { what: "|K|", size: levels.len(), limit: BRUTE_FORCE_LIMIT });
    }
    levels.iter().map(|k| tower.code_orbit(spec, n, k, terms)).collect()
}

/// How `τ(N)` compares a height with `t_N`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum TauRule {
    /// `h_n > t_N / c_N`.
    Strict,
    /// `h_n ≥ t_N / (λN)`.
    Lambda { lambda: Rational },
}

/// Smallest 1-based stage whose height passes the rule.
pub fn select_tau(heights: &[u64], t_n: u64, c_n: u64, n_terms: u64, rule: TauRule) -> Result<usize> {
    let ok = |h: u64| -> bool {
        match rule {
            TauRule::Strict => u128::from(h) * u128::from(c_n) > u128::from(t_n),
            TauRule::Lambda { lambda } => {
                // h·(p/q)·N ≥ t  ⇔  h·p·N ≥ t·q
                let (p, q) = (lambda.numer().max(0) as u128, lambda.denom() as u128);
                BigUint::from(h) * p * n_terms >= BigUint::from(t_n) * q
            }
        }
    };
    heights
        .iter()
        .position(|&h| ok(h))
        .map(|i| i + 1)
        .ok_or(Error::NoQualifyingStage { t_n })
}

/// Choices of `c_n`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CSchedule {
    Constant { value: u64 },
    /// `⌊n^e⌋`.
    Power { exponent: Rational },
    /// `⌊n / (log log n)²⌋`, at least 1.
    LogLog,
    /// `c_1, c_2, …` verbatim.
    Custom { values: Vec<u64> },
}

impl CSchedule {
    /// `⌊n^{(α − 1/β + 1)/2}⌋`.
    pub fn polynomial_case(alpha: Rational, beta: Rational) -> Result<Self> {
        if !beta.is_positive() {
            return Err(Error::param("beta", "must be positive"));
        }
        let e = (alpha.0 - beta.0.recip() + 1) / 2;
        Ok(CSchedule::Power { exponent: Rational(e) })
    }

    pub fn at(&self, n: u64) -> Result<u64> {
        let c = match self {
            CSchedule::Constant { value } => *value,
            CSchedule::Power { exponent } => {
                let v = exponent.floor_power(n)?;
                u64::try_from(v).map_err(|_| Error::param("c_n", "exceeds 64 bits"))?
            }
            CSchedule::LogLog => {
                let ll = (n as f64).ln().ln();
                if ll > 0.0 {
                    (n as f64 / (ll * ll)).floor() as u64
                } else {
                    1
                }
            }
            CSchedule::Custom { values } => *values
                .get((n as usize).wrapping_sub(1))
                .ok_or(Error::IndexOutOfRange { index: n, lo: 1, hi: values.len() as u64 })?,
        };
        Ok(c.max(1))
    }
}

/// The height-growth gauge `φ`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Phi {
    Log,
    Power { beta: Rational },
    ExpPower { beta: Rational },
}

impl Phi {
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Phi::Log => x.ln(),
            Phi::Power { beta } => x.powf(beta.to_f64()),
            Phi::ExpPower { beta } => x.powf(beta.to_f64()).exp(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BalancingRow {
    pub n: u64,
    pub c_n: u64,
    /// `(c_n/n)·log s_n`.
    pub diag_balance: f64,
    /// `(1/n)·φ(t_n/c_n)`.
    pub diag_phi: f64,
    /// `(1/n)·log binom(n + c_n, n)`.
    pub diag_binom: f64,
    pub tau: Option<usize>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BalancingProfile {
    pub horizon: u64,
    pub phi: Phi,
    pub schedule: CSchedule,
    pub rows: Vec<BalancingRow>,
}

impl BalancingProfile {
    pub fn row(&self, n: u64) -> Option<&BalancingRow> {
        self.rows.iter().find(|r| r.n == n)
    }
}

/// Rejects `(A, φ)` pairs outside the three balancing cases.
pub fn validate_pairing(seq: &SamplingSequence, phi: &Phi) -> Result<()> {
    if let SequenceKind::Explicit { terms } = seq.kind() {
        // Geometric growth over the back half of an explicit list.
        let tail = &terms[terms.len() / 2..];
        if tail.len() >= 4 && tail.windows(2).all(|w| w[0] > 0 && 2 * w[1] >= 3 * w[0]) {
            return Err(Error::param(
                "sequence",
                "exponentially growing sampling sequence: no c_n makes (c_n/n) log s_n vanish",
            ));
        }
    }
    match (phi, seq.kind()) {
        (Phi::Log, _) => Ok(()),
        (Phi::Power { beta }, SequenceKind::Polynomial { alpha }) => {
            if beta.is_positive() && alpha.0 < beta.0.recip() + 1 {
                Ok(())
            } else {
                Err(Error::param("phi", "phi = x^beta balances only when alpha < 1 + 1/beta"))
            }
        }
        (Phi::ExpPower { beta }, SequenceKind::NLogN { alpha, .. }) => {
            if beta.is_positive() && alpha.0 * beta.0 < num_rational::Ratio::from_integer(1) {
                Ok(())
            } else {
                Err(Error::param("phi", "phi = exp(x^beta) balances only when alpha*beta < 1"))
            }
        }
        (Phi::Power { .. }, _) => Err(Error::param("phi", "phi = x^beta pairs with polynomial sequences")),
        (Phi::ExpPower { .. }, _) => Err(Error::param("phi", "phi = exp(x^beta) pairs with n (log n)^alpha sequences")),
    }
}

/// Diagnostics for `n = 2, …, horizon` (relative to the sequence start). With
/// `heights`, each row also carries `τ(n)` under the strict rule.
pub fn balancing_profile(
    seq: &SamplingSequence,
    phi: Phi,
    schedule: CSchedule,
    horizon: u64,
    heights: Option<&[u64]>,
) -> Result<BalancingProfile> {
    validate_pairing(seq, &phi)?;
    if horizon < 2 {
        return Err(Error::param("horizon", "need at least 2 terms"));
    }
    let terms = seq.first(horizon as usize)?;
    let mut rows = Vec::with_capacity(horizon as usize - 1);
    let mut s_n = 0u64;
    for n in 2..=horizon {
        let i = n as usize - 1;
        s_n = s_n.max(terms[i] - terms[i - 1]);
        let c_n = schedule.at(n)?;
        let t_n = terms[i];
        let nf = n as f64;
        let tau = match heights {
            Some(h) => select_tau(h, t_n, c_n, n, TauRule::Strict).ok(),
            None => None,
        };
        rows.push(BalancingRow {
            n,
            c_n,
            diag_balance: c_n as f64 / nf * (s_n as f64).ln(),
            diag_phi: phi.eval(t_n as f64 / c_n as f64) / nf,
            diag_binom: ln_binomial(n + c_n, n) / nf,
            tau,
        });
    }
    Ok(BalancingProfile { horizon, phi, schedule, rows })
}

/// `λ` balancing `λ^{−β} log κ = (1/β) λ log L`, and the value `λ^{−β} log κ + λ log L`.
pub fn flexibility_upper_estimate(kappa: f64, beta: f64, l: f64) -> Result<(f64, f64)> {
    if !(kappa > 1.0 && l >= 2.0 && beta > 0.0) {
        return Err(Error::param("kappa", "need kappa > 1, L >= 2, beta > 0"));
    }
    let (lk, ll) = (kappa.ln(), l.ln());
    let lambda = (beta * lk / ll).powf(1.0 / (1.0 + beta));
    Ok((lambda, lambda.powf(-beta) * lk + lambda * ll))
}
