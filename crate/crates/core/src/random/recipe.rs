//! Parameter bundles of the randomized constructions.

use std::fmt;

use num_bigint::BigUint;
use num_rational::Ratio;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rational::{floor_f64_big, rational_power, Rational};
use crate::sequence::SequenceKind;
use crate::tower::{SpacerDistribution, Stage, StackingData};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Construction {
    /// Polynomial sampling, `log h_{n+1} ≲ h_n^β`.
    #[serde(rename = "polynomial")]
    PolynomialThreshold,
    /// `n (log n)^α` sampling, `log h_{n+1} ≲ e^{h_n^β}`.
    #[serde(rename = "log")]
    LogThreshold,
    /// Bounded spacers in `{0, …, L−1}`, flexibility construction.
    #[serde(rename = "flexibility")]
    Flexibility,
}

impl fmt::Display for Construction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Construction::PolynomialThreshold => "polynomial",
            Construction::LogThreshold => "log",
            Construction::Flexibility => "flexibility",
        })
    }
}

fn default_l() -> u32 {
    2
}

fn default_gamma() -> Rational {
    Rational(Ratio::new(3, 2))
}

fn default_eps() -> Rational {
    Rational(Ratio::new(1, 100))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RecipeInput {
    pub construction: Construction,
    /// Sequence exponent; for 1.6 it defaults to (and must equal) `1 + 1/β`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<Rational>,
    pub beta: Rational,
    /// Spacer alphabet size `L` (1.6 only).
    #[serde(default = "default_l", rename = "L")]
    pub l: u32,
    /// Growth base `κ > 1` (1.6 only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa: Option<Rational>,
    /// `N = ⌈γ N⁰⌉` (1.5 only).
    #[serde(default = "default_gamma")]
    pub gamma: Rational,
    #[serde(default = "default_eps")]
    pub eps: Rational,
}

/// Integer parameters at one stage of a recipe. Fields that do not apply to the
/// construction, or cannot be formed at this height, are `None`.
#[derive(Clone, Debug, PartialEq)]
pub struct RecipeBundle {
    pub construction: Construction,
    pub h: u64,
    pub n0: Option<BigUint>,
    pub n: Option<u64>,
    pub q: BigUint,
    pub m: Option<u64>,
    pub t_n: Option<u64>,
    pub delta: Option<f64>,
    /// 1.5: `3^N exp(−2⌊q/t_N⌋δ²)`; 1.6: `(h+L)^N exp(−2⌊q/m⌋δ²)`.
    pub p_bound: Option<f64>,
    /// 1.5 with `m = ⌊t_N/h⌋ + 2` in place of `t_N`.
    pub p_with_m: Option<f64>,
    /// Some quantity went through a transcendental float evaluation.
    pub approximate: bool,
}

impl fmt::Display for RecipeBundle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn opt<T: fmt::Display>(x: &Option<T>) -> String {
            x.as_ref().map_or_else(|| "-".to_string(), |v| v.to_string())
        }
        fn optf(x: &Option<f64>) -> String {
            x.map_or_else(|| "-".to_string(), |v| format!("{v:.12e}"))
        }
        writeln!(f, "construction = {}", self.construction)?;
        writeln!(f, "h = {}", self.h)?;
        writeln!(f, "N0 = {}", opt(&self.n0))?;
        writeln!(f, "N = {}", opt(&self.n))?;
        writeln!(f, "q = {}", self.q)?;
        writeln!(f, "m = {}", opt(&self.m))?;
        writeln!(f, "t_N = {}", opt(&self.t_n))?;
        writeln!(f, "delta = {}", optf(&self.delta))?;
        writeln!(f, "P_bound = {}", optf(&self.p_bound))?;
        writeln!(f, "P_with_m = {}", optf(&self.p_with_m))?;
        write!(f, "approximate = {}", self.approximate)
    }
}

fn rat(r: Rational) -> Ratio<i64> {
    r.0
}

fn big(x: u64) -> BigUint {
    BigUint::from(x)
}

/// `ln x` for a big integer without overflowing to infinity.
fn big_ln(x: &BigUint) -> f64 {
    if x.is_zero() {
        return f64::NEG_INFINITY;
    }
    let shift = x.bits().saturating_sub(64);
    (x >> shift).to_f64().unwrap_or(f64::INFINITY).ln() + shift as f64 * std::f64::consts::LN_2
}

/// `exp(log_count − 2·exp(ln_floor + 2 ln δ))`: `count·exp(−2⌊·⌋δ²)` in log space.
fn failure_bound(log_count: f64, floor: &BigUint, ln_delta: f64) -> f64 {
    let decay = (big_ln(floor) + 2.0 * ln_delta).exp();
    (log_count - 2.0 * decay).exp()
}

fn check(cond: bool, name: &'static str, reason: &str) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::param(name, reason))
    }
}

/// Recipe parameters at tower height `h`.
pub fn recipe_params(input: &RecipeInput, h: u64) -> Result<RecipeBundle> {
    let beta = rat(input.beta);
    check(beta > Ratio::from_integer(0), "beta", "requires beta > 0")?;
    check(h >= 1, "h", "tower height must be positive")?;
    let one = Ratio::from_integer(1);
    match input.construction {
        Construction::PolynomialThreshold | Construction::LogThreshold => {
            let alpha = rat(input.alpha.ok_or_else(|| Error::param("alpha", "required for 1.5i and 1.5ii"))?);
            check(alpha > Ratio::from_integer(0), "alpha", "requires alpha > 0")?;
            let gamma = rat(input.gamma);
            check(gamma > one, "gamma", "requires gamma > 1")?;
            let mut approximate = false;
            let n0 = if input.construction == Construction::PolynomialThreshold {
                check(alpha >= one + one / beta, "alpha", "1.5i requires alpha >= 1 + 1/beta")?;
                rational_power(&big(h), &BigUint::one(), input.beta)?.0 + 1u32
            } else {
                check(alpha * beta >= one, "alpha", "1.5ii requires alpha >= 1/beta")?;
                approximate = true;
                let x = (h as f64).powf(input.beta.to_f64()) + 1.0;
                if x > 700.0 {
                    return Err(Error::SizeGuard { what: "h^beta + 1 (exponent of e)", size: x as u64, limit: 700 });
                }
                floor_f64_big(x.exp()).expect("finite") + 1u32
            };
            let n0_u = n0.to_u64().filter(|&b| b <= 1 << 26).ok_or(Error::SizeGuard {
                what: "N0 (bits of q = 2^N0)",
                size: u64::MAX,
                limit: 1 << 26,
            })?;
            let q = BigUint::one() << n0_u;
            // N = ⌈γ N⁰⌉
            let (gp, gq) = (gamma.numer().unsigned_abs(), gamma.denom().unsigned_abs());
            let n = (big(gp) * &n0 + big(gq) - 1u32) / big(gq);
            let n = n.to_u64();
            let eps = input.eps.to_f64();
            let (mut t_n, mut m, mut delta, mut p_bound, mut p_with_m) = (None, None, None, None, None);
            if let Some(n) = n.filter(|&n| n < 1 << 40) {
                let kind = if input.construction == Construction::PolynomialThreshold {
                    SequenceKind::Polynomial { alpha: input.alpha.expect("checked") }
                } else {
                    SequenceKind::NLogN { c: Rational::integer(1), alpha: input.alpha.expect("checked") }
                };
                let ln_delta = -(1.0 / (2.0 * gamma.to_f64().unwrap_or(1.5)) - eps) * n as f64 * std::f64::consts::LN_2;
                delta = Some(ln_delta.exp());
                if let Ok(t) = kind.term(n) {
                    t_n = Some(t);
                    let mm = t / h + 2;
                    m = Some(mm);
                    let log_count = n as f64 * 3f64.ln();
                    if t > 0 {
                        p_bound = Some(failure_bound(log_count, &(&q / big(t)), ln_delta));
                    }
                    p_with_m = Some(failure_bound(log_count, &(&q / big(mm)), ln_delta));
                }
            }
            Ok(RecipeBundle {
                construction: input.construction,
                h,
                n0: Some(n0),
                n,
                q,
                m,
                t_n,
                delta,
                p_bound,
                p_with_m,
                approximate,
            })
        }
        Construction::Flexibility => {
            let critical = one + one / beta;
            let alpha = input.alpha.map_or(critical, rat);
            check(alpha == critical, "alpha", "1.6 requires alpha = 1 + 1/beta")?;
            check(input.l >= 2, "L", "1.6 requires an integer L >= 2")?;
            let kappa = rat(input.kappa.ok_or_else(|| Error::param("kappa", "required for 1.6"))?);
            check(kappa > one, "kappa", "1.6 requires kappa > 1")?;
            let (kp, kq) = (big(kappa.numer().unsigned_abs()), big(kappa.denom().unsigned_abs()));
            // q = ⌊κ^{h^β}⌋ + 1, exact when h^β is an integer.
            let (_, hb_exact) = rational_power(&big(h), &BigUint::one(), input.beta)?;
            let mut approximate = false;
            let hb = (h as f64).powf(input.beta.to_f64());
            let q = match hb_exact.filter(|(_, d)| d.is_one()) {
                Some((e, _)) => {
                    let e = e.to_i64().ok_or(Error::SizeGuard { what: "h^beta", size: u64::MAX, limit: i64::MAX as u64 })?;
                    rational_power(&kp, &kq, Rational::integer(e))?.0 + 1u32
                }
                None => {
                    approximate = true;
                    let x = hb * kappa.to_f64().unwrap_or(f64::NAN).ln();
                    if x > 700.0 {
                        return Err(Error::SizeGuard { what: "h^beta * log kappa", size: x as u64, limit: 700 });
                    }
                    floor_f64_big(x.exp()).expect("finite") + 1u32
                }
            };
            // N = ⌊((h − 2)/α)^β⌋ − 1
            check(h >= 2, "h", "1.6 needs h >= 2")?;
            let (ap, aq) = (big(alpha.numer().unsigned_abs()), big(alpha.denom().unsigned_abs()));
            let base_floor = rational_power(&(big(h - 2) * aq), &ap, input.beta)?.0;
            let n = base_floor.to_u64().and_then(|x| x.checked_sub(1)).filter(|&x| x >= 1);
            let eps = input.eps.to_f64();
            let ln_delta = -(0.5 - eps) * hb * kappa.to_f64().unwrap_or(f64::NAN).ln();
            let (mut t_n, mut m, mut p_bound) = (None, None, None);
            if let Some(n) = n {
                if let Ok(t) = (SequenceKind::Polynomial { alpha: Rational(alpha) }).term(n) {
                    t_n = Some(t);
                    let mm = t / h + 2;
                    m = Some(mm);
                    let log_count = n as f64 * ((h + u64::from(input.l)) as f64).ln();
                    p_bound = Some(failure_bound(log_count, &(&q / big(mm)), ln_delta));
                }
            }
            Ok(RecipeBundle {
                construction: input.construction,
                h,
                n0: None,
                n,
                q,
                m,
                t_n,
                delta: Some(ln_delta.exp()),
                p_bound,
                p_with_m: None,
                approximate,
            })
        }
    }
}

/// Stacking data grown from `h_1` by `stages` recipe steps; spacers are seeded
/// (fair bits for 1.5, uniform on `{0, …, L−1}` for 1.6).
pub fn recipe_stacking(
    input: &RecipeInput,
    initial_height: u64,
    stages: usize,
    seed: u64,
) -> Result<(StackingData, Vec<RecipeBundle>)> {
    let (cap, dist) = match input.construction {
        Construction::Flexibility => (input.l, SpacerDistribution::Uniform),
        _ => (2, SpacerDistribution::Binary),
    };
    let mut data = StackingData::new(initial_height, Some(cap), vec![])?;
    let mut bundles = Vec::with_capacity(stages);
    let mut h = initial_height;
    for _ in 0..stages {
        let bundle = recipe_params(input, h)?;
        let q = bundle.q.to_u64().ok_or(Error::HeightOverflow { stage: data.num_towers() + 1 })?;
        data.stages.push(Stage::seeded(q, seed, dist));
        h = *data.heights()?.last().expect("nonempty");
        bundles.push(bundle);
    }
    Ok((data, bundles))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FlexibilityBounds {
    /// `α^β log min{L^{α^{−1−β}}, κ^{1/2}}`.
    pub lower: f64,
    /// `(1+β)((1/β^β) log κ (log L)^β)^{1/(1+β)}`.
    pub upper: f64,
    /// `β/(1+β) · log L`.
    pub c1_log_l: f64,
    /// `(2β)^{1/(1+β)} · log L`.
    pub c2_log_l: f64,
    /// `L^{2α^{−1−β}}`, the κ at which the bounds reduce to the constants.
    pub critical_kappa: f64,
}

/// Lower and upper sequence-entropy bounds of the bounded-spacer construction
/// with `α = 1 + 1/β`.
pub fn flexibility_bounds(l: u32, beta: f64, kappa: f64) -> Result<FlexibilityBounds> {
    check(l >= 2, "L", "requires L >= 2")?;
    check(beta > 0.0 && beta.is_finite(), "beta", "requires beta > 0")?;
    check(kappa > 1.0 && kappa.is_finite(), "kappa", "requires kappa > 1")?;
    let alpha = 1.0 + 1.0 / beta;
    let log_l = f64::from(l).ln();
    let log_k = kappa.ln();
    let lower = alpha.powf(beta) * (alpha.powf(-1.0 - beta) * log_l).min(0.5 * log_k);
    let upper = (1.0 + beta) * (log_k * log_l.powf(beta) / beta.powf(beta)).powf(1.0 / (1.0 + beta));
    Ok(FlexibilityBounds {
        lower,
        upper,
        c1_log_l: beta / (1.0 + beta) * log_l,
        c2_log_l: (2.0 * beta).powf(1.0 / (1.0 + beta)) * log_l,
        critical_kappa: f64::from(l).powf(2.0 * alpha.powf(-1.0 - beta)),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(p: i64, q: i64) -> Rational {
        Rational::new(p, q).unwrap()
    }

    fn input(construction: Construction) -> RecipeInput {
        RecipeInput {
            construction,
            alpha: None,
            beta: r(1, 1),
            l: 2,
            kappa: None,
            gamma: default_gamma(),
            eps: default_eps(),
        }
    }

    #[test]
    fn polynomial_threshold_example() {
        let inp = RecipeInput { alpha: Some(r(2, 1)), ..input(Construction::PolynomialThreshold) };
        let b = recipe_params(&inp, 4).unwrap();
        assert_eq!(b.n0, Some(big(5)));
        assert_eq!(b.q, big(32));
        assert_eq!(b.n, Some(8));
        assert_eq!(b.t_n, Some(64));
        assert_eq!(b.m, Some(18));
        assert!(!b.approximate);
    }

    #[test]
    fn threshold_conditions_are_named() {
        let inp = RecipeInput { alpha: Some(r(3, 2)), ..input(Construction::PolynomialThreshold) };
        let err = recipe_params(&inp, 4).unwrap_err().to_string();
        assert!(err.contains("1.5i requires alpha >= 1 + 1/beta"), "{err}");
        let inp = RecipeInput { alpha: Some(r(1, 2)), ..input(Construction::LogThreshold) };
        assert!(recipe_params(&inp, 4).is_err());
    }

    #[test]
    fn log_threshold_uses_exponential_n0() {
        let inp = RecipeInput { alpha: Some(r(1, 1)), ..input(Construction::LogThreshold) };
        let b = recipe_params(&inp, 4).unwrap();
        // ⌊e^5⌋ + 1 = 149
        assert_eq!(b.n0, Some(big(149)));
        assert_eq!(b.q, BigUint::one() << 149usize);
        assert_eq!(b.n, Some(224));
        assert!(b.approximate);
    }

    #[test]
    fn flexibility_examples() {
        let inp = RecipeInput { kappa: Some(r(2, 1)), ..input(Construction::Flexibility) };
        let b = recipe_params(&inp, 10).unwrap();
        assert_eq!(b.q, big(1025));
        assert_eq!(b.n, Some(3));
        assert_eq!(b.t_n, Some(9));
        assert_eq!(b.m, Some(2));
        assert_eq!(recipe_params(&inp, 2).unwrap().q, big(5));
        assert_eq!(recipe_params(&inp, 2).unwrap().n, None);
        let bad = RecipeInput { alpha: Some(r(3, 1)), ..inp.clone() };
        assert!(recipe_params(&bad, 10).is_err());
        // Non-integer h^β falls back to a flagged float evaluation.
        let half = RecipeInput { beta: r(1, 2), kappa: Some(r(2, 1)), ..input(Construction::Flexibility) };
        let b = recipe_params(&half, 10).unwrap();
        assert!(b.approximate);
        assert_eq!(b.q, big((2f64.powf(10f64.sqrt())).floor() as u64 + 1));
        assert!(!recipe_params(&half, 9).unwrap().approximate);
    }

    #[test]
    fn flexibility_bounds_at_beta_one() {
        let b = flexibility_bounds(2, 1.0, 2f64.sqrt()).unwrap();
        let ln2 = std::f64::consts::LN_2;
        assert!((b.lower - 0.5 * ln2).abs() < 1e-15);
        assert!((b.upper - 2f64.sqrt() * ln2).abs() < 1e-15);
        assert!((b.critical_kappa - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn recipe_stacking_grows_by_q() {
        let inp = RecipeInput { kappa: Some(r(2, 1)), ..input(Construction::Flexibility) };
        let (data, bundles) = recipe_stacking(&inp, 2, 2, 3).unwrap();
        assert_eq!(data.stages[0].q, 5);
        let h = data.heights().unwrap();
        assert!(h[1] >= 10 && h[1] <= 14);
        assert_eq!(bundles.len(), 2);
    }
}
