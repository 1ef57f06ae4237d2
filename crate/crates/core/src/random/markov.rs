//! The chain governing symbol probabilities along `w 0^{a_1} w 0^{a_2} …`
//! for i.i.d. fair spacer bits `a_i`.
//!
//! With `u_s = P(symbol s = l)` and `|w| = H`, conditioning on the first spacer
//! bit gives `u_s = (u_{s−H} + u_{s−H−1}) / 2` for `s ≥ H + 1`, i.e. the vector
//! `(u_s, …, u_{s−H})` is `A (u_{s−1}, …, u_{s−H−1})` for the matrix built here.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::RngCore;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::rng::{counter_rng, streams};
use crate::tower::Symbol;

#[derive(Clone, Debug, PartialEq)]
pub struct MarkovModel {
    period: usize,
    matrix: Vec<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StationaryReport {
    pub power: Vec<f64>,
    pub exact: Vec<BigRational>,
    pub iterations: u64,
    /// `max |πA − π|` of the power-iteration vector.
    pub residual: f64,
    /// `max |power − exact|`.
    pub deviation: f64,
}

impl MarkovModel {
    /// The `(H+1)×(H+1)` matrix: row 0 is `1/2` in its last two columns, row `i ≥ 1`
    /// is `1` in column `i − 1`.
    pub fn new(period: usize) -> Result<Self> {
        if period < 2 {
            return Err(Error::param("H", "block period must be at least 2"));
        }
        let d = period + 1;
        let mut matrix = vec![vec![0.0; d]; d];
        matrix[0][d - 2] = 0.5;
        matrix[0][d - 1] = 0.5;
        for (i, row) in matrix.iter_mut().enumerate().skip(1) {
            row[i - 1] = 1.0;
        }
        Ok(MarkovModel { period, matrix })
    }

    /// `H`.
    pub fn period(&self) -> usize {
        self.period
    }

    pub fn dim(&self) -> usize {
        self.period + 1
    }

    pub fn matrix(&self) -> &[Vec<f64>] {
        &self.matrix
    }

    /// `πA` using the two-band structure.
    fn left_apply(&self, pi: &[f64], out: &mut [f64]) {
        let d = self.dim();
        out[..d - 2].copy_from_slice(&pi[1..d - 1]);
        out[d - 2] = pi[d - 1] + 0.5 * pi[0];
        out[d - 1] = 0.5 * pi[0];
    }

    fn residual(&self, pi: &[f64]) -> f64 {
        let mut next = vec![0.0; self.dim()];
        self.left_apply(pi, &mut next);
        next.iter().zip(pi).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }

    /// Power iteration from the uniform vector until `max |πA − π| ≤ tol`.
    pub fn stationary_power(&self, tol: f64, max_iter: u64) -> Result<(Vec<f64>, u64, f64)> {
        let d = self.dim();
        let mut pi = vec![1.0 / d as f64; d];
        let mut next = vec![0.0; d];
        for it in 1..=max_iter {
            self.left_apply(&pi, &mut next);
            let res = next.iter().zip(&pi).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            let s: f64 = next.iter().sum();
            for (p, x) in pi.iter_mut().zip(&next) {
                *p = x / s;
            }
            if res <= tol {
                let r = self.residual(&pi);
                return Ok((pi, it, r));
            }
        }
        Err(Error::NoConvergence { iterations: max_iter, residual: self.residual(&pi) })
    }

    /// Exact stationary vector by Gaussian elimination on `π(A − I) = 0`, `Σπ = 1`.
    pub fn stationary_exact(&self) -> Vec<BigRational> {
        let d = self.dim();
        let half = BigRational::new(BigInt::one(), BigInt::from(2));
        let entry = |i: usize, j: usize| -> BigRational {
            if i == 0 && j >= d - 2 {
                half.clone()
            } else if i >= 1 && j == i - 1 {
                BigRational::one()
            } else {
                BigRational::zero()
            }
        };
        // Rows: equation j is Σ_i π_i (A_ij − δ_ij) = 0; the last is replaced by Σπ = 1.
        let mut m: Vec<Vec<BigRational>> = (0..d)
            .map(|j| {
                let mut row: Vec<BigRational> = (0..d)
                    .map(|i| if i == j { entry(i, j) - BigRational::one() } else { entry(i, j) })
                    .collect();
                row.push(BigRational::zero());
                row
            })
            .collect();
        m[d - 1] = vec![BigRational::one(); d + 1];
        for col in 0..d {
            let pivot = (col..d).find(|&r| !m[r][col].is_zero()).expect("irreducible chain has a unique solution");
            m.swap(col, pivot);
            let p = m[col][col].clone();
            for x in m[col].iter_mut() {
                *x /= &p;
            }
            for r in 0..d {
                if r != col && !m[r][col].is_zero() {
                    let factor = m[r][col].clone();
                    let pivot_row = m[col].clone();
                    for (x, y) in m[r].iter_mut().zip(&pivot_row) {
                        *x -= &factor * y;
                    }
                }
            }
        }
        m.into_iter().map(|row| row[d].clone()).collect()
    }

    /// Power iteration to `1e-14`, cross-checked against the exact solve.
    pub fn stationary_distribution(&self) -> Result<StationaryReport> {
        let (power, iterations, residual) = self.stationary_power(1e-14, 10_000_000)?;
        let exact = self.stationary_exact();
        let deviation = power
            .iter()
            .zip(&exact)
            .map(|(p, e)| (p - e.to_f64().unwrap_or(f64::NAN)).abs())
            .fold(0.0, f64::max);
        Ok(StationaryReport { power, exact, iterations, residual, deviation })
    }
}

/// Closed form of the normalized stationary vector: `2/(2H+1)` repeated `H` times, then `1/(2H+1)`.
pub fn stationary_closed_form(period: usize) -> Vec<BigRational> {
    let den = BigInt::from(2 * period + 1);
    let mut v = vec![BigRational::new(BigInt::from(2), den.clone()); period];
    v.push(BigRational::new(BigInt::one(), den));
    v
}

/// The block `w = v 0^{b_1} v … 0^{b_{g−1}} v` with `v = 1 2 … h`.
pub fn block_word(h: u32, pattern: &[u8]) -> Result<Vec<Symbol>> {
    if h < 2 {
        return Err(Error::param("h", "need h >= 2"));
    }
    if pattern.iter().any(|&b| b > 1) {
        return Err(Error::param("pattern", "internal spacers must be 0 or 1"));
    }
    let mut w: Vec<Symbol> = (1..=h).collect();
    for &b in pattern {
        w.extend(std::iter::repeat_n(0, usize::from(b)));
        w.extend(1..=h);
    }
    Ok(w)
}

/// `(u_H, …, u_0)` for target symbol `l1`.
fn initial_vector(w: &[Symbol], l1: Symbol) -> Vec<BigRational> {
    let half = BigRational::new(BigInt::one(), BigInt::from(2));
    let ind = |b: bool| if b { BigRational::one() } else { BigRational::zero() };
    let mut v = vec![&half * (ind(l1 == 0) + ind(l1 == w[0]))];
    v.extend(w.iter().rev().map(|&x| ind(x == l1)));
    v
}

/// `lim_s P(symbol s = l1)` along `w 0^{a_1} w 0^{a_2} …`, exactly: the
/// stationary vector applied to `(u_H, …, u_0)`. Independent of the
/// conditioning symbol, since the chain forgets its start.
pub fn chain_limit(w: &[Symbol], l1: Symbol) -> Result<BigRational> {
    let model = MarkovModel::new(w.len())?;
    let pi = model.stationary_exact();
    Ok(pi.iter().zip(initial_vector(w, l1)).map(|(p, u)| p * u).sum())
}

/// `u_s` for `s = 0, …, len − 1` by the recursion, in double precision.
pub fn symbol_probabilities(w: &[Symbol], l1: Symbol, len: usize) -> Vec<f64> {
    let hh = w.len();
    let mut u: Vec<f64> = w.iter().map(|&x| if x == l1 { 1.0 } else { 0.0 }).collect();
    u.push(0.5 * (f64::from(u8::from(l1 == 0)) + f64::from(u8::from(l1 == w[0]))));
    while u.len() < len {
        let s = u.len();
        u.push(0.5 * (u[s - hh] + u[s - hh - 1]));
    }
    u.truncate(len);
    u
}

/// Smallest lag after which `u` stays within `tol` of its limit for every symbol of `w`.
pub fn settling_lag(w: &[Symbol], start: usize, tol: f64) -> Result<usize> {
    let symbols: Vec<Symbol> = {
        let mut s = w.to_vec();
        s.push(0);
        s.sort_unstable();
        s.dedup();
        s
    };
    let mut horizon = 64 * w.len();
    loop {
        let mut lag = 0;
        for &l in &symbols {
            let limit = chain_limit(w, l)?.to_f64().unwrap_or(f64::NAN);
            let u = symbol_probabilities(w, l, start + horizon);
            let last_bad = (start..u.len()).rev().find(|&i| (u[i] - limit).abs() > tol);
            match last_bad {
                Some(i) if i + 1 == u.len() => {
                    lag = usize::MAX;
                    break;
                }
                Some(i) => lag = lag.max(i + 1 - start),
                None => {}
            }
        }
        if lag != usize::MAX {
            return Ok(lag);
        }
        horizon *= 2;
        if horizon > 1 << 24 {
            return Err(Error::NoConvergence { iterations: horizon as u64, residual: tol });
        }
    }
}

/// Monte Carlo estimate of `P(symbol n+s = l1 | symbol n = l0)`.
#[derive(Clone, Debug, PartialEq)]
pub struct McEstimate {
    pub estimate: f64,
    pub std_error: f64,
    /// Samples with symbol `n` equal to `l0`.
    pub events: u64,
    pub hits: u64,
    pub samples: u64,
    /// The exact chain limit for `l1`.
    pub chain_limit: f64,
    pub n: u64,
    pub s: u64,
}

/// Symbol at `pos` of `w 0^{a_1} w 0^{a_2} …` for a fixed bit source.
struct Walker<'a> {
    w: &'a [Symbol],
    rng: rand_chacha::ChaCha12Rng,
    bits: u64,
    left: u32,
    block_start: u64,
}

impl Walker<'_> {
    fn bit(&mut self) -> u64 {
        if self.left == 0 {
            self.bits = self.rng.next_u64();
            self.left = 64;
        }
        let b = self.bits & 1;
        self.bits >>= 1;
        self.left -= 1;
        b
    }

    /// Positions must be queried in increasing order.
    fn symbol_at(&mut self, pos: u64) -> Symbol {
        let hh = self.w.len() as u64;
        loop {
            // Below the current block only the single spacer level just under it remains.
            if pos < self.block_start {
                return 0;
            }
            if pos < self.block_start + hh {
                return self.w[(pos - self.block_start) as usize];
            }
            self.block_start += hh + self.bit();
        }
    }
}

/// `P(ι_{n+s} = l1 | ι_n = l0)` over `samples` independent spacer sequences.
#[allow(clippy::too_many_arguments)]
pub fn conditional_limit_mc(
    w: &[Symbol],
    l0: Symbol,
    l1: Symbol,
    n: u64,
    s: u64,
    samples: u64,
    seed: u64,
    workers: usize,
) -> Result<McEstimate> {
    let chain = chain_limit(w, l1)?.to_f64().unwrap_or(f64::NAN);
    const CHUNK: u64 = 1 << 14;
    let run = |c: u64| -> (u64, u64) {
        let (mut events, mut hits) = (0, 0);
        for i in c * CHUNK..((c + 1) * CHUNK).min(samples) {
            let mut walker = Walker { w, rng: counter_rng(seed, streams::MARKOV_MC, i), bits: 0, left: 0, block_start: 0 };
            if walker.symbol_at(n) == l0 {
                events += 1;
                if walker.symbol_at(n + s) == l1 {
                    hits += 1;
                }
            }
        }
        (events, hits)
    };
    let pool = rayon::ThreadPoolBuilder::new().num_threads(workers.max(1)).build()?;
    let parts: Vec<(u64, u64)> = pool.install(|| (0..samples.div_ceil(CHUNK)).into_par_iter().map(run).collect());
    let (events, hits) = parts.iter().fold((0, 0), |(e, h), (a, b)| (e + a, h + b));
    if events == 0 {
        return Err(Error::NoConditioningEvents { samples });
    }
    let p = hits as f64 / events as f64;
    Ok(McEstimate {
        estimate: p,
        std_error: (p * (1.0 - p) / events as f64).sqrt(),
        events,
        hits,
        samples,
        chain_limit: chain,
        n,
        s,
    })
}

/// `|x − y|` of two rationals, for tests and reports.
pub fn rational_gap(x: &BigRational, y: &BigRational) -> BigRational {
    (x - y).abs()
}
