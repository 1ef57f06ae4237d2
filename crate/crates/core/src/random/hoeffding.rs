//! Hoeffding's inequality for `m`-dependent indicators, and a family of
//! processes with exactly known means to check it against.

use rand::{Rng, RngCore};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::rng::{counter_rng, streams};

/// `exp(−2⌊n/m⌋t²)`.
pub fn hoeffding_bound(n: u64, m: u64, t: f64) -> Result<f64> {
    if n == 0 || m == 0 {
        return Err(Error::param("m", "need n, m >= 1"));
    }
    if t.is_nan() || t <= 0.0 {
        return Err(Error::param("t", "deviation must be positive"));
    }
    Ok((-2.0 * (n / m) as f64 * t * t).exp())
}

/// `X_i = 1[(Y_i, …, Y_{i+m}) ∈ S]` for i.i.d. Bernoulli(`p`) bits `Y`: an
/// `m`-dependent indicator process whose mean is a finite sum.
#[derive(Clone, Debug, PartialEq)]
pub struct WindowProcess {
    pub m: u32,
    pub p: f64,
    /// Indexed by the window read as a binary number, `Y_i` least significant.
    pub accept: Vec<bool>,
}

impl WindowProcess {
    pub fn new(m: u32, p: f64, accept: Vec<bool>) -> Result<Self> {
        if m == 0 || m > 20 {
            return Err(Error::param("m", "window dependence must be in 1..=20"));
        }
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::param("p", "bit probability must lie in [0, 1]"));
        }
        if accept.len() != 1 << (m + 1) {
            return Err(Error::param("accept", "need one flag per window pattern"));
        }
        Ok(WindowProcess { m, p, accept })
    }

    /// A process with random `p` and random accepting set, addressed by `(seed, index)`.
    pub fn random(m: u32, seed: u64, index: u64) -> Result<Self> {
        let mut rng = counter_rng(seed, streams::HOEFFDING_MC ^ 0xffff, index);
        let p = rng.random_range(0.05..0.95);
        let density = rng.random_range(0.05..0.95);
        let accept = (0..1usize << (m + 1)).map(|_| rng.random_bool(density)).collect();
        WindowProcess::new(m, p, accept)
    }

    /// `E X_i`, summed over all accepting windows.
    pub fn mean(&self) -> f64 {
        let width = self.m + 1;
        self.accept
            .iter()
            .enumerate()
            .filter(|(_, &a)| a)
            .map(|(pat, _)| {
                let ones = (pat as u32).count_ones() as i32;
                self.p.powi(ones) * (1.0 - self.p).powi(width as i32 - ones)
            })
            .sum()
    }

    /// `X̄_n` for one realisation drawn from `rng`.
    pub fn sample_mean(&self, n: u64, rng: &mut impl RngCore) -> f64 {
        let width = self.m + 1;
        let mask = (1u64 << width) - 1;
        // Bernoulli(p) bits by comparing uniform u64s against a threshold.
        let threshold = (self.p * 2f64.powi(64)).min(u64::MAX as f64) as u64;
        let mut draw = || u64::from(rng.next_u64() < threshold);
        let mut window = 0u64;
        for j in 0..width - 1 {
            window |= draw() << j;
        }
        let mut hits = 0u64;
        for _ in 0..n {
            window |= draw() << (width - 1);
            hits += u64::from(self.accept[(window & mask) as usize]);
            window >>= 1;
        }
        hits as f64 / n as f64
    }
}

/// Empirical tail probabilities `P(X̄_n − μ ≥ t)` against the bound.
#[derive(Clone, Debug, PartialEq)]
pub struct HoeffdingCheck {
    pub t: f64,
    pub empirical: f64,
    pub bound: f64,
    /// Binomial standard deviation at the bound.
    pub sigma: f64,
    pub holds: bool,
}

/// Runs `trials` realisations of length `n` and checks each deviation in `ts`.
pub fn hoeffding_mc(
    process: &WindowProcess,
    n: u64,
    ts: &[f64],
    trials: u64,
    seed: u64,
    workers: usize,
) -> Result<Vec<HoeffdingCheck>> {
    if trials == 0 {
        return Err(Error::param("trials", "must be positive"));
    }
    let mu = process.mean();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(workers.max(1)).build()?;
    let deviations: Vec<f64> = pool.install(|| {
        (0..trials)
            .into_par_iter()
            .map(|i| process.sample_mean(n, &mut counter_rng(seed, streams::HOEFFDING_MC, i)) - mu)
            .collect()
    });
    ts.iter()
        .map(|&t| {
            let bound = hoeffding_bound(n, u64::from(process.m), t)?;
            let empirical = deviations.iter().filter(|&&d| d >= t).count() as f64 / trials as f64;
            let sigma = (bound * (1.0 - bound) / trials as f64).sqrt();
            Ok(HoeffdingCheck { t, empirical, bound, sigma, holds: empirical <= bound + 3.0 * sigma })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bound_examples() {
        assert!((hoeffding_bound(100, 10, 0.5).unwrap() - (-5f64).exp()).abs() < 1e-15);
        assert!((hoeffding_bound(100, 10, 1e-9).unwrap() - 1.0).abs() < 1e-15);
        assert!((hoeffding_bound(50, 1, 0.1).unwrap() - (-1f64).exp()).abs() < 1e-15);
        assert!(hoeffding_bound(50, 0, 0.1).is_err());
        assert!(hoeffding_bound(50, 1, 0.0).is_err());
    }

    #[test]
    fn exact_mean_matches_simulation() {
        let proc = WindowProcess::random(3, 17, 0).unwrap();
        let mut rng = counter_rng(1, 2, 3);
        let avg = proc.sample_mean(1_000_000, &mut rng);
        assert!((avg - proc.mean()).abs() < 0.005, "{avg} vs {}", proc.mean());
    }

    #[test]
    fn single_bit_window() {
        // Accept exactly the windows whose first bit is set: mean p.
        let accept = (0..4).map(|w| w & 1 == 1).collect();
        let proc = WindowProcess::new(1, 0.3, accept).unwrap();
        assert!((proc.mean() - 0.3).abs() < 1e-15);
    }
}
