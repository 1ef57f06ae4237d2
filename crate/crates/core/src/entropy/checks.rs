use std::collections::HashMap;

use super::{f, labeling_entropy};
use crate::error::{Error, Result};

/// Slack allowed when comparing an entropy with its bound.
const SLACK: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DisjointCheck {
    /// `−μ(E)·log(ε·μ(X))`.
    pub bound: f64,
    /// `Σ f(μ(E_i))`.
    pub sum_f: f64,
    pub holds: bool,
}

/// Concavity lower bound for disjoint pieces `E_i ⊆ X` with `μ(E_i) ≤ ε·μ(X)`.
pub fn lower_bound_disjoint(masses: &[f64], eps: f64, total: f64) -> Result<DisjointCheck> {
    if !(total > 0.0 && eps > 0.0) {
        return Err(Error::param("eps", "need eps > 0 and mu(X) > 0"));
    }
    let limit = eps * total;
    if let Some(m) = masses.iter().find(|&&m| !(m >= 0.0 && m <= limit * (1.0 + SLACK))) {
        return Err(Error::Precondition(format!("piece mass {m} is not in [0, eps*mu(X)] = [0, {limit}]")));
    }
    let mass: f64 = masses.iter().sum();
    let bound = if mass == 0.0 { 0.0 } else { -mass * limit.ln() };
    let sum_f = masses.iter().map(|&m| f(m)).sum();
    Ok(DisjointCheck { bound, sum_f, holds: sum_f + SLACK >= bound })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum JensenVariant {
    /// `−μ(X) log μ(X) + μ(X) log m`.
    #[default]
    Printed,
    /// `−μ(E) log μ(E) + μ(E) log m` with `E = ∪ E_i`; never smaller than the
    /// entropy of the pieces.
    PieceMass,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct JensenCheck {
    pub bound: f64,
    /// `Σ −μ(E_i) log μ(E_i)`.
    pub lhs: f64,
    pub holds: bool,
}

/// Jensen upper bound for `m` disjoint pieces of `X`.
pub fn upper_bound_jensen(masses: &[f64], total: f64, variant: JensenVariant) -> Result<JensenCheck> {
    if masses.iter().any(|m| m.is_nan() || *m < 0.0) || total.is_nan() || total < 0.0 {
        return Err(Error::param("masses", "masses must be nonnegative"));
    }
    let mass: f64 = masses.iter().sum();
    if mass > total * (1.0 + SLACK) + SLACK {
        return Err(Error::Precondition(format!("pieces of total mass {mass} do not fit in mu(X) = {total}")));
    }
    let m = masses.len().max(1) as f64;
    let base = match variant {
        JensenVariant::Printed => total,
        JensenVariant::PieceMass => mass,
    };
    let bound = f(base) + base * m.ln();
    let lhs = masses.iter().map(|&x| f(x)).sum();
    Ok(JensenCheck { bound, lhs, holds: lhs <= bound + SLACK })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SubsequenceCheck {
    /// `H` of the full join, nats.
    pub full: f64,
    /// `H` of the join over `J` only.
    pub restricted: f64,
    /// `|J| / N`.
    pub density: f64,
    pub holds: bool,
}

/// Rotation `x ↦ x + 1` on `Z/size` with uniform measure: a finite
/// measure-preserving system on which pullbacks of labelings are explicit.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CyclicSystem {
    pub size: usize,
}

impl CyclicSystem {
    pub fn new(size: usize) -> Result<Self> {
        if size == 0 {
            return Err(Error::param("size", "must be positive"));
        }
        Ok(CyclicSystem { size })
    }

    fn check(&self, labels: &[u32]) -> Result<()> {
        if labels.len() != self.size {
            return Err(Error::param("labels", "labeling does not cover the system"));
        }
        Ok(())
    }

    /// `H(⋁_k T^{−t_k} η)`.
    pub fn join_entropy(&self, labels: &[u32], terms: &[u64]) -> Result<f64> {
        self.check(labels)?;
        let mut counts: HashMap<Vec<u32>, u64> = HashMap::new();
        for x in 0..self.size {
            let w = terms.iter().map(|&t| labels[(x + (t % self.size as u64) as usize) % self.size]).collect();
            *counts.entry(w).or_default() += 1;
        }
        let mut c: Vec<u64> = counts.into_values().collect();
        c.sort_unstable();
        let n = self.size as f64;
        Ok(c.iter().map(|&k| f(k as f64 / n)).sum())
    }

    /// `H(η|ξ)` under the uniform measure.
    pub fn conditional(&self, eta: &[u32], xi: &[u32]) -> Result<f64> {
        self.check(eta)?;
        self.check(xi)?;
        let w = vec![1.0 / self.size as f64; self.size];
        let joint: Vec<(u32, u32)> = eta.iter().copied().zip(xi.iter().copied()).collect();
        Ok((labeling_entropy(&joint, &w)? - labeling_entropy(xi, &w)?).max(0.0))
    }

    /// Returns `(lhs, rhs)` of
    /// `(1/n) H(⋁ T^{−t_k} η) ≤ (1/n) H(⋁ T^{−t_k} ξ) + H(η|ξ)`.
    pub fn join_inequality(&self, eta: &[u32], xi: &[u32], terms: &[u64]) -> Result<(f64, f64)> {
        let n = terms.len().max(1) as f64;
        let lhs = self.join_entropy(eta, terms)? / n;
        let rhs = self.join_entropy(xi, terms)? / n + self.conditional(eta, xi)?;
        Ok((lhs, rhs))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn disjoint_examples() {
        let c = lower_bound_disjoint(&[0.125; 4], 0.125, 1.0).unwrap();
        assert!((c.bound - 0.5 * 8f64.ln()).abs() < 1e-15 && (c.sum_f - c.bound).abs() < 1e-15 && c.holds);
        assert_eq!(lower_bound_disjoint(&[], 0.5, 1.0).unwrap().bound, 0.0);
        let c = lower_bound_disjoint(&[0.25, 0.125], 0.25, 1.0).unwrap();
        assert!((c.bound - 0.519860385419959).abs() < 1e-12);
        // 0.25·log 4 + 0.125·log 8
        assert!((c.sum_f - 0.606503782989952).abs() < 1e-12 && c.holds);
        assert!(matches!(lower_bound_disjoint(&[0.5], 0.25, 1.0), Err(Error::Precondition(_))));
    }

    #[test]
    fn jensen_examples() {
        let c = upper_bound_jensen(&[0.25; 4], 1.0, JensenVariant::Printed).unwrap();
        assert!((c.lhs - 4f64.ln()).abs() < 1e-15 && (c.bound - c.lhs).abs() < 1e-15 && c.holds);
        let c = upper_bound_jensen(&[1.0], 1.0, JensenVariant::Printed).unwrap();
        assert_eq!((c.lhs, c.bound), (0.0, 0.0));
        let c = upper_bound_jensen(&[0.5, 0.25], 1.0, JensenVariant::Printed).unwrap();
        assert!(c.holds && (c.lhs - std::f64::consts::LN_2).abs() < 1e-15);
    }

    #[test]
    fn printed_jensen_fails_off_cover_but_piece_mass_holds() {
        let pieces = [0.37, 0.37];
        assert!(!upper_bound_jensen(&pieces, 1.0, JensenVariant::Printed).unwrap().holds);
        assert!(upper_bound_jensen(&pieces, 1.0, JensenVariant::PieceMass).unwrap().holds);
    }

    #[test]
    fn cyclic_inequality_on_a_fixed_instance() {
        let sys = CyclicSystem::new(6).unwrap();
        let xi = [0, 0, 1, 1, 2, 2];
        let eta = [0, 1, 0, 1, 0, 1];
        let (lhs, rhs) = sys.join_inequality(&eta, &xi, &[0, 1, 3]).unwrap();
        assert!(lhs <= rhs + 1e-12);
        assert!((sys.conditional(&eta, &xi).unwrap() - std::f64::consts::LN_2).abs() < 1e-15);
    }
}
