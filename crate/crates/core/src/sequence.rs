//! Fock-style sequences of many-body operators.
//!
//! An observable sequence holds one `n`-particle component per `n = 0, 1, …`
//! together with the weight `gamma` of its sup-type norm
//! `max_n gamma^n / n! · ‖g_n‖_op`. States live in [`crate::hierarchies::MarginalSequence`]
//! with the trace-type norm `Σ_n alpha^n ‖f_n‖_tr`.

use crate::error::{Error, Result};
use crate::operator::{op_norm, MBOperator};

/// Factorial as a float; fine for the particle counts this library handles.
pub(crate) fn factorial(n: usize) -> f64 {
    (1..=n).fold(1.0_f64, |acc, k| acc * k as f64)
}

/// Sequence of marginal observables `(g_0, g_1, …, g_n)`.
#[derive(Clone, Debug)]
pub struct OperatorSequence {
    items: Vec<MBOperator>,
    gamma: f64,
}

impl OperatorSequence {
    /// `items[n]` must be an `n`-particle operator; `gamma` must lie in (0, 1).
    pub fn new(items: Vec<MBOperator>, gamma: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&gamma) || gamma <= 0.0 {
            return Err(Error::InvalidModel(format!(
                "observable weight gamma must lie in (0, 1), got {gamma}"
            )));
        }
        for (n, g) in items.iter().enumerate() {
            if g.particles() != n {
                return Err(Error::DimensionMismatch(format!(
                    "sequence slot {n} holds a {}-particle operator",
                    g.particles()
                )));
            }
        }
        Ok(Self { items, gamma })
    }

    /// Sequence `(0, g_1, 0, …, 0)` holding a single additive component,
    /// padded with explicit zeros up to `s_max` particles.
    pub fn additive(g1: MBOperator, gamma: f64, s_max: usize) -> Result<Self> {
        let d = g1.one_particle_dim();
        let mut items = vec![MBOperator::scalar(d, 0.0.into()), g1];
        for s in 2..=s_max {
            items.push(MBOperator::zeros(s, d));
        }
        Self::new(items, gamma)
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    /// Component for `n` particles; `None` beyond the stored range.
    pub fn get(&self, n: usize) -> Option<&MBOperator> {
        self.items.get(n)
    }

    pub fn component(&self, n: usize) -> Result<&MBOperator> {
        self.items.get(n).ok_or(Error::MissingComponent(n))
    }

    pub fn items(&self) -> &[MBOperator] {
        &self.items
    }

    /// `max_n gamma^n / n! · ‖g_n‖_op` over the stored components.
    pub fn gamma_norm(&self) -> f64 {
        self.items
            .iter()
            .enumerate()
            .map(|(n, g)| self.gamma.powi(n as i32) / factorial(n) * op_norm(g))
            .fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::{random_hermitian, rng};

    #[test]
    fn gamma_norm_of_identity_sequence() {
        let items = vec![
            MBOperator::scalar(2, 0.0.into()),
            MBOperator::identity(1, 2),
            MBOperator::identity(2, 2),
        ];
        let seq = OperatorSequence::new(items, 0.5).unwrap();
        // max(0, 0.5 * 1, 0.25/2 * 1) = 0.5
        assert!((seq.gamma_norm() - 0.5).abs() < 1e-14);
    }

    #[test]
    fn slot_mismatch_rejected() {
        let items = vec![MBOperator::identity(1, 2)];
        assert!(OperatorSequence::new(items, 0.5).is_err());
    }

    #[test]
    fn gamma_range_enforced() {
        let mut r = rng(1);
        let g = random_hermitian(1, 2, &mut r);
        assert!(OperatorSequence::additive(g.clone(), 1.5, 1).is_err());
        assert!(OperatorSequence::additive(g, 0.5, 1).is_ok());
    }
}
