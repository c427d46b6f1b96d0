//! Cumulants (semiinvariants) of evolution groups: signed sums over set
//! partitions of products of blockwise unitary flows,
//! `Σ_P (-1)^{|P|-1} (|P|-1)! Π_{X_i ∈ P} G_{|X_i|}(t)`.
//!
//! A partition element may be a cluster of labels; the block a cluster sits
//! in evolves all of its labels jointly under the interacting Hamiltonian of
//! the block's full label set. Partition terms are accumulated in a fixed
//! pairwise tree to control the cancellation the alternating signs produce.

use std::collections::HashMap;

use ndarray::Array2;

use crate::dynamics::Propagator;
use crate::error::{Error, Result};
use crate::model::ModelConfig;
use crate::operator::{op_norm, tensor_embed, MBOperator};
use crate::partitions::{cumulant_coefficient, enumerate_partitions, PartitionElement};
use crate::sums::PairwiseSum;
use crate::C64;

/// Which one-parameter family supplies the block flows.
#[derive(Clone, Copy, Debug)]
pub(crate) enum BlockFlavor {
    /// Interacting group `G_k(t): g ↦ e^{itH_k} g e^{-itH_k}` (`t < 0` is the
    /// backward/von Neumann direction).
    Group { t: f64 },
    /// Scattering operator `Ĝ_k(t): f ↦ G_k(-t) Π_i G_1(t, i) f`, realized as
    /// conjugation by `e^{-itH_k} Π_i e^{itK(i)}`.
    Scattering { t: f64 },
}

/// Caches spectral data per block size and embedded block unitaries per label
/// set, for one fixed time and flavor.
pub(crate) struct BlockUnitaries<'a> {
    cfg: &'a ModelConfig,
    s_total: usize,
    flavor: BlockFlavor,
    props: HashMap<usize, Propagator>,
    embedded: HashMap<Vec<usize>, Array2<C64>>,
}

impl<'a> BlockUnitaries<'a> {
    pub(crate) fn new(cfg: &'a ModelConfig, s_total: usize, flavor: BlockFlavor) -> Self {
        Self { cfg, s_total, flavor, props: HashMap::new(), embedded: HashMap::new() }
    }

    fn propagator(&mut self, k: usize) -> Result<&Propagator> {
        if !self.props.contains_key(&k) {
            self.props.insert(k, Propagator::new(k, self.cfg)?);
        }
        Ok(&self.props[&k])
    }

    /// Unitary implementing the block flow on `labels`, embedded into the
    /// full `s_total`-particle space. Empty label sets give the identity.
    pub(crate) fn embedded_unitary(&mut self, labels: &[usize]) -> Result<Array2<C64>> {
        let mut key = labels.to_vec();
        key.sort_unstable();
        if let Some(u) = self.embedded.get(&key) {
            return Ok(u.clone());
        }
        let d = self.cfg.d();
        let dim = self.cfg.hilbert_dim(self.s_total)?;
        let k = key.len();
        let u = if k == 0 {
            Array2::<C64>::eye(dim)
        } else {
            let small = match self.flavor {
                BlockFlavor::Group { t } => self.propagator(k)?.unitary(t),
                BlockFlavor::Scattering { t } => {
                    let interacting = self.propagator(k)?.unitary(-t);
                    let free_one = self.propagator(1)?.unitary(t);
                    let mut free = Array2::<C64>::eye(1);
                    for _ in 0..k {
                        free = ndarray::linalg::kron(&free, &free_one);
                    }
                    interacting.dot(&free)
                }
            };
            let op = MBOperator::new(k, d, small)?;
            tensor_embed(&op, &key, self.s_total)?.into_matrix()
        };
        self.embedded.insert(key, u.clone());
        Ok(u)
    }
}

fn validate_elements(elements: &[PartitionElement], s_total: usize) -> Result<()> {
    let mut seen = vec![false; s_total + 1];
    for e in elements {
        for &l in e.labels() {
            if l == 0 || l > s_total {
                return Err(Error::LabelOutOfRange { label: l, max: s_total });
            }
            if seen[l] {
                return Err(Error::DuplicateLabel(l));
            }
            seen[l] = true;
        }
    }
    Ok(())
}

/// Shared partition-sum engine.
pub(crate) fn cumulant_with(
    flavor: BlockFlavor,
    elements: &[PartitionElement],
    operand: &MBOperator,
    cfg: &ModelConfig,
) -> Result<MBOperator> {
    let s_total = operand.particles();
    if operand.one_particle_dim() != cfg.d() {
        return Err(Error::DimensionMismatch(format!(
            "operand one-particle dimension {} differs from model {}",
            operand.one_particle_dim(),
            cfg.d()
        )));
    }
    validate_elements(elements, s_total)?;
    let mut cache = BlockUnitaries::new(cfg, s_total, flavor);
    let mut sum = PairwiseSum::new(operand.dim());
    for partition in enumerate_partitions(elements)? {
        let coeff = cumulant_coefficient(partition.block_count()) as f64;
        let mut w: Option<Array2<C64>> = None;
        for b in 0..partition.block_count() {
            let labels = partition.block_labels(b);
            if labels.is_empty() {
                continue;
            }
            let u = cache.embedded_unitary(&labels)?;
            w = Some(match w {
                None => u,
                Some(prev) => prev.dot(&u),
            });
        }
        let term = match w {
            None => operand.matrix().clone(),
            Some(w) => w.dot(operand.matrix()).dot(&w.t().mapv(|z| z.conj())),
        };
        sum.push(term.mapv(|z| coeff * z));
    }
    MBOperator::new(s_total, cfg.d(), sum.finish())
}

/// Forward cumulant `A_n(t)` of the Heisenberg groups `G(t)`.
pub fn cumulant_forward(
    t: f64,
    elements: &[PartitionElement],
    operand: &MBOperator,
    cfg: &ModelConfig,
) -> Result<MBOperator> {
    cumulant_with(BlockFlavor::Group { t }, elements, operand, cfg)
}

/// Backward cumulant `A_n(-t)` of the von Neumann groups `G(-t)`.
pub fn cumulant_backward(
    t: f64,
    elements: &[PartitionElement],
    operand: &MBOperator,
    cfg: &ModelConfig,
) -> Result<MBOperator> {
    cumulant_with(BlockFlavor::Group { t: -t }, elements, operand, cfg)
}

/// One row of the generator order table.
#[derive(Clone, Copy, Debug)]
pub struct OrderCheckRow {
    pub t: f64,
    pub residual: f64,
}

/// Small-time behaviour of the forward cumulants on a seeded random
/// Hermitian observable:
///
/// - `n = 1`: `‖A_1(t) g - g - t N g‖ / t` (first-order generator, O(t)),
/// - `n = 2`: `‖A_2(t) g / t - ε N_int g‖` (vanishes as t → 0),
/// - `n > 2`: `‖A_n(t) g / t‖` (vanishes as t → 0 for two-body forces).
pub fn generator_order_check(
    n: usize,
    cfg: &ModelConfig,
    t_list: &[f64],
    seed: u64,
) -> Result<Vec<OrderCheckRow>> {
    if n == 0 || n > 4 {
        return Err(Error::UnsupportedOrder(n));
    }
    let mut r = crate::random::rng(seed);
    let g = crate::random::random_hermitian(n, cfg.d(), &mut r);
    let elements: Vec<PartitionElement> = (1..=n).map(PartitionElement::Single).collect();
    let mut rows = Vec::with_capacity(t_list.len());
    for &t in t_list {
        let cum = cumulant_forward(t, &elements, &g, cfg)?;
        let residual = match n {
            1 => {
                let h = crate::dynamics::build_hamiltonian(1, cfg)?;
                let gen = crate::dynamics::generator_heisenberg(&g, &h)?;
                let mut diff = cum.sub(&g);
                diff.add_assign_scaled(C64::new(-t, 0.0), &gen);
                op_norm(&diff) / t
            }
            2 => {
                let nint = crate::dynamics::pair_commutator(cfg, 1, 2, &g)
                    .scale(C64::new(0.0, 1.0))
                    .scale_re(cfg.epsilon());
                op_norm(&cum.scale_re(1.0 / t).sub(&nint))
            }
            _ => op_norm(&cum.scale_re(1.0 / t)),
        };
        rows.push(OrderCheckRow { t, residual });
    }
    Ok(rows)
}
