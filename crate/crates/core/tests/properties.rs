//! Property tests for the structural invariants of the operator substrate
//! and the partition combinatorics.

use proptest::prelude::*;

use qkinet_core::operator::{partial_trace, tensor_embed, trace_norm, op_norm, commutator, MBOperator};
use qkinet_core::partitions::{
    bell_number, cumulant_coefficient, enumerate_partitions, single_elements,
};
use qkinet_core::random::{random_density, random_hermitian, rng};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    /// Embedding at any label set, then tracing the complement, recovers the
    /// operator times the dimension of the traced factors.
    #[test]
    fn embed_then_trace_recovers(seed in 0u64..1000, d in 2usize..=3, s_total in 1usize..=3) {
        let mut r = rng(seed);
        for k in 1..=s_total {
            let op = random_hermitian(k, d, &mut r);
            for start in 1..=(s_total - k + 1) {
                // ascending labels: the traced-back factors keep their order
                let labels: Vec<usize> = (start..start + k).collect();
                let embedded = tensor_embed(&op, &labels, s_total).unwrap();
                let back = partial_trace(&embedded, &labels).unwrap();
                let scale = d.pow((s_total - k) as u32) as f64;
                prop_assert!(back.max_abs_diff(&op.scale_re(scale)) < 1e-10);
            }
        }
    }

    /// Partial traces preserve trace, Hermiticity, and positivity of states.
    #[test]
    fn partial_trace_preserves_state_structure(seed in 0u64..1000, keep_first in proptest::bool::ANY) {
        let mut r = rng(seed);
        let rho = random_density(3, 2, &mut r);
        let keep: Vec<usize> = if keep_first { vec![1, 2] } else { vec![2, 3] };
        let reduced = partial_trace(&rho, &keep).unwrap();
        prop_assert!((reduced.trace().re - 1.0).abs() < 1e-10);
        prop_assert!(reduced.hermiticity_defect() < 1e-10);
        prop_assert!(reduced.min_eigenvalue().unwrap() > -1e-10);
    }

    /// `‖[A, H]‖_tr <= 2 ‖A‖_tr ‖H‖_op`.
    #[test]
    fn commutator_trace_norm_bound(seed in 0u64..1000, s in 1usize..=2) {
        let mut r = rng(seed);
        let a = random_hermitian(s, 2, &mut r);
        let h = random_hermitian(s, 2, &mut r);
        let c = commutator(&a, &h).unwrap();
        prop_assert!(trace_norm(&c) <= 2.0 * trace_norm(&a) * op_norm(&h) + 1e-9);
    }

    /// Symmetrized operators pass the permutation check; a generic
    /// perturbation breaks it.
    #[test]
    fn permutation_checker(seed in 0u64..1000) {
        let mut r = rng(seed);
        let sym = random_hermitian(3, 2, &mut r).symmetrized().unwrap();
        prop_assert!(sym.is_permutation_symmetric(1e-10).unwrap());
        let mut bad = sym.clone();
        bad.matrix_mut()[[0, 1]] += qkinet_core::C64::new(1e-5, 0.0);
        prop_assert!(!bad.is_permutation_symmetric(1e-10).unwrap());
    }

    /// Partition enumeration yields exactly Bell(n) distinct partitions and
    /// the signed coefficients resolve the Möbius identity.
    #[test]
    fn partition_counts_and_mobius(n in 1usize..=7) {
        let elems = single_elements(n);
        let count = enumerate_partitions(&elems).unwrap().count() as u64;
        prop_assert_eq!(count, bell_number(n));
        let total: i64 = enumerate_partitions(&elems)
            .unwrap()
            .map(|p| cumulant_coefficient(p.block_count()))
            .sum();
        prop_assert_eq!(total, if n == 1 { 1 } else { 0 });
    }

    /// Unitary evolution preserves the singular values of any state.
    #[test]
    fn evolution_preserves_spectra(seed in 0u64..1000, t in -1.5f64..1.5) {
        let cfg = qkinet_core::ModelConfig::default_lattice(2, 0.8).unwrap();
        let prop = qkinet_core::dynamics::Propagator::new(2, &cfg).unwrap();
        let mut r = rng(seed);
        let f = random_density(2, 2, &mut r);
        let evolved = prop.evolve_state(&f, t).unwrap();
        let sv0 = f.singular_values().unwrap();
        let sv1 = evolved.singular_values().unwrap();
        for (a, b) in sv0.iter().zip(sv1.iter()) {
            prop_assert!((a - b).abs() < 1e-10);
        }
    }
}

#[test]
fn identity_embeds_to_identity() {
    let id = MBOperator::identity(1, 3);
    let embedded = tensor_embed(&id, &[2], 3).unwrap();
    assert!(embedded.max_abs_diff(&MBOperator::identity(3, 3)) < 1e-15);
}
