//! Seeded random operators and states for tests and experiments.

use ndarray::Array2;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;

use crate::operator::MBOperator;
use crate::C64;

pub use rand_chacha::ChaCha8Rng;

/// Deterministic generator for a given seed.
pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn random_matrix(dim: usize, r: &mut impl Rng) -> Array2<C64> {
    Array2::from_shape_fn((dim, dim), |_| {
        C64::new(r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0))
    })
}

/// Random Hermitian `s`-particle operator with entries of order one.
pub fn random_hermitian(s: usize, d: usize, r: &mut impl Rng) -> MBOperator {
    let dim = d.pow(s as u32);
    let g = random_matrix(dim, r);
    let h = (&g + &g.t().mapv(|z| z.conj())).mapv(|z| 0.5 * z);
    MBOperator::new(s, d, h).expect("built with matching dims").with_hermitian_hint(true)
}

/// Random density operator: positive, trace one.
pub fn random_density(s: usize, d: usize, r: &mut impl Rng) -> MBOperator {
    let dim = d.pow(s as u32);
    let g = random_matrix(dim, r);
    let pos = g.dot(&g.t().mapv(|z| z.conj()));
    let tr: C64 = pos.diag().sum();
    let m = pos.mapv(|z| z / tr.re);
    MBOperator::new(s, d, m).expect("built with matching dims").with_hermitian_hint(true)
}

/// Random permutation-symmetric density operator (symmetrization preserves
/// positivity and trace).
pub fn random_symmetric_density(s: usize, d: usize, r: &mut impl Rng) -> MBOperator {
    random_density(s, d, r)
        .symmetrized()
        .expect("symmetrization of a valid operator")
        .with_hermitian_hint(true)
}

/// Random permutation-symmetric Hermitian observable.
pub fn random_symmetric_hermitian(s: usize, d: usize, r: &mut impl Rng) -> MBOperator {
    random_hermitian(s, d, r)
        .symmetrized()
        .expect("symmetrization of a valid operator")
        .with_hermitian_hint(true)
}
