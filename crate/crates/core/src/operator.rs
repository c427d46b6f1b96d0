//! Dense many-body operators on `(C^d)^{⊗s}` with tensor embedding, partial
//! traces, norms, and commutators.
//!
//! Particle labels are 1-based and index tensor factors left to right, so an
//! operator embedded at label 1 of a two-particle space is `A ⊗ I`.

use ndarray::Array2;
use ndarray_linalg::{Eigh, SVD, UPLO};

use crate::error::{Error, Result};
use crate::C64;

/// Max-abs tolerance for structural Hermiticity / symmetry checks.
pub const STRUCTURAL_TOL: f64 = 1e-10;

/// An `s`-particle operator: a dense `d^s x d^s` complex matrix.
///
/// `s = 0` is a scalar stored as a 1x1 matrix. The `hermitian` flag is a
/// hint set by constructors that know the answer; use
/// [`MBOperator::hermiticity_defect`] to verify.
#[derive(Clone, Debug)]
pub struct MBOperator {
    s: usize,
    d: usize,
    matrix: Array2<C64>,
    hermitian: bool,
}

impl MBOperator {
    pub fn new(s: usize, d: usize, matrix: Array2<C64>) -> Result<Self> {
        let dim = d.checked_pow(s as u32).ok_or(Error::DimensionMismatch(
            "d^s overflows usize".into(),
        ))?;
        if matrix.dim() != (dim, dim) {
            return Err(Error::DimensionMismatch(format!(
                "matrix is {:?}, expected ({dim}, {dim}) for s={s}, d={d}",
                matrix.dim()
            )));
        }
        Ok(Self { s, d, matrix, hermitian: false })
    }

    pub fn zeros(s: usize, d: usize) -> Self {
        let dim = d.pow(s as u32);
        Self { s, d, matrix: Array2::zeros((dim, dim)), hermitian: true }
    }

    pub fn identity(s: usize, d: usize) -> Self {
        let dim = d.pow(s as u32);
        Self { s, d, matrix: Array2::eye(dim), hermitian: true }
    }

    /// A zero-particle operator holding the scalar `value`.
    pub fn scalar(d: usize, value: C64) -> Self {
        let mut m = Array2::zeros((1, 1));
        m[[0, 0]] = value;
        Self { s: 0, d, matrix: m, hermitian: value.im == 0.0 }
    }

    pub fn with_hermitian_hint(mut self, hermitian: bool) -> Self {
        self.hermitian = hermitian;
        self
    }

    pub fn particles(&self) -> usize {
        self.s
    }

    pub fn one_particle_dim(&self) -> usize {
        self.d
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &Array2<C64> {
        &self.matrix
    }

    pub fn matrix_mut(&mut self) -> &mut Array2<C64> {
        self.hermitian = false;
        &mut self.matrix
    }

    pub fn into_matrix(self) -> Array2<C64> {
        self.matrix
    }

    pub fn hermitian_hint(&self) -> bool {
        self.hermitian
    }

    pub fn trace(&self) -> C64 {
        self.matrix.diag().sum()
    }

    pub fn adjoint(&self) -> Self {
        let m = self.matrix.t().mapv(|z| z.conj());
        Self { s: self.s, d: self.d, matrix: m, hermitian: self.hermitian }
    }

    pub fn add(&self, other: &Self) -> Self {
        self.check_same_shape(other);
        Self {
            s: self.s,
            d: self.d,
            matrix: &self.matrix + &other.matrix,
            hermitian: self.hermitian && other.hermitian,
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.check_same_shape(other);
        Self {
            s: self.s,
            d: self.d,
            matrix: &self.matrix - &other.matrix,
            hermitian: self.hermitian && other.hermitian,
        }
    }

    pub fn add_assign_scaled(&mut self, a: C64, other: &Self) {
        self.check_same_shape(other);
        self.hermitian = self.hermitian && other.hermitian && a.im == 0.0;
        self.matrix.zip_mut_with(&other.matrix, |x, y| *x += a * y);
    }

    pub fn scale(&self, a: C64) -> Self {
        Self {
            s: self.s,
            d: self.d,
            matrix: self.matrix.mapv(|z| a * z),
            hermitian: self.hermitian && a.im == 0.0,
        }
    }

    pub fn scale_re(&self, a: f64) -> Self {
        self.scale(C64::new(a, 0.0))
    }

    pub fn matmul(&self, other: &Self) -> Self {
        self.check_same_shape(other);
        Self {
            s: self.s,
            d: self.d,
            matrix: self.matrix.dot(&other.matrix),
            hermitian: false,
        }
    }

    /// Tensor product; `self`'s labels come first.
    pub fn kron(&self, other: &Self) -> Self {
        assert_eq!(self.d, other.d, "kron requires equal one-particle dimension");
        let m = ndarray::linalg::kron(&self.matrix, &other.matrix);
        Self {
            s: self.s + other.s,
            d: self.d,
            matrix: m,
            hermitian: self.hermitian && other.hermitian,
        }
    }

    /// `⊗^n self` (`n = 0` gives the scalar 1).
    pub fn kron_power(&self, n: usize) -> Self {
        let mut out = Self::scalar(self.d, C64::new(1.0, 0.0));
        for _ in 0..n {
            out = out.kron(self);
        }
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.matrix.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.check_same_shape(other);
        self.matrix
            .iter()
            .zip(other.matrix.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn hermiticity_defect(&self) -> f64 {
        let n = self.dim();
        let mut defect = 0.0_f64;
        for i in 0..n {
            for j in i..n {
                defect = defect.max((self.matrix[[i, j]] - self.matrix[[j, i]].conj()).norm());
            }
        }
        defect
    }

    pub fn is_hermitian_within(&self, tol: f64) -> bool {
        self.hermiticity_defect() <= tol
    }

    /// Eigenvalues of the Hermitian part, ascending.
    pub fn hermitian_eigenvalues(&self) -> Result<Vec<f64>> {
        let h = self.hermitian_part();
        let (vals, _) = h.eigh(UPLO::Lower)?;
        Ok(vals.to_vec())
    }

    /// Smallest eigenvalue of the Hermitian part; negative values measure
    /// the positivity defect.
    pub fn min_eigenvalue(&self) -> Result<f64> {
        Ok(self
            .hermitian_eigenvalues()?
            .first()
            .copied()
            .unwrap_or(0.0))
    }

    fn hermitian_part(&self) -> Array2<C64> {
        let adj = self.matrix.t().mapv(|z| z.conj());
        (&self.matrix + &adj).mapv(|z| 0.5 * z)
    }

    pub fn singular_values(&self) -> Result<Vec<f64>> {
        let (_, sv, _) = self.matrix.svd(false, false)?;
        Ok(sv.to_vec())
    }

    /// Conjugate by the permutation that places factor `k` of `self` at
    /// label `sigma[k]`; `sigma` must be a permutation of `1..=s`.
    pub fn permuted(&self, sigma: &[usize]) -> Result<Self> {
        tensor_embed(self, sigma, self.s)
    }

    /// Max-abs deviation from invariance under all adjacent transpositions
    /// (which generate the full symmetric group).
    pub fn permutation_defect(&self) -> Result<f64> {
        let mut defect = 0.0_f64;
        for i in 1..self.s {
            let mut sigma: Vec<usize> = (1..=self.s).collect();
            sigma.swap(i - 1, i);
            let swapped = self.permuted(&sigma)?;
            defect = defect.max(self.max_abs_diff(&swapped));
        }
        Ok(defect)
    }

    pub fn is_permutation_symmetric(&self, tol: f64) -> Result<bool> {
        Ok(self.permutation_defect()? <= tol)
    }

    /// Average over all particle permutations.
    pub fn symmetrized(&self) -> Result<Self> {
        use itertools::Itertools;
        let perms: Vec<Vec<usize>> = (1..=self.s).permutations(self.s).collect();
        let mut acc = Self::zeros(self.s, self.d);
        for sigma in &perms {
            acc = acc.add(&self.permuted(sigma)?);
        }
        Ok(acc.scale_re(1.0 / perms.len() as f64))
    }

    fn check_same_shape(&self, other: &Self) {
        assert_eq!(
            (self.s, self.d),
            (other.s, other.d),
            "operator shape mismatch: ({}, {}) vs ({}, {})",
            self.s,
            self.d,
            other.s,
            other.d
        );
    }
}

/// Offsets into the full `d^s_total` index space contributed by the digits of
/// a sub-operator index, for factors placed at the given 1-based labels.
fn label_offsets(d: usize, s_total: usize, labels: &[usize]) -> Vec<usize> {
    let k = labels.len();
    let count = d.pow(k as u32);
    let strides: Vec<usize> = labels
        .iter()
        .map(|&lab| d.pow((s_total - lab) as u32))
        .collect();
    let mut map = vec![0usize; count];
    for (p, slot) in map.iter_mut().enumerate() {
        let mut rem = p;
        let mut off = 0usize;
        for (idx, &stride) in strides.iter().enumerate() {
            let digit = rem / d.pow((k - 1 - idx) as u32);
            rem -= digit * d.pow((k - 1 - idx) as u32);
            off += digit * stride;
        }
        *slot = off;
    }
    map
}

fn validate_labels(labels: &[usize], s_total: usize) -> Result<()> {
    let mut seen = vec![false; s_total + 1];
    for &lab in labels {
        if lab == 0 || lab > s_total {
            return Err(Error::LabelOutOfRange { label: lab, max: s_total });
        }
        if seen[lab] {
            return Err(Error::DuplicateLabel(lab));
        }
        seen[lab] = true;
    }
    Ok(())
}

/// Embed `op` into an `s_total`-particle space so that its `k`-th factor acts
/// at label `labels[k]` and the identity acts everywhere else.
pub fn tensor_embed(op: &MBOperator, labels: &[usize], s_total: usize) -> Result<MBOperator> {
    if labels.len() != op.particles() {
        return Err(Error::DimensionMismatch(format!(
            "{} labels given for an operator on {} particles",
            labels.len(),
            op.particles()
        )));
    }
    validate_labels(labels, s_total)?;
    let d = op.one_particle_dim();
    let rest: Vec<usize> = (1..=s_total).filter(|l| !labels.contains(l)).collect();
    let map_op = label_offsets(d, s_total, labels);
    let map_rest = label_offsets(d, s_total, &rest);
    let dim = d.pow(s_total as u32);
    let sub = op.matrix();
    let nk = map_op.len();
    let mut out = Array2::<C64>::zeros((dim, dim));
    for p in 0..nk {
        for q in 0..nk {
            let v = sub[[p, q]];
            if v == C64::new(0.0, 0.0) {
                continue;
            }
            for &r in &map_rest {
                out[[map_op[p] + r, map_op[q] + r]] = v;
            }
        }
    }
    Ok(MBOperator {
        s: s_total,
        d,
        matrix: out,
        hermitian: op.hermitian_hint(),
    })
}

/// Trace out every label not in `keep`; the result's factors are the kept
/// labels in ascending order. An empty `keep` yields the scalar trace.
pub fn partial_trace(op: &MBOperator, keep: &[usize]) -> Result<MBOperator> {
    let s = op.particles();
    let d = op.one_particle_dim();
    let mut keep_sorted = keep.to_vec();
    keep_sorted.sort_unstable();
    validate_labels(&keep_sorted, s)?;
    let traced: Vec<usize> = (1..=s).filter(|l| !keep_sorted.contains(l)).collect();
    let map_keep = label_offsets(d, s, &keep_sorted);
    let map_traced = label_offsets(d, s, &traced);
    let k = keep_sorted.len();
    let dim_out = d.pow(k as u32);
    let m = op.matrix();
    let mut out = Array2::<C64>::zeros((dim_out, dim_out));
    for p in 0..dim_out {
        for q in 0..dim_out {
            let mut acc = C64::new(0.0, 0.0);
            for &r in &map_traced {
                acc += m[[map_keep[p] + r, map_keep[q] + r]];
            }
            out[[p, q]] = acc;
        }
    }
    Ok(MBOperator {
        s: k,
        d,
        matrix: out,
        hermitian: op.hermitian_hint(),
    })
}

/// Sum of singular values.
pub fn trace_norm(op: &MBOperator) -> f64 {
    op.singular_values()
        .expect("SVD of a finite dense matrix")
        .iter()
        .sum()
}

/// Largest singular value.
pub fn op_norm(op: &MBOperator) -> f64 {
    op.singular_values()
        .expect("SVD of a finite dense matrix")
        .first()
        .copied()
        .unwrap_or(0.0)
}

/// `ab - ba`.
pub fn commutator(a: &MBOperator, b: &MBOperator) -> Result<MBOperator> {
    if a.particles() != b.particles() || a.one_particle_dim() != b.one_particle_dim() {
        return Err(Error::DimensionMismatch(format!(
            "commutator of ({}, {}) with ({}, {})",
            a.particles(),
            a.one_particle_dim(),
            b.particles(),
            b.one_particle_dim()
        )));
    }
    let m = a.matrix().dot(b.matrix()) - b.matrix().dot(a.matrix());
    Ok(MBOperator {
        s: a.particles(),
        d: a.one_particle_dim(),
        matrix: m,
        hermitian: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::{random_density, random_hermitian, rng};
    use approx::assert_abs_diff_eq;
    use ndarray::array;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn embed_at_first_label_is_a_kron_i() {
        let a = MBOperator::new(1, 2, array![[c(1.0, 0.0), c(2.0, 0.0)], [c(3.0, 0.0), c(4.0, 0.0)]])
            .unwrap();
        let embedded = tensor_embed(&a, &[1], 2).unwrap();
        let expected = a.kron(&MBOperator::identity(1, 2));
        assert!(embedded.max_abs_diff(&expected) < 1e-15);
    }

    #[test]
    fn embed_at_second_label_is_i_kron_a() {
        let a = MBOperator::new(1, 2, array![[c(0.0, 1.0), c(2.0, 0.0)], [c(3.0, 0.0), c(4.0, 0.0)]])
            .unwrap();
        let embedded = tensor_embed(&a, &[2], 2).unwrap();
        let expected = MBOperator::identity(1, 2).kron(&a);
        assert!(embedded.max_abs_diff(&expected) < 1e-15);
    }

    #[test]
    fn swap_invariant_pair_embedding_is_permutation_invariant() {
        let cfg = crate::model::ModelConfig::default_lattice(2, 1.0).unwrap();
        let phi = cfg.pair_operator();
        let embedded = tensor_embed(&phi, &[1, 3], 3).unwrap();
        let swapped = embedded.permuted(&[3, 2, 1]).unwrap();
        assert!(embedded.max_abs_diff(&swapped) < 1e-15);
    }

    #[test]
    fn embed_then_trace_recovers_scaled_operator() {
        let mut r = rng(7);
        for d in 2..=3usize {
            for s_total in 1..=3usize {
                for k in 1..=s_total {
                    let op = random_hermitian(k, d, &mut r);
                    let labels: Vec<usize> = (1..=k).map(|i| s_total - k + i).collect();
                    let embedded = tensor_embed(&op, &labels, s_total).unwrap();
                    let back = partial_trace(&embedded, &labels).unwrap();
                    let scale = d.pow((s_total - k) as u32) as f64;
                    assert!(
                        back.max_abs_diff(&op.scale_re(scale)) < 1e-10,
                        "d={d} s_total={s_total} k={k}"
                    );
                }
            }
        }
    }

    #[test]
    fn partial_trace_factorizes_products() {
        let a = MBOperator::new(1, 2, array![[c(1.0, 0.0), c(0.0, 2.0)], [c(0.0, -2.0), c(5.0, 0.0)]])
            .unwrap();
        let b = MBOperator::new(1, 2, array![[c(2.0, 0.0), c(1.0, 0.0)], [c(1.0, 0.0), c(3.0, 0.0)]])
            .unwrap();
        let ab = a.kron(&b);
        let t1 = partial_trace(&ab, &[1]).unwrap();
        let expected = a.scale(b.trace());
        assert!(t1.max_abs_diff(&expected) < 1e-14);
    }

    #[test]
    fn trace_of_density_is_scalar_one() {
        let mut r = rng(3);
        let rho = random_density(2, 3, &mut r);
        let t = partial_trace(&rho, &[]).unwrap();
        assert_eq!(t.particles(), 0);
        assert_abs_diff_eq!(t.trace().re, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(t.trace().im, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn maximally_entangled_marginal_is_maximally_mixed() {
        for d in 2..=3usize {
            let dim = d * d;
            let mut m = Array2::<C64>::zeros((dim, dim));
            for i in 0..d {
                for j in 0..d {
                    m[[i * d + i, j * d + j]] = c(1.0 / d as f64, 0.0);
                }
            }
            let rho = MBOperator::new(2, d, m).unwrap();
            let marginal = partial_trace(&rho, &[1]).unwrap();
            let expected = MBOperator::identity(1, d).scale_re(1.0 / d as f64);
            assert!(marginal.max_abs_diff(&expected) < 1e-14);
        }
    }

    #[test]
    fn trace_norm_of_diagonal() {
        let m = MBOperator::new(1, 2, array![[c(3.0, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(-4.0, 0.0)]])
            .unwrap();
        assert_abs_diff_eq!(trace_norm(&m), 7.0, epsilon = 1e-12);
    }

    #[test]
    fn trace_norm_of_rank_one_projector() {
        // |+><+|
        let m = MBOperator::new(1, 2, array![[c(0.5, 0.0), c(0.5, 0.0)], [c(0.5, 0.0), c(0.5, 0.0)]])
            .unwrap();
        assert_abs_diff_eq!(trace_norm(&m), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn commutator_with_self_vanishes() {
        let mut r = rng(11);
        let a = random_hermitian(2, 2, &mut r);
        let z = commutator(&a, &a).unwrap();
        assert!(z.max_abs() < 1e-14);
    }

    #[test]
    fn commutator_dimension_mismatch_errors() {
        let a = MBOperator::identity(1, 2);
        let b = MBOperator::identity(2, 2);
        assert!(commutator(&a, &b).is_err());
    }

    #[test]
    fn commutator_trace_norm_bound() {
        let mut r = rng(5);
        for _ in 0..20 {
            let a = random_hermitian(2, 2, &mut r);
            let h = random_hermitian(2, 2, &mut r);
            let comm = commutator(&a, &h).unwrap();
            assert!(trace_norm(&comm) <= 2.0 * trace_norm(&a) * op_norm(&h) + 1e-10);
        }
    }

    #[test]
    fn permutation_checker_accepts_symmetrized_rejects_perturbed() {
        let mut r = rng(9);
        let op = random_hermitian(3, 2, &mut r).symmetrized().unwrap();
        assert!(op.is_permutation_symmetric(1e-10).unwrap());
        let mut perturbed = op.clone();
        perturbed.matrix_mut()[[1, 0]] += c(1e-6, 0.0);
        assert!(!perturbed.is_permutation_symmetric(1e-10).unwrap());
    }

    #[test]
    fn embed_rejects_bad_labels() {
        let a = MBOperator::identity(1, 2);
        assert!(matches!(
            tensor_embed(&a, &[3], 2),
            Err(Error::LabelOutOfRange { .. })
        ));
        let b = MBOperator::identity(2, 2);
        assert!(matches!(
            tensor_embed(&b, &[1, 1], 2),
            Err(Error::DuplicateLabel(1))
        ));
    }

    #[test]
    fn partial_trace_preserves_trace_and_hermiticity() {
        let mut r = rng(13);
        let rho = random_density(3, 2, &mut r);
        let reduced = partial_trace(&rho, &[1, 3]).unwrap();
        assert_abs_diff_eq!(reduced.trace().re, rho.trace().re, epsilon = 1e-12);
        assert!(reduced.hermiticity_defect() < 1e-12);
        assert!(reduced.min_eigenvalue().unwrap() > -1e-12);
    }
}
