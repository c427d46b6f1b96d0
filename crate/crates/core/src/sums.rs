//! Pairwise (binary-tree) summation of matrices.
//!
//! Partition sums carry alternating-sign cumulant coefficients; the fixed
//! reduction tree keeps cancellation error bounded and results deterministic
//! regardless of how terms are produced.

use ndarray::Array2;

use crate::C64;

pub struct PairwiseSum {
    levels: Vec<Option<Array2<C64>>>,
    shape: (usize, usize),
}

impl PairwiseSum {
    pub fn new(dim: usize) -> Self {
        Self { levels: Vec::new(), shape: (dim, dim) }
    }

    pub fn push(&mut self, term: Array2<C64>) {
        debug_assert_eq!(term.dim(), self.shape);
        let mut carry = term;
        for slot in self.levels.iter_mut() {
            match slot.take() {
                None => {
                    *slot = Some(carry);
                    return;
                }
                Some(prev) => {
                    carry += &prev;
                }
            }
        }
        self.levels.push(Some(carry));
    }

    pub fn finish(self) -> Array2<C64> {
        let mut acc = Array2::<C64>::zeros(self.shape);
        for level in self.levels.into_iter().flatten() {
            acc += &level;
        }
        acc
    }
}
