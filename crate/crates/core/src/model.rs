//! Lattice model description: one-particle kinetic term, pair potential,
//! coupling strength, and the dimension cap for many-particle spaces.

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::operator::MBOperator;
use crate::C64;

/// Boundary condition of the one-dimensional lattice.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Boundary {
    Periodic,
    Open,
}

/// Model data every operator-valued computation is parameterized by.
///
/// The one-particle space is `C^d` with lattice sites `0..d`. The kinetic
/// term is the (Hermitian) lattice Laplacian `-1/2 Δ`, the pair interaction
/// is diagonal in the position basis with entries `phi(|x_a - x_b|)`, and
/// `epsilon >= 0` scales the interaction inside the `s`-particle Hamiltonian.
#[derive(Clone, Debug)]
pub struct ModelConfig {
    d: usize,
    kinetic: Array2<C64>,
    /// `pair_potential[[a, b]]` is the diagonal entry of the two-particle
    /// interaction at position pair `(a, b)`.
    pair_potential: Array2<f64>,
    epsilon: f64,
    boundary: Boundary,
    dim_cap: usize,
}

impl ModelConfig {
    /// Default cap on `d^s`; computations above this are refused.
    pub const DEFAULT_DIM_CAP: usize = 4096;

    const KINETIC_REL_TOL: f64 = 1e-12;
    const PAIR_SYM_TOL: f64 = 1e-12;

    /// Standard lattice model: kinetic `-1/2 Δ` for the given boundary and a
    /// pair potential sampled from `phi` at the lattice distance.
    pub fn lattice(
        d: usize,
        boundary: Boundary,
        epsilon: f64,
        phi: impl Fn(f64) -> f64,
    ) -> Result<Self> {
        let kinetic = Self::laplacian_kinetic(d, boundary);
        let mut pair = Array2::<f64>::zeros((d, d));
        for a in 0..d {
            for b in 0..d {
                pair[[a, b]] = phi(lattice_distance(d, boundary, a, b));
            }
        }
        Self::from_parts(d, kinetic, pair, epsilon, boundary)
    }

    /// Periodic lattice with the bounded kernel `phi(r) = 1/(1 + r^2)`.
    pub fn default_lattice(d: usize, epsilon: f64) -> Result<Self> {
        Self::lattice(d, Boundary::Periodic, epsilon, |r| 1.0 / (1.0 + r * r))
    }

    /// Build from explicit matrices, validating all invariants.
    pub fn from_parts(
        d: usize,
        kinetic: Array2<C64>,
        pair_potential: Array2<f64>,
        epsilon: f64,
        boundary: Boundary,
    ) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidModel("one-particle dimension must be positive".into()));
        }
        if kinetic.dim() != (d, d) {
            return Err(Error::DimensionMismatch(format!(
                "kinetic matrix is {:?}, expected ({d}, {d})",
                kinetic.dim()
            )));
        }
        if pair_potential.dim() != (d, d) {
            return Err(Error::DimensionMismatch(format!(
                "pair potential table is {:?}, expected ({d}, {d})",
                pair_potential.dim()
            )));
        }
        if epsilon < 0.0 {
            return Err(Error::NegativeEpsilon(epsilon));
        }
        let scale = kinetic.iter().map(|z| z.norm()).fold(1.0_f64, f64::max);
        let herm_defect = (0..d)
            .flat_map(|i| (0..d).map(move |j| (i, j)))
            .map(|(i, j)| (kinetic[[i, j]] - kinetic[[j, i]].conj()).norm())
            .fold(0.0_f64, f64::max);
        if herm_defect > Self::KINETIC_REL_TOL * scale {
            return Err(Error::NotHermitian(herm_defect));
        }
        let mut sym_defect = 0.0_f64;
        let mut bounded = true;
        for a in 0..d {
            for b in 0..d {
                sym_defect = sym_defect.max((pair_potential[[a, b]] - pair_potential[[b, a]]).abs());
                bounded &= pair_potential[[a, b]].is_finite();
            }
        }
        if !bounded {
            return Err(Error::InvalidModel("pair potential has non-finite entries".into()));
        }
        if sym_defect > Self::PAIR_SYM_TOL {
            return Err(Error::NotSymmetric(sym_defect));
        }
        Ok(Self {
            d,
            kinetic,
            pair_potential,
            epsilon,
            boundary,
            dim_cap: Self::DEFAULT_DIM_CAP,
        })
    }

    /// `-1/2 Δ` on `d` sites. Periodic wraps around; open drops the
    /// missing neighbour couplings.
    pub fn laplacian_kinetic(d: usize, boundary: Boundary) -> Array2<C64> {
        let mut k = Array2::<C64>::zeros((d, d));
        for j in 0..d {
            k[[j, j]] = C64::new(1.0, 0.0);
            let right = if j + 1 < d {
                Some(j + 1)
            } else if boundary == Boundary::Periodic && d > 1 {
                Some(0)
            } else {
                None
            };
            if let Some(r) = right {
                k[[j, r]] += C64::new(-0.5, 0.0);
                k[[r, j]] += C64::new(-0.5, 0.0);
            }
        }
        k
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    pub fn kinetic(&self) -> &Array2<C64> {
        &self.kinetic
    }

    pub fn pair_potential(&self) -> &Array2<f64> {
        &self.pair_potential
    }

    pub fn pair_value(&self, a: usize, b: usize) -> f64 {
        self.pair_potential[[a, b]]
    }

    /// Same model with a different coupling strength.
    pub fn with_epsilon(&self, epsilon: f64) -> Result<Self> {
        if epsilon < 0.0 {
            return Err(Error::NegativeEpsilon(epsilon));
        }
        let mut cfg = self.clone();
        cfg.epsilon = epsilon;
        Ok(cfg)
    }

    pub fn with_dim_cap(mut self, cap: usize) -> Self {
        self.dim_cap = cap;
        self
    }

    /// `d^s`, checked against the cap.
    pub fn hilbert_dim(&self, s: usize) -> Result<usize> {
        let mut dim = 1usize;
        for _ in 0..s {
            dim = dim
                .checked_mul(self.d)
                .ok_or(Error::DimCapExceeded { dim: usize::MAX, cap: self.dim_cap })?;
            if dim > self.dim_cap {
                return Err(Error::DimCapExceeded { dim, cap: self.dim_cap });
            }
        }
        Ok(dim)
    }

    /// Kinetic term as a one-particle operator.
    pub fn kinetic_operator(&self) -> MBOperator {
        MBOperator::new(1, self.d, self.kinetic.clone())
            .expect("kinetic matrix has validated shape")
            .with_hermitian_hint(true)
    }

    /// Pair interaction as a two-particle operator, diagonal in position.
    pub fn pair_operator(&self) -> MBOperator {
        let d2 = self.d * self.d;
        let mut m = Array2::<C64>::zeros((d2, d2));
        for a in 0..self.d {
            for b in 0..self.d {
                let idx = a * self.d + b;
                m[[idx, idx]] = C64::new(self.pair_potential[[a, b]], 0.0);
            }
        }
        MBOperator::new(2, self.d, m)
            .expect("pair operator has validated shape")
            .with_hermitian_hint(true)
    }
}

/// Distance between two sites for the given boundary condition.
pub fn lattice_distance(d: usize, boundary: Boundary, a: usize, b: usize) -> f64 {
    let diff = a.abs_diff(b);
    match boundary {
        Boundary::Periodic => diff.min(d - diff) as f64,
        Boundary::Open => diff as f64,
    }
}
