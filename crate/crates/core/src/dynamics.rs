//! Many-particle Hamiltonians, the forward/backward unitary groups generated
//! by them, Heisenberg / von Neumann generators, and the Duhamel residual.
//!
//! Propagation goes through one Hermitian eigendecomposition per particle
//! count, so the group law holds to rounding and any evolution time is cheap.

use ndarray::{Array1, Array2};
use ndarray_linalg::{Eigh, UPLO};

use crate::error::{Error, Result};
use crate::model::ModelConfig;
use crate::operator::{commutator, tensor_embed, trace_norm, MBOperator};
use crate::quad::Doubling;
use crate::C64;

/// `H_s = Σ_i K(i) + ε Σ_{i<j} Φ(i,j)`; `H_0 = 0`.
pub fn build_hamiltonian(s: usize, cfg: &ModelConfig) -> Result<MBOperator> {
    let dim = cfg.hilbert_dim(s)?;
    let d = cfg.d();
    if s == 0 {
        return Ok(MBOperator::scalar(d, 0.0.into()));
    }
    let mut h = MBOperator::zeros(s, d);
    let kin = cfg.kinetic_operator();
    for i in 1..=s {
        h = h.add(&tensor_embed(&kin, &[i], s)?);
    }
    if cfg.epsilon() != 0.0 && s >= 2 {
        let phi = cfg.pair_operator();
        for i in 1..=s {
            for j in (i + 1)..=s {
                h.add_assign_scaled(C64::new(cfg.epsilon(), 0.0), &tensor_embed(&phi, &[i, j], s)?);
            }
        }
    }
    debug_assert_eq!(h.dim(), dim);
    Ok(h.with_hermitian_hint(true))
}

/// Spectral data of `H_s`, reused for every evolution time.
#[derive(Clone, Debug)]
pub struct Propagator {
    s: usize,
    d: usize,
    eigenvalues: Array1<f64>,
    eigenvectors: Array2<C64>,
    built_for_epsilon: f64,
}

impl Propagator {
    pub fn new(s: usize, cfg: &ModelConfig) -> Result<Self> {
        let h = build_hamiltonian(s, cfg)?;
        let (vals, vecs) = h.matrix().eigh(UPLO::Lower)?;
        Ok(Self {
            s,
            d: cfg.d(),
            eigenvalues: vals,
            eigenvectors: vecs,
            built_for_epsilon: cfg.epsilon(),
        })
    }

    pub fn particles(&self) -> usize {
        self.s
    }

    pub fn built_for_epsilon(&self) -> f64 {
        self.built_for_epsilon
    }

    pub fn eigenvalues(&self) -> &Array1<f64> {
        &self.eigenvalues
    }

    /// Max-abs residual of `U diag(λ) U† - H_s`.
    pub fn reconstruction_defect(&self, cfg: &ModelConfig) -> Result<f64> {
        let h = build_hamiltonian(self.s, cfg)?;
        let l = Array2::from_diag(&self.eigenvalues.mapv(|v| C64::new(v, 0.0)));
        let rebuilt = self
            .eigenvectors
            .dot(&l)
            .dot(&self.eigenvectors.t().mapv(|z| z.conj()));
        let diff = &rebuilt - h.matrix();
        Ok(diff.iter().map(|z| z.norm()).fold(0.0, f64::max))
    }

    /// `e^{itH}` as a dense matrix.
    pub fn unitary(&self, t: f64) -> Array2<C64> {
        let phases = self.eigenvalues.mapv(|l| C64::from_polar(1.0, l * t));
        let mut scaled = self.eigenvectors.clone();
        for (mut col, ph) in scaled.columns_mut().into_iter().zip(phases.iter()) {
            col.map_inplace(|z| *z *= ph);
        }
        scaled.dot(&self.eigenvectors.t().mapv(|z| z.conj()))
    }

    /// Heisenberg flow `G_s(t) g = e^{itH} g e^{-itH}`.
    pub fn evolve_observable(&self, g: &MBOperator, t: f64) -> Result<MBOperator> {
        self.conjugate(g, t)
    }

    /// Von Neumann flow `G_s(-t) f = e^{-itH} f e^{itH}`.
    pub fn evolve_state(&self, f: &MBOperator, t: f64) -> Result<MBOperator> {
        self.conjugate(f, -t)
    }

    fn conjugate(&self, op: &MBOperator, t: f64) -> Result<MBOperator> {
        if op.particles() != self.s || op.one_particle_dim() != self.d {
            return Err(Error::DimensionMismatch(format!(
                "operator on {} particles given to propagator for {}",
                op.particles(),
                self.s
            )));
        }
        let u = self.unitary(t);
        let m = u.dot(op.matrix()).dot(&u.t().mapv(|z| z.conj()));
        Ok(MBOperator::new(self.s, self.d, m)?.with_hermitian_hint(op.hermitian_hint()))
    }
}

/// `G_s(t) g` through a prebuilt propagator.
pub fn evolve_observable(g: &MBOperator, t: f64, prop: &Propagator) -> Result<MBOperator> {
    prop.evolve_observable(g, t)
}

/// `G_s(-t) f` through a prebuilt propagator.
pub fn evolve_state(f: &MBOperator, t: f64, prop: &Propagator) -> Result<MBOperator> {
    prop.evolve_state(f, t)
}

/// Heisenberg generator `N g = i(Hg - gH)`.
pub fn generator_heisenberg(g: &MBOperator, h: &MBOperator) -> Result<MBOperator> {
    Ok(commutator(h, g)?.scale(C64::new(0.0, 1.0)))
}

/// Von Neumann generator `-N f = -i(Hf - fH)`.
pub fn generator_vonneumann(f: &MBOperator, h: &MBOperator) -> Result<MBOperator> {
    Ok(commutator(h, f)?.scale(C64::new(0.0, -1.0)))
}

// ---------------------------------------------------------------------------
// Structured generator applications.
//
// The hierarchy integrators evaluate commutators with one-site and
// diagonal-pair terms many times per step; these loops avoid forming dense
// embedded operators and cost O(d^{2s+1}) / O(d^{2s}) instead of O(d^{3s}).
// ---------------------------------------------------------------------------

fn digit(index: usize, d: usize, s: usize, label: usize) -> usize {
    // label is 1-based, factor 1 is the most significant digit
    (index / d.pow((s - label) as u32)) % d
}

/// `[K(i), F]` for a one-site operator `k` acting at label `i`.
pub fn one_site_commutator(k: &Array2<C64>, i: usize, f: &MBOperator) -> MBOperator {
    let s = f.particles();
    let d = f.one_particle_dim();
    assert!(i >= 1 && i <= s, "label {i} out of range for s={s}");
    let dim = f.dim();
    let stride = d.pow((s - i) as u32);
    let m = f.matrix();
    let mut out = Array2::<C64>::zeros((dim, dim));
    // K(i)F: contract over the label-i digit of the row index.
    for a in 0..dim {
        let ai = (a / stride) % d;
        let base = a - ai * stride;
        for c in 0..d {
            let kv = k[[ai, c]];
            if kv == C64::new(0.0, 0.0) {
                continue;
            }
            let row = base + c * stride;
            for b in 0..dim {
                out[[a, b]] += kv * m[[row, b]];
            }
        }
    }
    // minus F K(i): contract over the label-i digit of the column index.
    for b in 0..dim {
        let bi = (b / stride) % d;
        let base = b - bi * stride;
        for c in 0..d {
            let kv = k[[c, bi]];
            if kv == C64::new(0.0, 0.0) {
                continue;
            }
            let col = base + c * stride;
            for a in 0..dim {
                out[[a, b]] -= m[[a, col]] * kv;
            }
        }
    }
    MBOperator::new(s, d, out).expect("shape preserved")
}

/// `[Φ(i,j), F]` for the diagonal pair potential of `cfg`.
pub fn pair_commutator(cfg: &ModelConfig, i: usize, j: usize, f: &MBOperator) -> MBOperator {
    let s = f.particles();
    let d = f.one_particle_dim();
    let dim = f.dim();
    let mut w = vec![0.0_f64; dim];
    for (a, slot) in w.iter_mut().enumerate() {
        *slot = cfg.pair_value(digit(a, d, s, i), digit(a, d, s, j));
    }
    let m = f.matrix();
    let mut out = Array2::<C64>::zeros((dim, dim));
    for a in 0..dim {
        for b in 0..dim {
            let delta = w[a] - w[b];
            if delta != 0.0 {
                out[[a, b]] = C64::new(delta, 0.0) * m[[a, b]];
            }
        }
    }
    MBOperator::new(s, d, out).expect("shape preserved")
}

/// Von Neumann right-hand side `-i [H_s, F]` without forming `H_s`.
pub fn vonneumann_rhs(cfg: &ModelConfig, f: &MBOperator) -> MBOperator {
    let s = f.particles();
    let mut acc = MBOperator::zeros(s, f.one_particle_dim());
    for i in 1..=s {
        acc = acc.add(&one_site_commutator(cfg.kinetic(), i, f));
    }
    if cfg.epsilon() != 0.0 {
        for i in 1..=s {
            for j in (i + 1)..=s {
                acc.add_assign_scaled(C64::new(cfg.epsilon(), 0.0), &pair_commutator(cfg, i, j, f));
            }
        }
    }
    acc.scale(C64::new(0.0, -1.0))
}

/// Heisenberg right-hand side `i [H_s, G]`.
pub fn heisenberg_rhs(cfg: &ModelConfig, g: &MBOperator) -> MBOperator {
    vonneumann_rhs(cfg, g).scale(C64::new(-1.0, 0.0))
}

/// `Tr_{s+1} (-N_int(i, s+1)) F_{s+1} = -i Tr_{s+1} [Φ(i, s+1), F_{s+1}]`,
/// fused with the partial trace over the last label.
pub fn traced_interaction(cfg: &ModelConfig, i: usize, f_next: &MBOperator) -> MBOperator {
    let s1 = f_next.particles();
    debug_assert!(s1 >= 2 && i < s1);
    let s = s1 - 1;
    let d = f_next.one_particle_dim();
    let dim = d.pow(s as u32);
    let m = f_next.matrix();
    let mut out = Array2::<C64>::zeros((dim, dim));
    let minus_i = C64::new(0.0, -1.0);
    for a in 0..dim {
        let ai = digit(a, d, s, i);
        for b in 0..dim {
            let bi = digit(b, d, s, i);
            let mut acc = C64::new(0.0, 0.0);
            for c in 0..d {
                let delta = cfg.pair_value(ai, c) - cfg.pair_value(bi, c);
                if delta != 0.0 {
                    acc += C64::new(delta, 0.0) * m[[a * d + c, b * d + c]];
                }
            }
            out[[a, b]] = minus_i * acc;
        }
    }
    MBOperator::new(s, d, out).expect("shape preserved")
}

/// Trace-norm residual of the Duhamel identity
/// `(G_s(-t) - Π_l G_1(-t,l)) f = ε ∫_0^t dτ Π_l G_1(-t+τ,l) (-Σ_{i<j} N_int(i,j)) G_s(-τ) f`,
/// with the integral evaluated by composite Gauss-Legendre doubling.
pub fn duhamel_residual(s: usize, t: f64, f: &MBOperator, cfg: &ModelConfig) -> Result<f64> {
    if f.particles() != s {
        return Err(Error::DimensionMismatch(format!(
            "operator on {} particles, expected {s}",
            f.particles()
        )));
    }
    let d = cfg.d();
    let prop_s = Propagator::new(s, cfg)?;
    let prop_1 = Propagator::new(1, cfg)?;

    let free_flow = |op: &MBOperator, tau: f64| -> Result<MBOperator> {
        // Π_l G_1(tau, l): conjugation by the s-fold tensor power of e^{i tau K}.
        let u1 = prop_1.unitary(tau);
        let mut u = Array2::<C64>::eye(1);
        for _ in 0..s {
            u = ndarray::linalg::kron(&u, &u1);
        }
        let m = u.dot(op.matrix()).dot(&u.t().mapv(|z| z.conj()));
        MBOperator::new(s, d, m)
    };

    let lhs = prop_s.evolve_state(f, t)?.sub(&free_flow(f, -t)?);

    let integrand = |tau: f64| -> MBOperator {
        let evolved = prop_s.evolve_state(f, tau).expect("dims match");
        let mut acc = MBOperator::zeros(s, d);
        for i in 1..=s {
            for j in (i + 1)..=s {
                acc = acc.add(&pair_commutator(cfg, i, j, &evolved));
            }
        }
        // (-Σ N_int) X = -i Σ [Φ, X]
        let kicked = acc.scale(C64::new(0.0, -1.0));
        free_flow(&kicked, -t + tau).expect("dims match")
    };

    let rule = Doubling { base_nodes: 32, tol: 1e-11, max_doublings: 5 };
    let integral = rule.integrate(
        0.0,
        t,
        integrand,
        || MBOperator::zeros(s, d),
        |acc, w, v| acc.add_assign_scaled(C64::new(w, 0.0), v),
        |a, b| a.max_abs_diff(b),
    );
    let rhs = integral.scale_re(cfg.epsilon());
    Ok(trace_norm(&lhs.sub(&rhs)))
}
