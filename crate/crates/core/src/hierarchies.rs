//! Series solutions of the BBGKY hierarchy for marginal states, the dual
//! hierarchy for marginal observables, the mean-value pairing between them,
//! marginal correlation operators, cluster expansions, and independent ODE
//! oracles for both hierarchies.

use std::collections::BTreeMap;

use itertools::Itertools;
use ndarray::Array2;

use crate::cumulants::{cumulant_backward, cumulant_forward};
use crate::dynamics::{heisenberg_rhs, pair_commutator, traced_interaction, vonneumann_rhs, Propagator};
use crate::error::{Error, Result};
use crate::model::ModelConfig;
use crate::ode::{integrate_path, OdeOptions, OdeState};
use crate::operator::{partial_trace, tensor_embed, trace_norm, MBOperator};
use crate::partitions::{enumerate_partitions, single_elements, PartitionElement};
use crate::sequence::{factorial, OperatorSequence};
use crate::C64;

/// Normalization convention of a sequence of marginal density operators.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Convention {
    /// Components stored up to `s_max` with no statement beyond.
    GrandCanonical,
    /// `F_s = 0` for `s > N`; the series solutions terminate exactly.
    FiniteSector(usize),
}

/// Sequence `(F_0, F_1, …)` of marginal density operators, `F_0` scalar.
#[derive(Clone, Debug)]
pub struct MarginalSequence {
    items: Vec<MBOperator>,
    convention: Convention,
}

impl MarginalSequence {
    pub fn new(items: Vec<MBOperator>, convention: Convention) -> Result<Self> {
        if items.is_empty() {
            return Err(Error::MissingComponent(0));
        }
        let d = items[0].one_particle_dim();
        for (k, f) in items.iter().enumerate() {
            if f.particles() != k || f.one_particle_dim() != d {
                return Err(Error::DimensionMismatch(format!(
                    "slot {k} holds a {}-particle operator (d={})",
                    f.particles(),
                    f.one_particle_dim()
                )));
            }
        }
        Ok(Self { items, convention })
    }

    pub fn convention(&self) -> Convention {
        self.convention
    }

    pub fn d(&self) -> usize {
        self.items[0].one_particle_dim()
    }

    pub fn s_max(&self) -> usize {
        self.items.len() - 1
    }

    pub fn get(&self, s: usize) -> Option<&MBOperator> {
        self.items.get(s)
    }

    pub fn items(&self) -> &[MBOperator] {
        &self.items
    }

    /// `Tr F_1`, the mean particle number.
    pub fn mean_particle_number(&self) -> f64 {
        self.items.get(1).map(|f| f.trace().re).unwrap_or(0.0)
    }

    /// `Σ_n alpha^n ‖F_n‖_tr` over the stored components.
    pub fn alpha_norm(&self, alpha: f64) -> f64 {
        self.items
            .iter()
            .enumerate()
            .map(|(n, f)| alpha.powi(n as i32) * trace_norm(f))
            .sum()
    }

    /// Check Hermiticity, positivity, and permutation symmetry of every
    /// stored component.
    pub fn validate_state(&self, tol: f64) -> Result<()> {
        for f in &self.items {
            let h = f.hermiticity_defect();
            if h > tol {
                return Err(Error::NotHermitian(h));
            }
            let min = f.min_eigenvalue()?;
            if min < -tol {
                return Err(Error::NotPositive(min));
            }
            let p = f.permutation_defect()?;
            if p > tol.max(1e-8) {
                return Err(Error::NotPermutationSymmetric(p));
            }
        }
        Ok(())
    }
}

fn falling_factorial(n: usize, s: usize) -> f64 {
    (0..s).fold(1.0_f64, |acc, k| acc * (n - k) as f64)
}

/// Marginals of an `N`-particle density matrix:
/// `F_s = (N!/(N-s)!) Tr_{s+1..N} D_N` for `s <= N`, zero beyond, so that
/// `Tr F_1 = N` and the traced von Neumann flow reproduces the hierarchy
/// coupling `ε Σ_i Tr_{s+1}(-N_int(i, s+1)) F_{s+1}` with no leftover
/// combinatorial factor.
pub fn marginals_from_sector(d_n: &MBOperator, s_max: usize) -> Result<MarginalSequence> {
    let n = d_n.particles();
    let tr = d_n.trace();
    if (tr.re - 1.0).abs() > 1e-8 || tr.im.abs() > 1e-10 {
        return Err(Error::InvalidModel(format!("density trace is {tr}, expected 1")));
    }
    if d_n.hermiticity_defect() > 1e-8 {
        return Err(Error::NotHermitian(d_n.hermiticity_defect()));
    }
    let min = d_n.min_eigenvalue()?;
    if min < -1e-8 {
        return Err(Error::NotPositive(min));
    }
    let perm = d_n.permutation_defect()?;
    if perm > 1e-8 {
        return Err(Error::NotPermutationSymmetric(perm));
    }
    let mut items = Vec::with_capacity(s_max + 1);
    for s in 0..=s_max {
        if s > n {
            items.push(MBOperator::zeros(s, d_n.one_particle_dim()));
            continue;
        }
        let keep: Vec<usize> = (1..=s).collect();
        let reduced = partial_trace(d_n, &keep)?;
        items.push(reduced.scale_re(falling_factorial(n, s)).with_hermitian_hint(true));
    }
    MarginalSequence::new(items, Convention::FiniteSector(n))
}

/// Cumulant-series solution of the BBGKY hierarchy:
/// `F_s(t) = Σ_n (1/n!) Tr_{s+1..s+n} A_{1+n}(-t, {1..s}_1, s+1..s+n) F_{s+n}(0)`.
///
/// For finite-sector data the series terminates at `n = N - s` and is exact;
/// passing a smaller explicit truncation is an error. Non-terminating inputs
/// must pass an explicit `n_max`; the returned tail indicator is the trace
/// norm of the last evaluated term.
pub fn bbgky_series_with_tail(
    t: f64,
    s: usize,
    f0: &MarginalSequence,
    n_max: Option<usize>,
    cfg: &ModelConfig,
) -> Result<(MBOperator, f64)> {
    if s == 0 {
        let f = f0.get(0).cloned().unwrap_or_else(|| MBOperator::scalar(cfg.d(), 1.0.into()));
        return Ok((f, 0.0));
    }
    let order = match (f0.convention(), n_max) {
        (Convention::FiniteSector(n), given) => {
            if s > n {
                return Ok((MBOperator::zeros(s, f0.d()), 0.0));
            }
            let needed = n - s;
            match given {
                None => needed,
                Some(k) if k < needed => {
                    return Err(Error::TruncationInsufficient { given: k, needed })
                }
                Some(_) => needed,
            }
        }
        (Convention::GrandCanonical, None) => return Err(Error::TruncationRequired),
        (Convention::GrandCanonical, Some(k)) => k,
    };
    let keep: Vec<usize> = (1..=s).collect();
    let mut acc = MBOperator::zeros(s, f0.d());
    let mut tail = 0.0_f64;
    for n in 0..=order {
        let operand = f0.get(s + n).ok_or(Error::MissingComponent(s + n))?;
        if operand.max_abs() == 0.0 {
            tail = 0.0;
            continue;
        }
        let mut elements = vec![PartitionElement::Cluster((1..=s).collect())];
        elements.extend((s + 1..=s + n).map(PartitionElement::Single));
        let cum = cumulant_backward(t, &elements, operand, cfg)?;
        let term = partial_trace(&cum, &keep)?.scale_re(1.0 / factorial(n));
        tail = trace_norm(&term);
        acc = acc.add(&term);
    }
    Ok((acc.with_hermitian_hint(true), tail))
}

/// [`bbgky_series_with_tail`] without the tail indicator.
pub fn bbgky_series(
    t: f64,
    s: usize,
    f0: &MarginalSequence,
    n_max: Option<usize>,
    cfg: &ModelConfig,
) -> Result<MBOperator> {
    bbgky_series_with_tail(t, s, f0, n_max, cfg).map(|(f, _)| f)
}

/// Interaction flavor of the time-ordered chain.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum ChainFlow {
    Interacting,
    Free,
}

/// Evaluates the `n`-fold time-ordered insertion chain
/// `G(-t+t_1) Σ(-N_int(i_1, s+1)) G(-t_1+t_2) … Σ(-N_int(i_n, s+n)) G(-t_n) F`
/// on the `(s+n)`-particle space by nested Gauss-Legendre quadrature, where
/// `G` at step `m` flows the first `s+m-1` labels (interacting or free).
pub(crate) fn time_ordered_chain(
    s: usize,
    n: usize,
    t: f64,
    operand: &MBOperator,
    nodes: usize,
    cfg: &ModelConfig,
    flow: ChainFlow,
) -> Result<MBOperator> {
    let top = s + n;
    if operand.particles() != top {
        return Err(Error::DimensionMismatch(format!(
            "chain operand on {} particles, expected {top}",
            operand.particles()
        )));
    }
    let d = cfg.d();
    let dim = cfg.hilbert_dim(top)?;
    let mut props: BTreeMap<usize, Propagator> = BTreeMap::new();
    let sizes: Vec<usize> = match flow {
        ChainFlow::Interacting => (s..=top).collect(),
        ChainFlow::Free => vec![1],
    };
    for k in sizes {
        props.insert(k, Propagator::new(k, cfg)?);
    }

    struct Chain<'a> {
        s: usize,
        n: usize,
        nodes: usize,
        cfg: &'a ModelConfig,
        d: usize,
        dim: usize,
        operand: &'a MBOperator,
        flow: ChainFlow,
        props: BTreeMap<usize, Propagator>,
    }

    impl Chain<'_> {
        // Conjugate by the flow unitary of the first `k` labels for time `tau`.
        fn apply_flow(&self, k: usize, tau: f64, m: &Array2<C64>) -> Array2<C64> {
            let small = match self.flow {
                ChainFlow::Interacting => self.props[&k].unitary(tau),
                ChainFlow::Free => {
                    let u1 = self.props[&1].unitary(tau);
                    let mut u = Array2::<C64>::eye(1);
                    for _ in 0..k {
                        u = ndarray::linalg::kron(&u, &u1);
                    }
                    u
                }
            };
            let pad = Array2::<C64>::eye(self.dim / small.nrows());
            let full = ndarray::linalg::kron(&small, &pad);
            full.dot(m).dot(&full.t().mapv(|z| z.conj()))
        }

        fn rec(&self, m: usize, t_prev: f64) -> Array2<C64> {
            if m > self.n {
                return self.apply_flow(self.s + self.n, -t_prev, self.operand.matrix());
            }
            let mut acc = Array2::<C64>::zeros((self.dim, self.dim));
            for (x, w) in crate::quad::gauss_legendre_on(self.nodes, 0.0, t_prev) {
                let inner = self.rec(m + 1, x);
                let inner_op =
                    MBOperator::new(self.s + self.n, self.d, inner).expect("chain keeps shape");
                let mut kicked = MBOperator::zeros(self.s + self.n, self.d);
                for i in 1..=(self.s + m - 1) {
                    kicked = kicked.add(&pair_commutator(self.cfg, i, self.s + m, &inner_op));
                }
                let kicked = kicked.scale(C64::new(0.0, -1.0));
                let flowed = self.apply_flow(self.s + m - 1, -t_prev + x, kicked.matrix());
                acc.zip_mut_with(&flowed, |a, b| *a += C64::new(w, 0.0) * b);
            }
            acc
        }
    }

    let chain = Chain { s, n, nodes, cfg, d, dim, operand, flow, props };
    let out = chain.rec(1, t);
    MBOperator::new(top, d, out)
}

/// Perturbation (iteration) series in the coupling: order-`k` truncation of
/// the nested Duhamel expansion of the BBGKY solution. Deviates from the
/// cumulant series by `O(ε^{k+1})`.
pub fn bbgky_iteration(
    t: f64,
    s: usize,
    f0: &MarginalSequence,
    order: usize,
    cfg: &ModelConfig,
    nodes: usize,
) -> Result<MBOperator> {
    if s == 0 {
        return Err(Error::DimensionMismatch("iteration series needs s >= 1".into()));
    }
    // nested quadrature cost grows as nodes^order
    if order > 4 {
        return Err(Error::UnsupportedOrder(order));
    }
    let keep: Vec<usize> = (1..=s).collect();
    let mut acc = MBOperator::zeros(s, f0.d());
    for n in 0..=order {
        let operand = match f0.get(s + n) {
            Some(f) => f.clone(),
            None => match f0.convention() {
                Convention::FiniteSector(nn) if s + n > nn => MBOperator::zeros(s + n, f0.d()),
                _ => return Err(Error::MissingComponent(s + n)),
            },
        };
        if operand.max_abs() == 0.0 {
            continue;
        }
        let chain = time_ordered_chain(s, n, t, &operand, nodes, cfg, ChainFlow::Interacting)?;
        let term = partial_trace(&chain, &keep)?.scale_re(cfg.epsilon().powi(n as i32));
        acc = acc.add(&term);
    }
    Ok(acc.with_hermitian_hint(true))
}

/// Cumulant-series solution of the dual hierarchy for marginal observables:
/// `G_s(t) = Σ_{n=0}^{s} 1/(s-n)! Σ_{j_1 ≠ … ≠ j_{s-n}} A_{1+n}(t, (Y\X)_1, X) G_{s-n}(0, Y\X)`,
/// a finite sum that needs no truncation.
pub fn dual_series(
    t: f64,
    s: usize,
    g0: &OperatorSequence,
    cfg: &ModelConfig,
) -> Result<MBOperator> {
    if s == 0 {
        return g0.component(0).cloned();
    }
    let d = cfg.d();
    let mut acc = MBOperator::zeros(s, d);
    for n in 0..=s {
        let m = s - n; // particles carried by the initial component
        let g_m = g0.component(m)?;
        if g_m.max_abs() == 0.0 {
            continue;
        }
        let coeff = 1.0 / factorial(m);
        for inj in (1..=s).permutations(m) {
            let rest: Vec<usize> = (1..=s).filter(|l| !inj.contains(l)).collect();
            let operand = tensor_embed(g_m, &inj, s)?;
            let mut elements = vec![PartitionElement::Cluster(inj.clone())];
            elements.extend(rest.iter().copied().map(PartitionElement::Single));
            let term = cumulant_forward(t, &elements, &operand, cfg)?;
            acc.add_assign_scaled(C64::new(coeff, 0.0), &term);
        }
    }
    Ok(acc.with_hermitian_hint(true))
}

/// Mean-value pairing `(G, F) = Σ_s (1/s!) Tr G_s F_s`; real for Hermitian
/// arguments (the imaginary part is rounding noise and is dropped).
pub fn pairing(g: &OperatorSequence, f: &MarginalSequence) -> f64 {
    let upto = g.len().min(f.items().len());
    let mut acc = C64::new(0.0, 0.0);
    for s in 0..upto {
        let gs = &g.items()[s];
        let fs = &f.items()[s];
        acc += gs.matmul(fs).trace() / factorial(s);
    }
    acc.re
}

/// Marginal correlation operators
/// `G_s(t) = Σ_n (1/n!) Tr_{s+1..s+n} A_{s+n}(-t, 1..s+n) Π_i F_1(0, i)`
/// (plain, un-clustered cumulants on product data).
pub fn correlation_series(
    t: f64,
    s: usize,
    f1_0: &MBOperator,
    n_max: usize,
    cfg: &ModelConfig,
) -> Result<MBOperator> {
    if f1_0.particles() != 1 {
        return Err(Error::DimensionMismatch("correlation series seeds on a one-particle operator".into()));
    }
    let keep: Vec<usize> = (1..=s).collect();
    let mut acc = MBOperator::zeros(s, f1_0.one_particle_dim());
    for n in 0..=n_max {
        let k = s + n;
        let operand = f1_0.kron_power(k);
        let cum = cumulant_backward(t, &single_elements(k), &operand, cfg)?;
        let term = partial_trace(&cum, &keep)?.scale_re(1.0 / factorial(n));
        acc = acc.add(&term);
    }
    Ok(acc.with_hermitian_hint(true))
}

/// Cluster expansion `F_s = Π F_1 + Σ_{P, |P| ≠ s} Π_{X_i ∈ P} G_{|X_i|}`,
/// with `G_1 = F_1` and correlation operators supplied per block size.
pub fn cluster_assemble(
    f1: &MBOperator,
    correlations: &BTreeMap<usize, MBOperator>,
    s: usize,
) -> Result<MBOperator> {
    let d = f1.one_particle_dim();
    let mut acc = f1.kron_power(s);
    if s < 2 {
        return Ok(acc);
    }
    for partition in enumerate_partitions(&single_elements(s))? {
        if partition.block_count() == s {
            continue;
        }
        let dim = d.pow(s as u32);
        let mut product = Array2::<C64>::eye(dim);
        for b in 0..partition.block_count() {
            let labels = partition.block_labels(b);
            let factor = if labels.len() == 1 {
                tensor_embed(f1, &labels, s)?
            } else {
                let g = correlations
                    .get(&labels.len())
                    .ok_or(Error::MissingComponent(labels.len()))?;
                tensor_embed(g, &labels, s)?
            };
            product = product.dot(factor.matrix());
        }
        acc = acc.add(&MBOperator::new(s, d, product)?);
    }
    Ok(acc)
}

// ---------------------------------------------------------------------------
// ODE oracles
// ---------------------------------------------------------------------------

/// Stack of matrices integrated as one ODE state.
#[derive(Clone)]
pub(crate) struct MatSeq(pub(crate) Vec<Array2<C64>>);

impl OdeState for MatSeq {
    fn axpy(&mut self, a: f64, other: &Self) {
        for (x, y) in self.0.iter_mut().zip(other.0.iter()) {
            x.zip_mut_with(y, |p, q| *p += a * q);
        }
    }

    fn scale(&mut self, a: f64) {
        for x in self.0.iter_mut() {
            x.map_inplace(|p| *p *= a);
        }
    }

    fn norm(&self) -> f64 {
        self.0
            .iter()
            .flat_map(|x| x.iter())
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }
}

/// Independent integrator for the BBGKY hierarchy on a stored-finite sequence:
/// `dF_s/dt = -N_s F_s + ε Σ_i Tr_{s+1}(-N_int(i, s+1)) F_{s+1}`,
/// with `F` beyond the stored range treated as zero (exact for a finite
/// sector integrated to its particle number). Returns the sequence at each
/// requested time.
pub fn hierarchy_ode_path(
    f0: &MarginalSequence,
    times: &[f64],
    cfg: &ModelConfig,
    opts: &OdeOptions,
) -> Result<Vec<MarginalSequence>> {
    let s_max = f0.s_max();
    let state0 = MatSeq(
        (1..=s_max)
            .map(|s| f0.get(s).expect("validated sequence").matrix().clone())
            .collect(),
    );
    let d = f0.d();
    let eps = cfg.epsilon();
    let rhs = |_t: f64, y: &MatSeq| -> MatSeq {
        let ops: Vec<MBOperator> = y
            .0
            .iter()
            .enumerate()
            .map(|(idx, m)| MBOperator::new(idx + 1, d, m.clone()).expect("shape invariant"))
            .collect();
        let mut out = Vec::with_capacity(ops.len());
        for (idx, f_s) in ops.iter().enumerate() {
            let s = idx + 1;
            let mut r = vonneumann_rhs(cfg, f_s);
            if eps != 0.0 {
                if let Some(f_next) = ops.get(idx + 1) {
                    for i in 1..=s {
                        r.add_assign_scaled(C64::new(eps, 0.0), &traced_interaction(cfg, i, f_next));
                    }
                }
            }
            out.push(r.into_matrix());
        }
        MatSeq(out)
    };
    let path = integrate_path(&state0, 0.0, times, opts, rhs)?;
    path.into_iter()
        .map(|state| {
            let mut items = vec![f0.get(0).expect("slot zero").clone()];
            for (idx, m) in state.0.into_iter().enumerate() {
                items.push(MBOperator::new(idx + 1, d, m)?.with_hermitian_hint(true));
            }
            MarginalSequence::new(items, f0.convention())
        })
        .collect()
}

/// [`hierarchy_ode_path`] at a single time.
pub fn hierarchy_ode_oracle(
    f0: &MarginalSequence,
    t: f64,
    cfg: &ModelConfig,
    opts: &OdeOptions,
) -> Result<MarginalSequence> {
    Ok(hierarchy_ode_path(f0, &[t], cfg, opts)?.pop().expect("one sample"))
}

/// Independent integrator for the dual hierarchy:
/// `dG_s/dt = N_s G_s + ε Σ_{j1 ≠ j2} N_int(j1, j2) G_{s-1}(Y\{j1})`.
/// The coupling runs downward, so any stored range is closed.
pub fn dual_ode_oracle(
    g0: &OperatorSequence,
    t: f64,
    cfg: &ModelConfig,
    opts: &OdeOptions,
) -> Result<OperatorSequence> {
    let s_max = g0.len() - 1;
    let d = cfg.d();
    let state0 = MatSeq((1..=s_max).map(|s| g0.items()[s].matrix().clone()).collect());
    let eps = cfg.epsilon();
    let rhs = |_t: f64, y: &MatSeq| -> MatSeq {
        let ops: Vec<MBOperator> = y
            .0
            .iter()
            .enumerate()
            .map(|(idx, m)| MBOperator::new(idx + 1, d, m.clone()).expect("shape invariant"))
            .collect();
        let mut out = Vec::with_capacity(ops.len());
        for (idx, g_s) in ops.iter().enumerate() {
            let s = idx + 1;
            let mut r = heisenberg_rhs(cfg, g_s);
            if eps != 0.0 && s >= 2 {
                let g_prev = &ops[idx - 1];
                for j1 in 1..=s {
                    let rest: Vec<usize> = (1..=s).filter(|&l| l != j1).collect();
                    let embedded = tensor_embed(g_prev, &rest, s).expect("labels valid");
                    for j2 in 1..=s {
                        if j2 == j1 {
                            continue;
                        }
                        // N_int(j1, j2) g = i [Φ(j1, j2), g]
                        r.add_assign_scaled(
                            C64::new(0.0, eps),
                            &pair_commutator(cfg, j1, j2, &embedded),
                        );
                    }
                }
            }
            out.push(r.into_matrix());
        }
        MatSeq(out)
    };
    let state = integrate_path(&state0, 0.0, &[t], opts, rhs)?.pop().expect("one sample");
    let mut items = vec![g0.items()[0].clone()];
    for (idx, m) in state.0.into_iter().enumerate() {
        items.push(MBOperator::new(idx + 1, d, m)?.with_hermitian_hint(true));
    }
    OperatorSequence::new(items, g0.gamma())
}
