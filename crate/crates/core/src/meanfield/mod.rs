//! Mean-field (ε → 0) limit experiments: the quantum Vlasov equation, chaos
//! propagation sweeps against the N-particle hierarchy, vanishing of scaled
//! correlation operators, the limit hierarchies on both the state and the
//! observable side, and the grid-based Hartree / nonlinear Schrödinger
//! solver in [`grid`].
//!
//! The scaling family is `ε = 1/N` with product initial sectors
//! `D_N = ρ^{⊗N}`, for which `ε F_1(0) = ρ` exactly and
//! `ε^s F_s(0) → ρ^{⊗s}` with an explicit combinatorial defect.

pub mod grid;

use ndarray::Array2;

use crate::dynamics::{pair_commutator, Propagator};
use crate::error::{Error, Result};
use crate::hierarchies::{
    hierarchy_ode_oracle, marginals_from_sector, time_ordered_chain, ChainFlow, MarginalSequence,
};
use crate::model::ModelConfig;
use crate::ode::{integrate_path, uniform_times, OdeOptions};
use crate::operator::{partial_trace, tensor_embed, trace_norm, MBOperator};
use crate::quad::gauss_legendre_on;
use crate::sequence::factorial;
use crate::C64;

/// Parameters of a mean-field scaling sweep: couplings in strictly
/// decreasing order, the marginal order under test, and the time horizon.
#[derive(Clone, Debug)]
pub struct ScalingSweep {
    pub epsilons: Vec<f64>,
    pub s: usize,
    pub horizon: f64,
}

impl ScalingSweep {
    pub fn new(epsilons: Vec<f64>, s: usize, horizon: f64) -> Result<Self> {
        if epsilons.windows(2).any(|w| w[1] >= w[0]) || epsilons.iter().any(|&e| e <= 0.0) {
            return Err(Error::InvalidModel(
                "sweep couplings must be positive and strictly decreasing".into(),
            ));
        }
        Ok(Self { epsilons, s, horizon })
    }
}

/// Quantum Vlasov right-hand side
/// `∂_t f = -N_0(1) f + Tr_2 (-N_int(1,2)) f ⊗ f`
/// with unit mean-field coupling (the `ε` of the model plays no role here).
///
/// For the diagonal pair potential the traced term collapses to
/// `-i [V_mf, f]` with `V_mf(x) = Σ_y φ(x,y) f(y,y)`.
pub fn vlasov_rhs(f1: &MBOperator, cfg: &ModelConfig) -> MBOperator {
    let d = cfg.d();
    let m = f1.matrix();
    let mut v = vec![C64::new(0.0, 0.0); d];
    for (x, slot) in v.iter_mut().enumerate() {
        let mut acc = C64::new(0.0, 0.0);
        for c in 0..d {
            acc += C64::new(cfg.pair_value(x, c), 0.0) * m[[c, c]];
        }
        *slot = acc;
    }
    let mut out = Array2::<C64>::zeros((d, d));
    for a in 0..d {
        for b in 0..d {
            out[[a, b]] = (v[a] - v[b]) * m[[a, b]];
        }
    }
    let meanfield = MBOperator::new(1, d, out).expect("shape preserved");
    let mut rhs = crate::dynamics::one_site_commutator(cfg.kinetic(), 1, f1);
    rhs = rhs.add(&meanfield);
    rhs.scale(C64::new(0.0, -1.0))
}

/// Trajectory of the quantum Vlasov equation with conservation monitors.
#[derive(Clone, Debug)]
pub struct VlasovTrajectory {
    pub times: Vec<f64>,
    pub states: Vec<MBOperator>,
    pub max_trace_drift: f64,
    /// Max drift of `Tr f^2` from its initial value (purity is conserved by
    /// the self-consistent unitary flow; rank-one data stays rank-one).
    pub max_purity_drift: f64,
}

/// Integrate the Vlasov equation by adaptive RK4, sampling a uniform grid.
pub fn vlasov_solve(
    f1_0: &MBOperator,
    t_end: f64,
    cfg: &ModelConfig,
    samples: usize,
    opts: &OdeOptions,
) -> Result<VlasovTrajectory> {
    let d = f1_0.one_particle_dim();
    let grid_times = uniform_times(0.0, t_end, samples.max(1));
    let rhs = |_t: f64, y: &Array2<C64>| -> Array2<C64> {
        let op = MBOperator::new(1, d, y.clone()).expect("shape invariant");
        vlasov_rhs(&op, cfg).into_matrix()
    };
    let path = integrate_path(&f1_0.matrix().clone(), 0.0, &grid_times, opts, rhs)?;
    let mut times = vec![0.0];
    times.extend_from_slice(&grid_times);
    let mut states = vec![f1_0.clone()];
    for m in path {
        states.push(MBOperator::new(1, d, m)?.with_hermitian_hint(true));
    }
    let tr0 = f1_0.trace().re;
    let purity0 = f1_0.matmul(f1_0).trace().re;
    let mut max_trace_drift = 0.0_f64;
    let mut max_purity_drift = 0.0_f64;
    for st in &states {
        max_trace_drift = max_trace_drift.max((st.trace().re - tr0).abs());
        max_purity_drift = max_purity_drift.max((st.matmul(st).trace().re - purity0).abs());
    }
    Ok(VlasovTrajectory { times, states, max_trace_drift, max_purity_drift })
}

/// `D_N = ρ^{⊗N}` marginals; the default initial family of the sweeps.
pub fn product_sector(rho: &MBOperator, n: usize) -> Result<MarginalSequence> {
    if rho.particles() != 1 {
        return Err(Error::DimensionMismatch("product sector seeds on one particle".into()));
    }
    marginals_from_sector(&rho.kron_power(n), n)
}

/// One cell of a chaos sweep.
#[derive(Clone, Copy, Debug)]
pub struct ChaosRow {
    pub n_particles: usize,
    pub epsilon: f64,
    pub residual: f64,
}

/// `‖ε^s F_s(t) - Π_j f_1(t, j)‖_tr`, with `F_s(t)` from the hierarchy ODE
/// oracle at coupling `ε` and `f_1(t)` from [`vlasov_solve`] seeded with
/// `ε F_1(0)`.
pub fn chaos_residual(
    epsilon: f64,
    s: usize,
    t: f64,
    builder: &dyn Fn(&ModelConfig) -> Result<MarginalSequence>,
    cfg: &ModelConfig,
) -> Result<f64> {
    Ok(chaos_residuals_multi(epsilon, &[s], t, builder, cfg)?[0])
}

/// [`chaos_residual`] for several marginal orders at once; the N-particle
/// hierarchy is integrated a single time and reused across orders.
pub fn chaos_residuals_multi(
    epsilon: f64,
    s_list: &[usize],
    t: f64,
    builder: &dyn Fn(&ModelConfig) -> Result<MarginalSequence>,
    cfg: &ModelConfig,
) -> Result<Vec<f64>> {
    let cfg_eps = cfg.with_epsilon(epsilon)?;
    let seq0 = builder(&cfg_eps)?;
    for &s in s_list {
        if s > seq0.s_max() {
            return Err(Error::MissingComponent(s));
        }
    }
    let f1_0 = seq0
        .get(1)
        .ok_or(Error::MissingComponent(1))?
        .scale_re(epsilon);
    let opts = OdeOptions::default();
    let seq_t = hierarchy_ode_oracle(&seq0, t, &cfg_eps, &opts)?;
    let f1_t = if t == 0.0 {
        f1_0.clone()
    } else {
        vlasov_solve(&f1_0, t, cfg, 1, &opts)?.states.pop().expect("sampled end state")
    };
    s_list
        .iter()
        .map(|&s| {
            let scaled = seq_t
                .get(s)
                .ok_or(Error::MissingComponent(s))?
                .scale_re(epsilon.powi(s as i32));
            Ok(trace_norm(&scaled.sub(&f1_t.kron_power(s))))
        })
        .collect()
}

/// Chaos residuals over the default `ε = 1/N`, `D_N = ρ^{⊗N}` family.
pub fn chaos_sweep(
    particle_numbers: &[usize],
    s: usize,
    t: f64,
    rho: &MBOperator,
    cfg: &ModelConfig,
) -> Result<Vec<ChaosRow>> {
    let mut rows = Vec::with_capacity(particle_numbers.len());
    for &n in particle_numbers {
        if n == 0 {
            return Err(Error::InvalidModel("particle number must be positive".into()));
        }
        let epsilon = 1.0 / n as f64;
        let builder = |_cfg: &ModelConfig| product_sector(rho, n);
        let residual = chaos_residual(epsilon, s, t, &builder, cfg)?;
        rows.push(ChaosRow { n_particles: n, epsilon, residual });
    }
    Ok(rows)
}

/// `‖ε^s G_s(t)‖_tr` over a coupling sweep, with `G_1(0) = ρ/ε` so that
/// `ε G_1(0) → ρ`. Decreases monotonically as `ε` falls.
pub fn correlation_vanishing(
    sweep: &ScalingSweep,
    t: f64,
    rho: &MBOperator,
    n_max: usize,
    cfg: &ModelConfig,
) -> Result<Vec<(f64, f64)>> {
    let mut rows = Vec::with_capacity(sweep.epsilons.len());
    for &eps in &sweep.epsilons {
        let cfg_eps = cfg.with_epsilon(eps)?;
        let g1 = rho.scale_re(1.0 / eps);
        let g_s = crate::hierarchies::correlation_series(t, sweep.s, &g1, n_max, &cfg_eps)?;
        rows.push((eps, eps.powi(sweep.s as i32) * trace_norm(&g_s)));
    }
    Ok(rows)
}

/// Lattice site carrying the largest occupation (diagonal entry); ties
/// resolve to the lowest site.
pub fn dominant_site(f: &MBOperator) -> usize {
    let m = f.matrix();
    let mut best = 0;
    let mut best_val = f64::NEG_INFINITY;
    for x in 0..f.dim() {
        let v = m[[x, x]].re;
        if v > best_val {
            best_val = v;
            best = x;
        }
    }
    best
}

/// Least-squares fit of `ln y` against `ln x`; returns `(slope, r²)`.
pub fn log_log_slope(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    assert!(xs.len() == ys.len() && xs.len() >= 2);
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ly.iter().map(|y| (y - my).powi(2)).sum();
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 { 1.0 } else { (sxy * sxy) / (sxx * syy) };
    (slope, r2)
}

fn free_forward_flow_on(
    op: &MBOperator,
    labels: &[usize],
    tau: f64,
    prop1: &Propagator,
) -> MBOperator {
    let s = op.particles();
    let d = op.one_particle_dim();
    let u1 = prop1.unitary(tau);
    let eye = Array2::<C64>::eye(d);
    let mut u = Array2::<C64>::eye(1);
    for pos in 1..=s {
        let factor = if labels.contains(&pos) { &u1 } else { &eye };
        u = ndarray::linalg::kron(&u, factor);
    }
    let m = u.dot(op.matrix()).dot(&u.t().mapv(|z| z.conj()));
    MBOperator::new(s, d, m).expect("shape preserved")
}

/// Mean-field limit of additive-type observables: the solution
/// `g_s^{(1)}(t)` of the dual Vlasov hierarchy with initial data
/// `(0, g_1, 0, …)`, evaluated by nested quadrature of the `s-1` time-ordered
/// interaction insertions over free flows.
pub fn dual_vlasov_additive(
    t: f64,
    s: usize,
    g1_0: &MBOperator,
    cfg: &ModelConfig,
    nodes: usize,
) -> Result<MBOperator> {
    if g1_0.particles() != 1 {
        return Err(Error::DimensionMismatch("additive data is a one-particle operator".into()));
    }
    if s == 0 {
        return Err(Error::DimensionMismatch("observable order must be at least 1".into()));
    }
    // the expansion nests s-1 time integrals; cost explodes past s = 3
    if s > 3 {
        return Err(Error::UnsupportedOrder(s));
    }
    let prop1 = Propagator::new(1, cfg)?;
    let labels: Vec<usize> = (1..=s).collect();

    fn rec(
        labels: &[usize],
        upper: f64,
        g1: &MBOperator,
        s_total: usize,
        cfg: &ModelConfig,
        prop1: &Propagator,
        nodes: usize,
    ) -> Result<MBOperator> {
        if labels.len() == 1 {
            let embedded = tensor_embed(g1, labels, s_total)?;
            return Ok(free_forward_flow_on(&embedded, labels, upper, prop1));
        }
        let d = cfg.d();
        let mut acc = MBOperator::zeros(s_total, d);
        for (x, w) in gauss_legendre_on(nodes, 0.0, upper) {
            let mut kicked = MBOperator::zeros(s_total, d);
            for &j1 in labels {
                let rest: Vec<usize> = labels.iter().copied().filter(|&l| l != j1).collect();
                let inner = rec(&rest, x, g1, s_total, cfg, prop1, nodes)?;
                // Σ_{j2 ≠ j1} N_int(j1, j2) inner, with N_int g = i [Φ, g]
                for &j2 in labels {
                    if j2 == j1 {
                        continue;
                    }
                    kicked.add_assign_scaled(
                        C64::new(0.0, 1.0),
                        &pair_commutator(cfg, j1, j2, &inner),
                    );
                }
            }
            let flowed = free_forward_flow_on(&kicked, labels, upper - x, prop1);
            acc.add_assign_scaled(C64::new(w, 0.0), &flowed);
        }
        Ok(acc)
    }

    rec(&labels, t, g1_0, s, cfg, &prop1, nodes)
}

/// Series solution of the (state-side) Vlasov hierarchy on chaotic data:
/// free flows with time-ordered interaction insertions; with product initial
/// data the result equals `Π_j f_1(t, j)` up to quadrature and truncation.
pub fn vlasov_hierarchy_series(
    t: f64,
    s: usize,
    f1_0: &MBOperator,
    order: usize,
    cfg: &ModelConfig,
    nodes: usize,
) -> Result<MBOperator> {
    if f1_0.particles() != 1 {
        return Err(Error::DimensionMismatch("chaotic data seeds on one particle".into()));
    }
    if order > 3 {
        return Err(Error::UnsupportedOrder(order));
    }
    let keep: Vec<usize> = (1..=s).collect();
    let mut acc = MBOperator::zeros(s, f1_0.one_particle_dim());
    for n in 0..=order {
        let operand = f1_0.kron_power(s + n);
        let chain = time_ordered_chain(s, n, t, &operand, nodes, cfg, ChainFlow::Free)?;
        let term = partial_trace(&chain, &keep)?;
        acc = acc.add(&term);
    }
    Ok(acc.with_hermitian_hint(true))
}

/// Pairing of an additive observable's dual-Vlasov evolution against chaotic
/// initial data, truncated at `s_max`:
/// `Σ_s (1/s!) Tr g_s^{(1)}(t) Π f_1(0, i)`.
pub fn dual_vlasov_pairing(
    t: f64,
    s_max: usize,
    g1_0: &MBOperator,
    f1_0: &MBOperator,
    cfg: &ModelConfig,
    nodes: usize,
) -> Result<f64> {
    let mut acc = 0.0;
    for s in 1..=s_max {
        let g_s = dual_vlasov_additive(t, s, g1_0, cfg, nodes)?;
        let prod = f1_0.kron_power(s);
        acc += g_s.matmul(&prod).trace().re / factorial(s);
    }
    Ok(acc)
}
