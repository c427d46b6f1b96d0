//! Generalized quantum kinetic equation for the one-particle density
//! operator: scattering operators `Ĝ_n(t)`, their cumulants, the low-order
//! evolution operators `V_1` / `V_2` (in both printed forms), the functionals
//! `F_s(t | F_1(t))`, the cumulant series for `F_1(t)`, and the closed
//! nonlinear right-hand side integrated in time.

use ndarray::Array2;

use crate::cumulants::{cumulant_backward, cumulant_with, BlockFlavor, BlockUnitaries};
use crate::dynamics::{pair_commutator, vonneumann_rhs, Propagator};
use crate::error::{Error, Result};
use crate::model::ModelConfig;
use crate::ode::{integrate_path, uniform_times, OdeOptions, OdeState};
use crate::operator::{partial_trace, trace_norm, MBOperator};
use crate::partitions::PartitionElement;
use crate::sequence::factorial;
use crate::C64;

/// Convergence bound `e^{-1}` on `‖F_1(0)‖_tr` for the kinetic expansions.
pub fn norm_condition_bound() -> f64 {
    (-1.0_f64).exp()
}

/// The scattering operator `Ĝ_n(t): f ↦ G_n(-t) Π_i G_1(t, i) f` as a
/// reusable superoperator on `n`-particle operators. `Ĝ_1(t) = I`, and at
/// `ε = 0` every order is the identity.
pub struct ScatteringOperator {
    n: usize,
    d: usize,
    w: Array2<C64>,
}

impl ScatteringOperator {
    pub fn new(t: f64, n: usize, cfg: &ModelConfig) -> Result<Self> {
        if n == 0 {
            return Err(Error::UnsupportedOrder(0));
        }
        let interacting = Propagator::new(n, cfg)?.unitary(-t);
        let u1 = Propagator::new(1, cfg)?.unitary(t);
        let mut free = Array2::<C64>::eye(1);
        for _ in 0..n {
            free = ndarray::linalg::kron(&free, &u1);
        }
        Ok(Self { n, d: cfg.d(), w: interacting.dot(&free) })
    }

    pub fn order(&self) -> usize {
        self.n
    }

    pub fn apply(&self, f: &MBOperator) -> Result<MBOperator> {
        if f.particles() != self.n || f.one_particle_dim() != self.d {
            return Err(Error::DimensionMismatch(format!(
                "scattering operator of order {} applied to a {}-particle operand",
                self.n,
                f.particles()
            )));
        }
        let m = self.w.dot(f.matrix()).dot(&self.w.t().mapv(|z| z.conj()));
        Ok(MBOperator::new(self.n, self.d, m)?.with_hermitian_hint(f.hermitian_hint()))
    }
}

/// `Ĝ(t)` on a label subset of a larger operand (spectator labels untouched).
pub fn scattering_apply_at(
    t: f64,
    labels: &[usize],
    operand: &MBOperator,
    cfg: &ModelConfig,
) -> Result<MBOperator> {
    let mut cache = BlockUnitaries::new(cfg, operand.particles(), BlockFlavor::Scattering { t });
    let u = cache.embedded_unitary(labels)?;
    let m = u.dot(operand.matrix()).dot(&u.t().mapv(|z| z.conj()));
    MBOperator::new(operand.particles(), operand.one_particle_dim(), m)
}

/// Cumulant of scattering operators: the partition sum of
/// [`crate::cumulants::cumulant_backward`] with `Ĝ` blocks in place of `G`.
pub fn scattering_cumulant(
    t: f64,
    elements: &[PartitionElement],
    operand: &MBOperator,
    cfg: &ModelConfig,
) -> Result<MBOperator> {
    cumulant_with(BlockFlavor::Scattering { t }, elements, operand, cfg)
}

/// Which printed formula evaluates `V_2`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VForm {
    /// `V_1 = Â_1(t, Y_1)`, `V_2 = Â_2(t, Y_1, s+1) - Â_1(t, Y_1) Σ_j Â_2(t, j, s+1)`.
    Cumulant,
    /// `V_1 = Ĝ_s`, `V_2 = Ĝ_{s+1} - Ĝ_s Σ_j Ĝ_2(t, j, s+1) + (s-1) Ĝ_s`.
    Scattering,
}

/// Low-order evolution operator `V_{1+n}(t, {1..s}_1, s+1, …)` applied to an
/// `(s+n)`-particle operand. Only `n ∈ {0, 1}` are defined; higher orders
/// are an explicit unsupported-order error.
pub fn evolution_operator_v(
    t: f64,
    n: usize,
    s: usize,
    operand: &MBOperator,
    cfg: &ModelConfig,
    form: VForm,
) -> Result<MBOperator> {
    if operand.particles() != s + n {
        return Err(Error::DimensionMismatch(format!(
            "V_{} on cluster of {s} needs a {}-particle operand, got {}",
            n + 1,
            s + n,
            operand.particles()
        )));
    }
    let cluster: Vec<usize> = (1..=s).collect();
    match n {
        0 => scattering_apply_at(t, &cluster, operand, cfg),
        1 => {
            let extra = s + 1;
            match form {
                VForm::Cumulant => {
                    let mut elements = vec![PartitionElement::Cluster(cluster.clone())];
                    elements.push(PartitionElement::Single(extra));
                    let a2_clustered = scattering_cumulant(t, &elements, operand, cfg)?;
                    let mut inner = MBOperator::zeros(s + 1, cfg.d());
                    for j in 1..=s {
                        let pair = [PartitionElement::Single(j), PartitionElement::Single(extra)];
                        inner = inner.add(&scattering_cumulant(t, &pair, operand, cfg)?);
                    }
                    let outer = scattering_cumulant(
                        t,
                        &[PartitionElement::Cluster(cluster)],
                        &inner,
                        cfg,
                    )?;
                    Ok(a2_clustered.sub(&outer))
                }
                VForm::Scattering => {
                    let all: Vec<usize> = (1..=s + 1).collect();
                    let g_big = scattering_apply_at(t, &all, operand, cfg)?;
                    let mut inner = MBOperator::zeros(s + 1, cfg.d());
                    for j in 1..=s {
                        inner = inner.add(&scattering_apply_at(t, &[j, extra], operand, cfg)?);
                    }
                    let g_then = scattering_apply_at(t, &cluster, &inner, cfg)?;
                    let g_small = scattering_apply_at(t, &cluster, operand, cfg)?;
                    Ok(g_big.sub(&g_then).add(&g_small.scale_re(s as f64 - 1.0)))
                }
            }
        }
        k => Err(Error::UnsupportedOrder(k + 1)),
    }
}

/// Result of a kinetic expansion: the operator, the trace norm of the last
/// evaluated term (tail indicator), and whether the convergence condition
/// `‖F_1‖_tr < e^{-1}` held on the input.
#[derive(Clone, Debug)]
pub struct KineticEval {
    pub op: MBOperator,
    pub tail_trace_norm: f64,
    pub norm_condition_ok: bool,
}

/// Functional `F_s(t | F_1(t)) = Σ_n (1/n!) Tr_{s+1..s+n} V_{1+n}(t) Π_i F_1(t, i)`
/// truncated at `n_max ≤ 1` (higher `V` orders are not defined).
pub fn functional_fs(
    t: f64,
    s: usize,
    f1_t: &MBOperator,
    n_max: usize,
    cfg: &ModelConfig,
) -> Result<KineticEval> {
    functional_fs_dressed(t, s, f1_t, n_max, cfg, |product, _| product)
}

/// [`functional_fs`] with a hook that may replace the bare `k`-particle
/// product of `F_1(t)` by a correlation-dressed version before the evolution
/// operators act. The default is the pure product.
pub fn functional_fs_dressed(
    t: f64,
    s: usize,
    f1_t: &MBOperator,
    n_max: usize,
    cfg: &ModelConfig,
    dress: impl Fn(MBOperator, usize) -> MBOperator,
) -> Result<KineticEval> {
    if n_max > 1 {
        return Err(Error::UnsupportedOrder(n_max + 1));
    }
    let keep: Vec<usize> = (1..=s).collect();
    let mut acc = MBOperator::zeros(s, f1_t.one_particle_dim());
    let mut tail = 0.0;
    for n in 0..=n_max {
        let product = dress(f1_t.kron_power(s + n), s + n);
        let v = evolution_operator_v(t, n, s, &product, cfg, VForm::Cumulant)?;
        let term = partial_trace(&v, &keep)?.scale_re(1.0 / factorial(n));
        tail = trace_norm(&term);
        acc = acc.add(&term);
    }
    Ok(KineticEval {
        op: acc.with_hermitian_hint(true),
        tail_trace_norm: tail,
        norm_condition_ok: trace_norm(f1_t) < norm_condition_bound(),
    })
}

/// Series solution `F_1(t) = Σ_n (1/n!) Tr_{2..1+n} A_{1+n}(-t) Π_i F_1(0, i)`.
pub fn f1_series(
    t: f64,
    f1_0: &MBOperator,
    n_max: usize,
    cfg: &ModelConfig,
) -> Result<KineticEval> {
    if f1_0.particles() != 1 {
        return Err(Error::DimensionMismatch("series seeds on a one-particle operator".into()));
    }
    let mut acc = MBOperator::zeros(1, f1_0.one_particle_dim());
    let mut tail = 0.0;
    for n in 0..=n_max {
        let k = n + 1;
        let operand = f1_0.kron_power(k);
        let elements: Vec<PartitionElement> = (1..=k).map(PartitionElement::Single).collect();
        let cum = cumulant_backward(t, &elements, &operand, cfg)?;
        let term = partial_trace(&cum, &[1])?.scale_re(1.0 / factorial(n));
        tail = trace_norm(&term);
        acc = acc.add(&term);
    }
    Ok(KineticEval {
        op: acc.with_hermitian_hint(true),
        tail_trace_norm: tail,
        norm_condition_ok: trace_norm(f1_0) < norm_condition_bound(),
    })
}

/// Right-hand side of the generalized quantum kinetic equation:
/// `-N_1 F_1 + Σ_n (1/n!) Tr_{2..n+2} (-N_int(1,2)) V_{1+n}(t) Π_i F_1(t, i)`.
pub fn gke_rhs(t: f64, f1: &MBOperator, n_max: usize, cfg: &ModelConfig) -> Result<MBOperator> {
    if n_max > 1 {
        return Err(Error::UnsupportedOrder(n_max + 1));
    }
    let mut acc = vonneumann_rhs(cfg, f1);
    if cfg.epsilon() != 0.0 {
        for n in 0..=n_max {
            let product = f1.kron_power(n + 2);
            let v = evolution_operator_v(t, n, 2, &product, cfg, VForm::Cumulant)?;
            // ε (-N_int(1,2)) X = -iε [Φ(1,2), X]; the coupling scales the
            // collision term exactly as it scales the hierarchy coupling.
            let kicked = pair_commutator(cfg, 1, 2, &v).scale(C64::new(0.0, -1.0));
            let term = partial_trace(&kicked, &[1])?.scale_re(cfg.epsilon() / factorial(n));
            acc = acc.add(&term);
        }
    }
    Ok(acc.with_hermitian_hint(true))
}

/// Trajectory of the one-particle density operator under the generalized
/// kinetic equation, with conservation monitors.
#[derive(Clone, Debug)]
pub struct KineticTrajectory {
    pub times: Vec<f64>,
    pub states: Vec<MBOperator>,
    /// Max deviation of `Tr F_1(t)` from its initial value.
    pub max_trace_drift: f64,
    /// Max deviation of `‖F_1(t)‖_tr` from its initial value (equals the
    /// trace drift as long as positivity holds).
    pub max_trace_norm_drift: f64,
    /// Smallest eigenvalue seen along the trajectory (positivity floor).
    pub min_eigenvalue: f64,
    /// `‖F_1(0)‖_tr < e^{-1}` held at the initial time.
    pub norm_condition_ok: bool,
}

impl OdeState for Array2<C64> {
    fn axpy(&mut self, a: f64, other: &Self) {
        self.zip_mut_with(other, |x, y| *x += a * y);
    }

    fn scale(&mut self, a: f64) {
        self.map_inplace(|x| *x *= a);
    }

    fn norm(&self) -> f64 {
        self.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

/// Integrate the kinetic equation by adaptive RK4, sampling `samples` points
/// on a uniform grid up to `t_end` (plus the initial state).
pub fn gke_integrate(
    f1_0: &MBOperator,
    t_end: f64,
    n_max: usize,
    cfg: &ModelConfig,
    samples: usize,
    opts: &OdeOptions,
) -> Result<KineticTrajectory> {
    let d = f1_0.one_particle_dim();
    let grid = uniform_times(0.0, t_end, samples.max(1));
    let rhs = |t: f64, y: &Array2<C64>| -> Array2<C64> {
        let op = MBOperator::new(1, d, y.clone()).expect("shape invariant");
        gke_rhs(t, &op, n_max, cfg)
            .expect("rhs evaluation on valid state")
            .into_matrix()
    };
    let path = integrate_path(&f1_0.matrix().clone(), 0.0, &grid, opts, rhs)?;
    let mut times = vec![0.0];
    times.extend_from_slice(&grid);
    let mut states = vec![f1_0.clone()];
    for m in path {
        states.push(MBOperator::new(1, d, m)?.with_hermitian_hint(true));
    }
    let tr0 = f1_0.trace().re;
    let tn0 = trace_norm(f1_0);
    let mut max_drift = 0.0_f64;
    let mut max_tn_drift = 0.0_f64;
    let mut min_eig = f64::INFINITY;
    for st in &states {
        max_drift = max_drift.max((st.trace().re - tr0).abs());
        max_tn_drift = max_tn_drift.max((trace_norm(st) - tn0).abs());
        min_eig = min_eig.min(st.min_eigenvalue()?);
    }
    Ok(KineticTrajectory {
        times,
        states,
        max_trace_drift: max_drift,
        max_trace_norm_drift: max_tn_drift,
        min_eigenvalue: min_eig,
        norm_condition_ok: tn0 < norm_condition_bound(),
    })
}
