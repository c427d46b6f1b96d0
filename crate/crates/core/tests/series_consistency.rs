//! Cross-module consistency of the independent solution routes: cumulant
//! series, ODE oracles, correlation/cluster reconstructions, and the kinetic
//! functionals all describe the same dynamics.

use std::collections::BTreeMap;

use num_complex::Complex64 as C64;

use qkinet_core::hierarchies::{
    bbgky_series, cluster_assemble, correlation_series, dual_ode_oracle, dual_series,
    hierarchy_ode_path, marginals_from_sector, pairing, Convention, MarginalSequence,
};
use qkinet_core::kinetic::f1_series;
use qkinet_core::ode::OdeOptions;
use qkinet_core::operator::{trace_norm, MBOperator};
use qkinet_core::random::{random_density, random_hermitian, random_symmetric_density, rng};
use qkinet_core::sequence::OperatorSequence;
use qkinet_core::ModelConfig;

#[test]
fn three_routes_to_the_marginal_flow_agree() {
    // Cumulant series, hierarchy ODE, and direct evolution + trace.
    let cfg = ModelConfig::default_lattice(2, 1.0).unwrap();
    let mut r = rng(201);
    let d3 = random_symmetric_density(3, 2, &mut r);
    let seq0 = marginals_from_sector(&d3, 3).unwrap();
    let t = 0.7;

    let prop = qkinet_core::dynamics::Propagator::new(3, &cfg).unwrap();
    let direct = marginals_from_sector(&prop.evolve_state(&d3, t).unwrap(), 3).unwrap();
    let opts = OdeOptions { tol: 1e-10, ..Default::default() };
    let ode = hierarchy_ode_path(&seq0, &[t], &cfg, &opts).unwrap().pop().unwrap();

    for s in 1..=3usize {
        let series = bbgky_series(t, s, &seq0, None, &cfg).unwrap();
        let vs_direct = trace_norm(&series.sub(direct.get(s).unwrap()));
        let vs_ode = trace_norm(&series.sub(ode.get(s).unwrap()));
        assert!(vs_direct < 1e-9, "s={s}: series vs direct {vs_direct:.3e}");
        assert!(vs_ode < 1e-6, "s={s}: series vs ode {vs_ode:.3e}");
    }
}

#[test]
fn cluster_expansion_reassembles_chaotic_marginals() {
    // F_2(t) = F_1(t) ⊗ F_1(t) + G_2(t) with F_1 from the one-particle
    // series and G_2 from the correlation series, checked against the
    // hierarchy ODE on a truncated chaotic sector.
    let cfg = ModelConfig::default_lattice(2, 0.5).unwrap();
    let mut r = rng(203);
    let f1_0 = random_density(1, 2, &mut r).scale_re(0.15);
    let t = 0.5;

    let f1_t = f1_series(t, &f1_0, 3, &cfg).unwrap().op;
    let g2_t = correlation_series(t, 2, &f1_0, 2, &cfg).unwrap();
    let mut corr = BTreeMap::new();
    corr.insert(2, g2_t);
    let f2_assembled = cluster_assemble(&f1_t, &corr, 2).unwrap();

    let s_chaos = 4;
    let mut items = vec![MBOperator::scalar(2, C64::new(1.0, 0.0))];
    for k in 1..=s_chaos {
        items.push(f1_0.kron_power(k));
    }
    let chaos = MarginalSequence::new(items, Convention::FiniteSector(s_chaos)).unwrap();
    let opts = OdeOptions::default();
    let oracle = hierarchy_ode_path(&chaos, &[t], &cfg, &opts).unwrap().pop().unwrap();

    let res = trace_norm(&f2_assembled.sub(oracle.get(2).unwrap()));
    assert!(res < 1e-3, "cluster reassembly residual {res:.3e}");
}

#[test]
fn duality_holds_across_observable_and_state_routes() {
    // (G(t), F(0)) = (G(0), F(t)) with G(t) integrated by the dual ODE and
    // F(t) by the cumulant series (fully independent code paths).
    let cfg = ModelConfig::default_lattice(2, 0.7).unwrap();
    let mut r = rng(205);
    let d3 = random_symmetric_density(3, 2, &mut r);
    let f0 = marginals_from_sector(&d3, 3).unwrap();
    let g0 = OperatorSequence::new(
        vec![
            MBOperator::scalar(2, C64::new(0.0, 0.0)),
            random_hermitian(1, 2, &mut r),
            random_hermitian(2, 2, &mut r).symmetrized().unwrap(),
            random_hermitian(3, 2, &mut r).symmetrized().unwrap(),
        ],
        0.25,
    )
    .unwrap();
    let t = 0.6;
    let opts = OdeOptions { tol: 1e-11, ..Default::default() };
    let g_t = dual_ode_oracle(&g0, t, &cfg, &opts).unwrap();
    let mut f_items = vec![f0.items()[0].clone()];
    for s in 1..=3 {
        f_items.push(bbgky_series(t, s, &f0, None, &cfg).unwrap());
    }
    let f_t = MarginalSequence::new(f_items, f0.convention()).unwrap();
    let forward = pairing(&g_t, &f0);
    let backward = pairing(&g0, &f_t);
    assert!(
        (forward - backward).abs() < 1e-7,
        "duality mismatch {forward} vs {backward}"
    );
}

#[test]
fn additive_observables_reduce_dual_series_to_plain_cumulants() {
    // For G(0) = (0, g_1, 0, ...) the dual series collapses to
    // G_s(t) = A_s(t) Σ_j g_1(j).
    let cfg = ModelConfig::default_lattice(2, 1.0).unwrap();
    let mut r = rng(207);
    let g1 = random_hermitian(1, 2, &mut r);
    let seq = OperatorSequence::additive(g1.clone(), 0.25, 3).unwrap();
    let t = 0.4;
    let s = 2;
    let out = dual_series(t, s, &seq, &cfg).unwrap();

    let lifted = qkinet_core::operator::tensor_embed(&g1, &[1], s)
        .unwrap()
        .add(&qkinet_core::operator::tensor_embed(&g1, &[2], s).unwrap());
    let expected = qkinet_core::cumulants::cumulant_forward(
        t,
        &qkinet_core::partitions::single_elements(s),
        &lifted,
        &cfg,
    )
    .unwrap();
    assert!(out.max_abs_diff(&expected) < 1e-11);
}
