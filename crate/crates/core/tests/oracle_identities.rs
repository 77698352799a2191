//! Exact-oracle identities on the discrete fixtures: recovery of the
//! interventional contrast by the s-formula, the influence-function moment
//! condition and its point-mass finite-difference characterization, the
//! robust estimating equation, and linearity of the functional.

use seqadj::fixtures;
use seqadj::mgraph::{enumerate_minimal_pairs, AdmissiblePair, EnumerateOptions, NodeSet};
use seqadj::numeric::Kahan;
use seqadj::oracles::{
    exact_ate, exact_eif, exact_s_formula, linearity_residual_q1, linearity_residual_q2,
    random_scm, robustness_residual, DiscreteScm, ExactDistribution, ExactSurfaces,
    PutativeSurfaces, RandomScmOptions, ScmRole,
};
use seqadj::rng::Stream;

fn pair(w: &[&str], z: &[&str]) -> AdmissiblePair {
    AdmissiblePair::new(
        w.iter().copied().collect::<NodeSet>(),
        z.iter().copied().collect::<NodeSet>(),
    )
    .unwrap()
}

fn chain() -> (DiscreteScm, ExactDistribution, AdmissiblePair) {
    let scm = fixtures::scm("scm_chain_wazry");
    let p = ExactDistribution::from_scm(&scm);
    (scm, p, pair(&["W"], &["Z"]))
}

#[test]
fn exogenous_exposure_without_missingness_reduces_to_arm_means() {
    let scm = DiscreteScm::from_json(
        r#"{"variables": [
            {"name": "A", "role": "exposure", "states": [0.0, 1.0], "parents": [], "cpt": [[0.4, 0.6]]},
            {"name": "Y", "role": "outcome", "states": [0.0, 1.0, 3.0], "parents": ["A"],
             "cpt": [[0.5, 0.3, 0.2], [0.2, 0.3, 0.5]]},
            {"name": "R", "role": "selection", "states": [0.0, 1.0], "parents": [], "cpt": [[0.0, 1.0]]}
        ]}"#,
    )
    .unwrap();
    let p = ExactDistribution::from_scm(&scm);
    let psi = exact_s_formula(&p, &pair(&[], &[])).unwrap();
    // Arm means straight off the conditional tables.
    let arm = |row: &[f64]| row[1] + 3.0 * row[2];
    let direct = arm(&[0.2, 0.3, 0.5]) - arm(&[0.5, 0.3, 0.2]);
    assert!((psi - direct).abs() < 1e-14);
    assert!((psi - exact_ate(&scm)).abs() < 1e-14);
}

#[test]
fn s_formula_matches_interventional_truth_on_the_chain_fixture() {
    let (scm, p, adj) = chain();
    let psi = exact_s_formula(&p, &adj).unwrap();
    let truth = exact_ate(&scm);
    assert!((psi - truth).abs() < 1e-12, "{psi} vs {truth}");
}

#[test]
fn empty_separator_branch_equals_direct_adjustment_on_mar_chain() {
    let scm = fixtures::scm("scm_mar_chain");
    let p = ExactDistribution::from_scm(&scm);
    let psi = exact_s_formula(&p, &pair(&["B1", "C1"], &[])).unwrap();

    // Direct summation of E_W Δ_a E[Y | W, A=a, R=1] over the pmf.
    let b1 = p.var_index("B1").unwrap();
    let c1 = p.var_index("C1").unwrap();
    let (a_i, r_i) = (p.a_index(), p.r_index());
    let mut direct = Kahan::new();
    for w_b1 in 0..2u8 {
        for w_c1 in 0..2u8 {
            let mut pw = 0.0;
            let mut arm = [(0.0, 0.0), (0.0, 0.0)]; // (mass, y-mass) per arm at R=1
            for (config, &mass) in p.pmf() {
                if config[b1] != w_b1 || config[c1] != w_c1 {
                    continue;
                }
                pw += mass;
                if config[r_i] == 1 {
                    let slot = &mut arm[config[a_i] as usize];
                    slot.0 += mass;
                    slot.1 += mass * p.y_value(config).unwrap();
                }
            }
            direct.add(pw * (arm[1].1 / arm[1].0 - arm[0].1 / arm[0].0));
        }
    }
    assert!((psi - direct.value()).abs() < 1e-12);
    assert!((psi - exact_ate(&scm)).abs() < 1e-12);
}

#[test]
fn every_admissible_pair_recovers_the_ate_on_fixtures() {
    for name in [
        "scm_chain_wazry",
        "scm_mediator_attrition",
        "scm_latent_proxy",
        "scm_pre_exposure_separator",
        "scm_latent_collider",
        "scm_mar_chain",
    ] {
        let scm = fixtures::scm(name);
        let p = ExactDistribution::from_scm(&scm);
        let truth = exact_ate(&scm);
        let graph = scm.graph();
        let opts = EnumerateOptions {
            include_non_minimal: true,
            ..EnumerateOptions::default()
        };
        let pairs = enumerate_minimal_pairs(&graph, None, &opts).unwrap();
        assert!(!pairs.is_empty(), "{name} should admit a pair");
        for adj in pairs {
            let psi = exact_s_formula(&p, &adj).unwrap();
            assert!(
                (psi - truth).abs() < 1e-10,
                "{name} pair {adj}: {psi} vs {truth}"
            );
        }
    }
}

#[test]
fn random_positive_scms_recover_the_ate() {
    let mut stream = Stream::new(4242);
    let mut with_pairs = 0usize;
    for _ in 0..12 {
        let scm = random_scm(&mut stream, &RandomScmOptions::default());
        let p = ExactDistribution::from_scm(&scm);
        let truth = exact_ate(&scm);
        let opts = EnumerateOptions {
            include_non_minimal: true,
            ..EnumerateOptions::default()
        };
        for adj in enumerate_minimal_pairs(&scm.graph(), None, &opts).unwrap() {
            let psi = exact_s_formula(&p, &adj).unwrap();
            assert!((psi - truth).abs() < 1e-10, "pair {adj}: {psi} vs {truth}");
            with_pairs += 1;
        }
    }
    assert!(with_pairs > 0, "generator never produced admissible pairs");
}

#[test]
fn inadmissible_separator_biases_the_formula() {
    // Conditioning the latent collider's child opens a selection trail, so
    // the formula with C1 added to Z must move away from the truth.
    let scm = fixtures::scm("scm_latent_collider");
    let p = ExactDistribution::from_scm(&scm);
    let truth = exact_ate(&scm);
    let good = exact_s_formula(&p, &pair(&[], &["C2"])).unwrap();
    let bad = exact_s_formula(&p, &pair(&[], &["C1", "C2"])).unwrap();
    assert!((good - truth).abs() < 1e-10);
    assert!((bad - truth).abs() > 1e-3, "bias only {}", bad - truth);
}

#[test]
fn eif_vanishes_when_every_residual_group_is_flat() {
    // A constant outcome: Q1 = Q2 = const, psi = 0, so D = 0 pointwise.
    let scm = DiscreteScm::from_json(
        r#"{"variables": [
            {"name": "A", "role": "exposure", "states": [0.0, 1.0], "parents": [], "cpt": [[0.5, 0.5]]},
            {"name": "Z", "role": "covariate", "states": [0.0, 1.0], "parents": ["A"], "cpt": [[0.6, 0.4], [0.3, 0.7]]},
            {"name": "Y", "role": "outcome", "states": [1.5], "parents": [], "cpt": [[1.0]]},
            {"name": "R", "role": "selection", "states": [0.0, 1.0], "parents": ["Z"], "cpt": [[0.5, 0.5], [0.2, 0.8]]}
        ]}"#,
    )
    .unwrap();
    let p = ExactDistribution::from_scm(&scm);
    let adj = pair(&[], &["Z"]);
    for (config, _) in p.pmf() {
        let d = exact_eif(&p, &adj, config).unwrap();
        assert!(d.abs() < 1e-14, "config {config:?} gives {d}");
    }
}

#[test]
fn eif_moment_condition_holds_exactly() {
    let mut checked = 0usize;
    let mut stream = Stream::new(99);
    for case in 0..12 {
        let (p, adj) = if case < 2 {
            let (_, p, adj) = chain();
            (p, adj)
        } else {
            let scm = random_scm(&mut stream, &RandomScmOptions::default());
            let p = ExactDistribution::from_scm(&scm);
            let opts = EnumerateOptions::default();
            let Some(adj) =
                enumerate_minimal_pairs(&scm.graph(), None, &opts).unwrap().pop()
            else {
                continue;
            };
            (p, adj)
        };
        let s = ExactSurfaces::new(&p, &adj).unwrap();
        let moment = s.moment(&p, &PutativeSurfaces::default(), s.psi());
        assert!(moment.abs() < 1e-12, "moment {moment}");
        checked += 1;
    }
    assert!(checked >= 6);
}

#[test]
fn point_mass_finite_difference_matches_the_eif() {
    let (_, p, adj) = chain();
    let s = ExactSurfaces::new(&p, &adj).unwrap();
    let psi = s.psi();
    let eps = 1e-6;
    for (config, _) in p.pmf() {
        let d = s.eif(&p, config);
        let contaminated = p.contaminate(config, eps);
        let fd = (exact_s_formula(&contaminated, &adj).unwrap() - psi) / eps;
        let tol = 1e-4 * d.abs().max(1.0);
        assert!(
            (fd - d).abs() <= tol,
            "config {config:?}: fd {fd} vs eif {d}"
        );
    }
}

#[test]
fn finite_difference_error_shrinks_linearly_in_epsilon() {
    let (_, p, adj) = chain();
    let s = ExactSurfaces::new(&p, &adj).unwrap();
    let psi = s.psi();
    // Pick the largest-|D| configuration so the curvature term dominates
    // rounding at both epsilons.
    let config = p
        .pmf()
        .keys()
        .max_by(|a, b| {
            s.eif(&p, a)
                .abs()
                .total_cmp(&s.eif(&p, b).abs())
        })
        .unwrap()
        .clone();
    let d = s.eif(&p, &config);
    let fd = |eps: f64| {
        (exact_s_formula(&p.contaminate(&config, eps), &adj).unwrap() - psi) / eps
    };
    let err_full = (fd(2e-5) - d).abs();
    let err_half = (fd(1e-5) - d).abs();
    let ratio = err_full / err_half;
    assert!(
        (1.0 / 3.0..=6.0).contains(&(ratio / 2.0)),
        "halving epsilon scaled the error by {ratio}"
    );
}

#[test]
fn estimating_equation_is_robust_in_the_three_partial_cases() {
    let (_, p, adj) = chain();
    let s = ExactSurfaces::new(&p, &adj).unwrap();
    let psi = s.psi();
    let mut stream = Stream::new(7);
    for draw in 0..5 {
        let wrong_pi = PutativeSurfaces {
            pi_a: Some(s.perturbed_pi_a(&mut stream, 0.5 + 0.1 * draw as f64, 0.01)),
            pi_r: Some(s.perturbed_pi_r(&mut stream, 0.5, 0.01)),
            ..PutativeSurfaces::default()
        };
        let r1 = robustness_residual(&p, &adj, &wrong_pi, psi).unwrap();
        assert!(r1.abs() < 1e-10, "true Q surfaces: residual {r1}");

        let wrong_q = PutativeSurfaces {
            q1: Some(s.perturbed_q1(&mut stream, 1.0)),
            q2: Some(s.perturbed_q2(&mut stream, 1.0)),
            ..PutativeSurfaces::default()
        };
        let r2 = robustness_residual(&p, &adj, &wrong_q, psi).unwrap();
        assert!(r2.abs() < 1e-10, "true propensities: residual {r2}");

        let wrong_tail = PutativeSurfaces {
            q2: Some(s.perturbed_q2(&mut stream, 1.0)),
            pi_r: Some(s.perturbed_pi_r(&mut stream, 0.7, 0.01)),
            ..PutativeSurfaces::default()
        };
        let r3 = robustness_residual(&p, &adj, &wrong_tail, psi).unwrap();
        assert!(r3.abs() < 1e-10, "true pi_a and Q1: residual {r3}");
    }
}

#[test]
fn estimating_equation_breaks_when_everything_is_wrong() {
    let (_, p, adj) = chain();
    let s = ExactSurfaces::new(&p, &adj).unwrap();
    let psi = s.psi();
    let mut stream = Stream::new(11);
    let all_wrong = PutativeSurfaces {
        q1: Some(s.perturbed_q1(&mut stream, 1.0)),
        q2: Some(s.perturbed_q2(&mut stream, 1.0)),
        pi_a: Some(s.perturbed_pi_a(&mut stream, 0.8, 0.01)),
        pi_r: Some(s.perturbed_pi_r(&mut stream, 0.8, 0.01)),
    };
    let r = robustness_residual(&p, &adj, &all_wrong, psi).unwrap();
    assert!(r.abs() > 1e-4, "residual {r} unexpectedly small");
}

#[test]
fn functional_is_linear_in_both_surfaces() {
    let (_, p, adj) = chain();
    let s = ExactSurfaces::new(&p, &adj).unwrap();
    let mut stream = Stream::new(5);
    let q1_a = s.random_q1_like(&mut stream, 2.0);
    let q1_b = s.random_q1_like(&mut stream, 2.0);
    for alpha in [0.0, 1.0, 0.37] {
        let r = linearity_residual_q1(&p, &adj, &q1_a, &q1_b, alpha).unwrap();
        assert!(r.abs() < 1e-12, "alpha {alpha}: residual {r}");
    }
    let zd_a = s.random_zdist_like(&mut stream);
    let zd_b = s.random_zdist_like(&mut stream);
    for alpha in [0.0, 1.0, 0.37] {
        let r = linearity_residual_q2(&p, &adj, &zd_a, &zd_b, alpha).unwrap();
        assert!(r.abs() < 1e-12, "alpha {alpha}: residual {r}");
    }
}

#[test]
fn surfaces_reproduce_their_own_functional() {
    let (_, p, adj) = chain();
    let s = ExactSurfaces::new(&p, &adj).unwrap();
    assert!((s.psi_with_q1(&s.q1) - s.psi()).abs() < 1e-13);
    assert!((s.psi_with_zdist(&s.z_conditional()) - s.psi()).abs() < 1e-13);
}

#[test]
fn population_dataset_reproduces_the_pmf() {
    let (_, p, _) = chain();
    let n = 8192;
    let ds = p.population_dataset(n).unwrap();
    assert_eq!(ds.n(), n);
    // Empirical selection rate equals the pmf's R mass exactly.
    let r_mass: f64 = p
        .pmf()
        .iter()
        .filter(|(config, _)| config[p.r_index()] == 1)
        .map(|(_, &m)| m)
        .sum();
    let selected = ds.r().iter().filter(|&&r| r == 1).count();
    assert!((selected as f64 / n as f64 - r_mass).abs() < 1e-12);
    // Non-dyadic masses cannot expand.
    let scm = fixtures::scm("scm_mediator_attrition");
    let p2 = ExactDistribution::from_scm(&scm);
    assert!(p2.population_dataset(64).is_err());
}

#[test]
fn total_mass_is_one_on_all_fixture_distributions() {
    for (name, _) in fixtures::SCMS {
        let p = ExactDistribution::from_scm(&fixtures::scm(name));
        assert!((p.total_mass() - 1.0).abs() < 1e-12, "{name}");
    }
}

#[test]
fn exposure_role_lookup_matches_graph_roles() {
    let scm = fixtures::scm("scm_latent_proxy");
    assert_eq!(scm.vars()[scm.role_index(ScmRole::Exposure)].name, "A");
    let g = scm.graph();
    assert_eq!(g.exposure(), "A");
    assert_eq!(g.selection(), "R");
    assert_eq!(g.names_with_role(seqadj::mgraph::Role::Latent), vec!["U1"]);
}
