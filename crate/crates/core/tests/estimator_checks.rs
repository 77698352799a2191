//! Estimator checks against the exact finite-population oracle: with oracle
//! nuisances on an exactly expanded population, every estimator must land on
//! the s-formula value; targeting must zero its normal equations; and the
//! degenerate dispatch rules must hold.

use std::sync::Arc;

use seqadj::estimators::{
    clever_covariates, estimate_cd_with_plan, estimate_dipw_with_plan, estimate_sr_with_plan,
    estimate_tmle_1r, estimate_tmle_cc, estimate_tsr, estimate_tsr_with_plan, estimate_unadjusted,
    fit_nuisance, fit_nuisance_with, Dataset, EstimateError, EstimateOptions, NuisancePlan,
    SurfaceRecipe,
};
use seqadj::fixtures;
use seqadj::learners::{Learner, Loss, SuperLearnerSpec};
use seqadj::mgraph::{AdmissiblePair, NodeSet};
use seqadj::numeric::Kahan;
use seqadj::oracles::{DiscreteScm, ExactDistribution, ExactSurfaces};
use seqadj::simulate::gen_setup1;

fn pair(w: &[&str], z: &[&str]) -> AdmissiblePair {
    AdmissiblePair::new(
        w.iter().copied().collect::<NodeSet>(),
        z.iter().copied().collect::<NodeSet>(),
    )
    .unwrap()
}

fn oracle_plan(s: &ExactSurfaces, p: &ExactDistribution) -> NuisancePlan {
    let tables = s.value_tables(p);
    NuisancePlan {
        pi_a: SurfaceRecipe::Oracle(Arc::new(tables.pi_a)),
        pi_r: SurfaceRecipe::Oracle(Arc::new(tables.pi_r)),
        q1: SurfaceRecipe::Oracle(Arc::new(tables.q1)),
        q2: SurfaceRecipe::Oracle(Arc::new(tables.q2)),
    }
}

fn chain_population() -> (ExactDistribution, AdmissiblePair, Dataset) {
    let scm = fixtures::scm("scm_chain_wazry");
    let p = ExactDistribution::from_scm(&scm);
    let adj = pair(&["W"], &["Z"]);
    let ds = fixtures::population_dataset(&p, 8192);
    (p, adj, ds)
}

fn options() -> EstimateOptions {
    EstimateOptions {
        bootstrap_b: 10,
        ..EstimateOptions::default()
    }
}

/// With oracle nuisances on the exact population, the four pair-based
/// estimators all return the identical s-formula value.
#[test]
fn all_estimators_agree_with_the_s_formula_on_the_population() {
    let (p, adj, ds) = chain_population();
    let s = ExactSurfaces::new(&p, &adj).unwrap();
    let plan = oracle_plan(&s, &p);
    let truth = s.psi();
    let opts = options();

    let tsr = estimate_tsr_with_plan(&ds, &adj, &plan, &opts).unwrap();
    assert!((tsr.psi_hat - truth).abs() < 1e-8, "tsr {}", tsr.psi_hat);
    // Fluctuations vanish at the population with oracle surfaces.
    assert!(tsr.diagnostics.delta_star.unwrap().abs() < 1e-10);
    assert!(tsr.diagnostics.gamma_star.unwrap().abs() < 1e-10);

    let dipw = estimate_dipw_with_plan(&ds, &adj, &plan, &opts).unwrap();
    assert!((dipw.psi_hat - truth).abs() < 1e-10, "dipw {}", dipw.psi_hat);

    let sr = estimate_sr_with_plan(&ds, &adj, &plan, &opts).unwrap();
    assert!((sr.psi_hat - truth).abs() < 1e-10, "sr {}", sr.psi_hat);

    let cd = estimate_cd_with_plan(&ds, &adj, &plan, &opts).unwrap();
    assert!((cd.psi_hat - truth).abs() < 1e-8, "cd {}", cd.psi_hat);

    for report in [&tsr, &dipw, &sr, &cd] {
        assert!(report.se >= 0.0);
        assert!(report.ci_lo <= report.ci_hi);
    }
}

#[test]
fn tsr_targeting_zeroes_its_normal_equations_on_sampled_data() {
    let (ds, _) = gen_setup1(600, -0.90, 41);
    let adj = pair(&["W1"], &["Z1", "Z2"]);
    let spec = SuperLearnerSpec::standard(17);
    let opts = EstimateOptions {
        keep_eif: true,
        ..EstimateOptions::default()
    };
    let report = estimate_tsr(&ds, &adj, &spec, &opts).unwrap();
    let d = report.eif.as_ref().unwrap();

    // Empirical influence-function mean vanishes without splitting.
    let mean_d = seqadj::numeric::mean(d);
    assert!(mean_d.abs() < 1e-8, "mean EIF {mean_d}");

    // Reconstruct the two fluctuation sums from the fitted pieces.
    let nuis = fit_nuisance(&ds, &adj, &spec, opts.eps_trunc).unwrap();
    let n = ds.n();
    let pa: Vec<f64> = (0..n).map(|i| nuis.pi_a_at(&ds, i).unwrap()).collect();
    let pr: Vec<f64> = (0..n).map(|i| nuis.pi_r_at(&ds, i).unwrap()).collect();
    let q1: Vec<f64> = (0..n).map(|i| nuis.q1_at(&ds, i).unwrap()).collect();
    let (h1, _h2) = clever_covariates(ds.a(), &pa, &pr);
    let delta = report.diagnostics.delta_star.unwrap();
    let mut sum1 = Kahan::new();
    let mut sd_y = Vec::new();
    for i in 0..n {
        if ds.r()[i] == 1 {
            let y = ds.y()[i].unwrap();
            sum1.add(h1[i] * (y - q1[i] - delta * h1[i]));
            sd_y.push(y);
        }
    }
    let scale = 1e-8 * n as f64 * seqadj::numeric::sample_sd(&sd_y);
    assert!(
        sum1.value().abs() <= scale,
        "first normal equation {} vs scale {scale}",
        sum1.value()
    );
}

#[test]
fn nuisance_fit_trains_q1_on_the_selected_half() {
    let (ds, _) = gen_setup1(4000, -1.90, 7);
    let adj = pair(&["W1"], &["Z1", "Z2"]);
    let nuis = fit_nuisance(&ds, &adj, &SuperLearnerSpec::standard(3), 0.01).unwrap();
    let frac = nuis.n_selected as f64 / ds.n() as f64;
    assert!((0.45..=0.55).contains(&frac), "selected fraction {frac}");
}

#[test]
fn fully_selected_data_gives_truncated_unit_selection_propensity() {
    let (ds, _) = gen_setup1(300, -0.90, 11);
    // Rebuild without any masking: complete cases only.
    let rows: Vec<usize> = (0..ds.n()).filter(|&i| ds.r()[i] == 1).collect();
    let cc = ds.subset(&rows).unwrap();
    let adj = pair(&["W1"], &["Z1", "Z2"]);
    let nuis = fit_nuisance(&cc, &adj, &SuperLearnerSpec::standard(3), 0.01).unwrap();
    for i in [0, 5, 17] {
        let pr = nuis.pi_r_at(&cc, i).unwrap();
        assert!((pr - 0.99).abs() < 1e-12, "pi_r {pr}");
    }
    assert!(nuis
        .warnings
        .iter()
        .any(|w| w.contains("constant binary target")));
}

#[test]
fn truncation_clips_extreme_propensities() {
    let (_, adj, ds) = chain_population();
    // An oracle surface reporting 0.001 everywhere must surface as 0.01.
    let mut table = std::collections::BTreeMap::new();
    for i in 0..ds.n() {
        let w = ds.covariate("W").unwrap()[i];
        table.insert(vec![w.to_bits()], 0.001);
    }
    let plan = NuisancePlan {
        pi_a: SurfaceRecipe::Oracle(Arc::new(table)),
        ..NuisancePlan::super_learner(&SuperLearnerSpec::standard(1))
    };
    let nuis = fit_nuisance_with(&ds, &adj, &plan, 0.01).unwrap();
    assert!((nuis.pi_a_at(&ds, 0).unwrap() - 0.01).abs() < 1e-15);
}

#[test]
fn dipw_collapses_to_arm_weighted_means_without_missingness() {
    let (p, adj, ds) = chain_population();
    // Constant oracle propensities: piA = 1/2, piR = 1.
    let mut pi_a = std::collections::BTreeMap::new();
    let mut pi_r = std::collections::BTreeMap::new();
    let s = ExactSurfaces::new(&p, &adj).unwrap();
    for (key, _) in s.value_tables(&p).pi_a {
        pi_a.insert(key, 0.5);
    }
    for (key, _) in s.value_tables(&p).pi_r {
        pi_r.insert(key, 1.0);
    }
    let rows: Vec<usize> = (0..ds.n()).filter(|&i| ds.r()[i] == 1).collect();
    let cc = ds.subset(&rows).unwrap();
    let plan = NuisancePlan {
        pi_a: SurfaceRecipe::Oracle(Arc::new(pi_a)),
        pi_r: SurfaceRecipe::Oracle(Arc::new(pi_r)),
        ..NuisancePlan::super_learner(&SuperLearnerSpec::standard(1))
    };
    // A vanishing truncation bound keeps the unit selection propensity
    // intact so the collapse is exact.
    let opts = EstimateOptions {
        eps_trunc: 1e-9,
        ..options()
    };
    let report = estimate_dipw_with_plan(&cc, &adj, &plan, &opts).unwrap();
    let n = cc.n() as f64;
    let direct: f64 = (0..cc.n())
        .map(|i| {
            let y = cc.y()[i].unwrap();
            if cc.a()[i] == 1 {
                2.0 * y
            } else {
                -2.0 * y
            }
        })
        .sum::<f64>()
        / n;
    assert!((report.psi_hat - direct).abs() < 1e-9);
}

#[test]
fn zero_residual_population_fixes_the_fluctuations_at_zero() {
    // Deterministic outcome: the oracle mean-imputation surface matches Y
    // pointwise, so both fluctuations solve to exactly zero and the plug-in
    // equals the arm contrast of the meta-regression surface.
    let scm = DiscreteScm::from_json(
        r#"{"variables": [
            {"name": "W", "role": "covariate", "states": [0.0, 1.0], "parents": [], "cpt": [[0.5, 0.5]]},
            {"name": "A", "role": "exposure", "states": [0.0, 1.0], "parents": ["W"], "cpt": [[0.75, 0.25], [0.25, 0.75]]},
            {"name": "Z", "role": "covariate", "states": [0.0, 1.0], "parents": ["A"], "cpt": [[0.75, 0.25], [0.5, 0.5]]},
            {"name": "Y", "role": "outcome", "states": [-1.0, 0.5, 2.0], "parents": ["W", "A", "Z"],
             "cpt": [[1.0,0.0,0.0],[0.0,1.0,0.0],[0.0,0.0,1.0],[0.0,1.0,0.0],
                     [0.0,1.0,0.0],[0.0,0.0,1.0],[1.0,0.0,0.0],[0.0,0.0,1.0]]},
            {"name": "R", "role": "selection", "states": [0.0, 1.0], "parents": ["Z"], "cpt": [[0.5, 0.5], [0.25, 0.75]]}
        ]}"#,
    )
    .unwrap();
    let p = ExactDistribution::from_scm(&scm);
    let adj = pair(&["W"], &["Z"]);
    let s = ExactSurfaces::new(&p, &adj).unwrap();
    let ds = fixtures::population_dataset(&p, 1024);
    let plan = oracle_plan(&s, &p);
    let report = estimate_tsr_with_plan(&ds, &adj, &plan, &options()).unwrap();
    assert!(report.diagnostics.delta_star.unwrap().abs() < 1e-12);
    assert!(report.diagnostics.gamma_star.unwrap().abs() < 1e-12);
    assert!((report.psi_hat - s.psi()).abs() < 1e-10);
}

#[test]
fn saturated_sequential_regression_equals_the_frequency_plugin() {
    let (_, adj, ds) = chain_population();
    let spec = SuperLearnerSpec {
        battery: vec![Learner::Linear],
        folds: 2,
        loss: Loss::SquaredError,
        seed: 5,
    };
    let plan = NuisancePlan::super_learner(&spec);
    let sr = estimate_sr_with_plan(&ds, &adj, &plan, &options()).unwrap();
    let cd = estimate_cd_with_plan(&ds, &adj, &plan, &options()).unwrap();
    // Per-arm least squares on a binary W is the stratum mean, which is
    // exactly the frequency-weighted separator average.
    assert!(
        (sr.psi_hat - cd.psi_hat).abs() < 1e-8,
        "sr {} vs cd {}",
        sr.psi_hat,
        cd.psi_hat
    );
}

#[test]
fn cd_rejects_separators_with_too_many_levels() {
    let n = 60;
    let w: Vec<f64> = (0..n).map(|i| (i % 2) as f64).collect();
    let z: Vec<f64> = (0..n).map(|i| i as f64 * 0.37).collect(); // 60 levels
    let a: Vec<u8> = (0..n).map(|i| (i % 2) as u8).collect();
    let r = vec![1u8; n];
    let y: Vec<Option<f64>> = (0..n).map(|i| Some(i as f64)).collect();
    let ds = Dataset::new(vec![("W".into(), w), ("Z".into(), z)], a, r, y).unwrap();
    let err = estimate_cd_with_plan(
        &ds,
        &pair(&["W"], &["Z"]),
        &NuisancePlan::super_learner(&SuperLearnerSpec::standard(1)),
        &options(),
    )
    .unwrap_err();
    assert!(matches!(err, EstimateError::Unsupported(_)), "{err}");
}

#[test]
fn single_regression_variants_coincide_without_missingness() {
    let (ds, _) = gen_setup1(500, -0.90, 13);
    let rows: Vec<usize> = (0..ds.n()).filter(|&i| ds.r()[i] == 1).collect();
    let cc = ds.subset(&rows).unwrap();
    let w: NodeSet = ["W1"].into_iter().collect();
    let spec = SuperLearnerSpec::standard(23);
    let opts = EstimateOptions::default();
    let one_r = estimate_tmle_1r(&cc, &w, &spec, &opts).unwrap();
    let cc_est = estimate_tmle_cc(&cc, &w, &spec, &opts).unwrap();
    // The constant truncated selection propensity rescales the clever
    // covariate and its fluctuation in lockstep, so the estimates agree
    // exactly; the influence functions differ by the truncation factor, so
    // the standard errors agree only to that order.
    assert!(
        (one_r.psi_hat - cc_est.psi_hat).abs() < 1e-8,
        "1r {} vs cc {}",
        one_r.psi_hat,
        cc_est.psi_hat
    );
    assert!((one_r.se - cc_est.se).abs() < 0.05 * cc_est.se);
}

#[test]
fn empty_separator_dispatches_to_the_single_regression_path() {
    let (_, _, ds) = chain_population();
    let spec = SuperLearnerSpec::standard(3);
    let opts = EstimateOptions::default();
    let report = estimate_tsr(&ds, &pair(&["W"], &[]), &spec, &opts).unwrap();
    assert_eq!(report.method, seqadj::estimators::Method::Tsr);
    assert!(report
        .diagnostics
        .warnings
        .iter()
        .any(|w| w.contains("single-regression")));
    assert!(report.diagnostics.gamma_star.is_none());
}

#[test]
fn option_validation_and_split_guards() {
    let (_, adj, ds) = chain_population();
    let spec = SuperLearnerSpec::standard(3);
    let bad_eps = EstimateOptions {
        eps_trunc: 0.0,
        ..EstimateOptions::default()
    };
    assert!(matches!(
        estimate_tsr(&ds, &adj, &spec, &bad_eps),
        Err(EstimateError::BadOptions(_))
    ));

    // A 12-row two-arm dataset trips the splitting guard.
    let small = Dataset::new(
        vec![
            ("W".into(), (0..12).map(|i| (i % 3) as f64).collect()),
            ("Z".into(), (0..12).map(|i| (i % 2) as f64).collect()),
        ],
        (0..12).map(|i| (i % 2) as u8).collect(),
        vec![1; 12],
        (0..12).map(|i| Some(i as f64)).collect(),
    )
    .unwrap();
    let split = EstimateOptions {
        split: true,
        ..EstimateOptions::default()
    };
    assert!(matches!(
        estimate_tsr(&small, &adj, &spec, &split),
        Err(EstimateError::SplitTooSmall(12))
    ));

    let few_boots = EstimateOptions {
        bootstrap_b: 3,
        ..EstimateOptions::default()
    };
    assert!(matches!(
        estimate_sr_with_plan(&ds, &adj, &NuisancePlan::super_learner(&spec), &few_boots),
        Err(EstimateError::BadOptions(_))
    ));
}

#[test]
fn split_mode_reports_half_sizes_and_stays_close() {
    let (ds, _) = gen_setup1(1200, -0.90, 3);
    let adj = pair(&["W1"], &["Z1", "Z2"]);
    let spec = SuperLearnerSpec::standard(9);
    let opts = EstimateOptions {
        split: true,
        seed: 77,
        ..EstimateOptions::default()
    };
    let report = estimate_tsr(&ds, &adj, &spec, &opts).unwrap();
    let (n1, n2) = report.diagnostics.fold_sizes.unwrap();
    assert_eq!(n1, 600);
    assert_eq!(n2, 600);
    assert_eq!(report.n_eval, 600);
    // Deterministic given the seed.
    let again = estimate_tsr(&ds, &adj, &spec, &opts).unwrap();
    assert_eq!(report.psi_hat, again.psi_hat);
}

#[test]
fn unadjusted_contrast_matches_hand_computation() {
    let ds = Dataset::new(
        vec![],
        vec![1, 1, 0, 0, 1],
        vec![1, 1, 1, 1, 0],
        vec![Some(3.0), Some(5.0), Some(1.0), Some(2.0), None],
    )
    .unwrap();
    let report = estimate_unadjusted(&ds).unwrap();
    assert!((report.psi_hat - (4.0 - 1.5)).abs() < 1e-12);
    assert_eq!(report.n_eval, 4);
}
