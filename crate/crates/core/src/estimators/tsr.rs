//! Targeted sequential regression: two least-squares fluctuations along the
//! clever covariates, then a plug-in over the evaluation sample with
//! influence-function standard errors.

use crate::mgraph::AdmissiblePair;
use crate::numeric::{mean, sample_variance};
use crate::rng::{derive_seed, Stream};

use super::eif::{clever_covariates, eif_values, solve_fluctuation, EifParts};
use super::surfaces::{fit_q2, fit_surface, truncate, Ctx, Layout};
use super::{
    Dataset, Diagnostics, EstimateError, EstimateOptions, EstimateReport, Method, NuisancePlan,
};

/// Split rows into fitting (J1) and evaluation (J2) halves, or use the full
/// sample for both.
pub(super) fn split_indices(
    n: usize,
    options: &EstimateOptions,
) -> Result<(Vec<usize>, Vec<usize>), EstimateError> {
    if !options.split {
        let all: Vec<usize> = (0..n).collect();
        return Ok((all.clone(), all));
    }
    if n < 20 {
        return Err(EstimateError::SplitTooSmall(n));
    }
    let mut order: Vec<usize> = (0..n).collect();
    Stream::new(derive_seed(options.seed, "split", 0)).shuffle(&mut order);
    let half = n / 2;
    let mut j1 = order[..half].to_vec();
    let mut j2 = order[half..].to_vec();
    j1.sort_unstable();
    j2.sort_unstable();
    Ok((j1, j2))
}

/// The targeted sequential regression estimate with the standard
/// super-learner plan for every nuisance.
pub fn estimate_tsr(
    data: &Dataset,
    pair: &AdmissiblePair,
    spec: &crate::learners::SuperLearnerSpec,
    options: &EstimateOptions,
) -> Result<EstimateReport, EstimateError> {
    estimate_tsr_with_plan(data, pair, &NuisancePlan::super_learner(spec), options)
}

/// The targeted sequential regression estimate for a pair with a nonempty
/// separator set. An empty separator dispatches to the single-regression
/// targeted path, which is the degenerate form of the same estimand.
pub fn estimate_tsr_with_plan(
    data: &Dataset,
    pair: &AdmissiblePair,
    plan: &NuisancePlan,
    options: &EstimateOptions,
) -> Result<EstimateReport, EstimateError> {
    options.validate()?;
    if pair.z.is_empty() {
        let mut report =
            super::tmle1::tmle_single_regression(data, pair, plan, options, true, Method::Tsr)?;
        report
            .diagnostics
            .warnings
            .push("empty separator set: single-regression targeted path".into());
        return Ok(report);
    }
    if !data.both_arms_present() {
        return Err(EstimateError::SingleArm);
    }

    let binding = data.bind_pair(pair)?;
    let ctx = Ctx::new(data, &binding);
    let (j1, j2) = split_indices(data.n(), options)?;
    let mut warnings = Vec::new();
    let mut diag = Diagnostics::default();

    // Nuisance fits on J1.
    let selected: Vec<usize> = j1.iter().copied().filter(|&i| data.r()[i] == 1).collect();
    if selected.is_empty() {
        return Err(EstimateError::EmptySelected);
    }
    diag.n_selected = Some(selected.len());
    let a_t: Vec<f64> = j1.iter().map(|&i| data.a()[i] as f64).collect();
    let r_t: Vec<f64> = j1.iter().map(|&i| data.r()[i] as f64).collect();
    let y_t: Vec<f64> = selected
        .iter()
        .map(|&i| data.y()[i].expect("selected row"))
        .collect();
    let pi_a = fit_surface(
        &plan.pi_a,
        &ctx,
        Layout::W,
        &j1,
        &a_t,
        true,
        "pi_a",
        &mut warnings,
    )?;
    let pi_r = fit_surface(
        &plan.pi_r,
        &ctx,
        Layout::Waz,
        &j1,
        &r_t,
        true,
        "pi_r",
        &mut warnings,
    )?;
    let q1 = fit_surface(
        &plan.q1,
        &ctx,
        Layout::Waz,
        &selected,
        &y_t,
        false,
        "q1",
        &mut warnings,
    )?;

    // Propensities, clever covariates, and initial predictions everywhere;
    // the fluctuation sums then restrict to J1 and the plug-in to J2.
    let n = data.n();
    let mut pa = vec![0.0; n];
    let mut pr = vec![0.0; n];
    let mut q1_hat = vec![0.0; n];
    for i in 0..n {
        pa[i] = truncate(
            pi_a.value(&ctx, i, None, None)?,
            options.eps_trunc,
            &mut diag.trunc_pi_a,
        );
        pr[i] = truncate(
            pi_r.value(&ctx, i, None, None)?,
            options.eps_trunc,
            &mut diag.trunc_pi_r,
        );
        q1_hat[i] = q1.value(&ctx, i, None, None)?;
    }
    let (h1, h2) = clever_covariates(data.a(), &pa, &pr);

    // First fluctuation: outcome residuals on H1 over selected J1 rows.
    let resid: Vec<f64> = selected
        .iter()
        .map(|&i| data.y()[i].expect("selected row") - q1_hat[i])
        .collect();
    let clever1: Vec<f64> = selected.iter().map(|&i| h1[i]).collect();
    let delta = solve_fluctuation(&resid, &clever1)?;
    diag.delta_star = Some(delta);
    let q1_star: Vec<f64> = (0..n).map(|i| q1_hat[i] + delta * h1[i]).collect();

    // Meta-regression of the updated predictions per arm on J1.
    let pseudo: Vec<f64> = j1.iter().map(|&i| q1_star[i]).collect();
    let q2 = fit_q2(&plan.q2, &ctx, &j1, &pseudo, "q2", &mut warnings)?;
    let q2_hat: Vec<f64> = (0..n)
        .map(|i| q2.value(&ctx, i, None, None))
        .collect::<Result<_, _>>()?;

    // Second fluctuation: pseudo-outcome residuals on H2 over all J1 rows.
    let resid2: Vec<f64> = j1.iter().map(|&i| q1_star[i] - q2_hat[i]).collect();
    let clever2: Vec<f64> = j1.iter().map(|&i| h2[i]).collect();
    let gamma = solve_fluctuation(&resid2, &clever2)?;
    diag.gamma_star = Some(gamma);

    // Plug-in over J2: updated arm contrasts, with the per-arm clever
    // covariate H2(W, a) entering the update.
    let n2 = j2.len();
    let mut dq2 = Vec::with_capacity(n2);
    let mut q2s_obs = Vec::with_capacity(n2);
    for &i in &j2 {
        let h2_arm1 = 1.0 / pa[i];
        let h2_arm0 = -1.0 / (1.0 - pa[i]);
        let q2s1 = q2.value(&ctx, i, Some(1), None)? + gamma * h2_arm1;
        let q2s0 = q2.value(&ctx, i, Some(0), None)? + gamma * h2_arm0;
        dq2.push(q2s1 - q2s0);
        q2s_obs.push(if data.a()[i] == 1 { q2s1 } else { q2s0 });
    }
    let psi = mean(&dq2);

    let h1_j2: Vec<f64> = j2.iter().map(|&i| h1[i]).collect();
    let h2_j2: Vec<f64> = j2.iter().map(|&i| h2[i]).collect();
    let r_j2: Vec<u8> = j2.iter().map(|&i| data.r()[i]).collect();
    let y_j2: Vec<f64> = j2.iter().map(|&i| data.y_or_nan(i)).collect();
    let q1s_j2: Vec<f64> = j2.iter().map(|&i| q1_star[i]).collect();
    let d = eif_values(
        &EifParts {
            h1: &h1_j2,
            h2: &h2_j2,
            r: &r_j2,
            y: &y_j2,
            q1: &q1s_j2,
            q2_obs: &q2s_obs,
            dq2: &dq2,
        },
        psi,
    );
    let se = (sample_variance(&d) / n2 as f64).sqrt();

    diag.fold_sizes = Some((j1.len(), n2));
    diag.warnings = warnings;
    let mut report = EstimateReport::wald(Method::Tsr, pair, psi, se, n2, diag);
    if options.keep_eif {
        report.eif = Some(d);
    }
    Ok(report)
}
