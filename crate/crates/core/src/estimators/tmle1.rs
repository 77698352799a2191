//! Single-regression targeted estimators (empty separator set): one
//! outcome surface `Q(W, A)` on the selected rows, one fluctuation along
//! `H2 / π̂R(W, A)` (or plain `H2` for the complete-case variant), and a
//! plug-in over the arm contrast with influence-function standard errors.

use crate::learners::SuperLearnerSpec;
use crate::mgraph::{AdmissiblePair, NodeSet};
use crate::numeric::{mean, sample_variance};

use super::surfaces::{fit_surface, truncate, Ctx, Layout};
use super::tsr::split_indices;
use super::{
    Dataset, Diagnostics, EstimateError, EstimateOptions, EstimateReport, Method, NuisancePlan,
};

/// Targeted single-regression estimator with a selection propensity model
/// over `(W, A)`.
pub fn estimate_tmle_1r(
    data: &Dataset,
    w_set: &NodeSet,
    spec: &SuperLearnerSpec,
    options: &EstimateOptions,
) -> Result<EstimateReport, EstimateError> {
    estimate_tmle_1r_with_plan(data, w_set, &NuisancePlan::super_learner(spec), options)
}

pub fn estimate_tmle_1r_with_plan(
    data: &Dataset,
    w_set: &NodeSet,
    plan: &NuisancePlan,
    options: &EstimateOptions,
) -> Result<EstimateReport, EstimateError> {
    let pair = AdmissiblePair::new(w_set.clone(), NodeSet::new())
        .expect("empty separator cannot overlap");
    tmle_single_regression(data, &pair, plan, options, true, Method::Tmle1r)
}

/// Targeted estimator on complete cases only: no selection model at all.
pub fn estimate_tmle_cc(
    data: &Dataset,
    w_set: &NodeSet,
    spec: &SuperLearnerSpec,
    options: &EstimateOptions,
) -> Result<EstimateReport, EstimateError> {
    estimate_tmle_cc_with_plan(data, w_set, &NuisancePlan::super_learner(spec), options)
}

pub fn estimate_tmle_cc_with_plan(
    data: &Dataset,
    w_set: &NodeSet,
    plan: &NuisancePlan,
    options: &EstimateOptions,
) -> Result<EstimateReport, EstimateError> {
    let pair = AdmissiblePair::new(w_set.clone(), NodeSet::new())
        .expect("empty separator cannot overlap");
    // Complete-case analysis restricts the data before anything is fit.
    let rows: Vec<usize> = (0..data.n()).filter(|&i| data.r()[i] == 1).collect();
    if rows.is_empty() {
        return Err(EstimateError::EmptySelected);
    }
    let cc = data.subset(&rows)?;
    tmle_single_regression(&cc, &pair, plan, options, false, Method::TmleCc)
}

/// Shared single-fluctuation core. With `use_selection_model` the clever
/// covariate is `H2(W, A) / π̂R(W, A)`; without it (complete cases) it is
/// `H2` and the selection indicator is constant 1 by construction.
pub(super) fn tmle_single_regression(
    data: &Dataset,
    pair: &AdmissiblePair,
    plan: &NuisancePlan,
    options: &EstimateOptions,
    use_selection_model: bool,
    method: Method,
) -> Result<EstimateReport, EstimateError> {
    options.validate()?;
    if !data.both_arms_present() {
        return Err(EstimateError::SingleArm);
    }
    let binding = data.bind_pair(pair)?;
    let ctx = Ctx::new(data, &binding);
    let (j1, j2) = split_indices(data.n(), options)?;
    let mut warnings = Vec::new();
    let mut diag = Diagnostics::default();

    let selected: Vec<usize> = j1.iter().copied().filter(|&i| data.r()[i] == 1).collect();
    if selected.is_empty() {
        return Err(EstimateError::EmptySelected);
    }
    diag.n_selected = Some(selected.len());

    let a_t: Vec<f64> = j1.iter().map(|&i| data.a()[i] as f64).collect();
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
    let pi_r = if use_selection_model {
        let r_t: Vec<f64> = j1.iter().map(|&i| data.r()[i] as f64).collect();
        Some(fit_surface(
            &plan.pi_r,
            &ctx,
            Layout::Waz,
            &j1,
            &r_t,
            true,
            "pi_r",
            &mut warnings,
        )?)
    } else {
        None
    };
    let y_t: Vec<f64> = selected
        .iter()
        .map(|&i| data.y()[i].expect("selected row"))
        .collect();
    let q = fit_surface(
        &plan.q1,
        &ctx,
        Layout::Waz,
        &selected,
        &y_t,
        false,
        "q1",
        &mut warnings,
    )?;

    let n = data.n();
    let mut pa = vec![0.0; n];
    for i in 0..n {
        pa[i] = truncate(
            pi_a.value(&ctx, i, None, None)?,
            options.eps_trunc,
            &mut diag.trunc_pi_a,
        );
    }
    // Clever covariate at the observed arm and at each arm override.
    let h_at = |i: usize, arm: u8, diag: &mut Diagnostics| -> Result<f64, EstimateError> {
        let h2 = if arm == 1 {
            1.0 / pa[i]
        } else {
            -1.0 / (1.0 - pa[i])
        };
        match &pi_r {
            Some(s) => {
                let pr = truncate(
                    s.value(&ctx, i, Some(arm), None)?,
                    options.eps_trunc,
                    &mut diag.trunc_pi_r,
                );
                Ok(h2 / pr)
            }
            None => Ok(h2),
        }
    };

    // Fluctuation over the selected fitting rows.
    let mut resid = Vec::with_capacity(selected.len());
    let mut clever = Vec::with_capacity(selected.len());
    for &i in &selected {
        let h = h_at(i, data.a()[i], &mut diag)?;
        clever.push(h);
        resid.push(data.y()[i].expect("selected row") - q.value(&ctx, i, None, None)?);
    }
    let delta = super::eif::solve_fluctuation(&resid, &clever)?;
    diag.delta_star = Some(delta);

    // Plug-in and influence function over the evaluation rows.
    let n2 = j2.len();
    let mut dq = Vec::with_capacity(n2);
    let mut d_rows = Vec::with_capacity(n2);
    for &i in &j2 {
        let q1s = q.value(&ctx, i, Some(1), None)? + delta * h_at(i, 1, &mut diag)?;
        let q0s = q.value(&ctx, i, Some(0), None)? + delta * h_at(i, 0, &mut diag)?;
        dq.push(q1s - q0s);
        d_rows.push((i, if data.a()[i] == 1 { q1s } else { q0s }));
    }
    let psi = mean(&dq);
    let mut d = Vec::with_capacity(n2);
    for (slot, &(i, q_obs)) in d_rows.iter().enumerate() {
        let resid_term = if data.r()[i] == 1 {
            let h = h_at(i, data.a()[i], &mut diag)?;
            h * (data.y()[i].expect("selected row") - q_obs)
        } else {
            0.0
        };
        d.push(resid_term + dq[slot] - psi);
    }
    let se = (sample_variance(&d) / n2 as f64).sqrt();

    diag.fold_sizes = Some((j1.len(), n2));
    diag.warnings = warnings;
    let mut report = EstimateReport::wald(method, pair, psi, se, n2, diag);
    if options.keep_eif {
        report.eif = Some(d);
    }
    Ok(report)
}
