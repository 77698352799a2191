//! Double inverse probability weighting: weight selected outcomes by both
//! the exposure and selection propensities.

use crate::learners::SuperLearnerSpec;
use crate::mgraph::AdmissiblePair;
use crate::numeric::{mean, sample_sd};

use super::surfaces::{fit_surface, truncate, Ctx, Layout};
use super::{
    Dataset, Diagnostics, EstimateError, EstimateOptions, EstimateReport, Method, NuisancePlan,
};

pub fn estimate_dipw(
    data: &Dataset,
    pair: &AdmissiblePair,
    spec: &SuperLearnerSpec,
    options: &EstimateOptions,
) -> Result<EstimateReport, EstimateError> {
    estimate_dipw_with_plan(data, pair, &NuisancePlan::super_learner(spec), options)
}

/// `ψ̂ = n⁻¹ Σ R Y [A/π̂A - (1-A)/(1-π̂A)] / π̂R`, with the standard error
/// from the empirical variance of the per-row contribution.
pub fn estimate_dipw_with_plan(
    data: &Dataset,
    pair: &AdmissiblePair,
    plan: &NuisancePlan,
    options: &EstimateOptions,
) -> Result<EstimateReport, EstimateError> {
    options.validate()?;
    if !data.both_arms_present() {
        return Err(EstimateError::SingleArm);
    }
    let binding = data.bind_pair(pair)?;
    let ctx = Ctx::new(data, &binding);
    let n = data.n();
    let all: Vec<usize> = (0..n).collect();
    let mut warnings = Vec::new();
    let mut diag = Diagnostics::default();

    let a_t: Vec<f64> = data.a().iter().map(|&a| a as f64).collect();
    let r_t: Vec<f64> = data.r().iter().map(|&r| r as f64).collect();
    let pi_a = fit_surface(
        &plan.pi_a,
        &ctx,
        Layout::W,
        &all,
        &a_t,
        true,
        "pi_a",
        &mut warnings,
    )?;
    let pi_r = fit_surface(
        &plan.pi_r,
        &ctx,
        Layout::Waz,
        &all,
        &r_t,
        true,
        "pi_r",
        &mut warnings,
    )?;

    let mut g = Vec::with_capacity(n);
    for i in 0..n {
        let pa = truncate(
            pi_a.value(&ctx, i, None, None)?,
            options.eps_trunc,
            &mut diag.trunc_pi_a,
        );
        let pr = truncate(
            pi_r.value(&ctx, i, None, None)?,
            options.eps_trunc,
            &mut diag.trunc_pi_r,
        );
        let contribution = if data.r()[i] == 1 {
            let y = data.y()[i].expect("selected row");
            let arm_weight = if data.a()[i] == 1 {
                1.0 / pa
            } else {
                -1.0 / (1.0 - pa)
            };
            y * arm_weight / pr
        } else {
            0.0
        };
        g.push(contribution);
    }
    let psi = mean(&g);
    let se = sample_sd(&g) / (n as f64).sqrt();
    diag.warnings = warnings;
    Ok(EstimateReport::wald(Method::Dipw, pair, psi, se, n, diag))
}
