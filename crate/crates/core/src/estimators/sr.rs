//! Naive plug-in estimators: sequential regressions (SR) and the
//! conditional-distribution (CD) plug-in for discrete separators, both with
//! percentile-bootstrap intervals (every resample refits everything).

use std::collections::BTreeMap;

use crate::learners::SuperLearnerSpec;
use crate::mgraph::AdmissiblePair;
use crate::numeric::{mean, quantile_sorted, sample_sd};
use crate::rng::{derive_seed, Stream};

use super::surfaces::{fit_q2, fit_surface, Ctx, Layout};
use super::{
    Dataset, Diagnostics, EstimateError, EstimateOptions, EstimateReport, Method, NuisancePlan,
};

const MAX_DISCRETE_LEVELS: usize = 20;
const MIN_BOOTSTRAP: usize = 10;

/// Point value of the sequential-regressions plug-in: fit `Q1` on selected
/// rows, regress its predictions on W per arm, average the arm contrast.
/// With an empty separator this is the single-regression plug-in
/// `n⁻¹ Σ Δ_a Q1(W, a)`.
fn sr_point(
    data: &Dataset,
    pair: &AdmissiblePair,
    plan: &NuisancePlan,
    warnings: &mut Vec<String>,
) -> Result<(f64, usize), EstimateError> {
    if !data.both_arms_present() {
        return Err(EstimateError::SingleArm);
    }
    let binding = data.bind_pair(pair)?;
    let ctx = Ctx::new(data, &binding);
    let n = data.n();
    let selected: Vec<usize> = (0..n).filter(|&i| data.r()[i] == 1).collect();
    if selected.is_empty() {
        return Err(EstimateError::EmptySelected);
    }
    let y_t: Vec<f64> = selected
        .iter()
        .map(|&i| data.y()[i].expect("selected row"))
        .collect();
    let q1 = fit_surface(
        &plan.q1,
        &ctx,
        Layout::Waz,
        &selected,
        &y_t,
        false,
        "q1",
        warnings,
    )?;

    if pair.z.is_empty() {
        let mut contrasts = Vec::with_capacity(n);
        for i in 0..n {
            contrasts
                .push(q1.value(&ctx, i, Some(1), None)? - q1.value(&ctx, i, Some(0), None)?);
        }
        return Ok((mean(&contrasts), selected.len()));
    }

    let all: Vec<usize> = (0..n).collect();
    let pseudo: Vec<f64> = (0..n)
        .map(|i| q1.value(&ctx, i, None, None))
        .collect::<Result<_, _>>()?;
    let q2 = fit_q2(&plan.q2, &ctx, &all, &pseudo, "q2", warnings)?;
    let mut contrasts = Vec::with_capacity(n);
    for i in 0..n {
        contrasts.push(q2.value(&ctx, i, Some(1), None)? - q2.value(&ctx, i, Some(0), None)?);
    }
    Ok((mean(&contrasts), selected.len()))
}

pub fn estimate_sr(
    data: &Dataset,
    pair: &AdmissiblePair,
    spec: &SuperLearnerSpec,
    options: &EstimateOptions,
) -> Result<EstimateReport, EstimateError> {
    estimate_sr_with_plan(data, pair, &NuisancePlan::super_learner(spec), options)
}

pub fn estimate_sr_with_plan(
    data: &Dataset,
    pair: &AdmissiblePair,
    plan: &NuisancePlan,
    options: &EstimateOptions,
) -> Result<EstimateReport, EstimateError> {
    bootstrap_plugin(data, pair, plan, options, Method::Sr, &sr_point)
}

/// Shared percentile-bootstrap wrapper for the plug-in estimators.
fn bootstrap_plugin(
    data: &Dataset,
    pair: &AdmissiblePair,
    plan: &NuisancePlan,
    options: &EstimateOptions,
    method: Method,
    point: &dyn Fn(
        &Dataset,
        &AdmissiblePair,
        &NuisancePlan,
        &mut Vec<String>,
    ) -> Result<(f64, usize), EstimateError>,
) -> Result<EstimateReport, EstimateError> {
    options.validate()?;
    if options.bootstrap_b < MIN_BOOTSTRAP {
        return Err(EstimateError::BadOptions(format!(
            "bootstrap_b must be at least {MIN_BOOTSTRAP}, got {}",
            options.bootstrap_b
        )));
    }
    let mut warnings = Vec::new();
    let (psi, n_selected) = point(data, pair, plan, &mut warnings)?;

    let n = data.n();
    let mut boots = Vec::with_capacity(options.bootstrap_b);
    let mut failures = 0usize;
    for b in 0..options.bootstrap_b {
        let mut stream = Stream::new(derive_seed(options.seed, "boot", b as u64));
        let rows: Vec<usize> = (0..n).map(|_| stream.below(n)).collect();
        let resample = data.subset(&rows)?;
        let mut scratch = Vec::new();
        let reseeded = reseed_plan(plan, derive_seed(options.seed, "boot_fit", b as u64));
        match point(&resample, pair, &reseeded, &mut scratch) {
            Ok((v, _)) => boots.push(v),
            Err(_) => failures += 1,
        }
    }
    if boots.is_empty() {
        return Err(EstimateError::BadOptions(
            "all bootstrap replicates failed".into(),
        ));
    }
    boots.sort_by(f64::total_cmp);
    let ci_lo = quantile_sorted(&boots, 0.025);
    let ci_hi = quantile_sorted(&boots, 0.975);
    let se = sample_sd(&boots);
    if failures > 0 {
        warnings.push(format!("{failures} bootstrap replicates failed"));
    }

    let diag = Diagnostics {
        n_selected: Some(n_selected),
        bootstrap_reps: Some(boots.len()),
        warnings,
        ..Diagnostics::default()
    };
    Ok(EstimateReport {
        method,
        pair_w: pair.w.names(),
        pair_z: pair.z.names(),
        psi_hat: psi,
        se,
        ci_lo,
        ci_hi,
        n_eval: n,
        eif: None,
        diagnostics: diag,
    })
}

/// Bootstrap refits must not reuse the original fold shuffles.
fn reseed_plan(plan: &NuisancePlan, seed: u64) -> NuisancePlan {
    let reseed = |r: &super::SurfaceRecipe| match r {
        super::SurfaceRecipe::Sl(spec) => super::SurfaceRecipe::Sl(spec.with_seed(seed)),
        other => other.clone(),
    };
    NuisancePlan {
        pi_a: reseed(&plan.pi_a),
        pi_r: reseed(&plan.pi_r),
        q1: reseed(&plan.q1),
        q2: reseed(&plan.q2),
    }
}

/// Conditional-distribution plug-in for discrete separators:
/// `ψ̂ = n⁻¹ Σ_i Δ_a Σ_z P̂(z | W_i, a) Q̂1(W_i, a, z)` with a frequency
/// model for the separator conditional on (binned) W strata.
pub fn estimate_cd_discrete(
    data: &Dataset,
    pair: &AdmissiblePair,
    spec: &SuperLearnerSpec,
    options: &EstimateOptions,
) -> Result<EstimateReport, EstimateError> {
    estimate_cd_with_plan(data, pair, &NuisancePlan::super_learner(spec), options)
}

pub fn estimate_cd_with_plan(
    data: &Dataset,
    pair: &AdmissiblePair,
    plan: &NuisancePlan,
    options: &EstimateOptions,
) -> Result<EstimateReport, EstimateError> {
    if pair.z.is_empty() {
        return Err(EstimateError::Unsupported(
            "conditional-distribution estimator needs a nonempty separator set".into(),
        ));
    }
    // Fail fast (before any bootstrap) on continuous separators.
    let binding = data.bind_pair(pair)?;
    for (idx, name) in binding.z.iter().zip(pair.z.iter()) {
        let col = &data.covariates()[*idx].1;
        if distinct_values(col).len() > MAX_DISCRETE_LEVELS {
            return Err(EstimateError::Unsupported(format!(
                "separator column {name} has more than {MAX_DISCRETE_LEVELS} levels"
            )));
        }
    }
    bootstrap_plugin(data, pair, plan, options, Method::Cd, &cd_point)
}

fn distinct_values(col: &[f64]) -> Vec<f64> {
    let mut vals: Vec<f64> = col.to_vec();
    vals.sort_by(f64::total_cmp);
    vals.dedup();
    vals
}

/// Stratum key for the frequency model: per-column level index for discrete
/// columns, decile bin otherwise.
fn w_strata(data: &Dataset, w_ids: &[usize]) -> Vec<Vec<u16>> {
    let n = data.n();
    let mut keys = vec![Vec::with_capacity(w_ids.len()); n];
    for &ci in w_ids {
        let col = &data.covariates()[ci].1;
        let distinct = distinct_values(col);
        if distinct.len() <= MAX_DISCRETE_LEVELS {
            for i in 0..n {
                let level = distinct.partition_point(|&v| v < col[i]);
                keys[i].push(level as u16);
            }
        } else {
            let mut sorted = col.clone();
            sorted.sort_by(f64::total_cmp);
            let cuts: Vec<f64> = (1..10)
                .map(|d| quantile_sorted(&sorted, d as f64 / 10.0))
                .collect();
            for i in 0..n {
                let bin = cuts.partition_point(|&c| c <= col[i]);
                keys[i].push(bin as u16);
            }
        }
    }
    keys
}

fn cd_point(
    data: &Dataset,
    pair: &AdmissiblePair,
    plan: &NuisancePlan,
    warnings: &mut Vec<String>,
) -> Result<(f64, usize), EstimateError> {
    if !data.both_arms_present() {
        return Err(EstimateError::SingleArm);
    }
    let binding = data.bind_pair(pair)?;
    let ctx = Ctx::new(data, &binding);
    let n = data.n();
    let selected: Vec<usize> = (0..n).filter(|&i| data.r()[i] == 1).collect();
    if selected.is_empty() {
        return Err(EstimateError::EmptySelected);
    }
    let y_t: Vec<f64> = selected
        .iter()
        .map(|&i| data.y()[i].expect("selected row"))
        .collect();
    let q1 = fit_surface(
        &plan.q1,
        &ctx,
        Layout::Waz,
        &selected,
        &y_t,
        false,
        "q1",
        warnings,
    )?;

    // Observed separator configurations and their per-(stratum, arm) counts.
    let z_cols = binding.z_cols(data);
    let z_config = |i: usize| -> Vec<u64> {
        z_cols.iter().map(|c| c[i].to_bits()).collect()
    };
    let mut z_levels: BTreeMap<Vec<u64>, Vec<f64>> = BTreeMap::new();
    for i in 0..n {
        z_levels
            .entry(z_config(i))
            .or_insert_with(|| z_cols.iter().map(|c| c[i]).collect());
    }
    let strata = w_strata(data, &binding.w);
    let mut counts: BTreeMap<(Vec<u16>, u8), BTreeMap<Vec<u64>, usize>> = BTreeMap::new();
    let mut marginal: [BTreeMap<Vec<u64>, usize>; 2] = [BTreeMap::new(), BTreeMap::new()];
    for i in 0..n {
        let key = (strata[i].clone(), data.a()[i]);
        *counts.entry(key).or_default().entry(z_config(i)).or_insert(0) += 1;
        *marginal[data.a()[i] as usize]
            .entry(z_config(i))
            .or_insert(0) += 1;
    }

    let mut fallbacks = 0usize;
    let mut contrasts = Vec::with_capacity(n);
    for i in 0..n {
        let mut arms = [0.0, 0.0];
        for a in 0..2u8 {
            let table = match counts.get(&(strata[i].clone(), a)) {
                Some(t) => t,
                None => {
                    fallbacks += 1;
                    &marginal[a as usize]
                }
            };
            let total: usize = table.values().sum();
            let mut acc = 0.0;
            for (zk, &count) in table {
                let z_vals = &z_levels[zk];
                let q = q1.value(&ctx, i, Some(a), Some(z_vals))?;
                acc += count as f64 / total as f64 * q;
            }
            arms[a as usize] = acc;
        }
        contrasts.push(arms[1] - arms[0]);
    }
    if fallbacks > 0 {
        warnings.push(format!(
            "{fallbacks} empty (stratum, arm) cells used the marginal separator distribution"
        ));
    }
    Ok((mean(&contrasts), selected.len()))
}
