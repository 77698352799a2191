//! ATE estimators for observational data with confounding and outcome
//! attrition, given an adjustment pair `(W;Z)`:
//!
//! - [`estimate_tsr`]: the two-fluctuation targeted sequential regression
//!   procedure (fit nuisances, fluctuate the mean-imputation surface along
//!   its clever covariate, regress the updated predictions per arm,
//!   fluctuate again, plug in), with influence-function standard errors.
//! - [`estimate_dipw`]: double inverse probability weighting by the exposure
//!   and selection propensities.
//! - [`estimate_sr`]: the naive sequential-regressions plug-in with a
//!   percentile-bootstrap interval.
//! - [`estimate_cd_discrete`]: the conditional-distribution plug-in for
//!   discrete separators.
//! - [`estimate_tmle_1r`] / [`estimate_tmle_cc`]: single-regression TMLE
//!   with and without a selection model.
//! - [`estimate_unadjusted`]: complete-case difference of arm means.
//!
//! Propensities are truncated here, at prediction time, and nowhere else.

mod dataset;
mod dipw;
mod eif;
mod naive;
mod report;
mod sr;
mod surfaces;
mod tmle1;
mod tsr;

pub use dataset::{Dataset, PairBinding};
pub use dipw::{estimate_dipw, estimate_dipw_with_plan};
pub use eif::{clever_covariates, eif_values, solve_fluctuation, EifParts};
pub use naive::estimate_unadjusted;
pub use report::{Diagnostics, EstimateReport};
pub use sr::{
    estimate_cd_discrete, estimate_cd_with_plan, estimate_sr, estimate_sr_with_plan,
};
pub use surfaces::{
    fit_nuisance, fit_nuisance_with, ColumnExpr, NuisancePlan, NuisanceSet, Surface,
    SurfaceRecipe,
};
pub use tmle1::{
    estimate_tmle_1r, estimate_tmle_1r_with_plan, estimate_tmle_cc, estimate_tmle_cc_with_plan,
};
pub use tsr::{estimate_tsr, estimate_tsr_with_plan};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::learners::LearnError;

#[derive(Debug, Error)]
pub enum EstimateError {
    #[error("empty dataset")]
    EmptyData,
    #[error("shape error: {0}")]
    Shape(String),
    #[error("row {row}: outcome presence contradicts the selection indicator")]
    MaskingContradiction { row: usize },
    #[error("column `{0}` not found in the dataset")]
    MissingColumn(String),
    #[error("both treatment arms must be present")]
    SingleArm,
    #[error("no selected rows (R = 1) to fit the outcome model on")]
    EmptySelected,
    #[error("clever covariate is degenerate (zero sum of squares)")]
    DegenerateClever,
    #[error("sample splitting needs at least 20 rows, got {0}")]
    SplitTooSmall(usize),
    #[error("unsupported variant: {0}")]
    Unsupported(String),
    #[error("invalid options: {0}")]
    BadOptions(String),
    #[error("oracle surface has no entry for the queried point")]
    OracleMiss,
    #[error(transparent)]
    Learn(#[from] LearnError),
}

/// Estimator options shared across methods. All randomness (fold shuffles,
/// sample splitting, bootstrap) derives from `seed`.
#[derive(Debug, Clone)]
pub struct EstimateOptions {
    /// Two-half sample splitting for the targeted procedures.
    pub split: bool,
    /// Propensity truncation bound, applied at prediction time.
    pub eps_trunc: f64,
    pub seed: u64,
    /// Bootstrap replicates for the plug-in estimators' intervals.
    pub bootstrap_b: usize,
    /// Carry per-row influence-function values in the report.
    pub keep_eif: bool,
}

impl Default for EstimateOptions {
    fn default() -> Self {
        Self {
            split: false,
            eps_trunc: 0.01,
            seed: 0,
            bootstrap_b: 200,
            keep_eif: false,
        }
    }
}

impl EstimateOptions {
    pub fn validate(&self) -> Result<(), EstimateError> {
        if !(self.eps_trunc > 0.0 && self.eps_trunc <= 0.2) {
            return Err(EstimateError::BadOptions(format!(
                "eps_trunc must be in (0, 0.2], got {}",
                self.eps_trunc
            )));
        }
        Ok(())
    }
}

/// Estimator identifiers used by reports, the CLI, and the simulation
/// harness.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Tsr,
    Dipw,
    Sr,
    Cd,
    Tmle1r,
    TmleCc,
    Unadjusted,
}

impl Method {
    pub fn label(self) -> &'static str {
        match self {
            Method::Tsr => "tsr",
            Method::Dipw => "dipw",
            Method::Sr => "sr",
            Method::Cd => "cd",
            Method::Tmle1r => "tmle1r",
            Method::TmleCc => "tmlecc",
            Method::Unadjusted => "unadjusted",
        }
    }

    /// The six user-selectable methods, in report order.
    pub const CLI_METHODS: [Method; 6] = [
        Method::Tsr,
        Method::Dipw,
        Method::Sr,
        Method::Cd,
        Method::Tmle1r,
        Method::TmleCc,
    ];
}

impl std::str::FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "tsr" => Ok(Method::Tsr),
            "dipw" => Ok(Method::Dipw),
            "sr" => Ok(Method::Sr),
            "cd" => Ok(Method::Cd),
            "tmle1r" => Ok(Method::Tmle1r),
            "tmlecc" => Ok(Method::TmleCc),
            "unadjusted" => Ok(Method::Unadjusted),
            other => Err(format!("unknown method `{other}`")),
        }
    }
}
