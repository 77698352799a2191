//! Estimate reports and their diagnostics.

use serde::Serialize;

use crate::mgraph::AdmissiblePair;
use crate::numeric::Z_975;

use super::Method;

#[derive(Debug, Clone, Serialize)]
pub struct EstimateReport {
    pub method: Method,
    pub pair_w: Vec<String>,
    pub pair_z: Vec<String>,
    pub psi_hat: f64,
    pub se: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub n_eval: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eif: Option<Vec<f64>>,
    pub diagnostics: Diagnostics,
}

impl EstimateReport {
    pub(super) fn wald(
        method: Method,
        pair: &AdmissiblePair,
        psi_hat: f64,
        se: f64,
        n_eval: usize,
        diagnostics: Diagnostics,
    ) -> Self {
        Self {
            method,
            pair_w: pair.w.names(),
            pair_z: pair.z.names(),
            psi_hat,
            se,
            ci_lo: psi_hat - Z_975 * se,
            ci_hi: psi_hat + Z_975 * se,
            n_eval,
            eif: None,
            diagnostics,
        }
    }

    pub fn pair_display(&self) -> String {
        format!(
            "({{{}}};{{{}}})",
            self.pair_w.join(","),
            self.pair_z.join(",")
        )
    }

    pub fn covers(&self, truth: f64) -> bool {
        self.ci_lo <= truth && truth <= self.ci_hi
    }
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct Diagnostics {
    /// Exposure-propensity predictions clipped to the truncation bounds.
    pub trunc_pi_a: usize,
    /// Selection-propensity predictions clipped.
    pub trunc_pi_r: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta_star: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma_star: Option<f64>,
    /// Fitting / evaluation sample sizes (J1, J2).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fold_sizes: Option<(usize, usize)>,
    /// Selected-row count the outcome model was fit on.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_selected: Option<usize>,
    /// Bootstrap replicates behind the interval.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bootstrap_reps: Option<usize>,
    /// Strata that fell back to the marginal separator distribution.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub marginal_fallbacks: Option<usize>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub warnings: Vec<String>,
}
