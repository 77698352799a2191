//! Unadjusted complete-case contrast, the baseline every simulation table
//! carries.

use crate::mgraph::AdmissiblePair;
use crate::numeric::{mean, sample_variance};

use super::{Dataset, Diagnostics, EstimateError, EstimateReport, Method};

/// Difference of complete-case arm means with a Welch standard error.
pub fn estimate_unadjusted(data: &Dataset) -> Result<EstimateReport, EstimateError> {
    let mut arms: [Vec<f64>; 2] = [Vec::new(), Vec::new()];
    for i in 0..data.n() {
        if data.r()[i] == 1 {
            arms[data.a()[i] as usize].push(data.y()[i].expect("selected row"));
        }
    }
    if arms[0].is_empty() || arms[1].is_empty() {
        return Err(EstimateError::SingleArm);
    }
    let psi = mean(&arms[1]) - mean(&arms[0]);
    let se = (sample_variance(&arms[1]) / arms[1].len() as f64
        + sample_variance(&arms[0]) / arms[0].len() as f64)
        .sqrt();
    let n_eval = arms[0].len() + arms[1].len();
    let pair = AdmissiblePair::new(Default::default(), Default::default())
        .expect("empty sets are disjoint");
    let diag = Diagnostics {
        n_selected: Some(n_eval),
        ..Diagnostics::default()
    };
    Ok(EstimateReport::wald(
        Method::Unadjusted,
        &pair,
        psi,
        se,
        n_eval,
        diag,
    ))
}
