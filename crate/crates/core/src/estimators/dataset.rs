//! Rectangular observed-data sample: named covariate columns, a binary
//! exposure, a binary selection indicator, and an outcome observed exactly
//! when selected.

use crate::mgraph::AdmissiblePair;

use super::EstimateError;

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    covariates: Vec<(String, Vec<f64>)>,
    a: Vec<u8>,
    r: Vec<u8>,
    y: Vec<Option<f64>>,
}

impl Dataset {
    pub fn new(
        covariates: Vec<(String, Vec<f64>)>,
        a: Vec<u8>,
        r: Vec<u8>,
        y: Vec<Option<f64>>,
    ) -> Result<Self, EstimateError> {
        let n = a.len();
        if n == 0 {
            return Err(EstimateError::EmptyData);
        }
        if r.len() != n || y.len() != n {
            return Err(EstimateError::Shape(
                "exposure, selection, and outcome lengths differ".into(),
            ));
        }
        for (name, col) in &covariates {
            if col.len() != n {
                return Err(EstimateError::Shape(format!(
                    "column {name} has {} rows, expected {n}",
                    col.len()
                )));
            }
            if col.iter().any(|v| !v.is_finite()) {
                return Err(EstimateError::Shape(format!(
                    "column {name} contains a non-finite value"
                )));
            }
        }
        for i in 0..covariates.len() {
            for j in 0..i {
                if covariates[i].0 == covariates[j].0 {
                    return Err(EstimateError::Shape(format!(
                        "duplicate covariate column {}",
                        covariates[i].0
                    )));
                }
            }
        }
        if a.iter().any(|&v| v > 1) || r.iter().any(|&v| v > 1) {
            return Err(EstimateError::Shape(
                "exposure and selection must be 0/1".into(),
            ));
        }
        for i in 0..n {
            match (r[i], y[i]) {
                (1, None) => {
                    return Err(EstimateError::MaskingContradiction { row: i + 1 })
                }
                (0, Some(_)) => {
                    return Err(EstimateError::MaskingContradiction { row: i + 1 })
                }
                _ => {}
            }
        }
        Ok(Self {
            covariates,
            a,
            r,
            y,
        })
    }

    pub fn n(&self) -> usize {
        self.a.len()
    }

    pub fn covariates(&self) -> &[(String, Vec<f64>)] {
        &self.covariates
    }

    pub fn covariate_names(&self) -> Vec<&str> {
        self.covariates.iter().map(|(n, _)| n.as_str()).collect()
    }

    pub fn covariate(&self, name: &str) -> Option<&[f64]> {
        self.covariates
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, c)| c.as_slice())
    }

    pub fn a(&self) -> &[u8] {
        &self.a
    }

    pub fn r(&self) -> &[u8] {
        &self.r
    }

    pub fn y(&self) -> &[Option<f64>] {
        &self.y
    }

    /// Observed outcome, or NaN where masked (handy for scans that guard on
    /// `r` themselves).
    pub fn y_or_nan(&self, i: usize) -> f64 {
        self.y[i].unwrap_or(f64::NAN)
    }

    /// Attach a synthetic covariate column (used by misspecification
    /// scenarios that regress on noise).
    pub fn add_covariate(&mut self, name: &str, col: Vec<f64>) -> Result<(), EstimateError> {
        if col.len() != self.n() {
            return Err(EstimateError::Shape(format!(
                "column {name} has {} rows, expected {}",
                col.len(),
                self.n()
            )));
        }
        if self.covariate(name).is_some() {
            return Err(EstimateError::Shape(format!(
                "duplicate covariate column {name}"
            )));
        }
        self.covariates.push((name.to_string(), col));
        Ok(())
    }

    /// Rows with the given indices (repeats allowed, e.g. bootstrap).
    pub fn subset(&self, rows: &[usize]) -> Result<Dataset, EstimateError> {
        Dataset::new(
            self.covariates
                .iter()
                .map(|(n, c)| (n.clone(), rows.iter().map(|&i| c[i]).collect()))
                .collect(),
            rows.iter().map(|&i| self.a[i]).collect(),
            rows.iter().map(|&i| self.r[i]).collect(),
            rows.iter().map(|&i| self.y[i]).collect(),
        )
    }

    pub fn count_selected(&self) -> usize {
        self.r.iter().filter(|&&r| r == 1).count()
    }

    pub fn both_arms_present(&self) -> bool {
        self.a.iter().any(|&a| a == 1) && self.a.iter().any(|&a| a == 0)
    }

    /// Resolve an adjustment pair against the covariate columns.
    pub fn bind_pair(&self, pair: &AdmissiblePair) -> Result<PairBinding, EstimateError> {
        let resolve = |names: Vec<String>| -> Result<Vec<usize>, EstimateError> {
            names
                .into_iter()
                .map(|name| {
                    self.covariates
                        .iter()
                        .position(|(n, _)| *n == name)
                        .ok_or(EstimateError::MissingColumn(name))
                })
                .collect()
        };
        Ok(PairBinding {
            w: resolve(pair.w.names())?,
            z: resolve(pair.z.names())?,
        })
    }
}

/// Covariate-column indices for the W and Z sides of a pair, in the sorted
/// name order the feature layouts rely on.
#[derive(Debug, Clone)]
pub struct PairBinding {
    pub w: Vec<usize>,
    pub z: Vec<usize>,
}

impl PairBinding {
    pub fn w_cols<'d>(&self, ds: &'d Dataset) -> Vec<&'d [f64]> {
        self.w
            .iter()
            .map(|&i| ds.covariates[i].1.as_slice())
            .collect()
    }

    pub fn z_cols<'d>(&self, ds: &'d Dataset) -> Vec<&'d [f64]> {
        self.z
            .iter()
            .map(|&i| ds.covariates[i].1.as_slice())
            .collect()
    }
}
