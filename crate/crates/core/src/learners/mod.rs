//! Regression learners and the cross-validated convex super-learner that
//! back all nuisance-model fits: sample means, ordinary / ridge-fallback
//! least squares, IRLS logistic regression, and a greedy hinge-spline
//! learner. Probability truncation is deliberately *not* done here; the
//! estimators module truncates at prediction time.

mod glm;
mod linalg;
mod mars;
mod super_learner;

pub use mars::BasisTerm;
pub use super_learner::fit_super_learner;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum LearnError {
    #[error("empty data")]
    EmptyData,
    #[error("column {0} has length {1}, expected {2}")]
    RaggedColumn(String, usize, usize),
    #[error("non-finite value in column {0}")]
    NonFinite(String),
    #[error("response must be binary 0/1 for logistic fits")]
    NonBinaryResponse,
    #[error("weights must be nonnegative with positive sum")]
    BadWeights,
    #[error("invalid super-learner spec: {0}")]
    BadSpec(String),
    #[error("all base learners failed: {0}")]
    AllLearnersFailed(String),
    #[error("prediction input has {0} features, model expects {1}")]
    SchemaMismatch(usize, usize),
    #[error("linear system is singular even after ridge fallback")]
    Singular,
}

/// Rectangular training data: named feature columns, a response, and
/// optional nonnegative weights.
#[derive(Debug, Clone)]
pub struct DesignMatrix {
    names: Vec<String>,
    cols: Vec<Vec<f64>>,
    y: Vec<f64>,
    weights: Option<Vec<f64>>,
}

impl DesignMatrix {
    pub fn new(
        names: Vec<String>,
        cols: Vec<Vec<f64>>,
        y: Vec<f64>,
    ) -> Result<Self, LearnError> {
        if y.is_empty() {
            return Err(LearnError::EmptyData);
        }
        if names.len() != cols.len() {
            return Err(LearnError::BadSpec(format!(
                "{} names for {} columns",
                names.len(),
                cols.len()
            )));
        }
        for (name, col) in names.iter().zip(&cols) {
            if col.len() != y.len() {
                return Err(LearnError::RaggedColumn(name.clone(), col.len(), y.len()));
            }
            if col.iter().any(|v| !v.is_finite()) {
                return Err(LearnError::NonFinite(name.clone()));
            }
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(LearnError::NonFinite("<response>".into()));
        }
        Ok(Self {
            names,
            cols,
            y,
            weights: None,
        })
    }

    pub fn with_weights(mut self, weights: Vec<f64>) -> Result<Self, LearnError> {
        if weights.len() != self.n()
            || weights.iter().any(|&w| !w.is_finite() || w < 0.0)
            || weights.iter().sum::<f64>() <= 0.0
        {
            return Err(LearnError::BadWeights);
        }
        self.weights = Some(weights);
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn p(&self) -> usize {
        self.cols.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn cols(&self) -> &[Vec<f64>] {
        &self.cols
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn weights(&self) -> Option<&[f64]> {
        self.weights.as_deref()
    }

    pub fn weight(&self, i: usize) -> f64 {
        self.weights.as_ref().map_or(1.0, |w| w[i])
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        self.cols.iter().map(|c| c[i]).collect()
    }

    /// Restrict to the given row indices (used by cross-validation folds and
    /// the bootstrap; indices may repeat).
    pub fn subset(&self, rows: &[usize]) -> Result<Self, LearnError> {
        if rows.is_empty() {
            return Err(LearnError::EmptyData);
        }
        Ok(Self {
            names: self.names.clone(),
            cols: self
                .cols
                .iter()
                .map(|c| rows.iter().map(|&i| c[i]).collect())
                .collect(),
            y: rows.iter().map(|&i| self.y[i]).collect(),
            weights: self
                .weights
                .as_ref()
                .map(|w| rows.iter().map(|&i| w[i]).collect()),
        })
    }

    /// Is the response contained in {0, 1}?
    pub fn response_is_binary(&self) -> bool {
        self.y.iter().all(|&v| v == 0.0 || v == 1.0)
    }
}

/// Base learner kinds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Learner {
    /// Weighted response mean.
    Mean,
    /// Least squares with intercept; ridge fallback on rank deficiency.
    Linear,
    /// Bernoulli GLM via IRLS; ridge clamp on separation.
    Logistic,
    /// Greedy forward hinge-spline selection.
    MarsLite {
        max_terms: usize,
        interactions: bool,
    },
}

impl Learner {
    pub const DEFAULT_MARS: Learner = Learner::MarsLite {
        max_terms: 10,
        interactions: false,
    };

    pub fn label(&self) -> &'static str {
        match self {
            Learner::Mean => "mean",
            Learner::Linear => "linear",
            Learner::Logistic => "logistic",
            Learner::MarsLite { .. } => "mars_lite",
        }
    }
}

/// Loss minimized by the super-learner meta step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Loss {
    SquaredError,
    LogLoss,
}

/// Super-learner configuration: base battery, fold count, meta loss, seed.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SuperLearnerSpec {
    pub battery: Vec<Learner>,
    pub folds: usize,
    pub loss: Loss,
    pub seed: u64,
}

impl SuperLearnerSpec {
    /// Mean + GLM + hinge splines, 5 folds, squared-error meta loss.
    pub fn standard(seed: u64) -> Self {
        Self {
            battery: vec![Learner::Mean, Learner::Linear, Learner::DEFAULT_MARS],
            folds: 5,
            loss: Loss::SquaredError,
            seed,
        }
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        Self {
            seed,
            ..self.clone()
        }
    }

    pub fn validate(&self, n: usize) -> Result<(), LearnError> {
        if self.battery.is_empty() {
            return Err(LearnError::BadSpec("battery is empty".into()));
        }
        if self.folds < 2 {
            return Err(LearnError::BadSpec("folds must be at least 2".into()));
        }
        if self.folds > n {
            return Err(LearnError::BadSpec(format!(
                "{} folds for {n} rows",
                self.folds
            )));
        }
        Ok(())
    }
}

/// A fitted model; `predict` is deterministic given the model and input.
#[derive(Debug, Clone)]
pub enum Model {
    Mean {
        value: f64,
        n_features: usize,
    },
    /// `coefs[0]` is the intercept.
    Linear {
        coefs: Vec<f64>,
        ridged: bool,
    },
    Logistic {
        coefs: Vec<f64>,
        ridged: bool,
        iterations: usize,
    },
    Mars {
        terms: Vec<BasisTerm>,
        /// Coefficients aligned with `terms`, intercept first.
        coefs: Vec<f64>,
    },
    Ensemble {
        members: Vec<(Learner, Model)>,
        weights: Vec<f64>,
        /// Learners dropped after failing a fold, with the reason.
        dropped: Vec<(Learner, String)>,
    },
}

impl Model {
    pub fn n_features(&self) -> usize {
        match self {
            Model::Mean { n_features, .. } => *n_features,
            Model::Linear { coefs, .. } | Model::Logistic { coefs, .. } => coefs.len() - 1,
            Model::Mars { terms, .. } => terms
                .iter()
                .map(BasisTerm::max_feature_index)
                .max()
                .map_or(0, |m| m + 1),
            Model::Ensemble { members, .. } => members
                .first()
                .map(|(_, m)| m.n_features())
                .unwrap_or(0),
        }
    }

    pub fn predict(&self, x: &[f64]) -> f64 {
        match self {
            Model::Mean { value, .. } => *value,
            Model::Linear { coefs, .. } => {
                coefs[0] + coefs[1..].iter().zip(x).map(|(c, v)| c * v).sum::<f64>()
            }
            Model::Logistic { coefs, .. } => {
                let eta = coefs[0]
                    + coefs[1..].iter().zip(x).map(|(c, v)| c * v).sum::<f64>();
                sigmoid(eta)
            }
            Model::Mars { terms, coefs } => coefs[0]
                + terms
                    .iter()
                    .zip(&coefs[1..])
                    .map(|(t, c)| c * t.eval(x))
                    .sum::<f64>(),
            Model::Ensemble {
                members, weights, ..
            } => members
                .iter()
                .zip(weights)
                .map(|((_, m), w)| w * m.predict(x))
                .sum(),
        }
    }

    pub fn predict_many(&self, rows: impl Iterator<Item = Vec<f64>>) -> Vec<f64> {
        rows.map(|r| self.predict(&r)).collect()
    }

    /// Did any component fall back to ridge regularization?
    pub fn ridged(&self) -> bool {
        match self {
            Model::Linear { ridged, .. } | Model::Logistic { ridged, .. } => *ridged,
            Model::Ensemble { members, .. } => members.iter().any(|(_, m)| m.ridged()),
            _ => false,
        }
    }
}

/// Logistic function with the linear predictor clamped to ±30 so predictions
/// stay strictly inside (0, 1).
#[inline]
pub(crate) fn sigmoid(eta: f64) -> f64 {
    let eta = eta.clamp(-30.0, 30.0);
    1.0 / (1.0 + (-eta).exp())
}

/// Fit a single base learner.
pub fn fit(learner: Learner, d: &DesignMatrix) -> Result<Model, LearnError> {
    match learner {
        Learner::Mean => glm::fit_mean(d),
        Learner::Linear => glm::fit_linear(d),
        Learner::Logistic => glm::fit_logistic(d),
        Learner::MarsLite {
            max_terms,
            interactions,
        } => mars::fit_mars_lite(d, max_terms, interactions),
    }
}

pub use glm::{fit_linear, fit_logistic, fit_mean};
pub use mars::fit_mars_lite;
