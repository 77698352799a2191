//! Exact finite-support machinery: discrete structural causal models with
//! enumerable joint distributions, exact evaluation of the s-formula, the
//! influence function, robust estimating-equation residuals, and linearity
//! checks, plus brute-force d-separation and pair-enumeration references.
//! Everything here is a ground-truth substrate for tests and acceptance
//! checks of the sampling-based modules.

mod brute;
mod exact;
mod random;
mod scm;

pub use brute::{brute_dsep, brute_pairs};
pub use exact::{
    exact_eif, exact_s_formula, linearity_residual_q1, linearity_residual_q2,
    robustness_residual, ExactDistribution, ExactSurfaces, PutativeSurfaces, ZConditional,
};
pub use random::{random_dag, random_markovian_graph, random_scm, RandomScmOptions};
pub use scm::{exact_ate, DiscreteScm, ScmRole, ScmVar};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("variable {0}: {1}")]
    BadVariable(String, String),
    #[error("model must declare exactly one {0} variable")]
    RoleCount(&'static str),
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("positivity violated: {0}")]
    Positivity(String),
    #[error("pmf does not sum to 1 (got {0})")]
    BadPmf(f64),
    #[error("configuration mass {mass} is not a multiple of 1/{n}")]
    NotPopulation { mass: f64, n: usize },
    #[error("json: {0}")]
    Json(String),
    #[error(transparent)]
    Graph(#[from] crate::mgraph::GraphError),
}
