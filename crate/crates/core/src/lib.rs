//! Recovery and inference of average treatment effects (ATE) from
//! observational data with confounding and informative outcome attrition.
//!
//! The crate is organized around the analysis workflow:
//!
//! - [`mgraph`]: m-graphs (causal DAGs with an outcome-selection indicator),
//!   genealogic set algebra, graph surgery, d-separation, and verification /
//!   enumeration of s-admissible adjustment pairs `(W;Z)`.
//! - [`learners`]: in-house regression learners (mean, GLM, hinge splines)
//!   and a cross-validated convex-weight super-learner.
//! - [`estimators`]: ATE estimators — targeted sequential regression (TSR),
//!   double inverse probability weighting (DIPW), sequential-regression and
//!   conditional-distribution plug-ins, single-regression TMLE variants —
//!   plus influence-function evaluation and variance estimation.
//! - [`oracles`]: exact finite-support machinery (discrete structural causal
//!   models, exact s-formula / influence-function / estimating-equation
//!   evaluation) used as brute-force references.
//! - [`simulate`]: benchmark data-generating processes, misspecification
//!   scenarios, and the Monte Carlo evaluation harness.
//! - [`io`]: dataset ingestion and report serialization.

pub mod estimators;
pub mod fixtures;
pub mod io;
pub mod learners;
pub mod mgraph;
pub mod numeric;
pub mod oracles;
pub mod rng;
pub mod simulate;
