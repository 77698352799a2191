//! Shipped reference fixtures: the graph files under `fixtures/` and their
//! discrete structural-model analogues, used throughout the test suites and
//! usable from the CLI.

use crate::estimators::Dataset;
use crate::mgraph::MGraph;
use crate::oracles::{DiscreteScm, ExactDistribution};

/// Confounder plus two selection-driving mediators; unique minimal pair
/// `({W1};{Z1,Z2})`.
pub const MEDIATOR_ATTRITION: &str = include_str!("../fixtures/mediator_attrition.graph");
/// Latent cause of the outcome proxied by a post-exposure covariate; minimal
/// pairs `({B1,C1,C2};{})` and `({B1};{C2})`.
pub const LATENT_PROXY: &str = include_str!("../fixtures/latent_proxy.graph");
/// Pre-exposure covariate required in the separator slot; minimal pair
/// `({B1};{B2})`.
pub const PRE_EXPOSURE_SEPARATOR: &str =
    include_str!("../fixtures/pre_exposure_separator.graph");
/// Collider child of two latents; minimal pair `({};{C2})`.
pub const LATENT_COLLIDER: &str = include_str!("../fixtures/latent_collider.graph");
/// Butterfly structure; no s-admissible pair.
pub const BUTTERFLY_SELECTION: &str = include_str!("../fixtures/butterfly_selection.graph");
/// Missing-at-random toy; minimal pairs `({B1,C1};{})` and `({B1};{C1})`.
pub const MAR_CHAIN: &str = include_str!("../fixtures/mar_chain.graph");

/// All shipped graph fixtures as `(name, text)` pairs.
pub const GRAPHS: &[(&str, &str)] = &[
    ("mediator_attrition", MEDIATOR_ATTRITION),
    ("latent_proxy", LATENT_PROXY),
    ("pre_exposure_separator", PRE_EXPOSURE_SEPARATOR),
    ("latent_collider", LATENT_COLLIDER),
    ("butterfly_selection", BUTTERFLY_SELECTION),
    ("mar_chain", MAR_CHAIN),
];

pub fn graph(name: &str) -> MGraph {
    let text = GRAPHS
        .iter()
        .find(|(n, _)| *n == name)
        .unwrap_or_else(|| panic!("no graph fixture named {name}"))
        .1;
    MGraph::parse(text).expect("shipped fixture parses")
}

/// Discrete SCM analogue of [`MEDIATOR_ATTRITION`].
pub const SCM_MEDIATOR_ATTRITION: &str =
    include_str!("../fixtures/scm_mediator_attrition.json");
/// Discrete SCM analogue of [`LATENT_PROXY`].
pub const SCM_LATENT_PROXY: &str = include_str!("../fixtures/scm_latent_proxy.json");
/// Discrete SCM analogue of [`PRE_EXPOSURE_SEPARATOR`].
pub const SCM_PRE_EXPOSURE_SEPARATOR: &str =
    include_str!("../fixtures/scm_pre_exposure_separator.json");
/// Discrete SCM analogue of [`LATENT_COLLIDER`].
pub const SCM_LATENT_COLLIDER: &str = include_str!("../fixtures/scm_latent_collider.json");
/// Discrete SCM analogue of [`BUTTERFLY_SELECTION`].
pub const SCM_BUTTERFLY_SELECTION: &str =
    include_str!("../fixtures/scm_butterfly_selection.json");
/// Discrete SCM analogue of [`MAR_CHAIN`].
pub const SCM_MAR_CHAIN: &str = include_str!("../fixtures/scm_mar_chain.json");
/// Five-variable chain W -> A -> Z -> R with ternary Y; the workhorse
/// fixture for influence-function and robustness checks. All conditional
/// probabilities are multiples of 1/8, so an exact finite population exists.
pub const SCM_CHAIN_WAZRY: &str = include_str!("../fixtures/scm_chain_wazry.json");

pub const SCMS: &[(&str, &str)] = &[
    ("scm_mediator_attrition", SCM_MEDIATOR_ATTRITION),
    ("scm_latent_proxy", SCM_LATENT_PROXY),
    ("scm_pre_exposure_separator", SCM_PRE_EXPOSURE_SEPARATOR),
    ("scm_latent_collider", SCM_LATENT_COLLIDER),
    ("scm_butterfly_selection", SCM_BUTTERFLY_SELECTION),
    ("scm_mar_chain", SCM_MAR_CHAIN),
    ("scm_chain_wazry", SCM_CHAIN_WAZRY),
];

pub fn scm(name: &str) -> DiscreteScm {
    let text = SCMS
        .iter()
        .find(|(n, _)| *n == name)
        .unwrap_or_else(|| panic!("no SCM fixture named {name}"))
        .1;
    DiscreteScm::from_json(text).expect("shipped fixture parses")
}

/// Expand an exact observed-data distribution into a dataset whose empirical
/// frequencies match the pmf exactly. Requires every configuration mass to
/// be an integer multiple of `1/n` (holds for the shipped dyadic fixtures).
pub fn population_dataset(p: &ExactDistribution, n: usize) -> Dataset {
    p.population_dataset(n)
        .expect("pmf masses must be multiples of 1/n")
}
