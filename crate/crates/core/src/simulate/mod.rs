//! Monte Carlo evaluation harness: scenario configurations over the two
//! benchmark data-generating processes, per-replicate estimator runs with
//! derived seeds, and bias / MSE / coverage summaries on both the raw and
//! the outcome-standardized scale.

mod dgp;
mod misspec;

pub use dgp::{
    gen_setup1, gen_setup1_with, gen_setup2, gen_setup2_with, mc_true_ate, reference_sd_y,
    reference_true_ate, Setup, Setup1Params, Setup2Params, TRUE_ATE_SETUP1, TRUE_ATE_SETUP2,
    TRUTH_ORACLE_N, TRUTH_ORACLE_SEED,
};
pub use misspec::{needs_noise_column, plan_for, NOISE_COLUMN};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::estimators::{
    estimate_cd_with_plan, estimate_dipw_with_plan, estimate_sr_with_plan,
    estimate_tmle_1r_with_plan, estimate_tmle_cc_with_plan, estimate_tsr_with_plan,
    estimate_unadjusted, Dataset, EstimateError, EstimateOptions, EstimateReport, Method,
    NuisancePlan,
};
use crate::learners::SuperLearnerSpec;
use crate::mgraph::{enumerate_minimal_pairs, AdmissiblePair, EnumerateOptions, NodeSet};
use crate::numeric::{mean, Kahan};
use crate::rng::{derive_seed, Stream};

#[derive(Debug, Error)]
pub enum SimulateError {
    #[error("unknown scenario `{0}` (expected 1a, 1b, 1c, 1d, 2a, 2b)")]
    UnknownScenario(String),
    #[error("no admissible pair to auto-select")]
    NoPair,
    #[error(transparent)]
    Graph(#[from] crate::mgraph::GraphError),
    #[error(transparent)]
    Estimate(#[from] EstimateError),
}

/// Benchmark scenarios: setup one's four missingness/misspecification
/// combinations and setup two's two.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Scenario {
    S1A,
    S1B,
    S1C,
    S1D,
    S2A,
    S2B,
}

impl Scenario {
    pub fn parse(s: &str) -> Result<Self, SimulateError> {
        match s.to_ascii_lowercase().as_str() {
            "1a" => Ok(Scenario::S1A),
            "1b" => Ok(Scenario::S1B),
            "1c" => Ok(Scenario::S1C),
            "1d" => Ok(Scenario::S1D),
            "2a" => Ok(Scenario::S2A),
            "2b" => Ok(Scenario::S2B),
            other => Err(SimulateError::UnknownScenario(other.to_string())),
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Scenario::S1A => "1a",
            Scenario::S1B => "1b",
            Scenario::S1C => "1c",
            Scenario::S1D => "1d",
            Scenario::S2A => "2a",
            Scenario::S2B => "2b",
        }
    }

    pub fn setup(self) -> Setup {
        match self {
            Scenario::S1A | Scenario::S1B | Scenario::S1C | Scenario::S1D => Setup::One,
            Scenario::S2A | Scenario::S2B => Setup::Two,
        }
    }

    /// Selection intercept for setup one (about 50%, 25%, 15%, 15% missing).
    pub fn theta(self) -> f64 {
        match self {
            Scenario::S1A => -1.90,
            Scenario::S1B => -0.90,
            Scenario::S1C | Scenario::S1D => -0.30,
            Scenario::S2A | Scenario::S2B => f64::NAN,
        }
    }
}

/// Which pair an estimator adjusts for.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum PairChoice {
    /// First minimal pair in canonical order.
    Auto,
    Explicit { w: Vec<String>, z: Vec<String> },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EstimatorChoice {
    pub method: Method,
    pub pair: PairChoice,
}

#[derive(Debug, Clone)]
pub struct ScenarioConfig {
    pub scenario: Scenario,
    pub n: usize,
    pub reps: usize,
    pub seed: u64,
    pub estimators: Vec<EstimatorChoice>,
    pub folds: usize,
    pub eps_trunc: f64,
    pub bootstrap_b: usize,
    pub split: bool,
}

impl ScenarioConfig {
    /// Scenario defaults: the full estimator roster for the setup.
    pub fn new(scenario: Scenario, n: usize, reps: usize, seed: u64) -> Self {
        let auto = |method| EstimatorChoice {
            method,
            pair: PairChoice::Auto,
        };
        let explicit = |method, w: &[&str], z: &[&str]| EstimatorChoice {
            method,
            pair: PairChoice::Explicit {
                w: w.iter().map(|s| s.to_string()).collect(),
                z: z.iter().map(|s| s.to_string()).collect(),
            },
        };
        let estimators = match scenario.setup() {
            Setup::One => vec![
                auto(Method::Tsr),
                auto(Method::Dipw),
                auto(Method::Sr),
                auto(Method::Cd),
                explicit(Method::Tmle1r, &["W1"], &[]),
                explicit(Method::TmleCc, &["W1"], &[]),
                auto(Method::Unadjusted),
            ],
            Setup::Two => vec![
                explicit(Method::Tsr, &["B1"], &["C2"]),
                explicit(Method::Sr, &["B1"], &["C2"]),
                explicit(Method::Sr, &["B1", "C1", "C2"], &[]),
                explicit(Method::Tmle1r, &["B1", "C1", "C2"], &[]),
                auto(Method::Unadjusted),
            ],
        };
        Self {
            scenario,
            n,
            reps,
            seed,
            estimators,
            folds: 5,
            eps_trunc: 0.01,
            bootstrap_b: 200,
            split: false,
        }
    }

    pub fn with_estimators(mut self, estimators: Vec<EstimatorChoice>) -> Self {
        self.estimators = estimators;
        self
    }

    pub fn with_bootstrap(mut self, b: usize) -> Self {
        self.bootstrap_b = b;
        self
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct McRow {
    pub estimator: String,
    pub pair: String,
    pub n_ok: usize,
    pub n_failed: usize,
    pub bias: f64,
    /// Bias on the outcome-sd (Cohen's d) scale.
    pub bias_d: f64,
    pub mse: f64,
    pub mse_d: f64,
    /// Percent of 95% intervals covering the truth; NaN when no replicate
    /// succeeded.
    pub coverage_pct: f64,
    pub mean_ci_width: f64,
    /// First failure message, when any replicate failed.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub first_failure: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct McSummary {
    pub setup: String,
    pub scenario: String,
    pub n: usize,
    pub reps: usize,
    pub seed: u64,
    pub psi_true: f64,
    pub psi_true_mc_se: f64,
    pub truth_provenance: String,
    pub sd_y_ref: f64,
    pub rows: Vec<McRow>,
}

fn auto_pair(graph: &crate::mgraph::MGraph) -> Result<AdmissiblePair, SimulateError> {
    enumerate_minimal_pairs(graph, None, &EnumerateOptions::default())?
        .into_iter()
        .next()
        .ok_or(SimulateError::NoPair)
}

fn resolve_pair(
    choice: &PairChoice,
    graph: &crate::mgraph::MGraph,
) -> Result<AdmissiblePair, SimulateError> {
    match choice {
        PairChoice::Auto => auto_pair(graph),
        PairChoice::Explicit { w, z } => Ok(AdmissiblePair::new(
            w.iter().collect::<NodeSet>(),
            z.iter().collect::<NodeSet>(),
        )?),
    }
}

fn run_choice(
    method: Method,
    data: &Dataset,
    pair: &AdmissiblePair,
    plan: &NuisancePlan,
    options: &EstimateOptions,
) -> Result<EstimateReport, EstimateError> {
    match method {
        Method::Tsr => estimate_tsr_with_plan(data, pair, plan, options),
        Method::Dipw => estimate_dipw_with_plan(data, pair, plan, options),
        Method::Sr => estimate_sr_with_plan(data, pair, plan, options),
        Method::Cd => estimate_cd_with_plan(data, pair, plan, options),
        Method::Tmle1r => estimate_tmle_1r_with_plan(data, &pair.w, plan, options),
        Method::TmleCc => estimate_tmle_cc_with_plan(data, &pair.w, plan, options),
        Method::Unadjusted => estimate_unadjusted(data),
    }
}

/// Generate the scenario's dataset for one replicate, noise column included
/// where the scenario requires it.
pub fn generate(cfg: &ScenarioConfig, rep: usize) -> Dataset {
    let data_seed = derive_seed(cfg.seed, "data", rep as u64);
    let (mut ds, _) = match cfg.scenario.setup() {
        Setup::One => gen_setup1(cfg.n, cfg.scenario.theta(), data_seed),
        Setup::Two => gen_setup2(cfg.n, data_seed),
    };
    if needs_noise_column(cfg.scenario) {
        let mut stream = Stream::new(derive_seed(cfg.seed, "u0", rep as u64));
        let col = (0..cfg.n).map(|_| stream.normal()).collect();
        ds.add_covariate(NOISE_COLUMN, col)
            .expect("fresh column name");
    }
    ds
}

/// Run the scenario: independent replicates with derived seeds, aggregated
/// per estimator into bias, MSE, coverage, and interval width, raw and
/// standardized by the reference outcome standard deviation.
pub fn run_monte_carlo(cfg: &ScenarioConfig) -> Result<McSummary, SimulateError> {
    let setup = cfg.scenario.setup();
    let graph = match setup {
        Setup::One => crate::fixtures::graph("mediator_attrition"),
        Setup::Two => crate::fixtures::graph("latent_proxy"),
    };
    let pairs: Vec<AdmissiblePair> = cfg
        .estimators
        .iter()
        .map(|c| resolve_pair(&c.pair, &graph))
        .collect::<Result<_, _>>()?;
    let (psi_true, psi_true_mc_se) = reference_true_ate(setup);
    let sd_y = reference_sd_y(setup);

    type RepOutcome = Vec<Result<(f64, f64, f64), String>>;
    let replicate = |rep: usize| -> RepOutcome {
        let ds = generate(cfg, rep);
        cfg.estimators
            .iter()
            .zip(&pairs)
            .map(|(choice, pair)| {
                let tag = choice.method.label();
                let spec = SuperLearnerSpec {
                    folds: cfg.folds,
                    ..SuperLearnerSpec::standard(derive_seed(
                        cfg.seed,
                        tag,
                        rep as u64,
                    ))
                };
                let plan = plan_for(cfg.scenario, choice.method, &spec);
                let options = EstimateOptions {
                    split: cfg.split,
                    eps_trunc: cfg.eps_trunc,
                    seed: derive_seed(cfg.seed, tag, rep as u64),
                    bootstrap_b: cfg.bootstrap_b,
                    keep_eif: false,
                };
                run_choice(choice.method, &ds, pair, &plan, &options)
                    .map(|r| (r.psi_hat, r.ci_lo, r.ci_hi))
                    .map_err(|e| e.to_string())
            })
            .collect()
    };

    let results: Vec<RepOutcome> = (0..cfg.reps).into_par_iter().map(replicate).collect();

    let rows = cfg
        .estimators
        .iter()
        .zip(&pairs)
        .enumerate()
        .map(|(j, (choice, pair))| {
            let mut estimates = Vec::new();
            let mut widths = Vec::new();
            let mut covered = 0usize;
            let mut n_failed = 0usize;
            let mut first_failure = None;
            for rep in results.iter() {
                match &rep[j] {
                    Ok((psi, lo, hi)) => {
                        estimates.push(*psi);
                        widths.push(hi - lo);
                        if *lo <= psi_true && psi_true <= *hi {
                            covered += 1;
                        }
                    }
                    Err(e) => {
                        n_failed += 1;
                        first_failure.get_or_insert_with(|| e.clone());
                    }
                }
            }
            let n_ok = estimates.len();
            let (bias, mse, coverage, width) = if n_ok > 0 {
                let bias = mean(&estimates) - psi_true;
                let mut mse = Kahan::new();
                for &e in &estimates {
                    mse.add((e - psi_true) * (e - psi_true));
                }
                (
                    bias,
                    mse.value() / n_ok as f64,
                    100.0 * covered as f64 / n_ok as f64,
                    mean(&widths),
                )
            } else {
                (f64::NAN, f64::NAN, f64::NAN, f64::NAN)
            };
            McRow {
                estimator: choice.method.label().to_string(),
                pair: format!("{pair}"),
                n_ok,
                n_failed,
                bias,
                bias_d: bias / sd_y,
                mse,
                mse_d: mse / (sd_y * sd_y),
                coverage_pct: coverage,
                mean_ci_width: width,
                first_failure,
            }
        })
        .collect();

    Ok(McSummary {
        setup: setup.label().to_string(),
        scenario: cfg.scenario.label().to_string(),
        n: cfg.n,
        reps: cfg.reps,
        seed: cfg.seed,
        psi_true,
        psi_true_mc_se,
        truth_provenance: format!(
            "interventional Monte Carlo oracle, N={TRUTH_ORACLE_N}, seed {TRUTH_ORACLE_SEED}"
        ),
        sd_y_ref: sd_y,
        rows,
    })
}
