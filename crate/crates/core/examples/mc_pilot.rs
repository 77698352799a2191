//! Pilot Monte Carlo for the benchmark scenarios; prints the summary rows.
//!
//! ```text
//! cargo run -p seqadj --example mc_pilot -- <scenario> <n> <reps> <boot> [split|nosplit] [eps]
//! ```

use seqadj::estimators::Method;
use seqadj::simulate::{
    run_monte_carlo, EstimatorChoice, PairChoice, Scenario, ScenarioConfig, Setup,
};

fn main() {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let scenario = Scenario::parse(args.first().map(String::as_str).unwrap_or("1a")).unwrap();
    let n: usize = args.get(1).map_or(2000, |s| s.parse().unwrap());
    let reps: usize = args.get(2).map_or(20, |s| s.parse().unwrap());
    let boot: usize = args.get(3).map_or(25, |s| s.parse().unwrap());
    let split = args.get(4).is_some_and(|s| s == "split");
    let eps: f64 = args.get(5).map_or(0.01, |s| s.parse().unwrap());

    let explicit = |method, w: &[&str], z: &[&str]| EstimatorChoice {
        method,
        pair: PairChoice::Explicit {
            w: w.iter().map(|s| s.to_string()).collect(),
            z: z.iter().map(|s| s.to_string()).collect(),
        },
    };
    let estimators = match scenario.setup() {
        Setup::One => vec![
            explicit(Method::Tsr, &["W1"], &["Z1", "Z2"]),
            explicit(Method::Dipw, &["W1"], &["Z1", "Z2"]),
            explicit(Method::Sr, &["W1"], &["Z1", "Z2"]),
            explicit(Method::Tmle1r, &["W1"], &[]),
            explicit(Method::TmleCc, &["W1"], &[]),
            EstimatorChoice {
                method: Method::Unadjusted,
                pair: PairChoice::Auto,
            },
        ],
        Setup::Two => vec![
            explicit(Method::Tsr, &["B1"], &["C2"]),
            explicit(Method::Sr, &["B1"], &["C2"]),
            explicit(Method::Sr, &["B1", "C1", "C2"], &[]),
            explicit(Method::Tmle1r, &["B1", "C1", "C2"], &[]),
        ],
    };
    let mut cfg = ScenarioConfig::new(scenario, n, reps, 20240811)
        .with_estimators(estimators)
        .with_bootstrap(boot);
    cfg.split = split;
    cfg.eps_trunc = eps;

    let start = std::time::Instant::now();
    let summary = run_monte_carlo(&cfg).unwrap();
    println!(
        "scenario {} n={n} reps={reps} truth={:.4} sd_y={:.3} elapsed={:.1?}",
        summary.scenario,
        summary.psi_true,
        summary.sd_y_ref,
        start.elapsed()
    );
    for row in &summary.rows {
        println!(
            "{:>10} {:>22}  ok={:>3} fail={} bias={:>8.4} bias_d={:>8.4} mse={:>8.4} cover={:>6.1} width={:>7.3}",
            row.estimator,
            row.pair,
            row.n_ok,
            row.n_failed,
            row.bias,
            row.bias_d,
            row.mse,
            row.coverage_pct,
            row.mean_ci_width
        );
    }
}
