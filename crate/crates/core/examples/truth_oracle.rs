//! Recompute the frozen interventional-oracle truth constants.
//!
//! ```text
//! cargo run -p seqadj --example truth_oracle
//! ```

use seqadj::simulate::{mc_true_ate, Setup, TRUTH_ORACLE_N, TRUTH_ORACLE_SEED};

fn main() {
    for setup in [Setup::One, Setup::Two] {
        let (psi, se) = mc_true_ate(setup, 1.0, TRUTH_ORACLE_N, TRUTH_ORACLE_SEED);
        println!("setup {}: psi = {psi:.6}  mc_se = {se:.6}", setup.label());
    }
}
