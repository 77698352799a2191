//! Parametric substitutes used by the misspecification scenarios: each
//! scenario swaps the super-learner recipe of one or two nuisances for a
//! deliberately wrong least-squares model on transformed columns.

use crate::estimators::{ColumnExpr, Method, NuisancePlan, SurfaceRecipe};
use crate::learners::SuperLearnerSpec;

use super::Scenario;

/// Name of the synthetic pure-noise column attached for the misspecified
/// exposure model.
pub const NOISE_COLUMN: &str = "U0";

fn derived(cols: Vec<ColumnExpr>) -> SurfaceRecipe {
    SurfaceRecipe::LinearDerived(cols)
}

/// Nuisance plan for one estimator under a scenario. The single-regression
/// targeted estimators get their own substitutes where the scenario
/// misspecifies a surface they parameterize differently.
pub fn plan_for(scenario: Scenario, method: Method, spec: &SuperLearnerSpec) -> NuisancePlan {
    use ColumnExpr::{AbsCentered, Arm, ArmTimes, CenteredSquare, Raw, Square};
    let mut plan = NuisancePlan::super_learner(spec);
    let single_regression = matches!(method, Method::Tmle1r | Method::TmleCc);
    match scenario {
        Scenario::S1A | Scenario::S2A => {}
        Scenario::S1B => {
            plan.pi_a = derived(vec![Raw(NOISE_COLUMN.into())]);
        }
        Scenario::S1C => {
            plan.q1 = if single_regression {
                derived(vec![Square("W1".into()), Arm, ArmTimes("W1".into())])
            } else {
                derived(vec![
                    Square("W1".into()),
                    Arm,
                    ArmTimes("W1".into()),
                    Raw("Z1".into()),
                ])
            };
        }
        Scenario::S1D => {
            plan.q2 = derived(vec![CenteredSquare("W1".into(), 1.7), Arm]);
            plan.pi_r = if single_regression {
                derived(vec![Square("W1".into())])
            } else {
                derived(vec![Square("Z1".into())])
            };
        }
        Scenario::S2B => {
            plan.q2 = derived(vec![AbsCentered("B1".into(), 1.0), Arm]);
        }
    }
    plan
}

/// Does the scenario need the synthetic noise column?
pub fn needs_noise_column(scenario: Scenario) -> bool {
    matches!(scenario, Scenario::S1B)
}
