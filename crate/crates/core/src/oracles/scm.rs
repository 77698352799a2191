//! Discrete structural causal models with finite supports and explicit
//! conditional probability tables, in topological order.

use serde::{Deserialize, Serialize};

use crate::mgraph::{MGraph, NodeInfo, Role};
use crate::numeric::Kahan;

use super::OracleError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScmRole {
    Exposure,
    Outcome,
    Selection,
    Covariate,
    Latent,
}

impl ScmRole {
    pub fn to_graph_role(self) -> Role {
        match self {
            ScmRole::Exposure => Role::Exposure,
            ScmRole::Outcome => Role::Outcome,
            ScmRole::Selection => Role::Selection,
            ScmRole::Covariate => Role::Covariate,
            ScmRole::Latent => Role::Latent,
        }
    }
}

/// One variable: named states with numeric values, parent indices (all
/// smaller than the variable's own index), and a row-per-parent-config
/// conditional pmf. Parent configurations are indexed with the first parent
/// most significant and the last parent fastest-varying.
#[derive(Debug, Clone)]
pub struct ScmVar {
    pub name: String,
    pub role: ScmRole,
    pub states: Vec<f64>,
    pub parents: Vec<usize>,
    pub cpt: Vec<Vec<f64>>,
}

#[derive(Debug, Clone)]
pub struct DiscreteScm {
    vars: Vec<ScmVar>,
}

/// Serialized form: parents referenced by name.
#[derive(Debug, Serialize, Deserialize)]
struct RawScm {
    variables: Vec<RawVar>,
}

#[derive(Debug, Serialize, Deserialize)]
struct RawVar {
    name: String,
    role: ScmRole,
    states: Vec<f64>,
    parents: Vec<String>,
    cpt: Vec<Vec<f64>>,
}

const PMF_TOL: f64 = 1e-12;

impl DiscreteScm {
    pub fn new(vars: Vec<ScmVar>) -> Result<Self, OracleError> {
        let scm = Self { vars };
        scm.validate()?;
        Ok(scm)
    }

    pub fn from_json(text: &str) -> Result<Self, OracleError> {
        let raw: RawScm =
            serde_json::from_str(text).map_err(|e| OracleError::Json(e.to_string()))?;
        let mut vars = Vec::with_capacity(raw.variables.len());
        let mut names: Vec<String> = Vec::new();
        for rv in raw.variables {
            let parents = rv
                .parents
                .iter()
                .map(|p| {
                    names
                        .iter()
                        .position(|n| n == p)
                        .ok_or_else(|| OracleError::UnknownVariable(p.clone()))
                })
                .collect::<Result<Vec<_>, _>>()?;
            names.push(rv.name.clone());
            vars.push(ScmVar {
                name: rv.name,
                role: rv.role,
                states: rv.states,
                parents,
                cpt: rv.cpt,
            });
        }
        Self::new(vars)
    }

    pub fn to_json(&self) -> String {
        let raw = RawScm {
            variables: self
                .vars
                .iter()
                .map(|v| RawVar {
                    name: v.name.clone(),
                    role: v.role,
                    states: v.states.clone(),
                    parents: v
                        .parents
                        .iter()
                        .map(|&p| self.vars[p].name.clone())
                        .collect(),
                    cpt: v.cpt.clone(),
                })
                .collect(),
        };
        serde_json::to_string_pretty(&raw).expect("plain data serializes")
    }

    fn validate(&self) -> Result<(), OracleError> {
        let bad = |name: &str, msg: String| OracleError::BadVariable(name.to_string(), msg);
        for (role, label) in [
            (ScmRole::Exposure, "exposure"),
            (ScmRole::Outcome, "outcome"),
            (ScmRole::Selection, "selection"),
        ] {
            if self.vars.iter().filter(|v| v.role == role).count() != 1 {
                return Err(OracleError::RoleCount(label));
            }
        }
        for (i, v) in self.vars.iter().enumerate() {
            if v.states.is_empty() {
                return Err(bad(&v.name, "empty support".into()));
            }
            for (a, &sa) in v.states.iter().enumerate() {
                if !sa.is_finite() {
                    return Err(bad(&v.name, "non-finite state value".into()));
                }
                if v.states[..a].contains(&sa) {
                    return Err(bad(&v.name, format!("duplicate state value {sa}")));
                }
            }
            if matches!(v.role, ScmRole::Exposure | ScmRole::Selection)
                && v.states != [0.0, 1.0]
            {
                return Err(bad(&v.name, "states must be [0, 1]".into()));
            }
            if v.parents.iter().any(|&p| p >= i) {
                return Err(bad(
                    &v.name,
                    "parents must precede the variable (topological order)".into(),
                ));
            }
            let rows: usize = v.parents.iter().map(|&p| self.vars[p].states.len()).product();
            if v.cpt.len() != rows {
                return Err(bad(
                    &v.name,
                    format!("cpt has {} rows, expected {rows}", v.cpt.len()),
                ));
            }
            for row in &v.cpt {
                if row.len() != v.states.len() {
                    return Err(bad(
                        &v.name,
                        format!("cpt row has {} entries, expected {}", row.len(), v.states.len()),
                    ));
                }
                if row.iter().any(|&p| !(0.0..=1.0).contains(&p)) {
                    return Err(bad(&v.name, "probabilities outside [0,1]".into()));
                }
                let sum: f64 = row.iter().sum();
                if (sum - 1.0).abs() > PMF_TOL {
                    return Err(bad(&v.name, format!("cpt row sums to {sum}")));
                }
                // Positivity: both exposure arms everywhere, and a positive
                // selection rate (missingness may be absent, selection not).
                let degenerate = match v.role {
                    ScmRole::Exposure => row.iter().any(|&p| p <= 0.0),
                    ScmRole::Selection => row[1] <= 0.0,
                    _ => false,
                };
                if degenerate {
                    return Err(OracleError::Positivity(format!(
                        "{} has a zero propensity cell",
                        v.name
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn vars(&self) -> &[ScmVar] {
        &self.vars
    }

    pub fn var_index(&self, name: &str) -> Result<usize, OracleError> {
        self.vars
            .iter()
            .position(|v| v.name == name)
            .ok_or_else(|| OracleError::UnknownVariable(name.to_string()))
    }

    pub fn role_index(&self, role: ScmRole) -> usize {
        self.vars
            .iter()
            .position(|v| v.role == role)
            .expect("validated at construction")
    }

    /// The m-graph induced by the parent sets.
    pub fn graph(&self) -> MGraph {
        let nodes = self
            .vars
            .iter()
            .map(|v| NodeInfo {
                name: v.name.clone(),
                role: v.role.to_graph_role(),
                tier: None,
            })
            .collect();
        let edges: Vec<(String, String)> = self
            .vars
            .iter()
            .flat_map(|v| {
                v.parents
                    .iter()
                    .map(|&p| (self.vars[p].name.clone(), v.name.clone()))
            })
            .collect();
        MGraph::new(nodes, &edges).expect("validated SCM induces a valid m-graph")
    }

    /// Row index into a variable's cpt for a full configuration.
    pub(super) fn parent_row(&self, var: usize, config: &[u8]) -> usize {
        let mut row = 0;
        for &p in &self.vars[var].parents {
            row = row * self.vars[p].states.len() + config[p] as usize;
        }
        row
    }

    /// Probability of a full configuration (all variables, latents included).
    pub fn joint_prob(&self, config: &[u8]) -> f64 {
        let mut p = 1.0;
        for (i, v) in self.vars.iter().enumerate() {
            p *= v.cpt[self.parent_row(i, config)][config[i] as usize];
        }
        p
    }

    /// Iterate all full configurations.
    pub fn configs(&self) -> ConfigIter {
        ConfigIter {
            radices: self.vars.iter().map(|v| v.states.len() as u8).collect(),
            current: Some(vec![0; self.vars.len()]),
        }
    }

    pub fn state_value(&self, var: usize, state: u8) -> f64 {
        self.vars[var].states[state as usize]
    }
}

pub struct ConfigIter {
    radices: Vec<u8>,
    current: Option<Vec<u8>>,
}

impl Iterator for ConfigIter {
    type Item = Vec<u8>;

    fn next(&mut self) -> Option<Vec<u8>> {
        let out = self.current.clone()?;
        let cur = self.current.as_mut().expect("checked");
        let mut done = true;
        for i in (0..cur.len()).rev() {
            cur[i] += 1;
            if cur[i] < self.radices[i] {
                done = false;
                break;
            }
            cur[i] = 0;
        }
        if done {
            self.current = None;
        }
        Some(out)
    }
}

/// Interventional mean contrast by truncated factorization: drop the
/// exposure's own factor, fix its value, and sum the outcome over the rest.
/// This is the ground-truth ATE, computed without reference to adjustment
/// formulas.
pub fn exact_ate(scm: &DiscreteScm) -> f64 {
    let a_idx = scm.role_index(ScmRole::Exposure);
    let y_idx = scm.role_index(ScmRole::Outcome);
    let mut arm = [Kahan::new(), Kahan::new()];
    let mut mass = [Kahan::new(), Kahan::new()];
    for config in scm.configs() {
        let mut p = 1.0;
        for (i, v) in scm.vars().iter().enumerate() {
            if i == a_idx {
                continue;
            }
            p *= v.cpt[scm.parent_row(i, &config)][config[i] as usize];
        }
        if p == 0.0 {
            continue;
        }
        let a = config[a_idx] as usize;
        let y = scm.state_value(y_idx, config[y_idx]);
        arm[a].add(p * y);
        mass[a].add(p);
    }
    // Each arm's truncated factorization integrates to 1.
    debug_assert!((mass[0].value() - 1.0).abs() < 1e-9);
    debug_assert!((mass[1].value() - 1.0).abs() < 1e-9);
    arm[1].value() - arm[0].value()
}
