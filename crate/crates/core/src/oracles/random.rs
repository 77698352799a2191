//! Seeded random graphs and discrete SCMs for property tests and the
//! acceptance suite.

use crate::mgraph::{MGraph, NodeInfo, Role};
use crate::rng::Stream;

use super::scm::{DiscreteScm, ScmRole, ScmVar};

/// Random DAG on up to `max_nodes` nodes (at least 3). Roles are assigned to
/// three random nodes so the result is a valid m-graph; edges follow a random
/// topological order with the given density.
pub fn random_dag(stream: &mut Stream, max_nodes: usize, edge_prob: f64) -> MGraph {
    let n = 3 + stream.below(max_nodes.max(3) - 2);
    let mut order: Vec<usize> = (0..n).collect();
    stream.shuffle(&mut order);
    let mut roles = vec![Role::Covariate; n];
    let mut special: Vec<usize> = (0..n).collect();
    stream.shuffle(&mut special);
    roles[special[0]] = Role::Exposure;
    roles[special[1]] = Role::Outcome;
    roles[special[2]] = Role::Selection;

    let nodes: Vec<NodeInfo> = (0..n)
        .map(|i| NodeInfo {
            name: format!("N{i}"),
            role: roles[i],
            tier: None,
        })
        .collect();
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if stream.uniform() < edge_prob {
                edges.push((format!("N{}", order[i]), format!("N{}", order[j])));
            }
        }
    }
    MGraph::new(nodes, &edges).expect("construction follows a topological order")
}

/// Random Markovian graph from the point-exposure attrition setting: a block
/// of pre-exposure covariates (which may feed the exposure, the outcome, the
/// selection indicator, and each other), the exposure, a block of mediators
/// fed only by the exposure and earlier mediators, an outcome with no
/// children, and a childless selection indicator whose parents avoid the
/// outcome. Within this class the parent-set default pair is guaranteed to
/// satisfy the criteria.
pub fn random_markovian_graph(stream: &mut Stream) -> MGraph {
    let n_conf = stream.below(4); // 0..=3 pre-exposure covariates
    let n_med = 1 + stream.below(3); // 1..=3 mediators
    let mut nodes = Vec::new();
    let mut edges: Vec<(String, String)> = Vec::new();
    let conf: Vec<String> = (0..n_conf).map(|i| format!("W{i}")).collect();
    let med: Vec<String> = (0..n_med).map(|i| format!("M{i}")).collect();

    for name in &conf {
        nodes.push(NodeInfo {
            name: name.clone(),
            role: Role::Covariate,
            tier: Some(0),
        });
    }
    nodes.push(NodeInfo {
        name: "A".into(),
        role: Role::Exposure,
        tier: None,
    });
    for name in &med {
        nodes.push(NodeInfo {
            name: name.clone(),
            role: Role::Covariate,
            tier: Some(1),
        });
    }
    nodes.push(NodeInfo {
        name: "Y".into(),
        role: Role::Outcome,
        tier: None,
    });
    nodes.push(NodeInfo {
        name: "R".into(),
        role: Role::Selection,
        tier: None,
    });

    let mut push = |from: &str, to: &str| edges.push((from.into(), to.into()));
    for (i, wi) in conf.iter().enumerate() {
        for wj in conf.iter().skip(i + 1) {
            if stream.uniform() < 0.3 {
                push(wi, wj);
            }
        }
        if stream.uniform() < 0.7 {
            push(wi, "A");
        }
        if stream.uniform() < 0.7 {
            push(wi, "Y");
        }
        if stream.uniform() < 0.3 {
            push(wi, "R");
        }
    }
    for (i, mi) in med.iter().enumerate() {
        if stream.uniform() < 0.8 || i == 0 {
            push("A", mi);
        }
        for mj in med.iter().skip(i + 1) {
            if stream.uniform() < 0.4 {
                push(mi, mj);
            }
        }
        if stream.uniform() < 0.7 {
            push(mi, "Y");
        }
        if stream.uniform() < 0.6 {
            push(mi, "R");
        }
    }
    if stream.uniform() < 0.8 {
        push("A", "Y");
    }
    if stream.uniform() < 0.4 {
        push("A", "R");
    }
    MGraph::new(nodes, &edges).expect("layered construction is acyclic")
}

#[derive(Debug, Clone)]
pub struct RandomScmOptions {
    /// Covariate count (latents are drawn on top of these).
    pub covariates: usize,
    /// Chance that an extra latent parent of two observed nodes is added.
    pub latent_prob: f64,
    /// Maximum states per covariate (2..=max).
    pub max_states: usize,
    /// Edge density among eligible ordered pairs.
    pub edge_prob: f64,
}

impl Default for RandomScmOptions {
    fn default() -> Self {
        Self {
            covariates: 3,
            latent_prob: 0.3,
            max_states: 3,
            edge_prob: 0.45,
        }
    }
}

/// Random positive discrete SCM: strictly positive conditional tables over
/// small supports, topological order `[latent?, covariates..., A, ...,
/// Y, R interleaved]` with the exposure before the outcome and the outcome
/// values on an asymmetric numeric grid.
pub fn random_scm(stream: &mut Stream, opts: &RandomScmOptions) -> DiscreteScm {
    // Topological skeleton: covariates first (some before A, some after as
    // separators), then Y, then R last so selection may depend on anything
    // but the outcome (and on the outcome itself with small probability, to
    // exercise the self-selection-permitted data model).
    let k = opts.covariates;
    let n_pre = stream.below(k + 1);
    let mut layout: Vec<(String, ScmRole)> = Vec::new();
    if stream.uniform() < opts.latent_prob {
        layout.push(("U0".into(), ScmRole::Latent));
    }
    for i in 0..n_pre {
        layout.push((format!("X{i}"), ScmRole::Covariate));
    }
    layout.push(("A".into(), ScmRole::Exposure));
    for i in n_pre..k {
        layout.push((format!("X{i}"), ScmRole::Covariate));
    }
    layout.push(("Y".into(), ScmRole::Outcome));
    layout.push(("R".into(), ScmRole::Selection));

    let mut vars: Vec<ScmVar> = Vec::new();
    for (idx, (name, role)) in layout.iter().enumerate() {
        let states: Vec<f64> = match role {
            ScmRole::Exposure | ScmRole::Selection => vec![0.0, 1.0],
            ScmRole::Outcome => {
                let k = 2 + stream.below(2);
                (0..k)
                    .map(|s| -1.0 + 1.5 * s as f64 + 0.25 * stream.uniform())
                    .collect()
            }
            _ => {
                let k = 2 + stream.below(opts.max_states.max(2) - 1);
                (0..k).map(|s| s as f64).collect()
            }
        };
        let mut parents: Vec<usize> = Vec::new();
        for (p, (_, prole)) in layout.iter().enumerate().take(idx) {
            // Selection never points anywhere (it is last); the outcome may
            // parent selection rarely (self-selection); latents parent
            // anything.
            let prob = match (prole, role) {
                (ScmRole::Outcome, ScmRole::Selection) => 0.1,
                (ScmRole::Latent, _) => 0.5,
                _ => opts.edge_prob,
            };
            if stream.uniform() < prob {
                parents.push(p);
            }
        }
        let rows: usize = parents.iter().map(|&p| vars[p].states.len()).product();
        let cpt = (0..rows)
            .map(|_| {
                let raw: Vec<f64> = (0..states.len())
                    .map(|_| 0.3 + 0.7 * stream.uniform())
                    .collect();
                let total: f64 = raw.iter().sum();
                raw.into_iter().map(|v| v / total).collect()
            })
            .collect();
        vars.push(ScmVar {
            name: name.clone(),
            role: *role,
            states,
            parents,
            cpt,
        });
    }
    DiscreteScm::new(vars).expect("generated tables are valid")
}
