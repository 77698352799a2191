//! Sequential adjustment criteria: a pair `(W;Z)` of disjoint covariate sets
//! is s-admissible for recovering the ATE when
//!
//! 1. `W` contains no forbidden node,
//! 2. `W` d-separates the outcome from the exposure in the proper backdoor
//!    graph, and
//! 3. `(W, A, Z)` d-separates the outcome from its selection indicator in
//!    the original m-graph.
//!
//! A pair is minimal when removing any single member breaks admissibility.

use super::dsep::reach_witness;
use super::{forbidden_nodes, AdmissiblePair, GraphError, MGraph, NodeSet, Role};

/// Outcome of a SAC check. When a condition fails, `certificate` carries the
/// first violated condition and, for the d-separation conditions, one open
/// trail.
#[derive(Debug, Clone, PartialEq)]
pub struct SacReport {
    pub admissible: bool,
    pub certificate: SacCertificate,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SacCertificate {
    Satisfied,
    /// Condition 1: `W` intersects the forbidden set.
    ForbiddenInW { node: String },
    /// Condition 2: open trail between outcome and exposure in the proper
    /// backdoor graph given `W`.
    BackdoorOpen { path: Vec<String> },
    /// Condition 3: open trail between outcome and selection given
    /// `(W, A, Z)`.
    SelectionOpen { path: Vec<String> },
}

impl SacCertificate {
    pub fn describe(&self) -> String {
        match self {
            SacCertificate::Satisfied => "all three conditions hold".into(),
            SacCertificate::ForbiddenInW { node } => {
                format!("condition 1 violated: W contains forbidden node `{node}`")
            }
            SacCertificate::BackdoorOpen { path } => format!(
                "condition 2 violated: open backdoor trail {}",
                path.join(" ~ ")
            ),
            SacCertificate::SelectionOpen { path } => format!(
                "condition 3 violated: open selection trail {}",
                path.join(" ~ ")
            ),
        }
    }
}

/// Check the three SAC conditions for `pair` in `g`.
pub fn is_s_admissible(pair: &AdmissiblePair, g: &MGraph) -> Result<SacReport, GraphError> {
    pair.validate_against(g)?;
    let ctx = SacContext::new(g);
    Ok(ctx.check(pair))
}

/// Precomputed per-graph state for repeated SAC checks.
pub(super) struct SacContext<'g> {
    g: &'g MGraph,
    pbd: MGraph,
    forbidden: NodeSet,
    y: NodeSet,
    a: NodeSet,
    r: NodeSet,
}

impl<'g> SacContext<'g> {
    pub(super) fn new(g: &'g MGraph) -> Self {
        let single = |name: &str| NodeSet::from_iter([name]);
        Self {
            pbd: g.proper_backdoor_graph(),
            forbidden: forbidden_nodes(g),
            y: single(g.outcome()),
            a: single(g.exposure()),
            r: single(g.selection()),
            g,
        }
    }

    fn check(&self, pair: &AdmissiblePair) -> SacReport {
        if let Some(node) = pair.w.iter().find(|n| self.forbidden.contains(n)) {
            return SacReport {
                admissible: false,
                certificate: SacCertificate::ForbiddenInW {
                    node: node.to_string(),
                },
            };
        }
        // Pair members are validated covariates, so the witness calls cannot
        // hit overlapping-set errors.
        if let Some(path) =
            reach_witness(&self.y, &self.a, &pair.w, &self.pbd).expect("disjoint by validation")
        {
            return SacReport {
                admissible: false,
                certificate: SacCertificate::BackdoorOpen { path },
            };
        }
        let cond3_set = pair.w.union(&self.a).union(&pair.z);
        if let Some(path) =
            reach_witness(&self.y, &self.r, &cond3_set, self.g).expect("disjoint by validation")
        {
            return SacReport {
                admissible: false,
                certificate: SacCertificate::SelectionOpen { path },
            };
        }
        SacReport {
            admissible: true,
            certificate: SacCertificate::Satisfied,
        }
    }

    fn admissible(&self, pair: &AdmissiblePair) -> bool {
        self.check(pair).admissible
    }
}

#[derive(Debug, Clone, Default)]
pub struct EnumerateOptions {
    /// Keep all admissible pairs instead of only the minimal ones.
    pub include_non_minimal: bool,
    /// Restrict W to tier-0 and Z to tier-1 candidates (chronology filter
    /// for comparison studies; the criteria themselves impose no tiers).
    pub chronological: bool,
}

/// Enumerate s-admissible pairs over subsets of `candidates` (default: all
/// covariate nodes). Output in canonical order: ascending `|W| + |Z|`, then
/// lexicographic.
pub fn enumerate_minimal_pairs(
    g: &MGraph,
    candidates: Option<&NodeSet>,
    options: &EnumerateOptions,
) -> Result<Vec<AdmissiblePair>, GraphError> {
    let default_candidates;
    let candidates = match candidates {
        Some(c) => {
            for name in c.iter() {
                let idx = g.index_of(name)?;
                if g.role(idx) != Role::Covariate {
                    return Err(GraphError::InvalidPairMember {
                        name: name.to_string(),
                        role: g.role(idx).as_str(),
                    });
                }
            }
            c
        }
        None => {
            default_candidates = NodeSet::from_iter(g.names_with_role(Role::Covariate));
            &default_candidates
        }
    };
    let names = candidates.names();
    let tier_of = |name: &str| g.nodes()[g.index_of(name).expect("validated")].tier;
    let ctx = SacContext::new(g);

    // Every candidate is assigned to W, Z, or neither: 3^k assignments,
    // pruned by condition 1 on the cheap side.
    let mut admissible = Vec::new();
    let k = names.len();
    let mut assignment = vec![0u8; k];
    'outer: loop {
        let mut w = NodeSet::new();
        let mut z = NodeSet::new();
        let mut ok = true;
        for (i, &slot) in assignment.iter().enumerate() {
            match slot {
                1 => {
                    if ctx.forbidden.contains(&names[i])
                        || (options.chronological && tier_of(&names[i]) != Some(0))
                    {
                        ok = false;
                        break;
                    }
                    w.insert(names[i].clone());
                }
                2 => {
                    if options.chronological && tier_of(&names[i]) != Some(1) {
                        ok = false;
                        break;
                    }
                    z.insert(names[i].clone());
                }
                _ => {}
            }
        }
        if ok {
            let pair = AdmissiblePair { w, z };
            if ctx.admissible(&pair) {
                admissible.push(pair);
            }
        }
        // Next assignment in base 3.
        for i in 0..k {
            assignment[i] += 1;
            if assignment[i] < 3 {
                continue 'outer;
            }
            assignment[i] = 0;
        }
        break;
    }

    let mut out: Vec<AdmissiblePair> = if options.include_non_minimal {
        admissible
    } else {
        admissible
            .iter()
            .filter(|p| is_minimal(p, &ctx))
            .cloned()
            .collect()
    };
    out.sort_by(|a, b| a.canonical_key().cmp(&b.canonical_key()));
    Ok(out)
}

/// Minimality by single-element deletion: dropping any member of W or Z must
/// break admissibility.
fn is_minimal(pair: &AdmissiblePair, ctx: &SacContext) -> bool {
    for name in pair.w.iter() {
        let mut w = pair.w.clone();
        w.remove(name);
        let reduced = AdmissiblePair {
            w,
            z: pair.z.clone(),
        };
        if ctx.admissible(&reduced) {
            return false;
        }
    }
    for name in pair.z.iter() {
        let mut z = pair.z.clone();
        z.remove(name);
        let reduced = AdmissiblePair {
            w: pair.w.clone(),
            z,
        };
        if ctx.admissible(&reduced) {
            return false;
        }
    }
    true
}

/// Default pair for Markovian graphs without self-selection:
/// `W = pa(Y) \ fb`, `Z = (pa(Y) ∩ fb) \ {A}`.
pub fn default_pair_markovian(g: &MGraph) -> Result<AdmissiblePair, GraphError> {
    if g.nodes().iter().any(|n| n.role == Role::Latent) {
        return Err(GraphError::LatentPresent);
    }
    let y_idx = g.index_of(g.outcome())?;
    let r = NodeSet::from_iter([g.selection()]);
    let y = NodeSet::from_iter([g.outcome()]);
    let de_y = super::genealogy(&y, g, super::Genealogy::Descendants)?;
    if de_y.contains(r.iter().next().expect("selection exists")) {
        return Err(GraphError::SelfSelection);
    }
    let pa_y: NodeSet = g
        .parents_of(y_idx)
        .iter()
        .map(|&p| g.name(p).to_string())
        .collect();
    let fb = forbidden_nodes(g);
    let w = pa_y.difference(&fb);
    let mut z = pa_y.intersection(&fb);
    z.remove(g.exposure());
    AdmissiblePair::new(w, z)
}
