//! m-graphs: causal DAGs whose nodes carry analysis roles (exposure `A`,
//! outcome `Y`, outcome-selection indicator `R`, covariates, latents) and an
//! optional chronology tier. Provides genealogic set algebra, edge
//! mutilation, proper causal / forbidden node sets, the proper backdoor
//! graph, d-separation, and verification plus enumeration of s-admissible
//! adjustment pairs.

mod dsep;
mod parse;
mod sac;

pub use dsep::d_separated;
pub use sac::{
    default_pair_markovian, enumerate_minimal_pairs, is_s_admissible, EnumerateOptions,
    SacCertificate, SacReport,
};

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Exposure,
    Outcome,
    Selection,
    Covariate,
    Latent,
}

impl Role {
    pub fn as_str(self) -> &'static str {
        match self {
            Role::Exposure => "exposure",
            Role::Outcome => "outcome",
            Role::Selection => "selection",
            Role::Covariate => "covariate",
            Role::Latent => "latent",
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum GraphError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("line {line}: duplicate node `{name}`")]
    DuplicateNode { line: usize, name: String },
    #[error("line {line}: edge endpoint `{name}` is not a declared node")]
    UndeclaredEndpoint { line: usize, name: String },
    #[error("line {line}: edge `{from} -> {to}` creates a cycle")]
    Cycle { line: usize, from: String, to: String },
    #[error("graph must declare exactly one {role} node, found {count}")]
    RoleCount { role: &'static str, count: usize },
    #[error("unknown node `{0}`")]
    UnknownNode(String),
    #[error("sets must be pairwise disjoint; `{0}` appears twice")]
    OverlappingSets(String),
    #[error("pair side contains `{name}` which has role {role}")]
    InvalidPairMember { name: String, role: &'static str },
    #[error("pair sets must be disjoint; `{0}` is in both W and Z")]
    PairOverlap(String),
    #[error("graph contains latent nodes; default pair requires a Markovian graph")]
    LatentPresent,
    #[error("selection indicator is a descendant of the outcome (self-selection)")]
    SelfSelection,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodeInfo {
    pub name: String,
    pub role: Role,
    pub tier: Option<u8>,
}

/// Directed acyclic graph over named, role-tagged nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct MGraph {
    nodes: Vec<NodeInfo>,
    children: Vec<Vec<usize>>,
    parents: Vec<Vec<usize>>,
}

impl MGraph {
    /// Build from explicit nodes and name edges. Checks uniqueness,
    /// acyclicity, and the one-each A / Y / R role constraint.
    pub fn new(nodes: Vec<NodeInfo>, edges: &[(String, String)]) -> Result<Self, GraphError> {
        let mut g = Self {
            children: vec![Vec::new(); nodes.len()],
            parents: vec![Vec::new(); nodes.len()],
            nodes,
        };
        for i in 0..g.nodes.len() {
            for j in 0..i {
                if g.nodes[i].name == g.nodes[j].name {
                    return Err(GraphError::DuplicateNode {
                        line: 0,
                        name: g.nodes[i].name.clone(),
                    });
                }
            }
        }
        for (from, to) in edges {
            let f = g.index_of(from)?;
            let t = g.index_of(to)?;
            g.add_edge_checked(f, t, 0)?;
        }
        g.check_roles()?;
        Ok(g)
    }

    /// Parse the graph-file format (see [`MGraph::parse`] grammar notes).
    pub fn parse(text: &str) -> Result<Self, GraphError> {
        parse::parse_graph(text)
    }

    fn check_roles(&self) -> Result<(), GraphError> {
        for (role, name) in [
            (Role::Exposure, "exposure"),
            (Role::Outcome, "outcome"),
            (Role::Selection, "selection"),
        ] {
            let count = self.nodes.iter().filter(|n| n.role == role).count();
            if count != 1 {
                return Err(GraphError::RoleCount { role: name, count });
            }
        }
        Ok(())
    }

    /// Insert an edge, rejecting self-loops and cycles. `line` feeds error
    /// reporting during parsing.
    pub(crate) fn add_edge_checked(
        &mut self,
        from: usize,
        to: usize,
        line: usize,
    ) -> Result<(), GraphError> {
        if from == to || self.reaches(to, from) {
            return Err(GraphError::Cycle {
                line,
                from: self.nodes[from].name.clone(),
                to: self.nodes[to].name.clone(),
            });
        }
        if !self.children[from].contains(&to) {
            self.children[from].push(to);
            self.parents[to].push(from);
        }
        Ok(())
    }

    /// Directed reachability `from ->* to`.
    fn reaches(&self, from: usize, to: usize) -> bool {
        let mut seen = vec![false; self.nodes.len()];
        let mut stack = vec![from];
        while let Some(v) = stack.pop() {
            if v == to {
                return true;
            }
            if std::mem::replace(&mut seen[v], true) {
                continue;
            }
            stack.extend(self.children[v].iter().copied());
        }
        false
    }

    pub(crate) fn push_node(&mut self, node: NodeInfo) {
        self.nodes.push(node);
        self.children.push(Vec::new());
        self.parents.push(Vec::new());
    }

    pub(crate) fn from_parts(nodes: Vec<NodeInfo>, children: Vec<Vec<usize>>) -> Self {
        let mut parents = vec![Vec::new(); nodes.len()];
        for (f, ch) in children.iter().enumerate() {
            for &t in ch {
                parents[t].push(f);
            }
        }
        Self {
            nodes,
            children,
            parents,
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.children.iter().map(Vec::len).sum()
    }

    pub fn nodes(&self) -> &[NodeInfo] {
        &self.nodes
    }

    pub fn index_of(&self, name: &str) -> Result<usize, GraphError> {
        self.nodes
            .iter()
            .position(|n| n.name == name)
            .ok_or_else(|| GraphError::UnknownNode(name.to_string()))
    }

    pub fn name(&self, idx: usize) -> &str {
        &self.nodes[idx].name
    }

    pub fn role(&self, idx: usize) -> Role {
        self.nodes[idx].role
    }

    pub fn children_of(&self, idx: usize) -> &[usize] {
        &self.children[idx]
    }

    pub fn parents_of(&self, idx: usize) -> &[usize] {
        &self.parents[idx]
    }

    /// Edges as name pairs, sorted for deterministic output.
    pub fn edges(&self) -> Vec<(String, String)> {
        let mut out: Vec<_> = self
            .children
            .iter()
            .enumerate()
            .flat_map(|(f, ch)| {
                ch.iter()
                    .map(move |&t| (self.nodes[f].name.clone(), self.nodes[t].name.clone()))
            })
            .collect();
        out.sort();
        out
    }

    pub fn has_edge(&self, from: &str, to: &str) -> bool {
        match (self.index_of(from), self.index_of(to)) {
            (Ok(f), Ok(t)) => self.children[f].contains(&t),
            _ => false,
        }
    }

    fn role_index(&self, role: Role) -> usize {
        self.nodes
            .iter()
            .position(|n| n.role == role)
            .expect("validated at construction")
    }

    pub fn exposure(&self) -> &str {
        &self.nodes[self.role_index(Role::Exposure)].name
    }

    pub fn outcome(&self) -> &str {
        &self.nodes[self.role_index(Role::Outcome)].name
    }

    pub fn selection(&self) -> &str {
        &self.nodes[self.role_index(Role::Selection)].name
    }

    /// Node names with a given role, in declaration order.
    pub fn names_with_role(&self, role: Role) -> Vec<String> {
        self.nodes
            .iter()
            .filter(|n| n.role == role)
            .map(|n| n.name.clone())
            .collect()
    }

    pub(crate) fn resolve_set(&self, set: &NodeSet) -> Result<Vec<usize>, GraphError> {
        set.iter().map(|n| self.index_of(n)).collect()
    }

    fn set_from_indices(&self, idx: impl IntoIterator<Item = usize>) -> NodeSet {
        idx.into_iter().map(|i| self.nodes[i].name.clone()).collect()
    }

    fn closure(&self, seeds: &[usize], forward: bool, inclusive: bool) -> Vec<bool> {
        let mut mark = vec![false; self.nodes.len()];
        let mut stack: Vec<usize> = seeds.to_vec();
        let mut seed_mark = vec![false; self.nodes.len()];
        for &s in seeds {
            seed_mark[s] = true;
        }
        while let Some(v) = stack.pop() {
            if std::mem::replace(&mut mark[v], true) {
                continue;
            }
            let next = if forward {
                &self.children[v]
            } else {
                &self.parents[v]
            };
            stack.extend(next.iter().copied());
        }
        if !inclusive {
            for (i, m) in mark.iter_mut().enumerate() {
                if seed_mark[i] {
                    // Keep seeds that are re-reachable through a longer walk?
                    // Impossible in a DAG, so exclusion is unconditional.
                    *m = false;
                }
            }
        }
        mark
    }

    fn genealogy_marks(&self, seeds: &[usize], kind: Genealogy) -> Vec<bool> {
        match kind {
            Genealogy::Ancestors => self.closure(seeds, false, false),
            Genealogy::Descendants => self.closure(seeds, true, false),
            Genealogy::AncestorsInclusive => self.closure(seeds, false, true),
            Genealogy::DescendantsInclusive => self.closure(seeds, true, true),
            Genealogy::NonDescendants => {
                let de = self.closure(seeds, true, true);
                de.into_iter().map(|b| !b).collect()
            }
        }
    }

    /// Remove every edge that goes from a node in `out_of` into a node in
    /// `into`. `mutilate(G, V, {A})` cuts A's incoming edges;
    /// `mutilate(G, {B}, V)` cuts B's outgoing edges.
    pub fn mutilate(&self, out_of: &NodeSet, into: &NodeSet) -> Result<MGraph, GraphError> {
        let out_idx = self.resolve_set(out_of)?;
        let into_idx = self.resolve_set(into)?;
        Ok(self.mutilate_idx(&out_idx, &into_idx))
    }

    fn mutilate_idx(&self, out_of: &[usize], into: &[usize]) -> MGraph {
        let mut out_mark = vec![false; self.nodes.len()];
        let mut in_mark = vec![false; self.nodes.len()];
        for &i in out_of {
            out_mark[i] = true;
        }
        for &i in into {
            in_mark[i] = true;
        }
        let children = self
            .children
            .iter()
            .enumerate()
            .map(|(f, ch)| {
                ch.iter()
                    .copied()
                    .filter(|&t| !(out_mark[f] && in_mark[t]))
                    .collect()
            })
            .collect();
        Self::from_parts(self.nodes.clone(), children)
    }

    fn all_indices(&self) -> Vec<usize> {
        (0..self.nodes.len()).collect()
    }

    /// `G` with all edges into the given nodes removed (overline surgery).
    pub(crate) fn cut_incoming(&self, nodes: &[usize]) -> MGraph {
        self.mutilate_idx(&self.all_indices(), nodes)
    }

    /// `G` with all edges out of the given nodes removed (underline surgery).
    pub(crate) fn cut_outgoing(&self, nodes: &[usize]) -> MGraph {
        self.mutilate_idx(nodes, &self.all_indices())
    }

    pub(crate) fn proper_causal_idx(&self) -> Vec<bool> {
        let a = self.role_index(Role::Exposure);
        let y = self.role_index(Role::Outcome);
        let de = self.cut_incoming(&[a]).genealogy_marks(&[a], Genealogy::Descendants);
        let an = self
            .cut_outgoing(&[a])
            .genealogy_marks(&[y], Genealogy::AncestorsInclusive);
        de.iter().zip(&an).map(|(&d, &n)| d && n).collect()
    }

    pub(crate) fn forbidden_idx(&self) -> Vec<bool> {
        let a = self.role_index(Role::Exposure);
        let cn: Vec<usize> = self
            .proper_causal_idx()
            .iter()
            .enumerate()
            .filter_map(|(i, &m)| m.then_some(i))
            .collect();
        let mut fb = self.genealogy_marks(&cn, Genealogy::DescendantsInclusive);
        fb[a] = true;
        fb
    }

    /// Proper backdoor graph: `G` minus the edges from the exposure into its
    /// proper causal nodes.
    pub fn proper_backdoor_graph(&self) -> MGraph {
        let a = self.role_index(Role::Exposure);
        let cn: Vec<usize> = self
            .proper_causal_idx()
            .iter()
            .enumerate()
            .filter_map(|(i, &m)| m.then_some(i))
            .collect();
        self.mutilate_idx(&[a], &cn)
    }
}

/// Genealogic set kinds: exclusive ancestors/descendants, their inclusive
/// variants, and non-descendants (complement of inclusive descendants).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Genealogy {
    Ancestors,
    Descendants,
    AncestorsInclusive,
    DescendantsInclusive,
    NonDescendants,
}

/// Requested genealogic set of `seeds` in `g`.
pub fn genealogy(seeds: &NodeSet, g: &MGraph, kind: Genealogy) -> Result<NodeSet, GraphError> {
    let idx = g.resolve_set(seeds)?;
    let marks = g.genealogy_marks(&idx, kind);
    Ok(g.set_from_indices(
        marks
            .iter()
            .enumerate()
            .filter_map(|(i, &m)| m.then_some(i)),
    ))
}

/// Nodes on proper causal paths from the exposure to the outcome (the
/// exposure itself excluded).
pub fn proper_causal_nodes(g: &MGraph) -> NodeSet {
    let marks = g.proper_causal_idx();
    g.set_from_indices(
        marks
            .iter()
            .enumerate()
            .filter_map(|(i, &m)| m.then_some(i)),
    )
}

/// Forbidden-for-adjustment nodes: inclusive descendants of the proper causal
/// nodes, plus the exposure. Always contains the exposure.
pub fn forbidden_nodes(g: &MGraph) -> NodeSet {
    let marks = g.forbidden_idx();
    g.set_from_indices(
        marks
            .iter()
            .enumerate()
            .filter_map(|(i, &m)| m.then_some(i)),
    )
}

/// Ordered set of node names with set algebra; all operations preserve
/// lexicographic ordering.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeSet(BTreeSet<String>);

impl NodeSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, name: impl Into<String>) {
        self.0.insert(name.into());
    }

    pub fn remove(&mut self, name: &str) -> bool {
        self.0.remove(name)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.0.contains(name)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.0.iter().map(String::as_str)
    }

    pub fn union(&self, other: &NodeSet) -> NodeSet {
        NodeSet(self.0.union(&other.0).cloned().collect())
    }

    pub fn intersection(&self, other: &NodeSet) -> NodeSet {
        NodeSet(self.0.intersection(&other.0).cloned().collect())
    }

    pub fn difference(&self, other: &NodeSet) -> NodeSet {
        NodeSet(self.0.difference(&other.0).cloned().collect())
    }

    pub fn is_disjoint(&self, other: &NodeSet) -> bool {
        self.0.is_disjoint(&other.0)
    }

    pub fn names(&self) -> Vec<String> {
        self.0.iter().cloned().collect()
    }
}

impl<S: Into<String>> FromIterator<S> for NodeSet {
    fn from_iter<T: IntoIterator<Item = S>>(iter: T) -> Self {
        NodeSet(iter.into_iter().map(Into::into).collect())
    }
}

impl fmt::Display for NodeSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, n) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{n}")?;
        }
        write!(f, "}}")
    }
}

/// Ordered adjustment pair `(W;Z)`: outer confounder set and inner separator
/// set, disjoint by construction.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AdmissiblePair {
    pub w: NodeSet,
    pub z: NodeSet,
}

impl AdmissiblePair {
    pub fn new(w: NodeSet, z: NodeSet) -> Result<Self, GraphError> {
        if let Some(shared) = w.iter().find(|n| z.contains(n)) {
            return Err(GraphError::PairOverlap(shared.to_string()));
        }
        Ok(Self { w, z })
    }

    pub fn size(&self) -> usize {
        self.w.len() + self.z.len()
    }

    /// Canonical ordering: ascending total size, then lexicographic on W
    /// names, then on Z names.
    pub fn canonical_key(&self) -> (usize, Vec<String>, Vec<String>) {
        (self.size(), self.w.names(), self.z.names())
    }

    /// Check members against a graph: names must exist and must not be the
    /// exposure, outcome, selection indicator, or any latent node.
    pub fn validate_against(&self, g: &MGraph) -> Result<(), GraphError> {
        for name in self.w.iter().chain(self.z.iter()) {
            let idx = g.index_of(name)?;
            let role = g.role(idx);
            if role != Role::Covariate {
                return Err(GraphError::InvalidPairMember {
                    name: name.to_string(),
                    role: role.as_str(),
                });
            }
        }
        Ok(())
    }
}

impl fmt::Display for AdmissiblePair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({};{})", self.w, self.z)
    }
}
