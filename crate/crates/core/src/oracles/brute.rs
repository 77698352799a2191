//! Brute-force graph references: d-separation by exhaustive simple-path
//! enumeration and s-admissible pair enumeration by direct subset scanning.
//! Deliberately written against the raw edge list, independent of the
//! reachability algorithms in `mgraph`, so the two can cross-check each
//! other in tests.

use std::collections::BTreeSet;

use crate::mgraph::{AdmissiblePair, GraphError, MGraph, NodeSet, Role};

struct Adjacency {
    children: Vec<Vec<usize>>,
    parents: Vec<Vec<usize>>,
    names: Vec<String>,
}

impl Adjacency {
    fn from_graph(g: &MGraph) -> Self {
        let names: Vec<String> = g.nodes().iter().map(|n| n.name.clone()).collect();
        let idx = |name: &str| names.iter().position(|n| n == name).expect("own names");
        let mut children = vec![Vec::new(); names.len()];
        let mut parents = vec![Vec::new(); names.len()];
        for (from, to) in g.edges() {
            let (f, t) = (idx(&from), idx(&to));
            children[f].push(t);
            parents[t].push(f);
        }
        Self {
            children,
            parents,
            names,
        }
    }

    fn index_of(&self, name: &str) -> Result<usize, GraphError> {
        self.names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| GraphError::UnknownNode(name.to_string()))
    }

    /// Inclusive ancestor closure by naive iteration to fixpoint.
    fn inclusive_ancestors(&self, seeds: &[usize]) -> Vec<bool> {
        let mut mark = vec![false; self.names.len()];
        for &s in seeds {
            mark[s] = true;
        }
        loop {
            let mut changed = false;
            for v in 0..self.names.len() {
                if mark[v] {
                    for &p in &self.parents[v] {
                        if !mark[p] {
                            mark[p] = true;
                            changed = true;
                        }
                    }
                }
            }
            if !changed {
                return mark;
            }
        }
    }

    fn inclusive_descendants(&self, seeds: &[usize]) -> Vec<bool> {
        let mut mark = vec![false; self.names.len()];
        for &s in seeds {
            mark[s] = true;
        }
        loop {
            let mut changed = false;
            for v in 0..self.names.len() {
                if mark[v] {
                    for &c in &self.children[v] {
                        if !mark[c] {
                            mark[c] = true;
                            changed = true;
                        }
                    }
                }
            }
            if !changed {
                return mark;
            }
        }
    }

    fn neighbors(&self, v: usize) -> impl Iterator<Item = (usize, bool)> + '_ {
        // (neighbor, edge points toward neighbor)
        self.children[v]
            .iter()
            .map(|&c| (c, true))
            .chain(self.parents[v].iter().map(|&p| (p, false)))
    }
}

/// Exhaustive d-separation: enumerate every simple path between the sets and
/// test the blocking rules on each node of each path.
pub fn brute_dsep(
    x: &NodeSet,
    y: &NodeSet,
    s: &NodeSet,
    g: &MGraph,
) -> Result<bool, GraphError> {
    for (set_a, set_b) in [(x, y), (x, s), (y, s)] {
        if let Some(shared) = set_a.iter().find(|n| set_b.contains(n)) {
            return Err(GraphError::OverlappingSets(shared.to_string()));
        }
    }
    let adj = Adjacency::from_graph(g);
    let xs: Vec<usize> = x.iter().map(|n| adj.index_of(n)).collect::<Result<_, _>>()?;
    let ys: Vec<usize> = y.iter().map(|n| adj.index_of(n)).collect::<Result<_, _>>()?;
    let ss: Vec<usize> = s.iter().map(|n| adj.index_of(n)).collect::<Result<_, _>>()?;
    let mut in_s = vec![false; adj.names.len()];
    for &i in &ss {
        in_s[i] = true;
    }
    let in_y: Vec<bool> = {
        let mut m = vec![false; adj.names.len()];
        for &i in &ys {
            m[i] = true;
        }
        m
    };
    let anc_s = adj.inclusive_ancestors(&ss);

    // DFS over simple paths carrying the arrow orientation of each step.
    // `trail[i]` = (node, entered through an arrowhead).
    for &start in &xs {
        let mut trail: Vec<(usize, bool)> = vec![(start, false)];
        if dfs_active(&adj, &in_s, &anc_s, &in_y, &mut trail, true) {
            return Ok(false);
        }
    }
    Ok(true)
}

fn dfs_active(
    adj: &Adjacency,
    in_s: &[bool],
    anc_s: &[bool],
    in_y: &[bool],
    trail: &mut Vec<(usize, bool)>,
    first: bool,
) -> bool {
    let (v, _) = *trail.last().expect("nonempty trail");
    let step: Vec<(usize, bool)> = adj.neighbors(v).collect();
    for (next, toward_next) in step {
        if trail.iter().any(|&(n, _)| n == next) {
            continue;
        }
        if !first {
            // Interior node v: collider iff entered and left through
            // arrowheads pointing at it.
            let entered_head = trail.last().expect("nonempty").1;
            let is_collider = entered_head && !toward_next;
            let blocked = if is_collider { !anc_s[v] } else { in_s[v] };
            if blocked {
                continue;
            }
        }
        if in_y[next] {
            return true;
        }
        trail.push((next, toward_next));
        if dfs_active(adj, in_s, anc_s, in_y, trail, false) {
            return true;
        }
        trail.pop();
    }
    false
}

/// Exhaustive s-admissible pair scan over all disjoint subset pairs of the
/// covariate nodes, with minimality by single-element deletion. Same
/// canonical ordering as the fast enumerator.
pub fn brute_pairs(g: &MGraph, minimal_only: bool) -> Result<Vec<AdmissiblePair>, GraphError> {
    let adj = Adjacency::from_graph(g);
    let a = adj.index_of(g.exposure())?;
    let y = adj.index_of(g.outcome())?;

    // Forbidden set recomputed from the definitions with the naive closures.
    let mut minus_into_a = MGraphEdges::from_graph(g);
    minus_into_a.remove_into(a);
    let de_a = {
        let adj2 = minus_into_a.adjacency(&adj.names);
        let mut m = adj2.inclusive_descendants(&[a]);
        m[a] = false;
        m
    };
    let mut minus_out_a = MGraphEdges::from_graph(g);
    minus_out_a.remove_out_of(a);
    let an_y = minus_out_a.adjacency(&adj.names).inclusive_ancestors(&[y]);
    let cn: Vec<usize> = (0..adj.names.len())
        .filter(|&i| de_a[i] && an_y[i])
        .collect();
    let mut forbidden = adj.inclusive_descendants(&cn);
    forbidden[a] = true;

    // Proper backdoor graph: edges from A into cn removed.
    let mut pbd_edges = MGraphEdges::from_graph(g);
    for &c in &cn {
        pbd_edges.remove_edge(a, c);
    }
    let pbd = pbd_edges.to_graph(g);

    let candidates: Vec<String> = g.names_with_role(Role::Covariate);
    let y_set = NodeSet::from_iter([g.outcome()]);
    let a_set = NodeSet::from_iter([g.exposure()]);
    let r_set = NodeSet::from_iter([g.selection()]);

    let check = |pair: &AdmissiblePair| -> bool {
        if pair
            .w
            .iter()
            .any(|n| forbidden[adj.index_of(n).expect("candidate")])
        {
            return false;
        }
        if !brute_dsep(&y_set, &a_set, &pair.w, &pbd).expect("disjoint") {
            return false;
        }
        let cond3 = pair.w.union(&a_set).union(&pair.z);
        brute_dsep(&y_set, &r_set, &cond3, g).expect("disjoint")
    };

    let mut admissible: Vec<AdmissiblePair> = Vec::new();
    let k = candidates.len();
    let mut assignment = vec![0u8; k];
    'outer: loop {
        let mut w = BTreeSet::new();
        let mut z = BTreeSet::new();
        for (i, &slot) in assignment.iter().enumerate() {
            match slot {
                1 => {
                    w.insert(candidates[i].clone());
                }
                2 => {
                    z.insert(candidates[i].clone());
                }
                _ => {}
            }
        }
        let pair = AdmissiblePair {
            w: w.into_iter().collect(),
            z: z.into_iter().collect(),
        };
        if check(&pair) {
            admissible.push(pair);
        }
        for i in 0..k {
            assignment[i] += 1;
            if assignment[i] < 3 {
                continue 'outer;
            }
            assignment[i] = 0;
        }
        break;
    }

    let mut out: Vec<AdmissiblePair> = if minimal_only {
        admissible
            .iter()
            .filter(|pair| {
                for name in pair.w.iter() {
                    let mut w = pair.w.clone();
                    w.remove(name);
                    if check(&AdmissiblePair {
                        w,
                        z: pair.z.clone(),
                    }) {
                        return false;
                    }
                }
                for name in pair.z.iter() {
                    let mut z = pair.z.clone();
                    z.remove(name);
                    if check(&AdmissiblePair {
                        w: pair.w.clone(),
                        z,
                    }) {
                        return false;
                    }
                }
                true
            })
            .cloned()
            .collect()
    } else {
        admissible
    };
    out.sort_by(|a, b| a.canonical_key().cmp(&b.canonical_key()));
    Ok(out)
}

/// Editable edge list used to rebuild mutilated graphs for the brute checks.
struct MGraphEdges {
    edges: Vec<(usize, usize)>,
}

impl MGraphEdges {
    fn from_graph(g: &MGraph) -> Self {
        let names: Vec<String> = g.nodes().iter().map(|n| n.name.clone()).collect();
        let idx = |name: &str| names.iter().position(|n| n == name).expect("own names");
        Self {
            edges: g
                .edges()
                .iter()
                .map(|(f, t)| (idx(f), idx(t)))
                .collect(),
        }
    }

    fn remove_into(&mut self, node: usize) {
        self.edges.retain(|&(_, t)| t != node);
    }

    fn remove_out_of(&mut self, node: usize) {
        self.edges.retain(|&(f, _)| f != node);
    }

    fn remove_edge(&mut self, from: usize, to: usize) {
        self.edges.retain(|&(f, t)| (f, t) != (from, to));
    }

    fn adjacency(&self, names: &[String]) -> Adjacency {
        let mut children = vec![Vec::new(); names.len()];
        let mut parents = vec![Vec::new(); names.len()];
        for &(f, t) in &self.edges {
            children[f].push(t);
            parents[t].push(f);
        }
        Adjacency {
            children,
            parents,
            names: names.to_vec(),
        }
    }

    fn to_graph(&self, g: &MGraph) -> MGraph {
        let names: Vec<(String, String)> = self
            .edges
            .iter()
            .map(|&(f, t)| (g.nodes()[f].name.clone(), g.nodes()[t].name.clone()))
            .collect();
        MGraph::new(g.nodes().to_vec(), &names).expect("subgraph of a valid graph")
    }
}
