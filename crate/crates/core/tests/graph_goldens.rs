//! Graph-layer goldens on the shipped fixtures plus cross-checks against
//! the brute-force path-enumeration oracle.

use seqadj::fixtures;
use seqadj::mgraph::{
    d_separated, default_pair_markovian, enumerate_minimal_pairs, forbidden_nodes, genealogy,
    is_s_admissible, proper_causal_nodes, AdmissiblePair, EnumerateOptions, Genealogy,
    GraphError, MGraph, NodeSet, SacCertificate,
};
use seqadj::oracles::{brute_dsep, brute_pairs, random_dag, random_markovian_graph};
use seqadj::rng::Stream;

fn set(names: &[&str]) -> NodeSet {
    names.iter().copied().collect()
}

fn pair(w: &[&str], z: &[&str]) -> AdmissiblePair {
    AdmissiblePair::new(set(w), set(z)).unwrap()
}

fn pairs(graph: &MGraph) -> Vec<AdmissiblePair> {
    enumerate_minimal_pairs(graph, None, &EnumerateOptions::default()).unwrap()
}

#[test]
fn parses_the_fixture_graphs() {
    let g = fixtures::graph("mediator_attrition");
    assert_eq!(g.node_count(), 6);
    assert_eq!(g.edge_count(), 10);
    assert_eq!(g.exposure(), "A");
    assert_eq!(g.outcome(), "Y");
    assert_eq!(g.selection(), "R");

    let g = fixtures::graph("latent_proxy");
    assert_eq!(g.node_count(), 7);
    assert_eq!(g.edge_count(), 10);
}

#[test]
fn parse_errors_carry_line_numbers() {
    let self_loop = "node A role=exposure\nnode Y role=outcome\nnode R role=selection\nA -> A\n";
    match MGraph::parse(self_loop) {
        Err(GraphError::Cycle { line, .. }) => assert_eq!(line, 4),
        other => panic!("expected cycle error, got {other:?}"),
    }

    let cycle = "node A role=exposure\nnode Y role=outcome\nnode R role=selection\nA -> Y\nY -> R\nR -> A\n";
    match MGraph::parse(cycle) {
        Err(GraphError::Cycle { line, .. }) => assert_eq!(line, 6),
        other => panic!("expected cycle error, got {other:?}"),
    }

    let dup = "node A role=exposure\nnode A\n";
    match MGraph::parse(dup) {
        Err(GraphError::DuplicateNode { line, name }) => {
            assert_eq!((line, name.as_str()), (2, "A"));
        }
        other => panic!("expected duplicate error, got {other:?}"),
    }

    let undeclared = "node A role=exposure\nnode Y role=outcome\nnode R role=selection\nA -> Q\n";
    match MGraph::parse(undeclared) {
        Err(GraphError::UndeclaredEndpoint { line, name }) => {
            assert_eq!((line, name.as_str()), (4, "Q"));
        }
        other => panic!("expected undeclared-endpoint error, got {other:?}"),
    }

    let no_outcome = "node A role=exposure\nnode R role=selection\n";
    assert!(matches!(
        MGraph::parse(no_outcome),
        Err(GraphError::RoleCount {
            role: "outcome",
            count: 0
        })
    ));

    let two_exposures =
        "node A role=exposure\nnode B role=exposure\nnode Y role=outcome\nnode R role=selection\n";
    assert!(matches!(
        MGraph::parse(two_exposures),
        Err(GraphError::RoleCount {
            role: "exposure",
            count: 2
        })
    ));
}

#[test]
fn genealogy_on_the_mediator_fixture() {
    let g = fixtures::graph("mediator_attrition");
    let a = set(&["A"]);
    assert_eq!(
        genealogy(&a, &g, Genealogy::Descendants).unwrap(),
        set(&["Z1", "Z2", "Y", "R"])
    );
    assert!(genealogy(&a, &g, Genealogy::AncestorsInclusive)
        .unwrap()
        .contains("A"));
    assert_eq!(
        genealogy(&a, &g, Genealogy::NonDescendants).unwrap(),
        set(&["W1"])
    );
    assert!(matches!(
        genealogy(&set(&["nope"]), &g, Genealogy::Ancestors),
        Err(GraphError::UnknownNode(_))
    ));
}

#[test]
fn mutilation_cuts_the_right_edges() {
    let g = fixtures::graph("mediator_attrition");
    let all: NodeSet = g.nodes().iter().map(|n| n.name.clone()).collect();
    let a = set(&["A"]);

    let overline = g.mutilate(&all, &a).unwrap();
    let a_idx = overline.index_of("A").unwrap();
    assert!(overline.parents_of(a_idx).is_empty());
    assert_eq!(overline.edge_count(), g.edge_count() - 1); // only W1 -> A cut

    let underline = g.mutilate(&a, &all).unwrap();
    let a_idx = underline.index_of("A").unwrap();
    assert!(underline.children_of(a_idx).is_empty());
    assert_eq!(underline.edge_count(), g.edge_count() - 3);

    // Identity and idempotence.
    let empty = NodeSet::new();
    assert_eq!(g.mutilate(&empty, &all).unwrap(), g);
    let once = g.mutilate(&all, &a).unwrap();
    assert_eq!(once.mutilate(&all, &a).unwrap(), once);
}

#[test]
fn proper_causal_and_forbidden_sets() {
    let g = fixtures::graph("mediator_attrition");
    assert_eq!(proper_causal_nodes(&g), set(&["Z1", "Z2", "Y"]));
    assert_eq!(forbidden_nodes(&g), set(&["A", "Z1", "Z2", "Y", "R"]));

    // Exposure with a single direct edge to the outcome.
    let direct = MGraph::parse(
        "node A role=exposure\nnode Y role=outcome\nnode R role=selection\nA -> Y\n",
    )
    .unwrap();
    assert_eq!(proper_causal_nodes(&direct), set(&["Y"]));
    assert_eq!(forbidden_nodes(&direct), set(&["A", "Y"]));

    // No causal path at all: cn empty, fb is just the exposure.
    let null = MGraph::parse("node A role=exposure\nnode Y role=outcome\nnode R role=selection\n")
        .unwrap();
    assert_eq!(proper_causal_nodes(&null), NodeSet::new());
    assert_eq!(forbidden_nodes(&null), set(&["A"]));

    // The latent-proxy fixture: C1 is a child of A but not an ancestor of Y
    // once A's outgoing edges are cut, so it is not forbidden. Confirmed by
    // the brute-force scan below, which admits pairs with C1, C2 in W.
    let g = fixtures::graph("latent_proxy");
    assert_eq!(forbidden_nodes(&g), set(&["A", "Y"]));
}

#[test]
fn proper_backdoor_graph_removes_exposure_to_causal_edges() {
    let g = fixtures::graph("mediator_attrition");
    let pbd = g.proper_backdoor_graph();
    assert!(!pbd.has_edge("A", "Z1"));
    assert!(!pbd.has_edge("A", "Z2"));
    assert!(!pbd.has_edge("A", "Y"));
    assert!(pbd.has_edge("W1", "A"));
    assert_eq!(pbd.edge_count(), g.edge_count() - 3);

    let null = MGraph::parse("node A role=exposure\nnode Y role=outcome\nnode R role=selection\n")
        .unwrap();
    assert_eq!(null.proper_backdoor_graph(), null);

    let chain = MGraph::parse(
        "node A role=exposure\nnode M\nnode Y role=outcome\nnode R role=selection\nA -> M\nM -> Y\n",
    )
    .unwrap();
    let pbd = chain.proper_backdoor_graph();
    assert!(!pbd.has_edge("A", "M"));
    assert!(pbd.has_edge("M", "Y"));
}

#[test]
fn d_separation_textbook_cases() {
    let chain = MGraph::parse(
        "node A role=exposure\nnode B\nnode C role=outcome\nnode R role=selection\nA -> B\nB -> C\n",
    )
    .unwrap();
    assert!(d_separated(&set(&["A"]), &set(&["C"]), &set(&["B"]), &chain).unwrap());
    assert!(!d_separated(&set(&["A"]), &set(&["C"]), &NodeSet::new(), &chain).unwrap());

    let collider = MGraph::parse(
        "node A role=exposure\nnode B\nnode C role=outcome\nnode R role=selection\nA -> B\nC -> B\n",
    )
    .unwrap();
    assert!(d_separated(&set(&["A"]), &set(&["C"]), &NodeSet::new(), &collider).unwrap());
    assert!(!d_separated(&set(&["A"]), &set(&["C"]), &set(&["B"]), &collider).unwrap());

    let g = fixtures::graph("mediator_attrition");
    assert!(d_separated(
        &set(&["Y"]),
        &set(&["R"]),
        &set(&["W1", "A", "Z1", "Z2"]),
        &g
    )
    .unwrap());

    assert!(matches!(
        d_separated(&set(&["A"]), &set(&["A"]), &NodeSet::new(), &g),
        Err(GraphError::OverlappingSets(_))
    ));
}

#[test]
fn sac_verification_on_fixtures() {
    let g = fixtures::graph("mediator_attrition");
    let report = is_s_admissible(&pair(&["W1"], &["Z1", "Z2"]), &g).unwrap();
    assert!(report.admissible);
    assert_eq!(report.certificate, SacCertificate::Satisfied);

    // Dropping a separator member opens a selection trail.
    let report = is_s_admissible(&pair(&["W1"], &["Z1"]), &g).unwrap();
    assert!(!report.admissible);
    match &report.certificate {
        SacCertificate::SelectionOpen { path } => {
            assert_eq!(path.first().map(String::as_str), Some("Y"));
            assert_eq!(path.last().map(String::as_str), Some("R"));
        }
        other => panic!("expected selection-trail certificate, got {other:?}"),
    }

    // Putting the latent collider's child in W opens a backdoor trail.
    let g = fixtures::graph("latent_collider");
    let report = is_s_admissible(&pair(&["C1"], &["C2"]), &g).unwrap();
    assert!(!report.admissible);
    match &report.certificate {
        SacCertificate::BackdoorOpen { path } => {
            assert!(path.contains(&"C1".to_string()), "path {path:?}");
        }
        other => panic!("expected backdoor certificate, got {other:?}"),
    }

    // Forbidden-node violations are reported as condition 1.
    let report = is_s_admissible(&pair(&["C2"], &[]), &g).unwrap();
    assert_eq!(
        report.certificate,
        SacCertificate::ForbiddenInW { node: "C2".into() }
    );

    // Butterfly: nothing is admissible.
    let g = fixtures::graph("butterfly_selection");
    for w in [&[][..], &["C1"][..]] {
        for z in [&[][..], &["C2"][..]] {
            assert!(!is_s_admissible(&pair(w, z), &g).unwrap().admissible);
        }
    }

    // Latent or role nodes in a pair are rejected outright.
    assert!(matches!(
        is_s_admissible(&pair(&["U1"], &[]), &g),
        Err(GraphError::InvalidPairMember { .. })
    ));
    assert!(matches!(
        is_s_admissible(&pair(&["Y"], &[]), &g),
        Err(GraphError::InvalidPairMember { .. })
    ));
}

#[test]
fn minimal_pair_goldens() {
    let cases: &[(&str, &[(&[&str], &[&str])])] = &[
        (
            "latent_proxy",
            &[(&["B1"], &["C2"]), (&["B1", "C1", "C2"], &[])],
        ),
        ("pre_exposure_separator", &[(&["B1"], &["B2"])]),
        ("latent_collider", &[(&[], &["C2"])]),
        ("butterfly_selection", &[]),
        ("mediator_attrition", &[(&["W1"], &["Z1", "Z2"])]),
        ("mar_chain", &[(&["B1"], &["C1"]), (&["B1", "C1"], &[])]),
    ];
    for (name, expected) in cases {
        let g = fixtures::graph(name);
        let got = pairs(&g);
        let want: Vec<AdmissiblePair> = expected.iter().map(|(w, z)| pair(w, z)).collect();
        assert_eq!(got, want, "fixture {name}");
        // And the independent brute-force scan agrees.
        assert_eq!(got, brute_pairs(&g, true).unwrap(), "brute {name}");
    }
}

#[test]
fn canonical_order_is_size_then_lexicographic() {
    let got = pairs(&fixtures::graph("latent_proxy"));
    assert_eq!(got[0], pair(&["B1"], &["C2"]));
    assert_eq!(got[1], pair(&["B1", "C1", "C2"], &[]));
}

#[test]
fn enumerated_pairs_are_admissible_and_minimal() {
    for (name, _) in fixtures::GRAPHS {
        let g = fixtures::graph(name);
        for p in pairs(&g) {
            assert!(is_s_admissible(&p, &g).unwrap().admissible);
            for w in p.w.iter() {
                let mut reduced = p.w.clone();
                reduced.remove(w);
                let candidate = AdmissiblePair::new(reduced, p.z.clone()).unwrap();
                assert!(!is_s_admissible(&candidate, &g).unwrap().admissible);
            }
            for z in p.z.iter() {
                let mut reduced = p.z.clone();
                reduced.remove(z);
                let candidate = AdmissiblePair::new(p.w.clone(), reduced).unwrap();
                assert!(!is_s_admissible(&candidate, &g).unwrap().admissible);
            }
        }
    }
}

#[test]
fn chronological_filter_restricts_sides() {
    // In the latent-proxy fixture the single-regression pair puts the
    // post-exposure C1, C2 into W, which the tier filter forbids.
    let g = fixtures::graph("latent_proxy");
    let opts = EnumerateOptions {
        chronological: true,
        ..EnumerateOptions::default()
    };
    let got = enumerate_minimal_pairs(&g, None, &opts).unwrap();
    assert_eq!(got, vec![pair(&["B1"], &["C2"])]);
}

#[test]
fn default_pair_examples() {
    let g = fixtures::graph("mediator_attrition");
    assert_eq!(
        default_pair_markovian(&g).unwrap(),
        pair(&["W1"], &["Z1", "Z2"])
    );

    let confounded = MGraph::parse(
        "node W\nnode A role=exposure\nnode Y role=outcome\nnode R role=selection\nW -> A\nW -> Y\nA -> Y\n",
    )
    .unwrap();
    assert_eq!(default_pair_markovian(&confounded).unwrap(), pair(&["W"], &[]));

    let rct = MGraph::parse(
        "node A role=exposure\nnode Y role=outcome\nnode R role=selection\nA -> Y\n",
    )
    .unwrap();
    assert_eq!(default_pair_markovian(&rct).unwrap(), pair(&[], &[]));

    assert!(matches!(
        default_pair_markovian(&fixtures::graph("latent_proxy")),
        Err(GraphError::LatentPresent)
    ));

    let self_selection = MGraph::parse(
        "node A role=exposure\nnode Y role=outcome\nnode R role=selection\nA -> Y\nY -> R\n",
    )
    .unwrap();
    assert!(matches!(
        default_pair_markovian(&self_selection),
        Err(GraphError::SelfSelection)
    ));
}

#[test]
fn default_pair_holds_on_the_layered_markovian_class() {
    let mut stream = Stream::new(31);
    for _ in 0..200 {
        let g = random_markovian_graph(&mut stream);
        let p = default_pair_markovian(&g).unwrap();
        let report = is_s_admissible(&p, &g).unwrap();
        assert!(report.admissible, "graph {:?} pair {p}", g.edges());
    }
}

/// The layered restriction above is necessary: with a confounder feeding a
/// mediator, the parent-set recipe fails the backdoor condition.
#[test]
fn default_pair_fails_outside_the_layered_class() {
    let g = MGraph::parse(
        "node U\nnode A role=exposure\nnode P\nnode Y role=outcome\nnode R role=selection\nU -> A\nU -> P\nA -> P\nP -> Y\n",
    )
    .unwrap();
    let p = default_pair_markovian(&g).unwrap();
    assert_eq!(p, pair(&[], &["P"]));
    assert!(!is_s_admissible(&p, &g).unwrap().admissible);
    // Yet an admissible pair exists in this graph.
    assert_eq!(pairs(&g), vec![pair(&["U"], &[])]);
}

#[test]
fn dsep_agrees_with_brute_force_on_random_dags() {
    let mut stream = Stream::new(2024);
    let mut queries = 0usize;
    for _ in 0..120 {
        let density = 0.2 + 0.3 * stream.uniform();
        let g = random_dag(&mut stream, 7, density);
        for _ in 0..8 {
            let names: Vec<String> = g.nodes().iter().map(|n| n.name.clone()).collect();
            let mut picks = names.clone();
            stream.shuffle(&mut picks);
            let x: NodeSet = picks[0..1].iter().collect();
            let y: NodeSet = picks[1..2].iter().collect();
            let s_max = picks.len() - 2;
            let s: NodeSet = picks[2..2 + stream.below(s_max + 1)].iter().collect();
            let fast = d_separated(&x, &y, &s, &g).unwrap();
            let brute = brute_dsep(&x, &y, &s, &g).unwrap();
            assert_eq!(fast, brute, "x={x} y={y} s={s} edges={:?}", g.edges());
            // Symmetry in the first two arguments.
            assert_eq!(fast, d_separated(&y, &x, &s, &g).unwrap());
            queries += 1;
        }
    }
    assert_eq!(queries, 960);
}
