//! Graph-file parser.
//!
//! One statement per line, `#` starts a comment:
//!
//! ```text
//! node <name> [role=<exposure|outcome|selection|covariate|latent>] [tier=<0|1>]
//! <name> -> <name>
//! ```
//!
//! A node without a `role=` attribute is a covariate. The graph must declare
//! exactly one exposure, one outcome, and one selection node, and the edge
//! relation must be acyclic.

use super::{GraphError, MGraph, NodeInfo, Role};

pub(super) fn parse_graph(text: &str) -> Result<MGraph, GraphError> {
    let mut g = MGraph::from_parts(Vec::new(), Vec::new());
    for (lineno, raw) in text.lines().enumerate() {
        let line = lineno + 1;
        let stmt = match raw.split('#').next() {
            Some(s) => s.trim(),
            None => "",
        };
        if stmt.is_empty() {
            continue;
        }
        let tokens: Vec<&str> = stmt.split_whitespace().collect();
        if tokens[0] == "node" {
            parse_node(&mut g, &tokens, line)?;
        } else if tokens.len() == 3 && tokens[1] == "->" {
            parse_edge(&mut g, tokens[0], tokens[2], line)?;
        } else {
            return Err(GraphError::Parse {
                line,
                msg: format!("expected `node <name> ...` or `<name> -> <name>`, got `{stmt}`"),
            });
        }
    }
    g.check_roles()?;
    Ok(g)
}

fn valid_name(name: &str) -> bool {
    let mut chars = name.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

fn parse_node(g: &mut MGraph, tokens: &[&str], line: usize) -> Result<(), GraphError> {
    if tokens.len() < 2 {
        return Err(GraphError::Parse {
            line,
            msg: "node statement needs a name".into(),
        });
    }
    let name = tokens[1];
    if !valid_name(name) {
        return Err(GraphError::Parse {
            line,
            msg: format!("invalid node name `{name}`"),
        });
    }
    if g.index_of(name).is_ok() {
        return Err(GraphError::DuplicateNode {
            line,
            name: name.to_string(),
        });
    }
    let mut role = Role::Covariate;
    let mut tier = None;
    for attr in &tokens[2..] {
        match attr.split_once('=') {
            Some(("role", v)) => {
                role = match v {
                    "exposure" => Role::Exposure,
                    "outcome" => Role::Outcome,
                    "selection" => Role::Selection,
                    "covariate" => Role::Covariate,
                    "latent" => Role::Latent,
                    other => {
                        return Err(GraphError::Parse {
                            line,
                            msg: format!("unknown role `{other}`"),
                        })
                    }
                };
            }
            Some(("tier", v)) => {
                tier = match v {
                    "0" => Some(0),
                    "1" => Some(1),
                    other => {
                        return Err(GraphError::Parse {
                            line,
                            msg: format!("tier must be 0 or 1, got `{other}`"),
                        })
                    }
                };
            }
            _ => {
                return Err(GraphError::Parse {
                    line,
                    msg: format!("unknown attribute `{attr}`"),
                })
            }
        }
    }
    g.push_node(NodeInfo {
        name: name.to_string(),
        role,
        tier,
    });
    Ok(())
}

fn parse_edge(g: &mut MGraph, from: &str, to: &str, line: usize) -> Result<(), GraphError> {
    let f = g
        .index_of(from)
        .map_err(|_| GraphError::UndeclaredEndpoint {
            line,
            name: from.to_string(),
        })?;
    let t = g.index_of(to).map_err(|_| GraphError::UndeclaredEndpoint {
        line,
        name: to.to_string(),
    })?;
    g.add_edge_checked(f, t, line)
}
