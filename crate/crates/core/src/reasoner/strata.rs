use std::collections::{BTreeMap, HashMap, VecDeque};

use petgraph::algo::tarjan_scc;
use petgraph::graph::{DiGraph, NodeIndex};
use petgraph::visit::EdgeRef;

use super::{BodyLit, ReasonError, Rule};
use crate::term::PredKey;

/// Assign every predicate a stratum so that negated dependencies point to a
/// strictly lower stratum. Fails with one offending cycle otherwise.
pub fn check_stratified(rules: &[Rule]) -> Result<BTreeMap<PredKey, usize>, ReasonError> {
    let mut graph: DiGraph<PredKey, bool> = DiGraph::new();
    let mut nodes: HashMap<PredKey, NodeIndex> = HashMap::new();
    let mut node = |g: &mut DiGraph<PredKey, bool>, k: PredKey| {
        *nodes.entry(k.clone()).or_insert_with(|| g.add_node(k))
    };
    for r in rules {
        let h = node(&mut graph, r.head.key());
        for lit in &r.body {
            let (l, neg) = match lit {
                BodyLit::Pos(l) => (l, false),
                BodyLit::Neg(l) => (l, true),
                BodyLit::Cmp(..) => continue,
            };
            let b = node(&mut graph, l.key());
            graph.add_edge(h, b, neg);
        }
    }

    // Sinks come first, so every dependency is numbered before its dependents.
    let sccs = tarjan_scc(&graph);
    let mut comp = vec![0usize; graph.node_count()];
    for (ci, scc) in sccs.iter().enumerate() {
        for &n in scc {
            comp[n.index()] = ci;
        }
    }
    let mut level = vec![0usize; sccs.len()];
    for (ci, scc) in sccs.iter().enumerate() {
        let mut lv = 0;
        for &n in scc {
            for e in graph.edges(n) {
                let tc = comp[e.target().index()];
                if tc == ci {
                    if *e.weight() {
                        return Err(ReasonError::NotStratified {
                            cycle: negative_cycle(&graph, &comp, n, e.target()),
                        });
                    }
                } else {
                    lv = lv.max(level[tc] + usize::from(*e.weight()));
                }
            }
        }
        level[ci] = lv;
    }
    Ok(graph
        .node_indices()
        .map(|n| (graph[n].clone(), level[comp[n.index()]]))
        .collect())
}

/// Path `from -> to -> ... -> from` inside one component.
fn negative_cycle(
    graph: &DiGraph<PredKey, bool>,
    comp: &[usize],
    from: NodeIndex,
    to: NodeIndex,
) -> Vec<String> {
    let c = comp[from.index()];
    let mut prev: HashMap<NodeIndex, NodeIndex> = HashMap::new();
    let mut queue = VecDeque::from([to]);
    let mut seen = vec![false; graph.node_count()];
    seen[to.index()] = true;
    while let Some(n) = queue.pop_front() {
        if n == from {
            break;
        }
        for m in graph.neighbors(n) {
            if comp[m.index()] == c && !seen[m.index()] {
                seen[m.index()] = true;
                prev.insert(m, n);
                queue.push_back(m);
            }
        }
    }
    let mut path = vec![from];
    let mut cur = from;
    while cur != to {
        cur = prev[&cur];
        path.push(cur);
    }
    path.reverse();
    let mut out: Vec<String> = std::iter::once(from)
        .chain(path.into_iter().take_while(|&n| n != from))
        .map(|n| graph[n].to_string())
        .collect();
    out.push(graph[from].to_string());
    out
}
