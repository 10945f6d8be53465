//! Topological layering of the graph with cycles collapsed into single
//! layers. Generation only needs a partial order, so mutual dependencies
//! (which real APIs contain) are grouped rather than rejected.

use super::OperationDependencyGraph;
use crate::model::EndpointId;
use petgraph::graph::{DiGraph, NodeIndex};
use std::collections::BTreeMap;

/// Order endpoints into layers such that every edge goes from an earlier (or
/// equal, within a collapsed cycle) layer to a later one. Layer index is the
/// longest path rank over the condensation; ids within a layer are sorted.
pub fn topological_layers(graph: &OperationDependencyGraph) -> Vec<Vec<EndpointId>> {
    let mut pg: DiGraph<EndpointId, ()> = DiGraph::new();
    let mut index_of: BTreeMap<EndpointId, NodeIndex> = BTreeMap::new();
    for id in graph.nodes.keys() {
        let idx = pg.add_node(id.clone());
        index_of.insert(id.clone(), idx);
    }
    for edge in &graph.edges {
        pg.add_edge(index_of[&edge.src], index_of[&edge.dst], ());
    }

    // Tarjan returns components in reverse topological order.
    let sccs = petgraph::algo::tarjan_scc(&pg);
    let mut scc_of: BTreeMap<NodeIndex, usize> = BTreeMap::new();
    for (scc_idx, members) in sccs.iter().enumerate() {
        for node in members {
            scc_of.insert(*node, scc_idx);
        }
    }

    // Longest-path rank over the condensation, processed in topological
    // order (reverse of Tarjan's output).
    let mut rank = vec![0usize; sccs.len()];
    for scc_idx in (0..sccs.len()).rev() {
        for node in &sccs[scc_idx] {
            for pred in pg.neighbors_directed(*node, petgraph::Direction::Incoming) {
                let pred_scc = scc_of[&pred];
                if pred_scc != scc_idx {
                    rank[scc_idx] = rank[scc_idx].max(rank[pred_scc] + 1);
                }
            }
        }
    }

    let max_rank = rank.iter().copied().max().unwrap_or(0);
    let mut layers: Vec<Vec<EndpointId>> = vec![Vec::new(); max_rank + 1];
    for (scc_idx, members) in sccs.iter().enumerate() {
        for node in members {
            layers[rank[scc_idx]].push(pg[*node].clone());
        }
    }
    for layer in &mut layers {
        layer.sort();
    }
    layers.retain(|l| !l.is_empty());
    layers
}
