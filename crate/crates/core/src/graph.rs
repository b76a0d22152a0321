//! Support-graph helpers shared by the classifier and the gain solver.

use petgraph::algo::tarjan_scc;
use petgraph::graph::{DiGraph, NodeIndex};

/// Strongly connected components of a directed graph given as adjacency
/// lists.
pub(crate) struct Components {
    /// Component id of every node.
    pub of: Vec<usize>,
    /// Members of each component, sorted ascending.
    pub members: Vec<Vec<usize>>,
}

impl Components {
    pub fn new(adj: &[Vec<usize>]) -> Self {
        let n = adj.len();
        let mut g = DiGraph::<(), ()>::with_capacity(n, adj.iter().map(Vec::len).sum());
        for _ in 0..n {
            g.add_node(());
        }
        for (u, succ) in adj.iter().enumerate() {
            for &v in succ {
                g.add_edge(NodeIndex::new(u), NodeIndex::new(v), ());
            }
        }
        let mut members: Vec<Vec<usize>> = tarjan_scc(&g)
            .into_iter()
            .map(|c| {
                let mut m: Vec<usize> = c.into_iter().map(NodeIndex::index).collect();
                m.sort_unstable();
                m
            })
            .collect();
        // Order components by smallest member so ids do not depend on
        // traversal order.
        members.sort_unstable_by_key(|m| m[0]);
        let mut of = vec![0; n];
        for (c, m) in members.iter().enumerate() {
            for &u in m {
                of[u] = c;
            }
        }
        Components { of, members }
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    /// Components with no edge leaving them (the recurrent classes of a
    /// Markov chain's support graph).
    pub fn closed(&self, adj: &[Vec<usize>]) -> Vec<usize> {
        (0..self.members.len())
            .filter(|&c| {
                self.members[c]
                    .iter()
                    .all(|&u| adj[u].iter().all(|&v| self.of[v] == c))
            })
            .collect()
    }
}

/// Nodes reachable from `from` (including itself).
pub(crate) fn reachable(adj: &[Vec<usize>], from: usize) -> Vec<bool> {
    let mut seen = vec![false; adj.len()];
    let mut stack = vec![from];
    seen[from] = true;
    while let Some(u) = stack.pop() {
        for &v in &adj[u] {
            if !seen[v] {
                seen[v] = true;
                stack.push(v);
            }
        }
    }
    seen
}

/// Adjacency lists of a row-major `n x n` matrix's positive entries.
pub(crate) fn support(matrix: &[f64], n: usize) -> Vec<Vec<usize>> {
    matrix
        .chunks_exact(n)
        .map(|row| (0..n).filter(|&j| row[j] > 0.0).collect())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn components_and_closed_classes() {
        // 0 -> 1 <-> 2, 3 -> 3
        let adj = vec![vec![1], vec![2], vec![1], vec![3]];
        let c = Components::new(&adj);
        assert_eq!(c.members, vec![vec![0], vec![1, 2], vec![3]]);
        assert_eq!(c.closed(&adj), vec![1, 2]);
        assert_eq!(reachable(&adj, 0), vec![true, true, true, false]);
    }
}
