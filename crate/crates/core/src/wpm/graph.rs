use std::collections::BTreeSet;

use crate::ec::RuleDef;

/// Directed graph over rule indices stored as an adjacency matrix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DependencyGraph {
    n: usize,
    adj: Vec<bool>,
}

impl DependencyGraph {
    pub fn new(n: usize) -> Self {
        DependencyGraph { n, adj: vec![false; n * n] }
    }

    pub fn from_edges(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Self {
        let mut g = Self::new(n);
        for (i, j) in edges {
            g.add_edge(i, j);
        }
        g
    }

    /// Edge `i -> j` iff the head fluent of rule `i` is read in the body of
    /// rule `j`.
    pub fn from_rules(rules: &[RuleDef]) -> Self {
        let mut g = Self::new(rules.len());
        for (i, ri) in rules.iter().enumerate() {
            for (j, rj) in rules.iter().enumerate() {
                if rj.body.iter().any(|l| l.referenced() == Some(ri.head.name.as_str())) {
                    g.add_edge(i, j);
                }
            }
        }
        g
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn add_edge(&mut self, i: usize, j: usize) {
        self.adj[i * self.n + j] = true;
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.adj[i * self.n + j]
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.n).flat_map(move |i| (0..self.n).filter(move |&j| self.has_edge(i, j)).map(move |j| (i, j)))
    }

    pub fn successors(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.n).filter(move |&j| self.has_edge(i, j))
    }

    /// Floyd–Warshall reachability: `i -> j` in the result iff there is a
    /// non-empty path from `i` to `j`.
    pub fn transitive_closure(&self) -> DependencyGraph {
        let n = self.n;
        let mut r = self.adj.clone();
        for k in 0..n {
            for i in 0..n {
                if !r[i * n + k] {
                    continue;
                }
                for j in 0..n {
                    if r[k * n + j] {
                        r[i * n + j] = true;
                    }
                }
            }
        }
        DependencyGraph { n, adj: r }
    }
}

/// Rules triggered by an active event or fluent, plus every rule reachable
/// from them in `closure`.
pub fn select_relevant_rules(
    rules: &[RuleDef],
    closure: &DependencyGraph,
    active: &BTreeSet<String>,
) -> BTreeSet<usize> {
    let mut out = BTreeSet::new();
    for (i, r) in rules.iter().enumerate() {
        if r.body.iter().any(|l| l.referenced().is_some_and(|n| active.contains(n))) {
            out.insert(i);
            out.extend(closure.successors(i));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chain_closes() {
        let g = DependencyGraph::from_edges(3, [(0, 1), (1, 2)]);
        let c = g.transitive_closure();
        assert!(c.has_edge(0, 2));
        assert!(!c.has_edge(2, 0));
        assert!(!c.has_edge(0, 0));
    }

    #[test]
    fn cycle_closes_with_self_loops() {
        let c = DependencyGraph::from_edges(2, [(0, 1), (1, 0)]).transitive_closure();
        assert!(c.has_edge(0, 0) && c.has_edge(1, 1) && c.has_edge(0, 1) && c.has_edge(1, 0));
    }

    #[test]
    fn closure_is_idempotent() {
        let g = DependencyGraph::from_edges(5, [(0, 1), (1, 2), (3, 4), (4, 3), (2, 0)]);
        let c = g.transitive_closure();
        assert_eq!(c.transitive_closure(), c);
    }
}
