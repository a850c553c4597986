//! Goal-rooted cost-to-go maintained incrementally under edge removal and
//! graph growth.

use std::collections::BinaryHeap;

use crate::heap::MinEntry;

/// Directed weighted graph as seen by the reverse search.
pub trait CostGraph {
    fn node_count(&self) -> usize;
    /// `(edge id, head, cost)` for each edge leaving `node`.
    fn outgoing(&self, node: usize) -> Vec<(usize, usize, f64)>;
    /// `(edge id, tail, cost)` for each edge entering `node`.
    fn incoming(&self, node: usize) -> Vec<(usize, usize, f64)>;
}

#[derive(Debug, Clone)]
pub struct ReverseTree {
    goal: usize,
    g: Vec<f64>,
    rhs: Vec<f64>,
    parent: Vec<Option<usize>>,
    removed: Vec<bool>,
    queue: BinaryHeap<MinEntry<usize>>,
}

impl ReverseTree {
    pub fn new<G: CostGraph + ?Sized>(graph: &G, goal: usize) -> Self {
        let n = graph.node_count();
        let mut tree = Self {
            goal,
            g: vec![f64::INFINITY; n],
            rhs: vec![f64::INFINITY; n],
            parent: vec![None; n],
            removed: Vec::new(),
            queue: BinaryHeap::new(),
        };
        tree.rhs[goal] = 0.0;
        tree.queue.push(MinEntry { key: 0.0, tie: goal });
        tree.settle(graph);
        tree
    }

    pub fn goal(&self) -> usize {
        self.goal
    }

    pub fn cost_to_go(&self, node: usize) -> f64 {
        self.g.get(node).copied().unwrap_or(f64::INFINITY)
    }

    pub fn costs(&self) -> &[f64] {
        &self.g
    }

    /// Next edge towards the goal from `node`.
    pub fn parent_edge(&self, node: usize) -> Option<usize> {
        self.parent.get(node).copied().flatten()
    }

    pub fn is_removed(&self, edge: usize) -> bool {
        self.removed.get(edge).copied().unwrap_or(false)
    }

    fn ensure_nodes(&mut self, n: usize) {
        if self.g.len() < n {
            self.g.resize(n, f64::INFINITY);
            self.rhs.resize(n, f64::INFINITY);
            self.parent.resize(n, None);
        }
    }

    fn update_vertex<G: CostGraph + ?Sized>(&mut self, graph: &G, node: usize) {
        if node != self.goal {
            let mut best = f64::INFINITY;
            let mut via = None;
            for (e, head, cost) in graph.outgoing(node) {
                if self.is_removed(e) {
                    continue;
                }
                let cand = cost + self.g[head];
                if cand < best {
                    best = cand;
                    via = Some(e);
                }
            }
            self.rhs[node] = best;
            self.parent[node] = via;
        }
        if self.g[node] != self.rhs[node] {
            self.queue.push(MinEntry {
                key: self.g[node].min(self.rhs[node]),
                tie: node,
            });
        }
    }

    fn settle<G: CostGraph + ?Sized>(&mut self, graph: &G) {
        while let Some(MinEntry { key, tie: node }) = self.queue.pop() {
            let (g, rhs) = (self.g[node], self.rhs[node]);
            if g == rhs || key != g.min(rhs) {
                continue;
            }
            if g > rhs {
                self.g[node] = rhs;
                for (_, tail, _) in graph.incoming(node) {
                    self.update_vertex(graph, tail);
                }
            } else {
                self.g[node] = f64::INFINITY;
                self.update_vertex(graph, node);
                for (_, tail, _) in graph.incoming(node) {
                    self.update_vertex(graph, tail);
                }
            }
        }
    }

    /// Drops `edge` (from `tail`) and repairs every affected cost-to-go.
    pub fn remove_edge<G: CostGraph + ?Sized>(&mut self, graph: &G, edge: usize, tail: usize) {
        if self.removed.len() <= edge {
            self.removed.resize(edge + 1, false);
        }
        if self.removed[edge] {
            return;
        }
        self.removed[edge] = true;
        self.update_vertex(graph, tail);
        self.settle(graph);
    }

    /// Brings the tree up to date after nodes and edges were appended to `graph`.
    /// `tails` lists the tail node of every new edge.
    pub fn extend<G: CostGraph + ?Sized>(&mut self, graph: &G, tails: &[usize]) {
        self.ensure_nodes(graph.node_count());
        let mut tails = tails.to_vec();
        tails.sort_unstable();
        tails.dedup();
        for t in tails {
            self.update_vertex(graph, t);
        }
        self.settle(graph);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::roadmap::dijkstra_to_goal;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[derive(Default)]
    struct Adj {
        n: usize,
        edges: Vec<(usize, usize, f64)>,
        removed: Vec<bool>,
    }

    impl CostGraph for Adj {
        fn node_count(&self) -> usize {
            self.n
        }
        fn outgoing(&self, node: usize) -> Vec<(usize, usize, f64)> {
            self.edges
                .iter()
                .enumerate()
                .filter(|(_, e)| e.0 == node)
                .map(|(i, e)| (i, e.1, e.2))
                .collect()
        }
        fn incoming(&self, node: usize) -> Vec<(usize, usize, f64)> {
            self.edges
                .iter()
                .enumerate()
                .filter(|(_, e)| e.1 == node)
                .map(|(i, e)| (i, e.0, e.2))
                .collect()
        }
    }

    impl Adj {
        fn recompute(&self, goal: usize) -> Vec<f64> {
            dijkstra_to_goal(self.n, goal, |v| {
                self.edges
                    .iter()
                    .enumerate()
                    .filter(move |(i, e)| e.1 == v && !self.removed[*i])
                    .map(|(_, e)| (e.0, e.2))
                    .collect::<Vec<_>>()
                    .into_iter()
            })
        }
    }

    fn random_graph(rng: &mut ChaCha8Rng, n: usize) -> Adj {
        let mut g = Adj { n, ..Default::default() };
        for _ in 0..n * 3 {
            let a = rng.random_range(0..n);
            let b = rng.random_range(0..n);
            if a != b {
                // costs on a coarse grid so that ties occur
                let c = rng.random_range(1..20) as f64 * 0.5;
                g.edges.push((a, b, c));
            }
        }
        g.removed = vec![false; g.edges.len()];
        g
    }

    #[test]
    fn matches_full_recompute_under_removal_and_growth() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for trial in 0..24 {
            let n = rng.random_range(5..120);
            let mut graph = random_graph(&mut rng, n);
            let goal = rng.random_range(0..n);
            let mut tree = ReverseTree::new(&graph, goal);
            assert_eq!(tree.costs(), graph.recompute(goal).as_slice(), "trial {trial} init");
            for step in 0..15 {
                if rng.random_bool(0.6) && !graph.edges.is_empty() {
                    let e = rng.random_range(0..graph.edges.len());
                    graph.removed[e] = true;
                    tree.remove_edge(&graph, e, graph.edges[e].0);
                } else {
                    let new_nodes = rng.random_range(0..3);
                    graph.n += new_nodes;
                    let mut tails = Vec::new();
                    for _ in 0..4 {
                        let a = rng.random_range(0..graph.n);
                        let b = rng.random_range(0..graph.n);
                        if a != b {
                            graph.edges.push((a, b, rng.random_range(1..20) as f64 * 0.5));
                            graph.removed.push(false);
                            tails.push(a);
                        }
                    }
                    tree.extend(&graph, &tails);
                }
                assert_eq!(
                    tree.costs(),
                    graph.recompute(goal).as_slice(),
                    "trial {trial} step {step}"
                );
            }
        }
    }
}
