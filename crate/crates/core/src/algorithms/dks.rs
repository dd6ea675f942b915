use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::kernels::binomial_coefficient;
use crate::model::choose2;

/// Largest `C(n, k)` the exact search will take on.
pub const DKS_BUDGET: f64 = 1e8;

/// Widest graph the bitset search supports.
pub const DKS_MAX_VERTICES: usize = 128;

/// Densest `k`-subgraph: the edge density of the best `k`-set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValReport {
    pub k: usize,
    pub best_edges: usize,
    pub best_density: f64,
    /// Lexicographically least maximizer, sorted.
    pub best_support: Vec<usize>,
}

impl ValReport {
    fn new(k: usize, best_edges: usize, best_support: Vec<usize>) -> Self {
        let pairs = choose2(k);
        let best_density = if pairs > 0.0 { best_edges as f64 / pairs } else { 0.0 };
        ValReport {
            k,
            best_edges,
            best_density,
            best_support,
        }
    }
}

struct Search<'a> {
    adj: &'a [u128],
    n: usize,
    k: usize,
    best: i64,
    best_set: Vec<usize>,
    stack: Vec<usize>,
    scores: Vec<u32>,
}

impl Search<'_> {
    fn run(&mut self, mask: u128, edges: u32, start: usize) {
        let chosen = self.stack.len();
        if chosen == self.k {
            if edges as i64 > self.best {
                self.best = edges as i64;
                self.best_set = self.stack.clone();
            }
            return;
        }
        let need = self.k - chosen;
        if self.n - start < need {
            return;
        }
        let last = self.n - need;
        // Each remaining pick adds its edges into the chosen set plus at most
        // half of min(need-1, its candidate degree) new-new edges. Doubled to
        // stay in integers.
        let cand: u128 = if start >= self.n { 0 } else { (!0u128 >> (128 - (self.n - start))) << start };
        self.scores.clear();
        for v in start..self.n {
            let a = (self.adj[v] & mask).count_ones();
            let b = (self.adj[v] & cand).count_ones().min(need as u32 - 1);
            self.scores.push(2 * a + b);
        }
        if self.scores.len() > need {
            self.scores.select_nth_unstable_by(need - 1, |x, y| y.cmp(x));
        }
        let top: u32 = self.scores[..need].iter().sum();
        if (2 * edges + top) as i64 <= 2 * self.best {
            return;
        }
        for v in start..=last {
            let gain = (self.adj[v] & mask).count_ones();
            self.stack.push(v);
            self.run(mask | 1u128 << v, edges + gain, v + 1);
            self.stack.pop();
        }
    }
}

fn adjacency(graph: &Graph) -> Vec<u128> {
    let n = graph.n();
    (0..n)
        .map(|u| (0..n).filter(|&v| graph.has_edge(u, v)).fold(0u128, |m, v| m | 1u128 << v))
        .collect()
}

/// Repeatedly drops a minimum-degree vertex until `k` remain.
fn peel(graph: &Graph, adj: &[u128], k: usize) -> usize {
    let n = graph.n();
    let mut alive: u128 = if n == 128 { !0 } else { (1u128 << n) - 1 };
    for _ in k..n {
        let v = (0..n)
            .filter(|&v| alive >> v & 1 == 1)
            .min_by_key(|&v| ((adj[v] & alive).count_ones(), v))
            .expect("vertices remain");
        alive &= !(1u128 << v);
    }
    let edges: u32 = (0..n).filter(|&v| alive >> v & 1 == 1).map(|v| (adj[v] & alive).count_ones()).sum();
    (edges / 2) as usize
}

/// Exact densest `k`-subgraph by branch and bound.
///
/// Vertices are added in increasing order, so sets are visited
/// lexicographically and only strictly better sets replace the incumbent;
/// the result is the lexicographically least maximizer.
pub fn brute_force_dks(graph: &Graph, k: usize) -> Result<ValReport> {
    brute_force_dks_with_budget(graph, k, DKS_BUDGET)
}

pub fn brute_force_dks_with_budget(graph: &Graph, k: usize, budget: f64) -> Result<ValReport> {
    let n = graph.n();
    if k > n {
        return Err(Error::param("k", format!("k = {k} exceeds n = {n}")));
    }
    if n > DKS_MAX_VERTICES {
        return Err(Error::BudgetExceeded {
            needed: n as f64,
            budget: DKS_MAX_VERTICES as f64,
        });
    }
    let count = binomial_coefficient(n, k);
    if count > budget {
        return Err(Error::BudgetExceeded { needed: count, budget });
    }
    if k == 0 {
        return Ok(ValReport::new(0, 0, Vec::new()));
    }
    let adj = adjacency(graph);
    let greedy = peel(graph, &adj, k);
    let mut search = Search {
        adj: &adj,
        n,
        k,
        best: greedy as i64 - 1,
        best_set: Vec::new(),
        stack: Vec::with_capacity(k),
        scores: Vec::with_capacity(n),
    };
    search.run(0, 0, 0);
    Ok(ValReport::new(k, search.best as usize, search.best_set))
}

/// Plain enumeration of every `k`-subset, for cross-checking.
pub fn naive_dks(graph: &Graph, k: usize) -> ValReport {
    let n = graph.n();
    let mut best: Option<(usize, Vec<usize>)> = None;
    let mut set: Vec<usize> = (0..k).collect();
    if k > n {
        return ValReport::new(k, 0, Vec::new());
    }
    loop {
        let e = graph.edges_within(&set);
        if best.as_ref().is_none_or(|(b, _)| e > *b) {
            best = Some((e, set.clone()));
        }
        // next combination in lexicographic order
        let mut i = k;
        while i > 0 && set[i - 1] == n - k + i - 1 {
            i -= 1;
        }
        if i == 0 {
            break;
        }
        set[i - 1] += 1;
        for j in i..k {
            set[j] = set[j - 1] + 1;
        }
    }
    let (e, s) = best.unwrap_or((0, Vec::new()));
    ValReport::new(k, e, s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::sample_erdos_renyi;
    use crate::rng::stream;
    use rand::Rng;

    #[test]
    fn hand_examples() {
        let path = Graph::from_edges(3, &[(0, 1), (1, 2)]).unwrap();
        let v = brute_force_dks(&path, 3).unwrap();
        assert!((v.best_density - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(brute_force_dks(&Graph::complete(4), 3).unwrap().best_density, 1.0);
        assert_eq!(brute_force_dks(&Graph::empty(5), 2).unwrap().best_density, 0.0);
        let one = Graph::from_edges(5, &[(2, 4)]).unwrap();
        let v = brute_force_dks(&one, 2).unwrap();
        assert_eq!((v.best_density, v.best_support), (1.0, vec![2, 4]));
    }

    #[test]
    fn pruned_search_matches_enumeration() {
        let mut rng = stream(8, 0);
        for _ in 0..60 {
            let n = rng.random_range(4..=12);
            let k = rng.random_range(2..=n);
            let q = rng.random_range(0.1..0.9);
            let g = sample_erdos_renyi(n, q, &mut rng).unwrap();
            assert_eq!(brute_force_dks(&g, k).unwrap(), naive_dks(&g, k));
        }
    }

    #[test]
    fn budget_guard() {
        let g = Graph::empty(60);
        assert!(matches!(brute_force_dks(&g, 30), Err(Error::BudgetExceeded { .. })));
    }
}
