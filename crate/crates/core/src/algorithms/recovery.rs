use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::kernels::graph_clone;

/// The `k` vertices of largest degree, ties broken by smaller index. Sorted.
pub fn top_k_degrees_recover(graph: &Graph, k: usize) -> Vec<usize> {
    let degrees = graph.degrees();
    top_k_by(&degrees, k)
}

fn top_k_by(score: &[usize], k: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..score.len()).collect();
    order.sort_by(|&a, &b| score[b].cmp(&score[a]).then(a.cmp(&b)));
    let mut out: Vec<usize> = order.into_iter().take(k).collect();
    out.sort_unstable();
    out
}

/// Smallest integer `C` with `C (1 - log k / log n) > 1`.
pub fn default_vote_cutoff(n: usize, k: usize) -> usize {
    let exponent = (k as f64).ln() / (n as f64).ln();
    let slack = 1.0 - exponent;
    if slack <= 0.0 {
        return usize::MAX;
    }
    (1.0 / slack).floor() as usize + 1
}

/// `ceil((ln k)^power)`, at least 2.
pub fn clone_count(k: usize, power: f64) -> usize {
    ((k as f64).ln().max(0.0).powf(power).ceil() as usize).max(2)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AmplifyReport {
    pub support: Vec<usize>,
    /// Per-vertex count of oracle outputs containing it.
    pub hits: Vec<usize>,
    pub c_cut: usize,
    /// Vertices at or above the cutoff, for diagnostics.
    pub above_cut: usize,
}

/// Boosts a weak recovery oracle by voting over conditionally independent
/// clones.
///
/// The graph is split into `r_clones` clones at reduced ambient density; each
/// is relabeled by a hidden uniform permutation, handed to `oracle`, and its
/// answer mapped back. The `k` vertices with most hits are returned.
pub fn amplify_minimal_to_exact<R, F>(
    graph: &Graph,
    k: usize,
    p: f64,
    q: f64,
    mut oracle: F,
    r_clones: usize,
    c_cut: usize,
    rng: &mut R,
) -> Result<AmplifyReport>
where
    R: Rng + ?Sized,
    F: FnMut(&Graph) -> Result<Vec<usize>>,
{
    if r_clones < 2 {
        return Err(Error::param("r_clones", "need at least two clones"));
    }
    let n = graph.n();
    if k > n {
        return Err(Error::param("k", "larger than the graph"));
    }
    let clones = graph_clone(graph, p, q, r_clones, rng)?;
    let mut hits = vec![0usize; n];
    for clone in clones {
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(rng);
        let mut inverse = vec![0; n];
        for (v, &w) in perm.iter().enumerate() {
            inverse[w] = v;
        }
        let guess = oracle(&clone.permuted(&perm)).map_err(|e| Error::Oracle(e.to_string()))?;
        for w in guess {
            if w >= n {
                return Err(Error::Oracle(format!("vertex {w} out of range")));
            }
            hits[inverse[w]] += 1;
        }
    }
    let support = top_k_by(&hits, k);
    let above_cut = hits.iter().filter(|&&h| h >= c_cut).count();
    Ok(AmplifyReport {
        support,
        hits,
        c_cut,
        above_cut,
    })
}
