#![allow(dead_code)]

use pdsgap::Graph;
use statrs::distribution::{ContinuousCDF, Normal};

/// Two-sided normal critical value at level `alpha / cells`.
pub fn bonferroni_z(alpha: f64, cells: usize) -> f64 {
    Normal::standard().inverse_cdf(1.0 - alpha / (2.0 * cells as f64))
}

/// `|count - trials p| / sd`, the standardized deviation of a Bernoulli count.
pub fn z_score(count: usize, trials: usize, p: f64) -> f64 {
    let t = trials as f64;
    (count as f64 - t * p) / (t * p * (1.0 - p)).sqrt()
}

/// Per-pair edge counts over `trials` graphs on `n` vertices, indexed by
/// the upper-triangle position of `(u, v)`.
pub fn edge_counts(n: usize, trials: usize, mut draw: impl FnMut(usize) -> Graph) -> Vec<usize> {
    let mut counts = vec![0usize; n * (n - 1) / 2];
    for t in 0..trials {
        let g = draw(t);
        let mut c = 0;
        for u in 0..n {
            for v in (u + 1)..n {
                counts[c] += g.has_edge(u, v) as usize;
                c += 1;
            }
        }
    }
    counts
}

/// Every per-edge marginal matches `p` at Bonferroni level `alpha`.
pub fn assert_edge_marginals(counts: &[usize], trials: usize, p: f64, alpha: f64) {
    let z = bonferroni_z(alpha, counts.len());
    for (i, &c) in counts.iter().enumerate() {
        let s = z_score(c, trials, p);
        assert!(s.abs() < z, "cell {i}: count {c} of {trials}, z = {s:.2} against {z:.2}");
    }
}

pub fn density(g: &Graph) -> f64 {
    let n = g.n();
    g.edge_count() as f64 / (n * (n - 1) / 2) as f64
}
