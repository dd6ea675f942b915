use serde::{Deserialize, Serialize};

use crate::graph::Graph;
use crate::model::{choose2, Hypothesis, PdsStarParams};
use crate::scalar::{to_f64, Field};

/// A thresholded statistic. `decision` is true iff `statistic > threshold`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TestOutcome {
    pub statistic: f64,
    pub threshold: f64,
    pub decision: bool,
}

impl TestOutcome {
    pub fn new(statistic: f64, threshold: f64) -> Self {
        TestOutcome {
            statistic,
            threshold,
            decision: statistic > threshold,
        }
    }
}

/// Midpoint between the expected edge counts of `G(n, q)` and `PDS(n, k, p, q)`.
pub fn sum_test_threshold(n: usize, k: usize, p: f64, q: f64) -> f64 {
    q * choose2(n) + (p - q) * choose2(k) / 2.0
}

/// Total edge count against [`sum_test_threshold`].
pub fn sum_test(graph: &Graph, n: usize, k: usize, p: f64, q: f64) -> TestOutcome {
    TestOutcome::new(graph.edge_count() as f64, sum_test_threshold(n, k, p, q))
}

/// `E d^2` for `d = Bin(a, x) + Bin(b, y)`.
fn second_moment<T: Field>(a: usize, x: T, b: usize, y: T) -> T {
    let (a, b) = (T::from_usize(a).unwrap(), T::from_usize(b).unwrap());
    let one = T::one();
    let mean = a.clone() * x.clone() + b.clone() * y.clone();
    let var = a * x.clone() * (one.clone() - x) + b * y.clone() * (one - y);
    var + mean.clone() * mean
}

/// `E sum_i d_i^2` without self-pairs.
///
/// Under the null every degree is `Bin(n-1, p0)`. Under the planted
/// hypothesis the `k` planted vertices have `Bin(k-1, p) + Bin(n-k, q)` and
/// the rest `Bin(n-1, q)`.
pub fn expected_f<T: Field>(hypothesis: Hypothesis, n: usize, k: usize, p: T, q: T, p0: T) -> T {
    let nt = T::from_usize(n).unwrap();
    match hypothesis {
        Hypothesis::Null => nt * second_moment(n - 1, p0, 0, T::zero()),
        Hypothesis::Planted => {
            let kt = T::from_usize(k).unwrap();
            let rest = T::from_usize(n - k).unwrap();
            kt * second_moment(k - 1, p, n - k, q.clone()) + rest * second_moment(n - 1, q, 0, T::zero())
        }
    }
}

/// `n^2 p0 + (n^3 - n^2) p0^2`: the null expectation when every vertex also
/// carries a `Bern(p0)` self-pair, so degrees are `Bin(n, p0)`.
pub fn expected_f_with_loops<T: Field>(n: usize, p0: T) -> T {
    let nt = T::from_usize(n).unwrap();
    let n2 = nt.clone() * nt.clone();
    n2.clone() * p0.clone() + (n2.clone() * nt - n2) * p0.clone() * p0
}

/// [`expected_f`] at the parameters of a PDS* pair.
pub fn expected_f_for(hypothesis: Hypothesis, params: &PdsStarParams) -> f64 {
    let b = &params.base;
    expected_f(hypothesis, b.n, b.k, b.p, b.q, params.p0)
}

/// `sum_i d_i^2` against the midpoint of its two expectations.
pub fn degree_second_moment_test(graph: &Graph, params: &PdsStarParams) -> TestOutcome {
    let h0 = expected_f_for(Hypothesis::Null, params);
    let h1 = expected_f_for(Hypothesis::Planted, params);
    TestOutcome::new(graph.sum_squared_degrees() as f64, (h0 + h1) / 2.0)
}

/// The statistic recomputed from a degree sequence alone.
pub fn second_moment_from_degrees(degrees: &[usize]) -> f64 {
    to_f64(degrees.iter().map(|&d| (d * d) as u64).sum::<u64>())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::PdsParams;
    use num_rational::BigRational;
    use num_traits::FromPrimitive;

    #[test]
    fn null_expectations() {
        assert_eq!(expected_f_with_loops(10, 0.5), 275.0);
        assert_eq!(expected_f(Hypothesis::Null, 10, 3, 0.9, 0.5, 0.5), 225.0);
    }

    #[test]
    fn planted_reduces_to_null_when_p_equals_q() {
        let a = expected_f(Hypothesis::Planted, 30, 7, 0.4f64, 0.4, 0.4);
        let b = expected_f(Hypothesis::Null, 30, 7, 0.4, 0.4, 0.4);
        assert!((a - b).abs() < 1e-9);
    }

    #[test]
    fn rational_evaluation_matches_float() {
        let r = |x: f64| BigRational::from_f64(x).unwrap();
        let exact = expected_f(Hypothesis::Planted, 20, 5, r(0.9), r(0.5), r(0.6));
        let float = expected_f(Hypothesis::Planted, 20, 5, 0.9, 0.5, 0.6);
        let e: f64 = num_traits::ToPrimitive::to_f64(&exact).unwrap();
        assert!((e - float).abs() / e < 1e-12);
    }

    #[test]
    fn regular_graph_statistic() {
        // a 10-cycle is 2-regular
        let edges: Vec<_> = (0..10).map(|i| (i, (i + 1) % 10)).collect();
        let g = Graph::from_edges(10, &edges).unwrap();
        let params = PdsStarParams::from_gamma(10, 3, 0.5, 0.01).unwrap();
        assert_eq!(degree_second_moment_test(&g, &params).statistic, 40.0);
        assert_eq!(second_moment_from_degrees(&g.degrees()), 40.0);
    }

    #[test]
    fn ties_do_not_reject() {
        assert!(!TestOutcome::new(1.0, 1.0).decision);
        assert!(!sum_test(&Graph::empty(10), 10, 3, 0.9, 0.5).decision);
        let _ = PdsParams::new(10, 3, 0.9, 0.5).unwrap();
    }
}
