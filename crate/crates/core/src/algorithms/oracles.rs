use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::graph::Graph;

/// Edge density of the oracle's guess; sets with fewer than two vertices
/// have density zero.
pub fn guess_density(graph: &Graph, guess: &[usize]) -> f64 {
    if guess.len() < 2 {
        return 0.0;
    }
    graph.density_within(guess)
}

/// Detection from a recovery oracle: reject iff the guessed set has density
/// at least `(p + q)/2`.
pub fn detect_via_recovery_oracle<F>(graph: &Graph, mut oracle: F, p: f64, q: f64) -> Result<bool>
where
    F: FnMut(&Graph) -> Result<Vec<usize>>,
{
    let guess = oracle(graph)?;
    Ok(guess_density(graph, &guess) >= (p + q) / 2.0)
}

/// Detection from a refuter: its answer is the decision.
pub fn detect_via_refutation_oracle<F>(graph: &Graph, mut refuter: F) -> Result<bool>
where
    F: FnMut(&Graph) -> Result<bool>,
{
    refuter(graph)
}

/// Error bookkeeping for a refuter-based detector.
///
/// With `success` the probability that the refuter certifies a low-value null
/// input, `low_null` the probability that a null input has low value, and
/// `high_alt_fail` the probability that a planted input fails to have high
/// value, Type I + Type II is at most `1 - success * low_null + high_alt_fail`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RefutationBookkeeping {
    pub success: f64,
    pub low_null: f64,
    pub high_alt_fail: f64,
}

impl RefutationBookkeeping {
    pub fn error_bound(&self) -> f64 {
        1.0 - self.success * self.low_null + self.high_alt_fail
    }
}
