//! Detection statistics, recovery, exact densest-subgraph values, oracle
//! adapters and divergence utilities.

mod divergences;
mod dks;
mod oracles;
mod recovery;
mod statistics;

pub use divergences::{chi2_bernoulli, ingster_chi2, kl_bernoulli, tv_binomial_bound};
pub use dks::{brute_force_dks, brute_force_dks_with_budget, naive_dks, ValReport, DKS_BUDGET, DKS_MAX_VERTICES};
pub use oracles::{detect_via_recovery_oracle, detect_via_refutation_oracle, guess_density, RefutationBookkeeping};
pub use recovery::{amplify_minimal_to_exact, clone_count, default_vote_cutoff, top_k_degrees_recover, AmplifyReport};
pub use statistics::{
    degree_second_moment_test, expected_f, expected_f_for, expected_f_with_loops, second_moment_from_degrees, sum_test,
    sum_test_threshold, TestOutcome,
};
