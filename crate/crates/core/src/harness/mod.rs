//! Monte Carlo experiments: detection power, pushforward fidelity,
//! refutation and recovery rates, phase sweeps, and their CSV/config I/O.

mod config;
mod csv;
mod detect;
mod fidelity;
mod recover;
mod refute;
mod stats;
mod sweep;

pub use config::{Config, ExperimentConfig, ExperimentKind};
pub use csv::{read_csv, write_csv, TrialRow, CSV_HEADER};
pub use detect::{
    detection_trials, exponents, run_detection_experiment, run_trials, DetectionTest, ModelPair, PowerCurve,
};
pub use fidelity::{
    battery, compare_batteries, null_fidelity, planted_fidelity, pushforward_fidelity, split_edges, DensityCheck,
    FidelityReport, PlantedReport, ReductionSetup, StatisticCheck, BATTERY, CALIBRATION_DRAWS, TV_BINS,
};
pub use recover::{amplification_experiment, corrupted_oracle, recovery_experiment, AmplificationReport, RecoveryReport};
pub use refute::{
    first_moment_threshold, isbm_for_k_chi2, isbm_from_config, refutation_gap_experiment, RefutationReport,
    DEFAULT_LEVEL,
};
pub use stats::{binned_tv, histogram_tv, kolmogorov_tail, ks_two_sample, mean, rate_half_width, variance, KsResult};
pub use sweep::{p_for_kl, phase_sweep, SweepGrid, SweepOutput, SweepPoint};

use crate::graph::Graph;

/// Edges over `C(n, 2)`.
pub fn edge_density(g: &Graph) -> f64 {
    let n = g.n() as f64;
    if g.n() < 2 {
        return 0.0;
    }
    g.edge_count() as f64 / (n * (n - 1.0) / 2.0)
}
