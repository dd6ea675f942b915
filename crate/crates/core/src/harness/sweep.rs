use serde::{Deserialize, Serialize};

use super::config::Config;
use super::csv::TrialRow;
use super::detect::{detection_trials, DetectionTest, ModelPair};
use super::recover::recovery_experiment;
use super::detect::run_trials;
use crate::algorithms::{brute_force_dks, kl_bernoulli};
use crate::error::{Error, Result};
use crate::model::{sample_erdos_renyi, PdsParams};

/// `p > q` with `KL(p || q) = target`, or `None` when even `p = 1` falls short.
pub fn p_for_kl(q: f64, target: f64) -> Option<f64> {
    let kl = |p: f64| kl_bernoulli(p, q).unwrap_or(f64::INFINITY);
    let top = 1.0 - 1e-12;
    if kl(top) < target {
        return None;
    }
    let (mut lo, mut hi) = (q, top);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if kl(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi))
}

/// Success rates at one `(alpha, beta)` grid point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub alpha: f64,
    pub beta: f64,
    pub k: usize,
    pub p: f64,
    /// `1 - (Type I + Type II)/2` of the sum test.
    pub sum_success: f64,
    pub degree_success: f64,
    pub recovery_rate: f64,
    /// Fraction of null draws whose densest-`k` density is below `(p+q)/2`.
    pub refutation_rate: Option<f64>,
    /// `k^2 (p-q)^2 / (n q (1-q))`.
    pub recovery_snr: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SweepOutput {
    pub points: Vec<SweepPoint>,
    pub failures: Vec<(f64, f64, String)>,
    pub rows: Vec<TrialRow>,
}

/// Grid over `k = round(n^beta)` and `KL(p || q) = n^-alpha` at fixed `n` and `q`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepGrid {
    pub n: usize,
    pub q: f64,
    pub alphas: Vec<f64>,
    pub betas: Vec<f64>,
    pub trials: usize,
    pub seed: u64,
    /// Run the exact DkS valuation when `C(n,k)` is within budget.
    pub refute: bool,
}

impl SweepGrid {
    pub fn from_config(c: &Config, trials: usize, seed: u64) -> Result<Self> {
        Ok(SweepGrid {
            n: c.require("n")?,
            q: c.get_or("q", 0.5)?,
            alphas: c.list("alphas")?.ok_or_else(|| Error::param("alphas", "missing grid axis"))?,
            betas: c.list("betas")?.ok_or_else(|| Error::param("betas", "missing grid axis"))?,
            trials,
            seed,
            refute: c.get_or("refute", true)?,
        })
    }
}

fn point(grid: &SweepGrid, index: u64, alpha: f64, beta: f64, out: &mut SweepOutput) -> Result<SweepPoint> {
    let n = grid.n;
    let nf = n as f64;
    let k = (nf.powf(beta).round() as usize).clamp(2, n);
    let p = p_for_kl(grid.q, nf.powf(-alpha))
        .ok_or_else(|| Error::Infeasible(format!("KL = n^-{alpha} needs p > 1 at q = {}", grid.q)))?;
    let pds = PdsParams::new(n, k, p, grid.q)?;
    let pair = ModelPair::Pds(pds);
    let seed = grid.seed.wrapping_add(index << 32);
    let tag = |rows: Vec<TrialRow>, out: &mut SweepOutput| {
        out.rows.extend(rows.into_iter().map(|mut r| {
            r.experiment = format!("sweep-{}", r.experiment);
            r
        }))
    };
    let (sum, rows) = detection_trials(&pair, DetectionTest::Sum, grid.trials, seed, false)?;
    tag(rows, out);
    let (deg, rows) = detection_trials(&pair, DetectionTest::DegreeSecondMoment, grid.trials, seed + 1, false)?;
    tag(rows, out);
    let (rec, rows) = recovery_experiment(&pds, grid.trials, seed + 2)?;
    tag(rows, out);
    let refutation_rate = if grid.refute {
        let threshold = (p + grid.q) / 2.0;
        let vals = run_trials(grid.trials, seed + 3, |_, rng| {
            Ok(brute_force_dks(&sample_erdos_renyi(n, grid.q, rng)?, k)?.best_density)
        });
        match vals {
            Ok(vals) => {
                for (t, &v) in vals.iter().enumerate() {
                    let mut row = TrialRow::new("sweep-refute-dks-null", n, k, seed + 3, t);
                    row.p = Some(p);
                    row.q = Some(grid.q);
                    row.statistic = v;
                    row.threshold = threshold;
                    row.decision = v < threshold;
                    out.rows.push(row);
                }
                Some(vals.iter().filter(|&&v| v < threshold).count() as f64 / vals.len() as f64)
            }
            Err(e) => {
                out.failures.push((alpha, beta, format!("refutation: {e}")));
                None
            }
        }
    } else {
        None
    };
    Ok(SweepPoint {
        alpha,
        beta,
        k,
        p,
        sum_success: 1.0 - sum.total_error() / 2.0,
        degree_success: 1.0 - deg.total_error() / 2.0,
        recovery_rate: rec.exact_rate,
        refutation_rate,
        recovery_snr: (k * k) as f64 * (p - grid.q).powi(2) / (nf * grid.q * (1.0 - grid.q)),
    })
}

/// Runs every grid point; a failing point is recorded and skipped.
pub fn phase_sweep(grid: &SweepGrid) -> SweepOutput {
    let mut out = SweepOutput::default();
    let mut index = 0u64;
    for &alpha in &grid.alphas {
        for &beta in &grid.betas {
            match point(grid, index, alpha, beta, &mut out) {
                Ok(p) => out.points.push(p),
                Err(e) => out.failures.push((alpha, beta, e.to_string())),
            }
            index += 1;
        }
    }
    out
}
