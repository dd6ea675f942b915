use serde::{Deserialize, Serialize};
use statrs::function::factorial::ln_binomial;

use super::config::Config;
use super::csv::TrialRow;
use super::detect::run_trials;
use super::stats::{ks_two_sample, KsResult};
use crate::algorithms::{brute_force_dks, DKS_MAX_VERTICES};
use crate::error::{Error, Result};
use crate::model::{isbm_params_from_gamma, sample_erdos_renyi, sample_isbm, IsbmParams};

/// Failure level of the union bound behind [`first_moment_threshold`].
pub const DEFAULT_LEVEL: f64 = 0.05;

/// `ln P(Bin(trials, p) >= t)`, summed in log space.
fn ln_binomial_tail(trials: u64, p: f64, t: u64) -> f64 {
    if t == 0 {
        return 0.0;
    }
    if t > trials {
        return f64::NEG_INFINITY;
    }
    let terms: Vec<f64> = (t..=trials)
        .map(|j| ln_binomial(trials, j) + j as f64 * p.ln() + (trials - j) as f64 * (1.0 - p).ln())
        .collect();
    let top = terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    top + terms.iter().map(|x| (x - top).exp()).sum::<f64>().ln()
}

/// Smallest edge count `t` with `C(n,k) P(Bin(C(k,2), p0) >= t) <= level`.
///
/// By the union bound the densest `k`-subgraph of `G(n, p0)` has at least
/// `t` edges with probability at most `level`, so `t / C(k,2)` is a
/// certified refutation threshold.
pub fn first_moment_threshold(n: usize, k: usize, p0: f64, level: f64) -> usize {
    let pairs = (k * k.saturating_sub(1) / 2) as u64;
    let ln_sets = ln_binomial(n as u64, k as u64);
    let ln_level = level.ln();
    (0..=pairs)
        .find(|&t| ln_sets + ln_binomial_tail(pairs, p0, t) <= ln_level)
        .unwrap_or(pairs + 1) as usize
}

/// Exact-constraint ISBM with `p11` chosen so that `k chi^2(P11, P0)` equals
/// `target`.
pub fn isbm_for_k_chi2(n: usize, r: usize, p0: f64, target: f64) -> Result<IsbmParams> {
    if target < 0.0 {
        return Err(Error::param("k_chi2", "must be nonnegative"));
    }
    let k = (n / r.max(1)) as f64;
    // p12 = (n p0 - k p11)/(n - k) stays positive below n p0 / k
    let hi = (n as f64 * p0 / k).min(1.0) - 1e-9;
    let chi = |p11: f64| k * (p11 - p0).powi(2) / (p0 * (1.0 - p0));
    if chi(hi) < target {
        return Err(Error::Infeasible(format!("k chi^2 = {target} is out of reach at n = {n}, r = {r}, p0 = {p0}")));
    }
    let (mut lo, mut up) = (p0, hi);
    for _ in 0..200 {
        let mid = 0.5 * (lo + up);
        if chi(mid) < target {
            lo = mid;
        } else {
            up = mid;
        }
    }
    IsbmParams::exact(n, r, p0, 0.5 * (lo + up))
}

/// ISBM block of a manifest: `n`, `k` and one of `gamma`, `p11` or `k_chi2`
/// (the last two with `p0`).
pub fn isbm_from_config(c: &Config) -> Result<IsbmParams> {
    let n: usize = c.require("n")?;
    let k: usize = c.require("k")?;
    if k == 0 || n % k != 0 {
        return Err(Error::param("k", "the ISBM needs k | n"));
    }
    let r = n / k;
    if let Some(g) = c.get::<f64>("gamma")? {
        return isbm_params_from_gamma(n, r, g);
    }
    let p0: f64 = c.require("p0")?;
    match (c.get::<f64>("p11")?, c.get::<f64>("k_chi2")?) {
        (Some(p11), _) => IsbmParams::exact(n, r, p0, p11),
        (None, Some(t)) => isbm_for_k_chi2(n, r, p0, t),
        _ => Err(Error::param("p11", "give gamma, p11 or k_chi2")),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RefutationReport {
    pub params: IsbmParams,
    pub k_chi2: f64,
    pub threshold_edges: usize,
    /// `threshold_edges / C(k,2)`.
    pub threshold: f64,
    pub trials: usize,
    /// Paired trials with `val(ISBM) >= threshold > val(null)`.
    pub separation_rate: f64,
    pub planted_above: f64,
    pub null_below: f64,
    /// KS comparison of the two valuation samples.
    pub ks: KsResult,
}

/// Paired ISBM and `G(n, P0)` draws, each valued by the exact densest
/// `k`-subgraph density and compared with the first-moment threshold.
pub fn refutation_gap_experiment(
    params: &IsbmParams,
    trials: usize,
    seed: u64,
    level: f64,
) -> Result<(RefutationReport, Vec<TrialRow>)> {
    let (n, k) = (params.n, params.k);
    if n > DKS_MAX_VERTICES {
        return Err(Error::param("n", format!("exact valuation supports n <= {DKS_MAX_VERTICES}")));
    }
    let t = first_moment_threshold(n, k, params.p0, level);
    let pairs = k * (k - 1) / 2;
    let threshold = t as f64 / pairs as f64;
    let vals = run_trials(trials, seed, |_, rng| {
        let h1 = sample_isbm(params, rng)?;
        let h0 = sample_erdos_renyi(n, params.p0, rng)?;
        Ok((brute_force_dks(&h1, k)?.best_edges, brute_force_dks(&h0, k)?.best_edges))
    })?;
    let mut rows = Vec::with_capacity(2 * trials);
    for (trial, &(e1, e0)) in vals.iter().enumerate() {
        for (label, e) in [("planted", e1), ("null", e0)] {
            let mut row = TrialRow::new(format!("refute-dks-{label}"), n, k, seed, trial);
            row.p = Some(params.p11);
            row.q = Some(params.p22);
            row.p0 = Some(params.p0);
            row.gamma = Some(params.p11 - params.p0);
            row.r = Some(params.r);
            row.statistic = e as f64 / pairs as f64;
            row.threshold = threshold;
            row.decision = e >= t;
            rows.push(row);
        }
    }
    let frac = |f: &dyn Fn(&(usize, usize)) -> bool| vals.iter().filter(|v| f(v)).count() as f64 / trials as f64;
    let v1: Vec<f64> = vals.iter().map(|v| v.0 as f64).collect();
    let v0: Vec<f64> = vals.iter().map(|v| v.1 as f64).collect();
    Ok((
        RefutationReport {
            params: *params,
            k_chi2: params.k_chi2(),
            threshold_edges: t,
            threshold,
            trials,
            separation_rate: frac(&|v| v.0 >= t && v.1 < t),
            planted_above: frac(&|v| v.0 >= t),
            null_below: frac(&|v| v.1 < t),
            ks: ks_two_sample(&v1, &v0),
        },
        rows,
    ))
}
