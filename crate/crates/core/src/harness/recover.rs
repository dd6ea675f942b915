use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::csv::TrialRow;
use super::detect::run_trials;
use crate::algorithms::{amplify_minimal_to_exact, default_vote_cutoff, top_k_degrees_recover};
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::model::{sample_pds, PdsParams};
use crate::rng::{fork, stream};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecoveryReport {
    pub params: PdsParams,
    pub trials: usize,
    pub exact_rate: f64,
    /// Mean fraction of the planted set found.
    pub mean_overlap: f64,
}

fn overlap(guess: &[usize], truth: &[usize]) -> usize {
    guess.iter().filter(|v| truth.binary_search(v).is_ok()).count()
}

/// Exact-recovery rate of the top-`k` degree estimator on PDS draws.
pub fn recovery_experiment(params: &PdsParams, trials: usize, seed: u64) -> Result<(RecoveryReport, Vec<TrialRow>)> {
    let k = params.k;
    let hits = run_trials(trials, seed, |_, rng| {
        let g = sample_pds(params, rng)?;
        let truth = g.planted().unwrap_or(&[]).to_vec();
        Ok(overlap(&top_k_degrees_recover(&g, k), &truth))
    })?;
    let rows = hits
        .iter()
        .enumerate()
        .map(|(t, &h)| {
            let mut row = TrialRow::new("recover-topk", params.n, k, seed, t);
            row.p = Some(params.p);
            row.q = Some(params.q);
            row.statistic = h as f64 / k as f64;
            row.threshold = 1.0;
            row.decision = h == k;
            row
        })
        .collect();
    Ok((
        RecoveryReport {
            params: *params,
            trials,
            exact_rate: hits.iter().filter(|&&h| h == k).count() as f64 / trials as f64,
            mean_overlap: hits.iter().sum::<usize>() as f64 / (trials * k) as f64,
        },
        rows,
    ))
}

/// A weak oracle for tests of the voting scheme: returns `k` vertices, a
/// uniform `(1 - corruption)` share of the planted set and the rest uniform
/// from outside it.
pub fn corrupted_oracle<R: Rng + ?Sized>(graph: &Graph, k: usize, corruption: f64, rng: &mut R) -> Result<Vec<usize>> {
    let truth = graph
        .planted()
        .ok_or_else(|| Error::Oracle("the corrupted oracle needs a planted graph".into()))?;
    let n = graph.n();
    let keep = ((1.0 - corruption) * k as f64).round() as usize;
    let keep = keep.min(truth.len());
    let outside: Vec<usize> = (0..n).filter(|v| truth.binary_search(v).is_err()).collect();
    let fill = (k - keep).min(outside.len());
    let mut out: Vec<usize> = sample(rng, truth.len(), keep).into_iter().map(|i| truth[i]).collect();
    out.extend(sample(rng, outside.len(), fill).into_iter().map(|i| outside[i]));
    out.sort_unstable();
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AmplificationReport {
    pub params: PdsParams,
    pub corruption: f64,
    pub r_clones: usize,
    pub c_cut: usize,
    pub trials: usize,
    pub exact_rate: f64,
}

/// Runs [`amplify_minimal_to_exact`] with a [`corrupted_oracle`] on PDS draws.
/// `c_cut` defaults to [`default_vote_cutoff`].
pub fn amplification_experiment(
    params: &PdsParams,
    corruption: f64,
    r_clones: usize,
    c_cut: Option<usize>,
    trials: usize,
    seed: u64,
) -> Result<(AmplificationReport, Vec<TrialRow>)> {
    let (n, k) = (params.n, params.k);
    let c_cut = c_cut.unwrap_or_else(|| default_vote_cutoff(n, k));
    let exact = run_trials(trials, seed, |_, rng| {
        let g = sample_pds(params, rng)?;
        let truth = g.planted().unwrap_or(&[]).to_vec();
        let mut orng = stream(fork(rng), 0);
        let oracle = |h: &Graph| corrupted_oracle(h, k, corruption, &mut orng);
        let rep = amplify_minimal_to_exact(&g, k, params.p, params.q, oracle, r_clones, c_cut, rng)?;
        Ok(overlap(&rep.support, &truth))
    })?;
    let rows = exact
        .iter()
        .enumerate()
        .map(|(t, &h)| {
            let mut row = TrialRow::new("recover-amplify", n, k, seed, t);
            row.p = Some(params.p);
            row.q = Some(params.q);
            row.r = Some(r_clones);
            row.statistic = h as f64 / k as f64;
            row.threshold = 1.0;
            row.decision = h == k;
            row
        })
        .collect();
    Ok((
        AmplificationReport {
            params: *params,
            corruption,
            r_clones,
            c_cut,
            trials,
            exact_rate: exact.iter().filter(|&&h| h == k).count() as f64 / trials as f64,
        },
        rows,
    ))
}
