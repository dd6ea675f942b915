use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::Config;
use super::stats::{binned_tv, kolmogorov_tail, ks_two_sample, KsResult};
use crate::design::calibrate_c_hat;
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::model::{sample_erdos_renyi, sample_kpc, KpcParams};
use crate::reductions::{
    derive_isbm_params, derive_pds_star_params, PreparedReduction, ReductionParams, RotationOptions, TargetModel,
};
use crate::rng::{stream, SimRng};

/// Names of the summary statistics, in battery order.
pub const BATTERY: [&str; 5] = ["edge_count", "degree_variance", "triangle_count", "max_degree", "four_cycle_count"];

/// Bins of the edge-count TV estimate.
pub const TV_BINS: usize = 10;

/// Draws for the design calibration when a manifest leaves `c_hat` out.
pub const CALIBRATION_DRAWS: usize = 200;

pub fn battery(g: &Graph) -> [f64; 5] {
    [
        g.edge_count() as f64,
        g.degree_variance(),
        g.triangle_count() as f64,
        g.max_degree() as f64,
        g.four_cycle_count() as f64,
    ]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StatisticCheck {
    pub name: String,
    pub ks: KsResult,
    pub pass: bool,
}

/// Two-sample comparison of a pipeline against its target generator.
///
/// `edge_count_tv` is a plug-in estimate on a coarse marginal, so it is
/// evidence against large distances, not a measurement of the full one.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FidelityReport {
    pub runs: usize,
    pub significance: f64,
    /// Per-statistic level after the Bonferroni correction.
    pub corrected: f64,
    pub checks: Vec<StatisticCheck>,
    pub edge_count_tv: f64,
}

impl FidelityReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn failures(&self) -> usize {
        self.checks.iter().filter(|c| !c.pass).count()
    }

    pub fn check(&self, name: &str) -> Option<&StatisticCheck> {
        self.checks.iter().find(|c| c.name == name)
    }
}

/// Smallest KS p-value reachable with `runs` samples per side.
fn min_p_value(runs: usize) -> f64 {
    let root = (runs as f64 / 2.0).sqrt();
    kolmogorov_tail(root + 0.12 + 0.11 / root)
}

pub fn compare_batteries(a: &[[f64; 5]], b: &[[f64; 5]], significance: f64) -> FidelityReport {
    let corrected = significance / BATTERY.len() as f64;
    let checks = BATTERY
        .iter()
        .enumerate()
        .map(|(s, name)| {
            let xa: Vec<f64> = a.iter().map(|v| v[s]).collect();
            let xb: Vec<f64> = b.iter().map(|v| v[s]).collect();
            let ks = ks_two_sample(&xa, &xb);
            StatisticCheck {
                name: name.to_string(),
                ks,
                pass: ks.p_value >= corrected,
            }
        })
        .collect();
    let ea: Vec<f64> = a.iter().map(|v| v[0]).collect();
    let eb: Vec<f64> = b.iter().map(|v| v[0]).collect();
    FidelityReport {
        runs: a.len(),
        significance,
        corrected,
        checks,
        edge_count_tv: binned_tv(&ea, &eb, TV_BINS),
    }
}

/// Runs `pipeline` and `target` `runs` times each on independent streams and
/// compares the battery. Trial `t` of each side uses its own stream, so the
/// report does not depend on the worker count.
pub fn pushforward_fidelity<P, T>(runs: usize, seed: u64, significance: f64, pipeline: P, target: T) -> Result<FidelityReport>
where
    P: Fn(&mut SimRng) -> Result<Graph> + Sync,
    T: Fn(&mut SimRng) -> Result<Graph> + Sync,
{
    if !(significance > 0.0 && significance < 1.0) {
        return Err(Error::param("significance", "must lie in (0, 1)"));
    }
    if runs < 2 || min_p_value(runs) >= significance / BATTERY.len() as f64 {
        return Err(Error::param(
            "trials",
            format!("{runs} runs cannot reach the corrected level {}", significance / BATTERY.len() as f64),
        ));
    }
    let side = |tag: u64, f: &(dyn Fn(&mut SimRng) -> Result<Graph> + Sync)| -> Result<Vec<[f64; 5]>> {
        (0..runs)
            .into_par_iter()
            .map(|t| f(&mut stream(seed, 2 * t as u64 + tag)).map(|g| battery(&g)))
            .collect()
    };
    let a = side(0, &pipeline)?;
    let b = side(1, &target)?;
    Ok(compare_batteries(&a, &b, significance))
}

/// A k-PC pipeline as read from a manifest.
#[derive(Clone, Debug)]
pub struct ReductionSetup {
    pub kpc: KpcParams,
    pub prepared: PreparedReduction<f64>,
    pub options: RotationOptions,
}

impl ReductionSetup {
    /// Keys: `N`, `k0`, `p`, `q`, `r`, optional `alpha` (0), `c_hat`
    /// (calibrated if absent), `target` (`pds-star` or `isbm`), `p0`
    /// (densification target), `whitening` (true).
    pub fn from_config(c: &Config, seed: u64) -> Result<Self> {
        let source_n: usize = c.require("N")?;
        let k0: usize = c.require("k0")?;
        let p: f64 = c.get_or("p", 1.0)?;
        let q: f64 = c.get_or("q", 0.5)?;
        let r: usize = c.require("r")?;
        let alpha: f64 = c.get_or("alpha", 0.0)?;
        let target = match c.get_or("target", "pds-star".to_string())?.as_str() {
            "pds-star" => TargetModel::PdsStar,
            "isbm" => TargetModel::Isbm,
            other => return Err(Error::param("target", format!("unknown target `{other}`"))),
        };
        let mut rng = stream(seed, u64::MAX);
        let c_hat = match c.get::<f64>("c_hat")? {
            Some(v) => v,
            None => {
                let m = ReductionParams::block_side(source_n, k0, r, p, q)?;
                calibrate_c_hat(m, r, CALIBRATION_DRAWS, &mut rng)?
            }
        };
        let params = match target {
            TargetModel::PdsStar => derive_pds_star_params(source_n, k0, p, q, r, alpha, c_hat)?,
            TargetModel::Isbm => derive_isbm_params(source_n, k0, p, q, r, alpha, c_hat)?,
        }
        .with_target_p0(c.get("p0")?)?;
        let prepared = PreparedReduction::prepare(params, &mut rng)?;
        Ok(ReductionSetup {
            kpc: KpcParams::contiguous(source_n, k0, p, q)?,
            prepared,
            options: RotationOptions {
                whitening: c.get_or("whitening", true)?,
            },
        })
    }

    /// Maps a fresh `G(N, q)` draw.
    pub fn null_run(&self, rng: &mut SimRng) -> Result<Graph> {
        let g = sample_erdos_renyi(self.kpc.n, self.kpc.q, rng)?;
        Ok(self.prepared.run(&g, &self.kpc, self.options, rng)?.0)
    }

    /// Maps a fresh k-PC draw; the output carries its planted support.
    pub fn planted_run(&self, rng: &mut SimRng) -> Result<Graph> {
        let g = sample_kpc(&self.kpc, rng)?;
        Ok(self.prepared.run(&g, &self.kpc, self.options, rng)?.0)
    }
}

/// Null pushforward against `G(n, p0)` with `p0` the output null density.
pub fn null_fidelity(setup: &ReductionSetup, runs: usize, seed: u64, significance: f64) -> Result<FidelityReport> {
    let n = setup.prepared.params.n;
    let p0 = setup.prepared.params.null_density();
    pushforward_fidelity(
        runs,
        seed,
        significance,
        |rng| setup.null_run(rng),
        |rng| sample_erdos_renyi(n, p0, rng),
    )
}

/// Pooled densities of planted outputs against their predicted values.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlantedReport {
    pub runs: usize,
    pub support_sizes_ok: bool,
    pub expected_size: usize,
    pub inside: DensityCheck,
    /// Pairs with exactly one endpoint in the support.
    pub cross: DensityCheck,
    /// Pairs with no endpoint in the support.
    pub outside: DensityCheck,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityCheck {
    pub observed: f64,
    pub expected: f64,
    pub pairs: u64,
    /// `|observed - expected|` in Monte Carlo standard deviations.
    pub z: f64,
}

impl DensityCheck {
    fn new(edges: u64, pairs: u64, expected: f64) -> Self {
        let observed = edges as f64 / pairs as f64;
        let sd = (expected * (1.0 - expected) / pairs as f64).sqrt();
        DensityCheck {
            observed,
            expected,
            pairs,
            z: (observed - expected).abs() / sd,
        }
    }

    pub fn within(&self, sigmas: f64) -> bool {
        self.z <= sigmas
    }
}

impl PlantedReport {
    pub fn pass(&self, sigmas: f64) -> bool {
        self.support_sizes_ok && self.inside.within(sigmas) && self.cross.within(sigmas) && self.outside.within(sigmas)
    }
}

/// Counts `(inside, cross, outside)` edges of `g` relative to `support`.
pub fn split_edges(g: &Graph, support: &[usize]) -> [u64; 3] {
    let mut mark = vec![false; g.n()];
    for &v in support {
        mark[v] = true;
    }
    let mut c = [0u64; 3];
    for (u, v) in g.edges() {
        c[2 - (usize::from(mark[u]) + usize::from(mark[v]))] += 1;
    }
    c
}

/// Runs the pipeline on planted inputs and compares the block densities with
/// the predicted `(P11, P12, P22)`; for PDS* these are `(P1, P2, P2)`.
pub fn planted_fidelity(setup: &ReductionSetup, runs: usize, seed: u64) -> Result<PlantedReport> {
    let params = &setup.prepared.params;
    let (n, k) = (params.n as u64, params.k);
    let per_run: Vec<(bool, [u64; 3])> = (0..runs)
        .into_par_iter()
        .map(|t| {
            let g = setup.planted_run(&mut stream(seed, t as u64))?;
            let support = g.planted().unwrap_or(&[]);
            Ok((support.len() == k, split_edges(&g, support)))
        })
        .collect::<Result<_>>()?;
    let mut totals = [0u64; 3];
    for (_, c) in &per_run {
        for (t, x) in totals.iter_mut().zip(c) {
            *t += x;
        }
    }
    let expected = match params.target {
        TargetModel::PdsStar => (params.p1(), params.p2(), params.p2()),
        TargetModel::Isbm => params.isbm_densities(),
    };
    let kk = k as u64;
    let r = runs as u64;
    Ok(PlantedReport {
        runs,
        support_sizes_ok: per_run.iter().all(|(ok, _)| *ok),
        expected_size: k,
        inside: DensityCheck::new(totals[0], r * kk * (kk - 1) / 2, params.densified(expected.0)),
        cross: DensityCheck::new(totals[1], r * kk * (n - kk), params.densified(expected.1)),
        outside: DensityCheck::new(totals[2], r * (n - kk) * (n - kk - 1) / 2, params.densified(expected.2)),
    })
}
