use std::str::FromStr;
use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{Config, ExperimentConfig};
use super::csv::TrialRow;
use super::edge_density;
use super::stats::rate_half_width;
use crate::algorithms::{
    brute_force_dks, degree_second_moment_test, detect_via_recovery_oracle, guess_density, kl_bernoulli, sum_test,
    top_k_degrees_recover, TestOutcome,
};
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::model::{
    isbm_params_from_gamma, sample_erdos_renyi, sample_isbm, sample_pds, Hypothesis, IsbmParams, PdsParams,
    PdsStarParams,
};
use crate::rng::{stream, SimRng};

/// Runs `f(trial, rng)` for every trial on its own stream, in parallel, and
/// returns the results in trial order.
pub fn run_trials<T, F>(trials: usize, seed: u64, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize, &mut SimRng) -> Result<T> + Sync,
{
    (0..trials)
        .into_par_iter()
        .map(|t| f(t, &mut stream(seed, t as u64)))
        .collect()
}

/// The hypothesis pair being tested.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "kebab-case")]
pub enum ModelPair {
    /// `G(n, q)` against `PDS(n, k, p, q)`.
    Pds(PdsParams),
    /// `G(n, p0)` against `PDS(n, k, p, q)` with matched edge count.
    PdsStar(PdsStarParams),
    /// `G(n, p0)` against the imbalanced SBM.
    Isbm(IsbmParams),
}

impl ModelPair {
    pub fn from_config(c: &Config) -> Result<Self> {
        let model: String = c.get_or("model", "pds".to_string())?;
        let n: usize = c.require("n")?;
        let k: usize = c.require("k")?;
        match model.as_str() {
            "pds" => Ok(ModelPair::Pds(PdsParams::new(n, k, c.require("p")?, c.require("q")?)?)),
            "pds-star" => {
                let q: f64 = c.require("q")?;
                let gamma = match c.get::<f64>("gamma")? {
                    Some(g) => g,
                    None => (c.require::<f64>("p")? - q) * (k * k) as f64 / (n * n) as f64,
                };
                Ok(ModelPair::PdsStar(PdsStarParams::from_gamma(n, k, q, gamma)?))
            }
            "isbm" => {
                if n % k != 0 {
                    return Err(Error::param("k", "ISBM needs k | n"));
                }
                let r = n / k;
                match (c.get::<f64>("gamma")?, c.get::<f64>("p0")?, c.get::<f64>("p11")?) {
                    (Some(g), _, _) => Ok(ModelPair::Isbm(isbm_params_from_gamma(n, r, g)?)),
                    (None, Some(p0), Some(p11)) => Ok(ModelPair::Isbm(IsbmParams::exact(n, r, p0, p11)?)),
                    _ => Err(Error::param("gamma", "ISBM needs gamma, or p0 and p11")),
                }
            }
            other => Err(Error::param("model", format!("unknown model `{other}`"))),
        }
    }

    pub fn n(&self) -> usize {
        match self {
            ModelPair::Pds(p) => p.n,
            ModelPair::PdsStar(p) => p.base.n,
            ModelPair::Isbm(p) => p.n,
        }
    }

    pub fn k(&self) -> usize {
        match self {
            ModelPair::Pds(p) => p.k,
            ModelPair::PdsStar(p) => p.base.k,
            ModelPair::Isbm(p) => p.k,
        }
    }

    /// `(p, q)` of the planted side; for the ISBM, `(P11, P22)`.
    pub fn densities(&self) -> (f64, f64) {
        match self {
            ModelPair::Pds(p) => (p.p, p.q),
            ModelPair::PdsStar(p) => (p.base.p, p.base.q),
            ModelPair::Isbm(p) => (p.p11, p.p22),
        }
    }

    pub fn null_density(&self) -> f64 {
        match self {
            ModelPair::Pds(p) => p.q,
            ModelPair::PdsStar(p) => p.p0,
            ModelPair::Isbm(p) => p.p0,
        }
    }

    pub fn gamma(&self) -> Option<f64> {
        match self {
            ModelPair::Pds(_) => None,
            ModelPair::PdsStar(p) => Some(p.gamma),
            ModelPair::Isbm(p) => Some(p.p11 - p.p0),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, hypothesis: Hypothesis, rng: &mut R) -> Result<Graph> {
        match (self, hypothesis) {
            (_, Hypothesis::Null) => sample_erdos_renyi(self.n(), self.null_density(), rng),
            (ModelPair::Pds(p), Hypothesis::Planted) => sample_pds(p, rng),
            (ModelPair::PdsStar(p), Hypothesis::Planted) => sample_pds(&p.base, rng),
            (ModelPair::Isbm(p), Hypothesis::Planted) => sample_isbm(p, rng),
        }
    }

    /// PDS* view used by the degree statistic: for a plain PDS pair the null
    /// density is `q`.
    pub fn as_pds_star(&self) -> PdsStarParams {
        match self {
            ModelPair::Pds(p) => PdsStarParams {
                base: *p,
                gamma: 0.0,
                p0: p.q,
            },
            ModelPair::PdsStar(p) => *p,
            ModelPair::Isbm(p) => PdsStarParams {
                base: PdsParams {
                    n: p.n,
                    k: p.k,
                    p: p.p11,
                    q: p.p22,
                },
                gamma: p.p11 - p.p0,
                p0: p.p0,
            },
        }
    }

    fn tag(&self, row: &mut TrialRow) {
        let (p, q) = self.densities();
        row.p = Some(p);
        row.q = Some(q);
        row.p0 = Some(self.null_density());
        row.gamma = self.gamma();
        if let ModelPair::Isbm(i) = self {
            row.r = Some(i.r);
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DetectionTest {
    Sum,
    DegreeSecondMoment,
    /// Density of the top-`k` degree set against `(p+q)/2`.
    RecoveryOracle,
    /// Exact densest-`k` value against a fixed threshold.
    Dks { threshold: f64 },
    Constant(bool),
}

impl FromStr for DetectionTest {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "sum" => DetectionTest::Sum,
            "degree" | "degree-second-moment" => DetectionTest::DegreeSecondMoment,
            "recovery-oracle" => DetectionTest::RecoveryOracle,
            "constant0" => DetectionTest::Constant(false),
            "constant1" => DetectionTest::Constant(true),
            other => {
                if let Some(t) = other.strip_prefix("dks:") {
                    let threshold = t.parse().map_err(|_| Error::param("test", "dks:<threshold>"))?;
                    DetectionTest::Dks { threshold }
                } else {
                    return Err(Error::param("test", format!("unknown test `{other}`")));
                }
            }
        })
    }
}

impl DetectionTest {
    pub fn name(&self) -> String {
        match self {
            DetectionTest::Sum => "sum".into(),
            DetectionTest::DegreeSecondMoment => "degree".into(),
            DetectionTest::RecoveryOracle => "recovery-oracle".into(),
            DetectionTest::Dks { .. } => "dks".into(),
            DetectionTest::Constant(b) => format!("constant{}", u8::from(*b)),
        }
    }

    pub fn apply(&self, graph: &Graph, pair: &ModelPair) -> Result<TestOutcome> {
        let (n, k) = (pair.n(), pair.k());
        let (p, q) = pair.densities();
        Ok(match self {
            DetectionTest::Sum => sum_test(graph, n, k, p, q),
            DetectionTest::DegreeSecondMoment => degree_second_moment_test(graph, &pair.as_pds_star()),
            DetectionTest::RecoveryOracle => {
                let oracle = |g: &Graph| Ok(top_k_degrees_recover(g, k));
                let decision = detect_via_recovery_oracle(graph, oracle, p, q)?;
                let density = guess_density(graph, &top_k_degrees_recover(graph, k));
                TestOutcome {
                    statistic: density,
                    threshold: (p + q) / 2.0,
                    decision,
                }
            }
            DetectionTest::Dks { threshold } => {
                TestOutcome::new(brute_force_dks(graph, k)?.best_density, *threshold)
            }
            DetectionTest::Constant(b) => TestOutcome {
                statistic: f64::from(u8::from(*b)),
                threshold: 0.5,
                decision: *b,
            },
        })
    }
}

/// Aggregated errors of one grid point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PowerCurve {
    pub test: String,
    pub n: usize,
    pub k: usize,
    pub trials: usize,
    pub type1: f64,
    pub type2: f64,
    pub power: f64,
    pub type1_half_width: f64,
    pub type2_half_width: f64,
    /// `-log KL(p || q) / log n`.
    pub alpha_hat: f64,
    /// `log k / log n`.
    pub beta_hat: f64,
}

impl PowerCurve {
    pub fn total_error(&self) -> f64 {
        self.type1 + self.type2
    }

    /// Recomputes the aggregate from persisted rows of one test.
    pub fn from_rows(test: &str, rows: &[TrialRow], alpha_hat: f64, beta_hat: f64) -> Self {
        let null: Vec<&TrialRow> = rows.iter().filter(|r| r.experiment.ends_with("-null")).collect();
        let alt: Vec<&TrialRow> = rows.iter().filter(|r| r.experiment.ends_with("-planted")).collect();
        let rate = |v: &[&TrialRow]| v.iter().filter(|r| r.decision).count() as f64 / v.len().max(1) as f64;
        let type1 = rate(&null);
        let power = rate(&alt);
        let (n, k) = rows.first().map(|r| (r.n, r.k)).unwrap_or((0, 0));
        PowerCurve {
            test: test.to_string(),
            n,
            k,
            trials: null.len(),
            type1,
            type2: 1.0 - power,
            power,
            type1_half_width: rate_half_width(type1, null.len().max(1)),
            type2_half_width: rate_half_width(power, alt.len().max(1)),
            alpha_hat,
            beta_hat,
        }
    }
}

/// `(alpha_hat, beta_hat)` of a model pair.
pub fn exponents(pair: &ModelPair) -> (f64, f64) {
    let (p, q) = pair.densities();
    let ln_n = (pair.n() as f64).ln();
    let alpha = kl_bernoulli(p.min(1.0 - 1e-12), q).map(|kl| -kl.ln() / ln_n).unwrap_or(f64::NAN);
    (alpha, (pair.k() as f64).ln() / ln_n)
}

/// Paired null/planted trials of one test.
pub fn run_detection_experiment(config: &ExperimentConfig) -> Result<(PowerCurve, Vec<TrialRow>)> {
    let pair = ModelPair::from_config(&config.params)?;
    let test: DetectionTest = config.params.get_or("test", "sum".to_string())?.parse()?;
    detection_trials(&pair, test, config.trials, config.seed, config.record_runtime)
}

pub fn detection_trials(
    pair: &ModelPair,
    test: DetectionTest,
    trials: usize,
    seed: u64,
    record_runtime: bool,
) -> Result<(PowerCurve, Vec<TrialRow>)> {
    let name = test.name();
    let per_trial = run_trials(trials, seed, |t, rng| {
        let mut rows = Vec::with_capacity(2);
        for hypothesis in [Hypothesis::Null, Hypothesis::Planted] {
            let start = Instant::now();
            let g = pair.sample(hypothesis, rng)?;
            let out = test.apply(&g, pair)?;
            let label = match hypothesis {
                Hypothesis::Null => "null",
                Hypothesis::Planted => "planted",
            };
            let mut row = TrialRow::new(format!("detect-{name}-{label}"), pair.n(), pair.k(), seed, t);
            pair.tag(&mut row);
            row.statistic = out.statistic;
            row.threshold = out.threshold;
            row.decision = out.decision;
            row.density = Some(edge_density(&g));
            if record_runtime {
                row.runtime_ms = Some(start.elapsed().as_secs_f64() * 1e3);
            }
            rows.push(row);
        }
        Ok(rows)
    })?;
    let rows: Vec<TrialRow> = per_trial.into_iter().flatten().collect();
    let (a, b) = exponents(pair);
    Ok((PowerCurve::from_rows(&name, &rows, a, b), rows))
}
