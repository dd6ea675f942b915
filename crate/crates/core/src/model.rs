//! Parameter records and instance generators for the planted models.
//!
//! Densities are `f64` throughout. Every generator takes its randomness from
//! the caller, so a fixed stream always yields the same instance.

use rand::seq::index::sample as sample_indices;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{check_density, check_open_density, Error, Result};
use crate::graph::Graph;
use crate::linalg::DenseMatrix;
use crate::scalar::{clamp_prob, normal_cdf};

/// Default absolute tolerance on the ISBM degree constraints.
pub const ISBM_TOLERANCE: f64 = 1e-6;

/// Tolerance on the PDS* mean-matching identity.
pub const PDS_STAR_TOLERANCE: f64 = 1e-12;

/// One Bernoulli draw. The density is clamped away from 0 and 1 first.
#[inline]
pub fn bern<R: Rng + ?Sized>(rng: &mut R, p: f64) -> bool {
    rng.random::<f64>() < clamp_prob(p)
}

/// Uniform `k`-subset of `0..n`, sorted.
pub fn uniform_subset<R: Rng + ?Sized>(rng: &mut R, n: usize, k: usize) -> Vec<usize> {
    let mut s = sample_indices(rng, n, k).into_vec();
    s.sort_unstable();
    s
}

fn membership(n: usize, set: &[usize]) -> Vec<bool> {
    let mut m = vec![false; n];
    for &v in set {
        m[v] = true;
    }
    m
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Hypothesis {
    Null,
    Planted,
}

/// Planted dense subgraph: `k` vertices at density `p` inside `G(n, q)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PdsParams {
    pub n: usize,
    pub k: usize,
    pub p: f64,
    pub q: f64,
}

impl PdsParams {
    /// Checks `1 <= k <= n`, both densities in `[0, 1]` and `q <= p`.
    ///
    /// Equality `p = q` is allowed: it is the degenerate alternative used as a
    /// sanity point by the tests.
    pub fn new(n: usize, k: usize, p: f64, q: f64) -> Result<Self> {
        let params = PdsParams { n, k, p, q };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::param("k", "planted size must be at least 1"));
        }
        if self.k > self.n {
            return Err(Error::param("k", format!("k = {} exceeds n = {}", self.k, self.n)));
        }
        check_density("p", self.p)?;
        check_density("q", self.q)?;
        if self.q > self.p {
            return Err(Error::param("q", format!("q = {} exceeds p = {}", self.q, self.p)));
        }
        Ok(())
    }

    pub fn pairs(&self) -> f64 {
        choose2(self.n)
    }

    pub fn planted_pairs(&self) -> f64 {
        choose2(self.k)
    }
}

#[inline]
pub(crate) fn choose2(n: usize) -> f64 {
    let n = n as f64;
    n * (n - 1.0) / 2.0
}

/// Planted clique with a known partition and one clique vertex per part.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KpcParams {
    pub n: usize,
    pub k0: usize,
    pub p: f64,
    pub q: f64,
    pub partition: Vec<Vec<usize>>,
}

impl KpcParams {
    /// Partition into contiguous runs `[i N/k0, (i+1) N/k0)`.
    pub fn contiguous(n: usize, k0: usize, p: f64, q: f64) -> Result<Self> {
        if k0 == 0 || n % k0 != 0 {
            return Err(Error::param("k0", format!("k0 = {k0} must divide N = {n}")));
        }
        let part = n / k0;
        let partition = (0..k0).map(|i| (i * part..(i + 1) * part).collect()).collect();
        Self::with_partition(n, k0, p, q, partition)
    }

    pub fn with_partition(
        n: usize,
        k0: usize,
        p: f64,
        q: f64,
        partition: Vec<Vec<usize>>,
    ) -> Result<Self> {
        let params = KpcParams { n, k0, p, q, partition };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        check_density("p", self.p)?;
        check_density("q", self.q)?;
        if self.q > self.p {
            return Err(Error::param("q", "ambient density exceeds clique density"));
        }
        if self.k0 == 0 || self.n % self.k0 != 0 || self.partition.len() != self.k0 {
            return Err(Error::param("partition", "need k0 parts with k0 dividing N"));
        }
        let size = self.n / self.k0;
        let mut seen = vec![false; self.n];
        for part in &self.partition {
            if part.len() != size {
                return Err(Error::param("partition", format!("part of size {} != {size}", part.len())));
            }
            for &v in part {
                if v >= self.n || seen[v] {
                    return Err(Error::param("partition", format!("vertex {v} repeated or out of range")));
                }
                seen[v] = true;
            }
        }
        Ok(())
    }

    pub fn part_size(&self) -> usize {
        self.n / self.k0
    }

    /// The same model viewed as PDS with a uniform support (the other clique prior).
    pub fn as_uniform_pds(&self) -> PdsParams {
        PdsParams {
            n: self.n,
            k: self.k0,
            p: self.p,
            q: self.q,
        }
    }
}

/// PDS against the mean-corrected null `G(n, p0)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PdsStarParams {
    pub base: PdsParams,
    pub gamma: f64,
    pub p0: f64,
}

impl PdsStarParams {
    /// Builds the pair from `(n, k, q, gamma)`, choosing `p = q + gamma n^2/k^2`.
    pub fn from_gamma(n: usize, k: usize, q: f64, gamma: f64) -> Result<Self> {
        let ratio = (n as f64 / k as f64).powi(2);
        let base = PdsParams::new(n, k, q + gamma * ratio, q)?;
        pds_star_null(base, gamma)
    }

    /// Expected edge count under either hypothesis.
    pub fn expected_edges(&self, hypothesis: Hypothesis) -> f64 {
        let b = &self.base;
        match hypothesis {
            Hypothesis::Null => self.p0 * b.pairs(),
            Hypothesis::Planted => b.q * b.pairs() + (b.p - b.q) * b.planted_pairs(),
        }
    }
}

/// Computes `p0 = q + gamma` and checks `p0 = p - (n^2/k^2 - 1) gamma`.
pub fn pds_star_null(base: PdsParams, gamma: f64) -> Result<PdsStarParams> {
    base.validate()?;
    let p0 = base.q + gamma;
    let ratio = (base.n as f64 / base.k as f64).powi(2);
    let other = base.p - (ratio - 1.0) * gamma;
    let residual = (p0 - other).abs();
    if residual > PDS_STAR_TOLERANCE {
        return Err(Error::ConstraintViolation {
            residual,
            tolerance: PDS_STAR_TOLERANCE,
        });
    }
    check_open_density("p0", p0)?;
    Ok(PdsStarParams { base, gamma, p0 })
}

/// Two-community imbalanced SBM with matched degrees.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IsbmParams {
    pub n: usize,
    pub k: usize,
    pub r: usize,
    pub p11: f64,
    pub p12: f64,
    pub p22: f64,
    pub p0: f64,
    pub tolerance: f64,
}

impl IsbmParams {
    pub fn new(n: usize, r: usize, p11: f64, p12: f64, p22: f64, p0: f64, tolerance: f64) -> Result<Self> {
        if r < 2 || n % r != 0 {
            return Err(Error::param("r", format!("r = {r} must be >= 2 and divide n = {n}")));
        }
        let params = IsbmParams {
            n,
            k: n / r,
            r,
            p11,
            p12,
            p22,
            p0,
            tolerance,
        };
        params.validate()?;
        Ok(params)
    }

    /// Exact-constraint parameters: given `p0` and `p11`, solve the two
    /// degree constraints for `p12` and `p22`.
    pub fn exact(n: usize, r: usize, p0: f64, p11: f64) -> Result<Self> {
        let k = (n / r.max(1)) as f64;
        let nf = n as f64;
        let p12 = (nf * p0 - k * p11) / (nf - k);
        let p22 = (nf * p0 - k * p12) / (nf - k);
        Self::new(n, r, p11, p12, p22, p0, ISBM_TOLERANCE)
    }

    /// Largest violation of the two degree constraints, per vertex and
    /// normalised by `n` (so it is on the density scale).
    pub fn residual(&self) -> f64 {
        let (n, k) = (self.n as f64, self.k as f64);
        let inside = (k * self.p11 + (n - k) * self.p12) / n;
        let outside = (k * self.p12 + (n - k) * self.p22) / n;
        (self.p0 - inside).abs().max((self.p0 - outside).abs())
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("p11", self.p11), ("p12", self.p12), ("p22", self.p22), ("p0", self.p0)] {
            check_open_density(name, v)?;
        }
        let residual = self.residual();
        if residual > self.tolerance {
            return Err(Error::ConstraintViolation {
                residual,
                tolerance: self.tolerance,
            });
        }
        Ok(())
    }

    /// Chi-square divergence between the inner density and the null.
    pub fn k_chi2(&self) -> f64 {
        self.k as f64 * (self.p11 - self.p0).powi(2) / (self.p0 * (1.0 - self.p0))
    }
}

/// Gaussian-CDF parametrisation of the ISBM densities at signal `gamma`.
///
/// `P0` is the mean of the two degree constraints, so the declared tolerance
/// is half their gap. The tolerance is widened to `4 gamma^3 / r^2` when that
/// is larger than the default, which bounds the cubic Taylor remainder.
pub fn isbm_params_from_gamma(n: usize, r: usize, gamma: f64) -> Result<IsbmParams> {
    if r < 2 || n % r != 0 {
        return Err(Error::param("r", format!("r = {r} must be >= 2 and divide n = {n}")));
    }
    let rf = r as f64;
    let r2 = rf * rf;
    let p11 = normal_cdf((rf - 1.0).powi(2) * gamma / r2);
    let p12 = normal_cdf(-(rf - 1.0) * gamma / r2);
    let p22 = normal_cdf(gamma / r2);
    let (nf, kf) = (n as f64, (n / r) as f64);
    let inside = (kf * p11 + (nf - kf) * p12) / nf;
    let outside = (kf * p12 + (nf - kf) * p22) / nf;
    let p0 = (inside + outside) / 2.0;
    let tolerance = ISBM_TOLERANCE.max(4.0 * gamma.abs().powi(3) / r2);
    IsbmParams::new(n, r, p11, p12, p22, p0, tolerance)
}

/// Gaussian biclustering: `N(0,1)^{n x n} + mu 1_S 1_T^T`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BcParams {
    pub n: usize,
    pub k: usize,
    pub mu: f64,
}

impl BcParams {
    pub fn new(n: usize, k: usize, mu: f64) -> Result<Self> {
        if k == 0 || k > n {
            return Err(Error::param("k", format!("need 1 <= k <= n, got k = {k}, n = {n}")));
        }
        if !(mu >= 0.0) {
            return Err(Error::param("mu", "mean must be nonnegative"));
        }
        Ok(BcParams { n, k, mu })
    }
}

#[derive(Clone, Debug)]
pub struct Bicluster {
    pub matrix: DenseMatrix<f64>,
    pub rows: Vec<usize>,
    pub cols: Vec<usize>,
}

/// Biased sparse PCA: `N(0, I_d + theta v v^T)^{n}` with a sign-biased `v`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BspcaParams {
    pub n: usize,
    pub d: usize,
    pub k: usize,
    pub theta: f64,
    pub delta: f64,
}

impl BspcaParams {
    pub fn new(n: usize, d: usize, k: usize, theta: f64, delta: f64) -> Result<Self> {
        if k == 0 || k > d {
            return Err(Error::param("k", format!("need 1 <= k <= d, got k = {k}, d = {d}")));
        }
        if !(theta >= 0.0) {
            return Err(Error::param("theta", "spike strength must be nonnegative"));
        }
        if !(delta >= 0.0) {
            return Err(Error::param("delta", "bias margin must be nonnegative"));
        }
        let params = BspcaParams { n, d, k, theta, delta };
        if params.admissible_positive_counts().is_empty() {
            return Err(Error::Infeasible(format!(
                "no positive-entry count c in 0..={k} has |c - k/2| > {delta} k"
            )));
        }
        Ok(params)
    }

    /// Counts `c` of positive entries with `|c - k/2| > delta k`.
    pub fn admissible_positive_counts(&self) -> Vec<usize> {
        let half = self.k as f64 / 2.0;
        let margin = self.delta * self.k as f64;
        (0..=self.k).filter(|&c| (c as f64 - half).abs() > margin).collect()
    }
}

#[derive(Clone, Debug)]
pub struct BspcaSample {
    /// One sample per row, `n x d`.
    pub samples: DenseMatrix<f64>,
    pub v: Vec<f64>,
}

pub fn sample_erdos_renyi<R: Rng + ?Sized>(n: usize, q: f64, rng: &mut R) -> Result<Graph> {
    check_density("q", q)?;
    Ok(Graph::from_fn(n, |_, _| bern(rng, q)))
}

pub fn sample_pds<R: Rng + ?Sized>(params: &PdsParams, rng: &mut R) -> Result<Graph> {
    params.validate()?;
    let support = uniform_subset(rng, params.n, params.k);
    let inside = membership(params.n, &support);
    let g = Graph::from_fn(params.n, |u, v| {
        let d = if inside[u] && inside[v] { params.p } else { params.q };
        bern(rng, d)
    });
    Ok(g.with_planted(support))
}

/// One PDS* draw under the given hypothesis.
pub fn sample_pds_star<R: Rng + ?Sized>(
    params: &PdsStarParams,
    hypothesis: Hypothesis,
    rng: &mut R,
) -> Result<Graph> {
    match hypothesis {
        Hypothesis::Null => sample_erdos_renyi(params.base.n, params.p0, rng),
        Hypothesis::Planted => sample_pds(&params.base, rng),
    }
}

pub fn sample_kpc<R: Rng + ?Sized>(params: &KpcParams, rng: &mut R) -> Result<Graph> {
    params.validate()?;
    let support: Vec<usize> = params
        .partition
        .iter()
        .map(|part| part[rng.random_range(0..part.len())])
        .collect();
    let inside = membership(params.n, &support);
    let g = Graph::from_fn(params.n, |u, v| {
        let d = if inside[u] && inside[v] { params.p } else { params.q };
        bern(rng, d)
    });
    Ok(g.with_planted(support))
}

pub fn sample_isbm<R: Rng + ?Sized>(params: &IsbmParams, rng: &mut R) -> Result<Graph> {
    params.validate()?;
    let support = uniform_subset(rng, params.n, params.k);
    let inside = membership(params.n, &support);
    let g = Graph::from_fn(params.n, |u, v| {
        let d = match (inside[u], inside[v]) {
            (true, true) => params.p11,
            (false, false) => params.p22,
            _ => params.p12,
        };
        bern(rng, d)
    });
    Ok(g.with_planted(support))
}

pub fn sample_biclustering<R: Rng + ?Sized>(params: &BcParams, rng: &mut R) -> Bicluster {
    let rows = uniform_subset(rng, params.n, params.k);
    let cols = uniform_subset(rng, params.n, params.k);
    let mut matrix = DenseMatrix::from_fn(params.n, params.n, |_, _| rng.sample(StandardNormal));
    for &i in &rows {
        for &j in &cols {
            matrix[(i, j)] += params.mu;
        }
    }
    Bicluster { matrix, rows, cols }
}

/// Draws the latent `v`: the positive-entry count is uniform over the
/// admissible counts, support and sign placement are uniform.
pub fn sample_bspca_direction<R: Rng + ?Sized>(params: &BspcaParams, rng: &mut R) -> Result<Vec<f64>> {
    let counts = params.admissible_positive_counts();
    if counts.is_empty() {
        return Err(Error::Infeasible("sign-bias constraint unsatisfiable".into()));
    }
    let positives = counts[rng.random_range(0..counts.len())];
    let support = sample_indices(rng, params.d, params.k).into_vec();
    let scale = 1.0 / (params.k as f64).sqrt();
    let mut v = vec![0.0; params.d];
    for (slot, &idx) in support.iter().enumerate() {
        v[idx] = if slot < positives { scale } else { -scale };
    }
    Ok(v)
}

/// Samples `x = z + (sqrt(1 + theta) - 1)(v^T z) v`, whose covariance is
/// exactly `I + theta v v^T` when `|v| = 1`.
pub fn sample_bspca<R: Rng + ?Sized>(params: &BspcaParams, rng: &mut R) -> Result<BspcaSample> {
    let v = sample_bspca_direction(params, rng)?;
    let samples = spiked_samples(params.n, params.theta, &v, rng);
    Ok(BspcaSample { samples, v })
}

pub(crate) fn spiked_samples<R: Rng + ?Sized>(n: usize, theta: f64, v: &[f64], rng: &mut R) -> DenseMatrix<f64> {
    let d = v.len();
    let c = (1.0 + theta).sqrt() - 1.0;
    let mut out = DenseMatrix::zeros(n, d);
    for i in 0..n {
        let row = out.row_mut(i);
        for x in row.iter_mut() {
            *x = rng.sample(StandardNormal);
        }
        let proj: f64 = row.iter().zip(v).map(|(a, b)| a * b).sum();
        for (x, &vi) in row.iter_mut().zip(v) {
            *x += c * proj * vi;
        }
    }
    out
}

/// Keeps a uniformly random vertex subset of size `round(keep_fraction * n)`.
///
/// The subset size is fixed, so a fixed-size planted set of size `k` leaves a
/// hypergeometric number of planted vertices behind.
pub fn subsample_binomial<R: Rng + ?Sized>(graph: &Graph, keep_fraction: f64, rng: &mut R) -> Result<Graph> {
    if !(keep_fraction > 0.0 && keep_fraction <= 1.0) {
        return Err(Error::param("keep_fraction", format!("{keep_fraction} not in (0, 1]")));
    }
    let m = (keep_fraction * graph.n() as f64).round() as usize;
    if m == 0 {
        return Err(Error::param("keep_fraction", "subsample would be empty"));
    }
    let keep = uniform_subset(rng, graph.n(), m);
    Ok(graph.induced(&keep))
}
