//! Entry-level transforms: Gaussian rejection kernels, graph cloning,
//! thresholding at zero and the final density correction.

use rand::seq::index::sample as sample_indices;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{check_open_density, Error, Result};
use crate::graph::Graph;
use crate::linalg::DenseMatrix;
use crate::model::bern;
use crate::scalar::{lit, normal_pdf, to_f64, Real};

/// Smallest allowed value of `min(q, 1 - q, p - q)` for a kernel.
pub const DENSITY_FLOOR: f64 = 1e-9;

/// Number of grid points used to check the signed densities at construction.
pub const VALIDATION_GRID: usize = 10_000;

/// A Bernoulli-to-Gaussian rejection kernel.
///
/// `Bern(p)` is pushed close to `N(mu, 1)` and `Bern(q)` close to `N(0, 1)`.
/// A one is mapped to a draw from the density
/// `A = [(1-q) f_mu - (1-p) f_0] / (p-q)` and a zero to
/// `B = [p f_0 - q f_mu] / (p-q)`, where `f_m` is the unit-variance normal
/// density at mean `m`. Both are sampled by acceptance-rejection from their
/// dominating Gaussian with at most `budget` attempts; if every attempt is
/// rejected the last proposal is returned.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RejectionKernelSpec<T = f64> {
    pub p: T,
    pub q: T,
    pub mu: T,
    pub budget: u64,
    // (1-p)/(1-q) and q/p, the proposal ratios
    ratio_one: T,
    ratio_zero: T,
}

/// `delta = min(log(p/q), log((1-q)/(1-p)))`, the second term infinite at `p = 1`.
pub fn kernel_delta<T: Real>(p: T, q: T) -> T {
    let up = (p / q).ln();
    if p >= T::one() {
        up
    } else {
        up.min(((T::one() - q) / (T::one() - p)).ln())
    }
}

/// Largest mean the kernel accepts:
/// `delta / (2 sqrt(6 log R + 2 log(1/(p-q))))`.
pub fn max_kernel_mean<T: Real>(p: T, q: T, budget: u64) -> T {
    let two: T = lit(2.0);
    let r: T = lit(budget as f64);
    let denom = lit::<T>(6.0) * r.ln() + two * (T::one() / (p - q)).ln();
    kernel_delta(p, q) / (two * denom.sqrt())
}

impl<T: Real> RejectionKernelSpec<T> {
    pub fn new(p: T, q: T, mu: T, budget: u64) -> Result<Self> {
        let (pf, qf) = (to_f64(p), to_f64(q));
        if !(qf > 0.0 && qf < pf && pf <= 1.0) {
            return Err(Error::param("p, q", format!("need 0 < q < p <= 1, got p = {pf}, q = {qf}")));
        }
        if qf.min(1.0 - qf).min(pf - qf) < DENSITY_FLOOR {
            return Err(Error::param("p, q", "densities too close to each other or to the boundary"));
        }
        if budget < 2 {
            return Err(Error::param("budget", "need at least two attempts"));
        }
        if !(mu >= T::zero()) {
            return Err(Error::param("mu", "kernel mean must be nonnegative"));
        }
        let bound = max_kernel_mean(p, q, budget);
        // a few ulps of slack so that callers can pass the bound itself
        if mu > bound * lit(1.0 + 1e-12) {
            return Err(Error::param(
                "mu",
                format!("mean {} exceeds the kernel bound {}", to_f64(mu), to_f64(bound)),
            ));
        }
        let spec = RejectionKernelSpec {
            p,
            q,
            mu,
            budget,
            ratio_one: (T::one() - p) / (T::one() - q),
            ratio_zero: q / p,
        };
        spec.validate_on_grid()?;
        Ok(spec)
    }

    /// Signed density for a one, `A(x)`.
    pub fn density_one(&self, x: T) -> T {
        let one = T::one();
        ((one - self.q) * normal_pdf(x, self.mu) - (one - self.p) * normal_pdf(x, T::zero())) / (self.p - self.q)
    }

    /// Signed density for a zero, `B(x)`.
    pub fn density_zero(&self, x: T) -> T {
        (self.p * normal_pdf(x, T::zero()) - self.q * normal_pdf(x, self.mu)) / (self.p - self.q)
    }

    /// Both signed densities must be nonnegative on `[-8, 8 + mu]`.
    fn validate_on_grid(&self) -> Result<()> {
        let lo: T = lit(-8.0);
        let width = lit::<T>(16.0) + self.mu;
        let tol: T = lit(-1e-15);
        for i in 0..VALIDATION_GRID {
            let x = lo + width * lit(i as f64 / (VALIDATION_GRID - 1) as f64);
            if self.density_one(x) < tol || self.density_zero(x) < tol {
                return Err(Error::param(
                    "mu",
                    format!("signed kernel density negative at x = {}", to_f64(x)),
                ));
            }
        }
        Ok(())
    }

    #[inline]
    fn likelihood_ratio(&self, x: T) -> T {
        // f_0(x) / f_mu(x)
        (self.mu * self.mu / lit(2.0) - self.mu * x).exp()
    }

    pub fn sample<R: Rng + ?Sized>(&self, bit: bool, rng: &mut R) -> T {
        let mut x = T::zero();
        for _ in 0..self.budget {
            let z: T = lit(rng.sample::<f64, _>(StandardNormal));
            let accept = if bit {
                x = z + self.mu;
                T::one() - self.ratio_one * self.likelihood_ratio(x)
            } else {
                x = z;
                T::one() - self.ratio_zero / self.likelihood_ratio(x)
            };
            if accept >= T::one() || rng.random::<f64>() < to_f64(accept) {
                return x;
            }
        }
        x
    }
}

/// One application of the kernel to a bit.
pub fn rejection_kernel<T: Real, R: Rng + ?Sized>(bit: bool, spec: &RejectionKernelSpec<T>, rng: &mut R) -> T {
    spec.sample(bit, rng)
}

/// Two-way clone density `1 - sqrt((1-p)(1-q))`, or `sqrt(q)` when `p = 1`.
pub fn clone_density<T: Real>(p: T, q: T) -> T {
    let one = T::one();
    if p >= one {
        q.sqrt()
    } else {
        one - ((one - p) * (one - q)).sqrt()
    }
}

/// Ambient density of each of `t` clones made in one shot.
///
/// For `p = 1` this is `q^{1/t}`. Otherwise it is the smallest `Q` for which
/// the splitting kernel has nonnegative weights,
/// `max(1 - ((1-p)^{t-1}(1-q))^{1/t}, p^{(t-1)/t} q^{1/t})`. At `t = 2` both
/// reduce to [`clone_density`].
pub fn clone_density_t<T: Real>(p: T, q: T, t: usize) -> T {
    let one = T::one();
    let tf: T = lit(t as f64);
    let inv = one / tf;
    if p >= one {
        return q.powf(inv);
    }
    let a = one - ((one - p).powf(tf - one) * (one - q)).powf(inv);
    let b = p.powf((tf - one) / tf) * q.powf(inv);
    a.max(b)
}

/// Splits one Bernoulli edge indicator into `t` indicators. Under `Bern(p)`
/// input the outputs are i.i.d. `Bern(p)`; under `Bern(q)` they are i.i.d.
/// `Bern(Q)`.
#[derive(Clone, Debug, PartialEq)]
pub struct CloneSpec {
    pub p: f64,
    pub q: f64,
    pub t: usize,
    pub big_q: f64,
    // cumulative weights over the number of ones, per input bit
    cdf: [Vec<f64>; 2],
}

impl CloneSpec {
    pub fn new(p: f64, q: f64, t: usize) -> Result<Self> {
        if t < 2 {
            return Err(Error::param("t", "need at least two clones"));
        }
        if !(q > 0.0 && q < p && p <= 1.0) {
            return Err(Error::param("p, q", format!("need 0 < q < p <= 1, got p = {p}, q = {q}")));
        }
        let big_q = clone_density_t(p, q, t);
        let law = |d: f64, j: usize| -> f64 {
            // probability of one specific pattern with j ones
            d.powi(j as i32) * (1.0 - d).powi((t - j) as i32)
        };
        let mut cdf = [Vec::with_capacity(t + 1), Vec::with_capacity(t + 1)];
        let mut acc = [0.0f64; 2];
        for j in 0..=t {
            let ways = binomial_coefficient(t, j);
            let hp = law(p, j);
            let hq = law(big_q, j);
            let w1 = ways * ((1.0 - q) * hp - (1.0 - p) * hq) / (p - q);
            let w0 = ways * (p * hq - q * hp) / (p - q);
            for (b, w) in [(1usize, w1), (0usize, w0)] {
                if w < -1e-12 {
                    return Err(Error::Infeasible(format!("clone weight {w} < 0 at j = {j}, bit = {b}")));
                }
                acc[b] += w.max(0.0);
                cdf[b].push(acc[b]);
            }
        }
        Ok(CloneSpec { p, q, t, big_q, cdf })
    }

    /// Splits one bit into `t` clone bits.
    pub fn split<R: Rng + ?Sized>(&self, bit: bool, rng: &mut R) -> Vec<bool> {
        let cdf = &self.cdf[bit as usize];
        let u = rng.random::<f64>() * cdf[self.t];
        let ones = cdf.iter().position(|&c| u < c).unwrap_or(self.t);
        let mut out = vec![false; self.t];
        for i in sample_indices(rng, self.t, ones) {
            out[i] = true;
        }
        out
    }
}

pub(crate) fn binomial_coefficient(n: usize, k: usize) -> f64 {
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Produces `t` graphs that are conditionally independent given the planted
/// set: planted pairs stay at density `p`, the rest drop to density `Q_t`.
pub fn graph_clone<R: Rng + ?Sized>(graph: &Graph, p: f64, q: f64, t: usize, rng: &mut R) -> Result<Vec<Graph>> {
    let spec = CloneSpec::new(p, q, t)?;
    let n = graph.n();
    let mut clones: Vec<Graph> = (0..t).map(|_| Graph::empty(n)).collect();
    for u in 0..n {
        for v in (u + 1)..n {
            for (c, keep) in clones.iter_mut().zip(spec.split(graph.has_edge(u, v), rng)) {
                if keep {
                    c.add_edge(u, v);
                }
            }
        }
    }
    if let Some(s) = graph.planted() {
        clones = clones.into_iter().map(|c| c.with_planted(s.to_vec())).collect();
    }
    Ok(clones)
}

/// Edge `{i, j}` (`i < j`) is present iff `M[i][j] >= 0`; the lower triangle
/// and the diagonal are ignored.
pub fn threshold_gaussian_matrix<T: Real>(m: &DenseMatrix<T>) -> Graph {
    assert_eq!(m.rows(), m.cols(), "threshold needs a square matrix");
    Graph::from_fn(m.rows(), |i, j| m[(i, j)] >= T::zero())
}

/// Moves a `Bern(s)` graph to density `2 P0 s` (when `P0 <= 1/2`, by thinning
/// edges) or `1 - 2(1-P0)(1-s)` (when `P0 > 1/2`, by adding non-edges).
pub fn densify_to_target<R: Rng + ?Sized>(graph: &Graph, p0: f64, rng: &mut R) -> Result<Graph> {
    check_open_density("P0", p0)?;
    let mut out = graph.clone();
    if p0 == 0.5 {
        return Ok(out);
    }
    let n = graph.n();
    for u in 0..n {
        for v in (u + 1)..n {
            let e = graph.has_edge(u, v);
            if p0 < 0.5 {
                if e && !bern(rng, 2.0 * p0) {
                    out.remove_edge(u, v);
                }
            } else if !e && bern(rng, 2.0 * p0 - 1.0) {
                out.add_edge(u, v);
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
/// Bernoulli chi-square divergence `(p-q)^2 / (q(1-q))`, used for clone checks.
pub(crate) fn chi2<T: Real>(p: T, q: T) -> T {
    (p - q) * (p - q) / (q * (T::one() - q))
}
