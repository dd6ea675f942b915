//! Design matrices for Bernoulli rotations.
//!
//! A random `d`-regular digraph on `m` vertices gives the centered matrix
//! `R_ij = -1/sqrt(mr) + 1{i -> j} sqrt(r/m)` with `r = m/d`. Two designs are
//! built from it:
//!
//! * the recentered Kronecker design
//!   `K = mu sqrt(r/m) [(R + J/sqrt(mr)) ⊗ (R + J/sqrt(mr)) - J⊗J/(mr)]`,
//!   whose row `(i, j)` is the PDS* mean pattern on `A_i × A_j`;
//! * the plain design `D = (R ⊗ R) / C^2`, whose rows are the ISBM pattern.
//!
//! Neither is ever stored densely. Both act on a flattened `m × m` block
//! `X` (row-major) through two `m × m` products, and the spectrum of `KᵀK`
//! (or `DᵀD`) is read off an eigenbasis of `G = RᵀR` whose first vector is
//! the normalised all-ones vector. That basis also gives the whitening noise
//! with covariance `I - KᵀK` in `O(m^3)` per block.

use std::fmt::Write as _;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{symmetric_eigen, top_singular_value, DenseMatrix, LinearOperator};
use crate::scalar::{lit, to_f64, Real};

/// Power-iteration budget used by [`verify_operator_norm`] by default.
pub const DEFAULT_NORM_ITERS: usize = 300;
pub const NORM_TOLERANCE: f64 = 1e-9;
/// A design passes when its top singular value is at most `1 + NORM_SLACK`.
pub const NORM_SLACK: f64 = 1e-6;
/// Whitening covariance eigenvalues below `-PSD_SLACK` reject the design.
pub const PSD_SLACK: f64 = 1e-9;
/// Largest `m` for which [`KroneckerDesign::materialize`] is allowed.
pub const MATERIALIZE_LIMIT: usize = 100;

/// A digraph in which every vertex has in- and out-degree `d`, without loops.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegularDigraph {
    pub m: usize,
    pub d: usize,
    /// Sorted out-neighbourhoods.
    pub out_neighbors: Vec<Vec<usize>>,
}

impl RegularDigraph {
    /// Circulant start: `i -> i+1, ..., i+d (mod m)`.
    pub fn circulant(m: usize, d: usize) -> Result<Self> {
        if d == 0 || d >= m {
            return Err(Error::param("d", format!("need 1 <= d < m, got d = {d}, m = {m}")));
        }
        let out_neighbors = (0..m)
            .map(|i| {
                let mut row: Vec<usize> = (1..=d).map(|s| (i + s) % m).collect();
                row.sort_unstable();
                row
            })
            .collect();
        Ok(RegularDigraph { m, d, out_neighbors })
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.out_neighbors[i].binary_search(&j).is_ok()
    }

    pub fn in_degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.m];
        for row in &self.out_neighbors {
            for &j in row {
                deg[j] += 1;
            }
        }
        deg
    }

    pub fn is_valid(&self) -> bool {
        self.out_neighbors.len() == self.m
            && self
                .out_neighbors
                .iter()
                .enumerate()
                .all(|(i, row)| row.len() == self.d && !row.contains(&i) && row.windows(2).all(|w| w[0] < w[1]))
            && self.in_degrees().iter().all(|&x| x == self.d)
    }
}

/// Default chain length `20 m d`.
pub fn default_chain_steps(m: usize, d: usize) -> usize {
    20 * m * d
}

/// Runs the degree-preserving switch chain from the circulant digraph.
///
/// A step picks two arcs `a -> b`, `c -> e` uniformly and replaces them by
/// `a -> e`, `c -> b`, unless that would create a loop or a repeated arc.
pub fn sample_regular_digraph<R: Rng + ?Sized>(
    m: usize,
    d: usize,
    chain_steps: usize,
    rng: &mut R,
) -> Result<RegularDigraph> {
    let start = RegularDigraph::circulant(m, d)?;
    let mut arcs: Vec<(usize, usize)> = start
        .out_neighbors
        .iter()
        .enumerate()
        .flat_map(|(i, row)| row.iter().map(move |&j| (i, j)))
        .collect();
    let mut adj = vec![false; m * m];
    for &(i, j) in &arcs {
        adj[i * m + j] = true;
    }
    let total = arcs.len();
    for _ in 0..chain_steps {
        let x = rng.random_range(0..total);
        let y = rng.random_range(0..total);
        let (a, b) = arcs[x];
        let (c, e) = arcs[y];
        if a == c || b == e || a == e || c == b || adj[a * m + e] || adj[c * m + b] {
            continue;
        }
        adj[a * m + b] = false;
        adj[c * m + e] = false;
        adj[a * m + e] = true;
        adj[c * m + b] = true;
        arcs[x] = (a, e);
        arcs[y] = (c, b);
    }
    let out_neighbors = (0..m).map(|i| (0..m).filter(|&j| adj[i * m + j]).collect()).collect();
    Ok(RegularDigraph { m, d, out_neighbors })
}

/// `R_ij = -1/sqrt(mr) + 1{i -> j} sqrt(r/m)` with `r = m/d`.
#[derive(Clone, Debug)]
pub struct CenteredRegularMatrix<T = f64> {
    pub m: usize,
    pub r: usize,
    pub matrix: DenseMatrix<T>,
    pub source: RegularDigraph,
}

/// Checks `r >= 2`, `r | m` and `r <= m^(1 - alpha)`.
pub fn check_design_shape(m: usize, r: usize, alpha: f64) -> Result<()> {
    if r < 2 || m % r != 0 {
        return Err(Error::param("r", format!("need r >= 2 dividing m, got r = {r}, m = {m}")));
    }
    if (r as f64) > (m as f64).powf(1.0 - alpha) + 1e-9 {
        return Err(Error::param(
            "r",
            format!("r = {r} exceeds m^(1 - alpha) = {:.3}", (m as f64).powf(1.0 - alpha)),
        ));
    }
    Ok(())
}

pub fn centered_matrix<T: Real>(g: &RegularDigraph) -> Result<CenteredRegularMatrix<T>> {
    if !g.is_valid() {
        return Err(Error::param("digraph", "not a loopless regular digraph"));
    }
    if g.m % g.d != 0 {
        return Err(Error::param("d", format!("d = {} must divide m = {}", g.d, g.m)));
    }
    let (m, r) = (g.m, g.m / g.d);
    let (mf, rf): (T, T) = (lit(m as f64), lit(r as f64));
    let low = -T::one() / (mf * rf).sqrt();
    let jump = (rf / mf).sqrt();
    let matrix = DenseMatrix::from_fn(m, m, |i, j| if g.has_edge(i, j) { low + jump } else { low });
    Ok(CenteredRegularMatrix {
        m,
        r,
        matrix,
        source: g.clone(),
    })
}

impl<T: Real> CenteredRegularMatrix<T> {
    /// `sqrt(mr) R` as integers: `r 1{i -> j} - 1`.
    pub fn integer_form(&self) -> Vec<Vec<i64>> {
        let r = self.r as i64;
        (0..self.m)
            .map(|i| (0..self.m).map(|j| if self.source.has_edge(i, j) { r - 1 } else { -1 }).collect())
            .collect()
    }

    /// Embedded sets `A_i`, the out-neighbourhoods.
    pub fn sets(&self) -> &[Vec<usize>] {
        &self.source.out_neighbors
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DesignKind {
    /// `mu sqrt(r/m) [B ⊗ B - J⊗J/(mr)]`, `B = R + J/sqrt(mr)`.
    Recentered,
    /// `scale (R ⊗ R)`.
    Plain,
}

/// A structured `m^2 × m^2` design with cached spectral data.
#[derive(Clone, Debug)]
pub struct KroneckerDesign<T = f64> {
    pub kind: DesignKind,
    pub m: usize,
    pub r: usize,
    /// `mu_K` for the recentered design, `1/C^2` for the plain one.
    pub scale: T,
    pub base: CenteredRegularMatrix<T>,
    /// `B = R + J/sqrt(mr)`, entries `1{i -> j} sqrt(r/m)`.
    b: DenseMatrix<T>,
    /// Eigenbasis of `RᵀR` (columns), first column `1/sqrt(m)`.
    basis: DenseMatrix<T>,
    /// Eigenvalues of `RᵀR` matching `basis`.
    gram_values: Vec<T>,
    /// Eigenvalues of `AᵀA` on basis pairs `(a, b)`, `m × m`.
    spectrum: DenseMatrix<T>,
    /// `sqrt(max(0, 1 - ev))` for each of those.
    whitening: DenseMatrix<T>,
    /// Smallest eigenvalue of `I - AᵀA`.
    pub min_whitening_eigenvalue: T,
    /// Top singular value from the eigen route.
    pub sigma_exact: T,
    /// Power-iteration estimate recorded at verification, if any.
    pub sigma_power: Option<T>,
    pub attempts: usize,
}

/// Eigenbasis of `G = RᵀR` whose first vector is exactly `1/sqrt(m)`.
///
/// `R 1 = 0`, so the all-ones direction is a null vector; it is split off
/// with a Householder reflection and the complement is diagonalised on its
/// own so that degenerate zero eigenvalues cannot rotate it away.
fn gram_eigenbasis<T: Real>(r: &DenseMatrix<T>) -> (Vec<T>, DenseMatrix<T>) {
    let m = r.rows();
    let gram = r.t_matmul(r);
    let mf: T = lit(m as f64);
    let e = T::one() / mf.sqrt();
    // Householder H = I - 2 w wᵀ / wᵀw with w = e·1 - e_1 maps e_1 to e·1
    let mut w = vec![e; m];
    w[0] = w[0] - T::one();
    let ww: T = w.iter().map(|&x| x * x).sum();
    let h = DenseMatrix::from_fn(m, m, |i, j| {
        let delta = if i == j { T::one() } else { T::zero() };
        delta - lit::<T>(2.0) * w[i] * w[j] / ww
    });
    let q = DenseMatrix::from_fn(m, m - 1, |i, j| h[(i, j + 1)]);
    let sub = q.t_matmul(&gram.matmul(&q));
    let sym = DenseMatrix::from_fn(m - 1, m - 1, |i, j| (sub[(i, j)] + sub[(j, i)]) / lit(2.0));
    let (vals, vecs) = symmetric_eigen(&sym);
    let rest = q.matmul(&vecs);
    let basis = DenseMatrix::from_fn(m, m, |i, j| if j == 0 { e } else { rest[(i, j - 1)] });
    let mut values = Vec::with_capacity(m);
    values.push(T::zero());
    values.extend(vals.into_iter().map(|v| v.max(T::zero())));
    (values, basis)
}

impl<T: Real> KroneckerDesign<T> {
    fn build(kind: DesignKind, base: CenteredRegularMatrix<T>, scale: T) -> Result<Self> {
        let (m, r) = (base.m, base.r);
        let (mf, rf): (T, T) = (lit(m as f64), lit(r as f64));
        let jump = (rf / mf).sqrt();
        let b = DenseMatrix::from_fn(m, m, |i, j| if base.source.has_edge(i, j) { jump } else { T::zero() });
        let (gram_values, basis) = gram_eigenbasis(&base.matrix);
        let ev = |a: usize, bidx: usize| -> T {
            let (la, lb) = (gram_values[a], gram_values[bidx]);
            match kind {
                DesignKind::Recentered => {
                    let c2 = scale * scale * rf / mf;
                    let cross = if a == 0 && bidx == 0 {
                        T::zero()
                    } else if a == 0 {
                        lb * mf / rf
                    } else if bidx == 0 {
                        la * mf / rf
                    } else {
                        la * lb
                    };
                    c2 * cross
                }
                DesignKind::Plain => scale * scale * la * lb,
            }
        };
        let spectrum = DenseMatrix::from_fn(m, m, ev);
        let top = spectrum.as_slice().iter().copied().fold(T::zero(), T::max);
        let min_white = T::one() - top;
        let whitening = DenseMatrix::from_fn(m, m, |a, bi| (T::one() - spectrum[(a, bi)]).max(T::zero()).sqrt());
        Ok(KroneckerDesign {
            kind,
            m,
            r,
            scale,
            base,
            b,
            basis,
            gram_values,
            spectrum,
            whitening,
            min_whitening_eigenvalue: min_white,
            sigma_exact: top.sqrt(),
            sigma_power: None,
            attempts: 1,
        })
    }

    /// Number of rows (and columns) of the design, `m^2`.
    pub fn size(&self) -> usize {
        self.m * self.m
    }

    /// Embedded sets `A_i`.
    pub fn sets(&self) -> &[Vec<usize>] {
        self.base.sets()
    }

    /// Eigenvalues of `RᵀR`, the first being the forced zero.
    pub fn gram_values(&self) -> &[T] {
        &self.gram_values
    }

    /// `sigma(R)`.
    pub fn base_sigma(&self) -> T {
        self.gram_values.iter().copied().fold(T::zero(), T::max).sqrt()
    }

    fn mixed(&self, left: &DenseMatrix<T>, x: &DenseMatrix<T>, transpose_left: bool) -> DenseMatrix<T> {
        // transpose_left: leftᵀ X left, otherwise left X leftᵀ
        if transpose_left {
            left.t_matmul(x).matmul(left)
        } else {
            left.matmul(&x.matmul(&left.transpose()))
        }
    }

    fn structured(&self, x: &[T], transpose: bool) -> Vec<T> {
        let m = self.m;
        let xm = DenseMatrix::from_vec(m, m, x.to_vec());
        let (mf, rf): (T, T) = (lit(m as f64), lit(self.r as f64));
        match self.kind {
            DesignKind::Recentered => {
                let c = self.scale * (rf / mf).sqrt();
                let total: T = x.iter().copied().sum::<T>() / (mf * rf);
                let y = self.mixed(&self.b, &xm, transpose);
                y.into_vec().into_iter().map(|v| c * (v - total)).collect()
            }
            DesignKind::Plain => {
                let y = self.mixed(&self.base.matrix, &xm, transpose);
                y.into_vec().into_iter().map(|v| self.scale * v).collect()
            }
        }
    }

    /// Row `(i, j)` of the design, laid out `m × m`: the planted mean pattern.
    pub fn row_pattern(&self, i: usize, j: usize) -> DenseMatrix<T> {
        let mut e = vec![T::zero(); self.size()];
        e[i * self.m + j] = T::one();
        DenseMatrix::from_vec(self.m, self.m, self.structured(&e, true))
    }

    /// One entry, computed from the closed form rather than a product.
    pub fn entry(&self, row: (usize, usize), col: (usize, usize)) -> T {
        let (mf, rf): (T, T) = (lit(self.m as f64), lit(self.r as f64));
        match self.kind {
            DesignKind::Recentered => {
                let hit = self.base.source.has_edge(row.0, col.0) && self.base.source.has_edge(row.1, col.1);
                let ind = if hit { rf / mf } else { T::zero() };
                self.scale * (rf / mf).sqrt() * (ind - T::one() / (mf * rf))
            }
            DesignKind::Plain => {
                self.scale * self.base.matrix[(row.0, col.0)] * self.base.matrix[(row.1, col.1)]
            }
        }
    }

    /// Dense `m^2 × m^2` matrix, for small `m` only.
    pub fn materialize(&self) -> Result<DenseMatrix<T>> {
        if self.m > MATERIALIZE_LIMIT {
            return Err(Error::BudgetExceeded {
                needed: self.m as f64,
                budget: MATERIALIZE_LIMIT as f64,
            });
        }
        let m = self.m;
        Ok(DenseMatrix::from_fn(m * m, m * m, |row, col| {
            self.entry((row / m, row % m), (col / m, col % m))
        }))
    }

    /// Eigenvalue of `AᵀA` on the basis pair `(a, b)`.
    pub fn gram_eigenvalue(&self, a: usize, b: usize) -> T {
        self.spectrum[(a, b)]
    }

    /// A draw of `N(0, I - AᵀA)`, flattened row-major.
    pub fn whitening_noise<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<T> {
        let m = self.m;
        let z = DenseMatrix::from_fn(m, m, |a, b| self.whitening[(a, b)] * lit(rng.sample::<f64, _>(StandardNormal)));
        self.basis.matmul(&z).matmul(&self.basis.transpose()).into_vec()
    }

    /// The same noise from a given standard-normal block, for tests.
    pub fn whiten_from(&self, z: &[T]) -> Vec<T> {
        let m = self.m;
        let zs = DenseMatrix::from_fn(m, m, |a, b| self.whitening[(a, b)] * z[a * m + b]);
        self.basis.matmul(&zs).matmul(&self.basis.transpose()).into_vec()
    }

    /// Plain-text manifest: parameters, `sqrt(mr) R` as integers, the sets.
    pub fn export_csv(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "kind,{:?}", self.kind);
        let _ = writeln!(s, "m,{}", self.m);
        let _ = writeln!(s, "r,{}", self.r);
        let _ = writeln!(s, "scale,{}", to_f64(self.scale));
        let _ = writeln!(s, "sigma_exact,{}", to_f64(self.sigma_exact));
        if let Some(p) = self.sigma_power {
            let _ = writeln!(s, "sigma_power,{}", to_f64(p));
        }
        let _ = writeln!(s, "attempts,{}", self.attempts);
        let _ = writeln!(s, "# sqrt(mr) R");
        for row in self.base.integer_form() {
            let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            let _ = writeln!(s, "{}", line.join(","));
        }
        let _ = writeln!(s, "# sets");
        for (i, set) in self.sets().iter().enumerate() {
            let line: Vec<String> = set.iter().map(|v| v.to_string()).collect();
            let _ = writeln!(s, "{i},{}", line.join(" "));
        }
        s
    }
}

impl<T: Real> LinearOperator<T> for KroneckerDesign<T> {
    fn nrows(&self) -> usize {
        self.size()
    }
    fn ncols(&self) -> usize {
        self.size()
    }
    fn apply(&self, x: &[T], y: &mut [T]) {
        y.copy_from_slice(&self.structured(x, false));
    }
    fn apply_transpose(&self, x: &[T], y: &mut [T]) {
        y.copy_from_slice(&self.structured(x, true));
    }
}

pub fn kronecker_design<T: Real>(base: CenteredRegularMatrix<T>, mu: T) -> Result<KroneckerDesign<T>> {
    if !(mu > T::zero() && mu <= T::one()) {
        return Err(Error::param("mu", "design scale must lie in (0, 1]"));
    }
    KroneckerDesign::build(DesignKind::Recentered, base, mu)
}

/// `(R ⊗ R) / c_hat^2`.
pub fn isbm_design<T: Real>(base: CenteredRegularMatrix<T>, c_hat: T) -> Result<KroneckerDesign<T>> {
    if !(c_hat > T::zero()) {
        return Err(Error::param("c_hat", "must be positive"));
    }
    KroneckerDesign::build(DesignKind::Plain, base, T::one() / (c_hat * c_hat))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormCheck {
    pub sigma: f64,
    pub pass: bool,
    pub converged: bool,
    pub iterations: usize,
}

/// Power iteration on `MᵀM`; passes iff the estimate is at most `1 + 1e-6`.
pub fn verify_operator_norm<T: Real, Op: LinearOperator<T> + ?Sized>(op: &Op, budget_iters: usize) -> NormCheck {
    let pi = top_singular_value(op, budget_iters, lit::<T>(NORM_TOLERANCE));
    let sigma = to_f64(pi.sigma);
    NormCheck {
        sigma,
        pass: sigma <= 1.0 + NORM_SLACK,
        converged: pi.converged,
        iterations: pi.iterations,
    }
}

/// `sigma(R)` by power iteration.
pub fn base_sigma<T: Real>(r: &CenteredRegularMatrix<T>) -> f64 {
    to_f64(top_singular_value(&r.matrix, 2000, lit::<T>(1e-10)).sigma)
}

/// Nearest-rank empirical quantile.
pub fn quantile(values: &mut [f64], level: f64) -> f64 {
    values.sort_by(|a, b| a.total_cmp(b));
    let rank = ((level * values.len() as f64).ceil() as usize).clamp(1, values.len());
    values[rank - 1]
}

/// `C` estimate: the 99th percentile of `sigma(R)` over `draws` digraphs.
pub fn calibrate_c_hat<R: Rng + ?Sized>(m: usize, r: usize, draws: usize, rng: &mut R) -> Result<f64> {
    if r < 2 || m % r != 0 {
        return Err(Error::param("r", "need r >= 2 dividing m"));
    }
    let d = m / r;
    let mut sigmas = Vec::with_capacity(draws);
    for _ in 0..draws.max(1) {
        let g = sample_regular_digraph(m, d, default_chain_steps(m, d), rng)?;
        sigmas.push(base_sigma(&centered_matrix::<f64>(&g)?));
    }
    Ok(quantile(&mut sigmas, 0.99))
}

/// `mu_K = (C + 1)^-2`.
pub fn design_scale(c_hat: f64) -> f64 {
    (c_hat + 1.0).powi(-2)
}

fn accept<T: Real>(mut design: KroneckerDesign<T>, iters: usize) -> (Option<KroneckerDesign<T>>, f64) {
    let check = verify_operator_norm(&design, iters);
    design.sigma_power = Some(lit(check.sigma));
    let exact = to_f64(design.sigma_exact);
    let psd = to_f64(design.min_whitening_eigenvalue) >= -PSD_SLACK;
    let sigma = check.sigma.max(exact);
    if check.pass && exact <= 1.0 + NORM_SLACK && psd {
        (Some(design), sigma)
    } else {
        (None, sigma)
    }
}

fn with_retries<T: Real, R: Rng + ?Sized>(
    m: usize,
    r: usize,
    max_attempts: usize,
    rng: &mut R,
    make: impl Fn(CenteredRegularMatrix<T>) -> Result<KroneckerDesign<T>>,
) -> Result<KroneckerDesign<T>> {
    if max_attempts == 0 {
        return Err(Error::param("max_attempts", "need at least one attempt"));
    }
    if r < 2 || m % r != 0 {
        return Err(Error::param("r", format!("need r >= 2 dividing m, got r = {r}, m = {m}")));
    }
    let d = m / r;
    let mut last = f64::NAN;
    for attempt in 1..=max_attempts {
        let g = sample_regular_digraph(m, d, default_chain_steps(m, d), rng)?;
        let design = make(centered_matrix(&g)?)?;
        let (ok, sigma) = accept(design, DEFAULT_NORM_ITERS);
        if let Some(mut d) = ok {
            d.attempts = attempt;
            return Ok(d);
        }
        last = sigma;
    }
    Err(Error::DesignExhausted {
        attempts: max_attempts,
        last_sigma: last,
    })
}

/// Resamples the digraph until the recentered design has `sigma(K) <= 1`.
///
/// `mu` is not restricted to `(0, 1]` here so that the failure path can be
/// exercised; the spectral check is what guards the result.
pub fn design_with_retries<T: Real, R: Rng + ?Sized>(
    m: usize,
    r: usize,
    mu: T,
    max_attempts: usize,
    rng: &mut R,
) -> Result<KroneckerDesign<T>> {
    if !(mu > T::zero()) {
        return Err(Error::param("mu", "design scale must be positive"));
    }
    with_retries(m, r, max_attempts, rng, |base| KroneckerDesign::build(DesignKind::Recentered, base, mu))
}

/// The same loop for the ISBM design `(R ⊗ R)/c_hat^2`.
pub fn isbm_design_with_retries<T: Real, R: Rng + ?Sized>(
    m: usize,
    r: usize,
    c_hat: T,
    max_attempts: usize,
    rng: &mut R,
) -> Result<KroneckerDesign<T>> {
    with_retries(m, r, max_attempts, rng, |base| isbm_design(base, c_hat))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    fn small_design(m: usize, r: usize, mu: f64, seed: u64) -> KroneckerDesign<f64> {
        let g = sample_regular_digraph(m, m / r, default_chain_steps(m, m / r), &mut stream(seed, 0)).unwrap();
        kronecker_design(centered_matrix(&g).unwrap(), mu).unwrap()
    }

    #[test]
    fn switch_chain_preserves_degrees() {
        let mut rng = stream(21, 0);
        for &(m, d) in &[(8, 2), (16, 4), (25, 5), (9, 8)] {
            let g = sample_regular_digraph(m, d, 1000, &mut rng).unwrap();
            assert!(g.is_valid());
        }
        let full = sample_regular_digraph(6, 5, 500, &mut rng).unwrap();
        assert_eq!(full, RegularDigraph::circulant(6, 5).unwrap());
        assert!(sample_regular_digraph(6, 6, 10, &mut rng).is_err());
    }

    #[test]
    fn centered_matrix_small_case() {
        let g = sample_regular_digraph(4, 2, 200, &mut stream(22, 0)).unwrap();
        let r = centered_matrix::<f64>(&g).unwrap();
        for i in 0..4 {
            let row = r.matrix.row(i);
            assert!(row.iter().all(|&x| (x.abs() - 0.353_553).abs() < 1e-6));
            assert!((row.iter().map(|x| x * x).sum::<f64>() - 0.5).abs() < 1e-12);
        }
        for row in r.integer_form() {
            assert_eq!(row.iter().sum::<i64>(), 0);
        }
        let ints = r.integer_form();
        for j in 0..4 {
            assert_eq!((0..4).map(|i| ints[i][j]).sum::<i64>(), 0);
        }
    }

    #[test]
    fn design_entries_match_closed_form() {
        let d = small_design(4, 2, 1.0, 23);
        let sets = d.sets().to_vec();
        let (i, j) = (0, 1);
        let (k, l) = (sets[0][0], sets[1][0]);
        assert!((d.entry((i, j), (k, l)) - 0.265_165).abs() < 1e-6);
        let k_out = (0..4).find(|x| !sets[0].contains(x)).unwrap();
        assert!((d.entry((i, j), (k_out, l)) + 0.088_388_3).abs() < 1e-6);
        let dense = d.materialize().unwrap();
        let x: Vec<f64> = (0..16).map(|t| (t as f64 * 0.37).sin()).collect();
        let (mut y1, mut y2) = (vec![0.0; 16], vec![0.0; 16]);
        dense.apply_transpose(&x, &mut y1);
        d.apply_transpose(&x, &mut y2);
        assert!(y1.iter().zip(&y2).all(|(a, b)| (a - b).abs() < 1e-12));
        dense.apply(&x, &mut y1);
        d.apply(&x, &mut y2);
        assert!(y1.iter().zip(&y2).all(|(a, b)| (a - b).abs() < 1e-12));
    }

    #[test]
    fn row_pattern_is_pds_star_mean() {
        let (m, r) = (16, 4);
        let d = small_design(m, r, 0.3, 24);
        let pat = d.row_pattern(2, 5);
        let c = 0.3 * (r as f64 / m as f64).sqrt();
        let high = c * (r as f64 / m as f64 - 1.0 / (m * r) as f64);
        let low = -c / (m * r) as f64;
        let mut highs = 0;
        for a in 0..m {
            for b in 0..m {
                let inside = d.sets()[2].contains(&a) && d.sets()[5].contains(&b);
                let want = if inside { high } else { low };
                assert!((pat[(a, b)] - want).abs() < 1e-14);
                highs += inside as usize;
            }
        }
        assert_eq!(highs, (m / r) * (m / r));
    }

    #[test]
    fn exact_spectrum_matches_dense_gram() {
        for kind in [DesignKind::Recentered, DesignKind::Plain] {
            let g = sample_regular_digraph(6, 2, 400, &mut stream(25, 0)).unwrap();
            let base = centered_matrix::<f64>(&g).unwrap();
            let d = match kind {
                DesignKind::Recentered => kronecker_design(base, 0.4).unwrap(),
                DesignKind::Plain => isbm_design(base, 1.7).unwrap(),
            };
            let dense = d.materialize().unwrap();
            let (vals, _) = symmetric_eigen(&dense.t_matmul(&dense));
            let mut ours: Vec<f64> = (0..6).flat_map(|a| (0..6).map(move |b| (a, b))).map(|(a, b)| d.gram_eigenvalue(a, b)).collect();
            ours.sort_by(|a, b| b.total_cmp(a));
            for (x, y) in vals.iter().zip(&ours) {
                assert!((x - y).abs() < 1e-10, "{kind:?}: {x} vs {y}");
            }
            assert!((d.sigma_exact - vals[0].sqrt()).abs() < 1e-10);
        }
    }

    #[test]
    fn whitening_covariance_is_complement() {
        let d = small_design(4, 2, 0.5, 26);
        let dense = d.materialize().unwrap();
        let ktk = dense.t_matmul(&dense);
        // covariance of whiten_from(z) is W Wᵀ with W built column by column
        let n = 16;
        let cols: Vec<Vec<f64>> = (0..n)
            .map(|t| {
                let mut e = vec![0.0; n];
                e[t] = 1.0;
                d.whiten_from(&e)
            })
            .collect();
        let w = DenseMatrix::from_fn(n, n, |i, j| cols[j][i]);
        let cov = w.matmul(&w.transpose());
        let target = DenseMatrix::<f64>::identity(n).sub(&ktk);
        assert!(cov.max_abs_diff(&target) < 1e-12);
    }

    #[test]
    fn sigma_routes_agree_and_subadditivity_holds() {
        let d = small_design(16, 4, 0.2, 27);
        let check = verify_operator_norm(&d, 2000);
        assert!((check.sigma - d.sigma_exact).abs() < 1e-6, "{} vs {}", check.sigma, d.sigma_exact);
        let s1 = base_sigma(&d.base);
        assert!((s1 - d.base_sigma()).abs() < 1e-6);
        let ratio = (16.0f64 / 4.0).sqrt();
        let normalised = d.sigma_exact / (0.2 * (4.0f64 / 16.0).sqrt());
        assert!(normalised <= s1 * s1 + 2.0 * s1 * ratio + 1e-9);
        let closed = 0.2 * (s1 * s1 * (4.0f64 / 16.0).sqrt()).max(s1);
        assert!((closed - d.sigma_exact).abs() < 1e-6);
    }

    #[test]
    fn retries_succeed_and_exhaust() {
        let mut rng = stream(28, 0);
        let tiny = design_with_retries(16, 4, 1e-6f64, 3, &mut rng).unwrap();
        assert_eq!(tiny.attempts, 1);
        match design_with_retries(16, 4, 10.0f64, 3, &mut rng) {
            Err(Error::DesignExhausted { attempts: 3, last_sigma }) => assert!(last_sigma > 1.0),
            other => panic!("expected exhaustion, got {other:?}"),
        }
    }

    #[test]
    fn single_precision_design() {
        let g = sample_regular_digraph(8, 2, 300, &mut stream(29, 0)).unwrap();
        let d = kronecker_design(centered_matrix::<f32>(&g).unwrap(), 0.2f32).unwrap();
        let check = verify_operator_norm(&d, 500);
        assert!((check.sigma - d.sigma_exact as f64).abs() < 1e-3);
    }

    #[test]
    fn shape_rules() {
        assert!(check_design_shape(25, 5, 0.1).is_ok());
        assert!(check_design_shape(24, 5, 0.1).is_err());
        assert!(check_design_shape(16, 16, 0.1).is_err());
        assert!(check_design_shape(16, 1, 0.1).is_err());
    }

    #[test]
    fn export_lists_parameters_and_sets() {
        let d = small_design(4, 2, 0.5, 30);
        let text = d.export_csv();
        assert!(text.starts_with("kind,Recentered\nm,4\nr,2\n"));
        assert!(text.contains("# sets\n0,"));
    }
}
