use serde::{Deserialize, Serialize};

use crate::design::design_scale;
use crate::error::{check_density, Error, Result};
use crate::kernels::{clone_density, kernel_delta, max_kernel_mean};
use crate::scalar::normal_cdf;

/// Which target model a reduction produces.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TargetModel {
    PdsStar,
    Isbm,
}

/// Everything the k-PC pipelines need, derived once from the source sizes.
///
/// The rejection kernel maps each bit to `N(mu_rk, 1)` or `N(0, 1)`; the
/// design then multiplies the mean by `design_scale`, so the Gaussian signal
/// on the planted rectangle has overall scale `mu = mu_rk * design_scale`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReductionParams {
    pub target: TargetModel,
    /// Source vertex count `N`.
    pub source_n: usize,
    pub k0: usize,
    pub p: f64,
    pub q: f64,
    pub r: usize,
    pub alpha: f64,
    /// Target vertex count.
    pub n: usize,
    /// Planted size `n / r`.
    pub k: usize,
    /// Block side `n / k0`.
    pub m: usize,
    /// Two-way clone density.
    #[serde(rename = "Q")]
    pub big_q: f64,
    /// Calibrated bound on `sigma(R)`.
    pub c_hat: f64,
    pub mu_rk: f64,
    pub design_scale: f64,
    pub mu: f64,
    pub gamma: f64,
    pub r_rk: u64,
    pub target_p0: Option<f64>,
}

/// Alias kept for the PDS* pipeline, whose parameters are the same record.
pub type PdsStarReductionParams = ReductionParams;

/// `R_rk = n^3`, saturating.
pub fn default_kernel_budget(n: usize) -> u64 {
    (n as u64).saturating_pow(3)
}

/// Smallest multiple of `k0 r` that is at least `(1 + p/Q) N`.
pub fn target_size(source_n: usize, k0: usize, r: usize, p: f64, big_q: f64) -> usize {
    let lower = (1.0 + p / big_q) * source_n as f64;
    let step = k0 * r;
    // guard the float ceiling against values a hair above an integer
    let blocks = ((lower - 1e-9) / step as f64).ceil().max(1.0) as usize;
    blocks * step
}

/// `min(log(p/Q), log((1-Q)/(1-p))) / (12 C sqrt(log N + log(1/(p-Q))))`.
pub fn signal_bound(source_n: usize, p: f64, big_q: f64, c_hat: f64) -> f64 {
    let lead = kernel_delta(p, big_q);
    lead / (12.0 * c_hat * ((source_n as f64).ln() + (1.0 / (p - big_q)).ln()).sqrt())
}

fn common(
    target: TargetModel,
    source_n: usize,
    k0: usize,
    p: f64,
    q: f64,
    r: usize,
    alpha: f64,
    c_hat: f64,
) -> Result<ReductionParams> {
    check_density("p", p)?;
    check_density("q", q)?;
    if !(q > 0.0 && q < p) {
        return Err(Error::param("p, q", format!("need 0 < q < p <= 1, got p = {p}, q = {q}")));
    }
    if k0 == 0 || source_n % k0 != 0 {
        return Err(Error::param("k0", format!("k0 = {k0} must divide N = {source_n}")));
    }
    if r < 2 {
        return Err(Error::param("r", "need r >= 2"));
    }
    if !(0.0..1.0).contains(&alpha) {
        return Err(Error::param("alpha", "must lie in [0, 1)"));
    }
    let cap = ((source_n / k0) as f64).powf(1.0 - alpha);
    if r as f64 > cap + 1e-9 {
        return Err(Error::Infeasible(format!("r = {r} exceeds (N/k0)^(1-alpha) = {cap:.4}")));
    }
    if !(c_hat.is_finite() && c_hat > 0.0) {
        return Err(Error::param("c_hat", "must be positive and finite"));
    }
    let big_q = clone_density(p, q);
    let n = target_size(source_n, k0, r, p, big_q);
    let m = n / k0;
    let r_rk = default_kernel_budget(n);
    if r_rk < 2 {
        return Err(Error::Infeasible("kernel budget below two attempts".into()));
    }
    let kernel_cap = max_kernel_mean(p, big_q, r_rk);
    let ds = match target {
        TargetModel::PdsStar => design_scale(c_hat),
        TargetModel::Isbm => 1.0 / (c_hat * c_hat),
    };
    let mu_rk = kernel_cap.min(signal_bound(source_n, p, big_q, c_hat) / ds);
    if !(mu_rk.is_finite() && mu_rk > 0.0) {
        return Err(Error::Infeasible(format!("signal bound is empty (mu = {mu_rk})")));
    }
    let mu = mu_rk * ds;
    let gamma = match target {
        TargetModel::PdsStar => mu * ((k0 * r) as f64 / n as f64).powf(1.5),
        TargetModel::Isbm => mu * r as f64 / m as f64,
    };
    Ok(ReductionParams {
        target,
        source_n,
        k0,
        p,
        q,
        r,
        alpha,
        n,
        k: n / r,
        m,
        big_q,
        c_hat,
        mu_rk,
        design_scale: ds,
        mu,
        gamma,
        r_rk,
        target_p0: None,
    })
}

/// Parameters of the k-PC to PDS* pipeline. `c_hat` is the calibrated bound
/// on `sigma(R)` for `m = n/k0` (see [`crate::design::calibrate_c_hat`]).
pub fn derive_pds_star_params(
    source_n: usize,
    k0: usize,
    p: f64,
    q: f64,
    r: usize,
    alpha: f64,
    c_hat: f64,
) -> Result<ReductionParams> {
    common(TargetModel::PdsStar, source_n, k0, p, q, r, alpha, c_hat)
}

/// Parameters of the k-PC to ISBM pipeline, design `(R ⊗ R)/C^2`.
pub fn derive_isbm_params(
    source_n: usize,
    k0: usize,
    p: f64,
    q: f64,
    r: usize,
    alpha: f64,
    c_hat: f64,
) -> Result<ReductionParams> {
    common(TargetModel::Isbm, source_n, k0, p, q, r, alpha, c_hat)
}

impl ReductionParams {
    /// Block side `n / k0`; useful before a design is sampled.
    pub fn block_side(source_n: usize, k0: usize, r: usize, p: f64, q: f64) -> Result<usize> {
        if k0 == 0 || q <= 0.0 || q >= p {
            return Err(Error::param("k0, p, q", "need k0 > 0 and 0 < q < p"));
        }
        Ok(target_size(source_n, k0, r, p, clone_density(p, q)) / k0)
    }

    pub fn with_target_p0(mut self, p0: Option<f64>) -> Result<Self> {
        if let Some(v) = p0 {
            if !(v > 0.0 && v < 1.0) {
                return Err(Error::param("target_p0", format!("must lie in (0, 1), got {v}")));
            }
        }
        self.target_p0 = p0;
        Ok(self)
    }

    /// Replaces the kernel precision and re-clamps `mu_rk` to the new kernel bound.
    pub fn with_kernel_budget(mut self, r_rk: u64) -> Result<Self> {
        if r_rk < 2 {
            return Err(Error::param("r_rk", "need at least two attempts"));
        }
        let cap = max_kernel_mean(self.p, self.big_q, r_rk);
        let bound = signal_bound(self.source_n, self.p, self.big_q, self.c_hat) / self.design_scale;
        self.r_rk = r_rk;
        self.mu_rk = cap.min(bound);
        self.mu = self.mu_rk * self.design_scale;
        self.gamma = match self.target {
            TargetModel::PdsStar => self.mu * ((self.k0 * self.r) as f64 / self.n as f64).powf(1.5),
            TargetModel::Isbm => self.mu * self.r as f64 / self.m as f64,
        };
        Ok(self)
    }

    /// Planted-pair density after thresholding, `Φ((r^2-1)γ/r^2)`.
    pub fn p1(&self) -> f64 {
        let r2 = (self.r * self.r) as f64;
        normal_cdf((r2 - 1.0) * self.gamma / r2)
    }

    /// Remaining density, `Φ(-γ/r^2)`.
    pub fn p2(&self) -> f64 {
        normal_cdf(-self.gamma / (self.r * self.r) as f64)
    }

    /// `(P11, P12, P22)` of the ISBM output before densification.
    pub fn isbm_densities(&self) -> (f64, f64, f64) {
        let r = self.r as f64;
        let g = self.gamma / (r * r);
        (normal_cdf((r - 1.0) * (r - 1.0) * g), normal_cdf(-(r - 1.0) * g), normal_cdf(g))
    }

    /// Where densification moves a thresholded density `s`.
    pub fn densified(&self, s: f64) -> f64 {
        match self.target_p0 {
            None => s,
            Some(p0) if p0 <= 0.5 => 2.0 * p0 * s,
            Some(p0) => 1.0 - 2.0 * (1.0 - p0) * (1.0 - s),
        }
    }

    /// Null edge density of the output.
    pub fn null_density(&self) -> f64 {
        self.densified(0.5)
    }

    /// Declared TV cost of the partite embedding. The square-root term only
    /// applies when a planted set is present.
    pub fn partite_budget(&self, planted: bool) -> f64 {
        let (nn, n, k0) = (self.source_n as f64, self.n as f64, self.k0 as f64);
        let q = self.big_q;
        let tail = 4.0 * k0 * (-(q * q * nn * nn) / (48.0 * self.p * k0 * n)).exp();
        if planted {
            let c_q = (q / (1.0 - q)).max((1.0 - q) / q);
            tail + (c_q * k0 * k0 / (2.0 * n)).sqrt()
        } else {
            tail
        }
    }

    /// Declared TV cost of the rotations: `m^2 R^-3` per block over `k0^2` blocks.
    pub fn rotation_budget(&self) -> f64 {
        let n = self.n as f64;
        n * n * (self.r_rk as f64).powi(-3)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn worked_example_sizes() {
        let p = derive_pds_star_params(100, 10, 1.0, 0.5, 5, 0.0, 2.0).unwrap();
        assert!((p.big_q - 0.5f64.sqrt()).abs() < 1e-12);
        assert_eq!((p.n, p.k, p.m), (250, 50, 25));
        assert_eq!(p.r_rk, 250u64.pow(3));
        assert!((p.gamma - p.mu * 0.2f64.powf(1.5)).abs() < 1e-15);
        assert!((0.2f64.powf(1.5) - 0.0894427).abs() < 1e-7);
        // kernel bound binds: log(1/Q) / (2 sqrt(6 log R + 2 log(1/(1-Q))))
        let expect = (1.0 / p.big_q).ln() / (2.0 * (6.0 * (p.r_rk as f64).ln() + 2.0 * (1.0 / (1.0 - p.big_q)).ln()).sqrt());
        assert!((p.mu_rk - expect).abs() < 1e-15);
        assert!((p.mu_rk - 0.01717).abs() < 1e-4);
        assert!(p.mu <= signal_bound(100, 1.0, p.big_q, 2.0) + 1e-15);
    }

    #[test]
    fn target_size_is_smallest_multiple() {
        for &(nn, k0, r) in &[(100, 10, 5), (60, 6, 2), (200, 20, 3)] {
            let q = clone_density(1.0, 0.5);
            let n = target_size(nn, k0, r, 1.0, q);
            let lower = (1.0 + 1.0 / q) * nn as f64;
            assert_eq!(n % (k0 * r), 0);
            assert!(n as f64 >= lower && ((n - k0 * r) as f64) < lower);
        }
    }

    #[test]
    fn infeasible_ratio_rejected() {
        // (N/k0)^(1-alpha) = 10^0.5 ~ 3.16
        assert!(matches!(
            derive_pds_star_params(100, 10, 1.0, 0.5, 5, 0.5, 2.0),
            Err(Error::Infeasible(_))
        ));
        assert!(derive_pds_star_params(100, 10, 1.0, 0.5, 5, 0.1, 2.0).is_ok());
        assert!(derive_pds_star_params(100, 7, 1.0, 0.5, 5, 0.0, 2.0).is_err());
    }

    #[test]
    fn densities_at_zero_signal_are_half() {
        let mut p = derive_pds_star_params(100, 10, 1.0, 0.5, 5, 0.0, 2.0).unwrap();
        p.gamma = 0.0;
        assert_eq!((p.p1(), p.p2()), (0.5, 0.5));
        p.target = TargetModel::Isbm;
        assert_eq!(p.isbm_densities(), (0.5, 0.5, 0.5));
    }

    #[test]
    fn isbm_gamma_matches_plain_design_scale() {
        let p = derive_isbm_params(100, 10, 1.0, 0.5, 5, 0.0, 2.0).unwrap();
        assert!((p.gamma - p.mu_rk * 5.0 / (4.0 * 25.0)).abs() < 1e-15);
    }

    #[test]
    fn densified_null_matches_target() {
        let p = derive_pds_star_params(100, 10, 1.0, 0.5, 5, 0.0, 2.0)
            .unwrap()
            .with_target_p0(Some(0.3))
            .unwrap();
        assert!((p.null_density() - 0.3).abs() < 1e-15);
        let hi = p.clone().with_target_p0(Some(0.8)).unwrap();
        assert!((hi.null_density() - 0.8).abs() < 1e-15);
    }
}
