use statrs::function::factorial::ln_binomial;

use crate::error::{Error, Result};
use crate::scalar::Real;

fn interior(name: &'static str, x: f64) -> Result<()> {
    if x > 0.0 && x < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidDensity {
            name,
            value: x,
            range: "(0, 1)",
        })
    }
}

/// `KL(Bern(p) || Bern(q))` in nats.
pub fn kl_bernoulli<T: Real>(p: T, q: T) -> Result<T> {
    interior("p", crate::scalar::to_f64(p))?;
    interior("q", crate::scalar::to_f64(q))?;
    let one = T::one();
    Ok(p * (p / q).ln() + (one - p) * ((one - p) / (one - q)).ln())
}

/// `(p - q)^2 / (q (1 - q))`.
pub fn chi2_bernoulli<T: Real>(p: T, q: T) -> Result<T> {
    interior("q", crate::scalar::to_f64(q))?;
    let pf = crate::scalar::to_f64(p);
    if !(0.0..=1.0).contains(&pf) {
        return Err(Error::InvalidDensity {
            name: "p",
            value: pf,
            range: "[0, 1]",
        });
    }
    Ok((p - q) * (p - q) / (q * (T::one() - q)))
}

/// `sqrt(n (p-q)^2 / (2 q (1-q)))`, an upper bound on
/// `TV(Bin(n, p), Bin(n, q))`.
pub fn tv_binomial_bound(n: usize, p: f64, q: f64) -> Result<f64> {
    let c = chi2_bernoulli(p, q)?;
    Ok((n as f64 * c / 2.0).sqrt())
}

/// `E exp(lambda (H^2 - (E H)^2))` for `H ~ Hypergeometric(n, k, k)`, the
/// overlap of two independent uniform `k`-subsets of `[n]`.
///
/// Accumulated in log space; returns `+inf` if the result overflows.
pub fn ingster_chi2(n: usize, k: usize, lambda: f64) -> Result<f64> {
    if k > n {
        return Err(Error::param("k", format!("need k <= n, got k = {k}, n = {n}")));
    }
    if lambda == 0.0 {
        return Ok(1.0);
    }
    let mean = (k * k) as f64 / n as f64;
    let total = ln_binomial(n as u64, k as u64);
    let lo = (2 * k).saturating_sub(n);
    let terms: Vec<f64> = (lo..=k)
        .map(|h| {
            let log_pmf = ln_binomial(k as u64, h as u64) + ln_binomial((n - k) as u64, (k - h) as u64) - total;
            log_pmf + lambda * ((h * h) as f64 - mean * mean)
        })
        .collect();
    let top = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let log_sum = top + terms.iter().map(|t| (t - top).exp()).sum::<f64>().ln();
    Ok(if log_sum > f64::MAX.ln() { f64::INFINITY } else { log_sum.exp() })
}
