use serde::{Deserialize, Serialize};

/// Two-sample Kolmogorov–Smirnov result.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
}

/// `Q(x) = 2 sum_{j>=1} (-1)^(j-1) exp(-2 j^2 x^2)`, the Kolmogorov tail.
pub fn kolmogorov_tail(x: f64) -> f64 {
    // the series converges slowly near zero, where the tail is 1 anyway
    if x < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    for j in 1..=100 {
        let jf = j as f64;
        let term = (-2.0 * jf * jf * x * x).exp();
        sum += if j % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Two-sample KS test with the asymptotic p-value (Stephens' small-sample
/// correction). Ties across samples are handled by advancing both sides past
/// equal values before comparing the empirical CDFs.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> KsResult {
    assert!(!a.is_empty() && !b.is_empty(), "KS needs two nonempty samples");
    let mut x = a.to_vec();
    let mut y = b.to_vec();
    x.sort_by(f64::total_cmp);
    y.sort_by(f64::total_cmp);
    let (n, m) = (x.len(), y.len());
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < n && j < m {
        let v = x[i].min(y[j]);
        while i < n && x[i] <= v {
            i += 1;
        }
        while j < m && y[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / n as f64 - j as f64 / m as f64).abs());
    }
    let ne = (n * m) as f64 / (n + m) as f64;
    let root = ne.sqrt();
    let p_value = kolmogorov_tail((root + 0.12 + 0.11 / root) * d);
    KsResult { statistic: d, p_value }
}

/// Plug-in total variation between two samples on `bins` bins whose edges
/// are pooled-sample quantiles. Biased upward by sampling noise, so it is a
/// lower-bound-style diagnostic rather than an estimate of the true distance.
pub fn binned_tv(a: &[f64], b: &[f64], bins: usize) -> f64 {
    assert!(bins >= 1 && !a.is_empty() && !b.is_empty());
    let mut pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    pooled.sort_by(f64::total_cmp);
    let mut edges: Vec<f64> = (1..bins).map(|i| pooled[i * pooled.len() / bins]).collect();
    edges.dedup();
    let hist = |s: &[f64]| {
        let mut h = vec![0usize; edges.len() + 1];
        for &v in s {
            h[edges.partition_point(|&e| e <= v)] += 1;
        }
        h
    };
    let (ha, hb) = (hist(a), hist(b));
    let (na, nb) = (a.len() as f64, b.len() as f64);
    ha.iter().zip(&hb).map(|(&x, &y)| (x as f64 / na - y as f64 / nb).abs()).sum::<f64>() / 2.0
}

/// Plug-in total variation between a sample and a reference law given by its
/// CDF, on `bins` uniform bins over `[lo, hi]` with both tails pooled into
/// the end bins.
pub fn histogram_tv(sample: &[f64], lo: f64, hi: f64, bins: usize, cdf: impl Fn(f64) -> f64) -> f64 {
    assert!(bins >= 1 && hi > lo && !sample.is_empty());
    let width = (hi - lo) / bins as f64;
    let mut counts = vec![0usize; bins];
    for &v in sample {
        let b = ((v - lo) / width).floor();
        counts[b.clamp(0.0, (bins - 1) as f64) as usize] += 1;
    }
    let n = sample.len() as f64;
    (0..bins)
        .map(|b| {
            let left = if b == 0 { 0.0 } else { cdf(lo + b as f64 * width) };
            let right = if b + 1 == bins { 1.0 } else { cdf(lo + (b + 1) as f64 * width) };
            (counts[b] as f64 / n - (right - left)).abs()
        })
        .sum::<f64>()
        / 2.0
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance.
pub fn variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() as f64 - 1.0)
}

/// Normal-approximation 95% half-width for a Bernoulli rate.
pub fn rate_half_width(rate: f64, trials: usize) -> f64 {
    1.96 * (rate * (1.0 - rate) / trials as f64).sqrt()
}
