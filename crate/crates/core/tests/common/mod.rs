//! Independent reference computations shared by the integration tests. None
//! of these call into the library's statistic or sampling code.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Double loop over every `(a, b)` pair: `sum I(a <= b) / (l * m)`.
pub fn pairwise_precedence(first: &[f64], second: &[f64]) -> f64 {
    let mut hits = 0usize;
    for a in first {
        for b in second {
            if a <= b {
                hits += 1;
            }
        }
    }
    hits as f64 / (first.len() * second.len()) as f64
}

/// Every partition statistic of a window by brute force.
pub fn pairwise_partitions(window: &[f64], l0: usize) -> Vec<f64> {
    let w = window.len();
    (l0..=w - l0)
        .map(|l| pairwise_precedence(&window[..l], &window[l..]))
        .collect()
}

/// Type-7 sample quantile, coded from the definition.
pub fn quantile7(sample: &[f64], q: f64) -> f64 {
    let mut s = sample.to_vec();
    s.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let h = (s.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    s[lo] + (h - lo as f64) * (s[hi] - s[lo])
}

pub fn window_stat_oracle(window: &[f64], l0: usize) -> f64 {
    let parts = pairwise_partitions(window, l0);
    let q3 = quantile7(&parts, 0.75);
    let q1 = quantile7(&parts, 0.25);
    q3.max(1.0 - q1)
}

/// Asymptotic Kolmogorov survival function `Q(x) = 2 sum (-1)^(k-1) e^(-2 k^2 x^2)`.
fn kolmogorov_q(x: f64) -> f64 {
    if x < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let k = k as f64;
        let term = (-2.0 * k * k * x * x).exp();
        sum += if k as u64 % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Two-sample Kolmogorov-Smirnov test; returns `(D, p)`. Handles ties by
/// stepping past every copy of a value before comparing the ECDFs.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> (f64, f64) {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(|x, y| x.partial_cmp(y).unwrap());
    b.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let (n, m) = (a.len(), b.len());
    let (mut i, mut j, mut d) = (0usize, 0usize, 0.0f64);
    while i < n && j < m {
        let x = a[i].min(b[j]);
        while i < n && a[i] == x {
            i += 1;
        }
        while j < m && b[j] == x {
            j += 1;
        }
        d = d.max((i as f64 / n as f64 - j as f64 / m as f64).abs());
    }
    let ne = (n * m) as f64 / (n + m) as f64;
    let sq = ne.sqrt();
    (d, kolmogorov_q((sq + 0.12 + 0.11 / sq) * d))
}

/// One-sample KS test against `Exp(rate)`; returns `(D, p)`.
pub fn ks_exponential(sample: &[f64], rate: f64) -> (f64, f64) {
    let mut s = sample.to_vec();
    s.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let n = s.len() as f64;
    let mut d = 0.0f64;
    for (k, x) in s.iter().enumerate() {
        let f = 1.0 - (-rate * x).exp();
        d = d.max(((k + 1) as f64 / n - f).abs()).max((f - k as f64 / n).abs());
    }
    let sq = n.sqrt();
    (d, kolmogorov_q((sq + 0.12 + 0.11 / sq) * d))
}

/// Kendall's tau from disjoint pairs of draws: the fraction of concordant
/// minus discordant comparisons between draw `2k` and draw `2k + 1`.
pub fn kendall_tau_disjoint(xs: &[f64], ys: &[f64]) -> f64 {
    let mut s = 0.0;
    let pairs = xs.len() / 2;
    for k in 0..pairs {
        let dx = xs[2 * k] - xs[2 * k + 1];
        let dy = ys[2 * k] - ys[2 * k + 1];
        s += (dx * dy).signum();
    }
    s / pairs as f64
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

pub fn pearson(xs: &[f64], ys: &[f64]) -> f64 {
    let (mx, my) = (mean(xs), mean(ys));
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
    }
    sxy / (sxx * syy).sqrt()
}

/// Haar-ish random orthogonal matrix by Gram-Schmidt on Gaussian columns.
pub fn random_orthogonal<R: Rng>(p: usize, rng: &mut R) -> Vec<Vec<f64>> {
    let mut q: Vec<Vec<f64>> = Vec::with_capacity(p);
    while q.len() < p {
        let mut v: Vec<f64> = (0..p).map(|_| gaussian(rng)).collect();
        for u in &q {
            let dot: f64 = v.iter().zip(u).map(|(a, b)| a * b).sum();
            for (x, y) in v.iter_mut().zip(u) {
                *x -= dot * y;
            }
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-6 {
            q.push(v.into_iter().map(|x| x / norm).collect());
        }
    }
    q
}

pub fn mat_vec(a: &[Vec<f64>], x: &[f64]) -> Vec<f64> {
    a.iter().map(|row| row.iter().zip(x).map(|(r, v)| r * v).sum()).collect()
}

/// Box-Muller, kept local so the tests do not share the library's sampler.
pub fn gaussian<R: Rng>(rng: &mut R) -> f64 {
    let u1: f64 = rng.random::<f64>().max(1e-300);
    let u2: f64 = rng.random();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}
