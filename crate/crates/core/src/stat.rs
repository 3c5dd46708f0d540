//! Norms, the weighted-precedence statistic and the per-window statistics
//! built on top of it.
//!
//! Every statistic here depends on the norms only through their relative
//! order, so applying a strictly increasing map to a window leaves all
//! outputs bit-identical.

use alloc::vec::Vec;
use core::ops::RangeInclusive;

use crate::error::{Error, Result};

/// Window size `w` and quarantine constant `l0`.
///
/// A window of `w` norms is split at every partition size `l` in
/// `l0..=w - l0`, so there are `w - 2 * l0 + 1` partitions.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct WindowConfig {
    w: usize,
    l0: usize,
}

impl WindowConfig {
    pub fn new(w: usize, l0: usize) -> Result<Self> {
        if l0 == 0 {
            return Err(Error::invalid("quarantine constant l0 must be at least 1"));
        }
        if w < 2 * l0 {
            return Err(Error::invalid(alloc::format!(
                "window size {w} is smaller than 2 * l0 = {}",
                2 * l0
            )));
        }
        Ok(Self { w, l0 })
    }

    pub fn w(&self) -> usize {
        self.w
    }

    pub fn l0(&self) -> usize {
        self.l0
    }

    pub fn partition_count(&self) -> usize {
        self.w - 2 * self.l0 + 1
    }

    /// Sizes of the leading subsample, in increasing order.
    pub fn partition_sizes(&self) -> RangeInclusive<usize> {
        self.l0..=self.w - self.l0
    }
}

/// Euclidean norm of one observation.
pub fn l2_norm(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::invalid("observation has no coordinates"));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("observation contains a non-finite coordinate"));
    }
    Ok(l2_norm_unchecked(values))
}

#[inline]
pub(crate) fn l2_norm_unchecked(values: &[f64]) -> f64 {
    libm::sqrt(values.iter().map(|v| v * v).sum::<f64>())
}

fn check_norms(sample: &[f64], name: &str) -> Result<()> {
    if sample.is_empty() {
        return Err(Error::invalid(alloc::format!("{name} sample is empty")));
    }
    if sample.iter().any(|d| !d.is_finite() || *d < 0.0) {
        return Err(Error::invalid(alloc::format!(
            "{name} sample contains a negative or non-finite norm"
        )));
    }
    Ok(())
}

/// Modified weighted-precedence statistic of `first` against `second`.
///
/// Each value of `first` falling in the bin `(d2_(k-1), d2_(k)]` of the
/// ordered `second` sample receives weight `m - k + 1`; the weighted count is
/// normalized by `l * m`. The result is 1 when every value of `first` is at
/// most `min(second)` and 0 when every value exceeds `max(second)`.
pub fn weighted_precedence(first: &[f64], second: &[f64]) -> Result<f64> {
    check_norms(first, "first")?;
    check_norms(second, "second")?;

    let mut ordered = second.to_vec();
    ordered.sort_unstable_by(f64::total_cmp);
    let m = ordered.len();

    // A value with `c` order statistics strictly below it lies in bin k = c + 1.
    let weighted: usize = first
        .iter()
        .map(|&d| m - ordered.partition_point(|&b| b < d))
        .sum();
    Ok(normalize(weighted, first.len(), m))
}

#[inline]
fn normalize(count: usize, l: usize, m: usize) -> f64 {
    count as f64 / (l * m) as f64
}

/// The statistics `T_il` for every partition of one window, ordered by
/// increasing partition size.
#[derive(Clone, Debug, PartialEq)]
pub struct PartitionStatistics(Vec<f64>);

impl PartitionStatistics {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::invalid("partition statistics are empty"));
        }
        if values.iter().any(|t| !(0.0..=1.0).contains(t)) {
            return Err(Error::invalid("partition statistic outside [0, 1]"));
        }
        Ok(Self(values))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

/// Splits `window` at every admissible partition size and evaluates the
/// weighted-precedence statistic of the leading part against the rest.
pub fn partition_statistics(window: &[f64], cfg: WindowConfig) -> Result<PartitionStatistics> {
    if window.len() != cfg.w() {
        return Err(Error::invalid(alloc::format!(
            "window holds {} norms, expected {}",
            window.len(),
            cfg.w()
        )));
    }
    let values = cfg
        .partition_sizes()
        .map(|l| weighted_precedence(&window[..l], &window[l..]))
        .collect::<Result<Vec<_>>>()?;
    Ok(PartitionStatistics(values))
}

/// Sample quantile by linear interpolation between order statistics with
/// `h = (n - 1) q + 1`.
pub fn quantile(sample: &[f64], q: f64) -> Result<f64> {
    if sample.is_empty() {
        return Err(Error::invalid("quantile of an empty sample"));
    }
    if !(0.0..=1.0).contains(&q) {
        return Err(Error::invalid(alloc::format!("quantile level {q} outside [0, 1]")));
    }
    let mut sorted = sample.to_vec();
    sorted.sort_unstable_by(f64::total_cmp);
    Ok(quantile_sorted(&sorted, q))
}

/// `quantile` on data that is already sorted ascending.
pub(crate) fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    let h = (n - 1) as f64 * q + 1.0;
    let lower = libm::floor(h);
    let frac = h - lower;
    let lo = lower as usize - 1;
    let hi = (lo + 1).min(n - 1);
    sorted[lo] + frac * (sorted[hi] - sorted[lo])
}

/// `max(Q3, 1 - Q1)` of the partition statistics.
pub fn window_statistic(parts: &PartitionStatistics) -> f64 {
    let mut sorted = parts.0.clone();
    sorted.sort_unstable_by(f64::total_cmp);
    statistic_from_sorted(&sorted)
}

#[inline]
fn statistic_from_sorted(sorted: &[f64]) -> f64 {
    let upper = quantile_sorted(sorted, 0.75);
    let lower = quantile_sorted(sorted, 0.25);
    upper.max(1.0 - lower)
}

/// Which extremum of the partition statistics was the more extreme one.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Side {
    /// The maximum: leading values tend to precede the trailing ones.
    Upper,
    /// The minimum: leading values tend to exceed the trailing ones.
    Lower,
}

impl Side {
    pub fn as_str(&self) -> &'static str {
        match self {
            Side::Upper => "upper",
            Side::Lower => "lower",
        }
    }
}

/// The partition holding the most extreme statistic of a window.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct ExtremalPartition {
    pub side: Side,
    /// 1-based position in the partition list.
    pub index: usize,
    /// Size of the leading subsample, `l0 + index - 1`.
    pub partition_size: usize,
}

/// Locates the extremal partition. The minimum wins only when `1 - min`
/// strictly exceeds the maximum; ties within a side go to the earliest
/// partition.
pub fn extremal_partition(parts: &PartitionStatistics, cfg: WindowConfig) -> ExtremalPartition {
    extremal_in(&parts.0, cfg)
}

fn extremal_in(values: &[f64], cfg: WindowConfig) -> ExtremalPartition {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let (side, target) = if 1.0 - min > max {
        (Side::Lower, min)
    } else {
        (Side::Upper, max)
    };
    let index = values
        .iter()
        .position(|&t| t == target)
        .expect("extremum is drawn from the values")
        + 1;
    ExtremalPartition {
        side,
        index,
        partition_size: cfg.l0() + index - 1,
    }
}

/// Estimated change-point for a signal raised at window `r` (1-based):
/// `r + l0 + index - 1`.
pub fn estimate_changepoint(r: usize, cfg: WindowConfig, ext: &ExtremalPartition) -> usize {
    debug_assert!(r >= 1);
    debug_assert!((1..=cfg.partition_count()).contains(&ext.index));
    r + cfg.l0() + ext.index - 1
}

/// Reusable evaluator producing the same values as [`partition_statistics`]
/// and [`window_statistic`] without per-call sorting of every subsample.
///
/// The leading-vs-trailing pair count is updated incrementally as the split
/// point moves right, so a whole window costs `O(w^2)` comparisons.
#[derive(Clone, Debug)]
pub struct WindowEvaluator {
    cfg: WindowConfig,
    parts: Vec<f64>,
    sorted: Vec<f64>,
}

impl WindowEvaluator {
    pub fn new(cfg: WindowConfig) -> Self {
        Self {
            cfg,
            parts: Vec::with_capacity(cfg.partition_count()),
            sorted: Vec::with_capacity(cfg.partition_count()),
        }
    }

    pub fn config(&self) -> WindowConfig {
        self.cfg
    }

    /// Evaluates one window and returns its statistic `T_i`. The partition
    /// statistics stay available through [`Self::partitions`].
    ///
    /// `window` must hold exactly `w` norms.
    pub fn evaluate(&mut self, window: &[f64]) -> f64 {
        let w = self.cfg.w();
        let l0 = self.cfg.l0();
        assert_eq!(window.len(), w, "window length must equal w");

        let mut count: usize = 0;
        for a in &window[..l0] {
            count += window[l0..].iter().filter(|&&b| *a <= b).count();
        }
        self.parts.clear();
        for l in self.cfg.partition_sizes() {
            if l > l0 {
                // Move window[l - 1] from the trailing to the leading part.
                let moved = window[l - 1];
                count -= window[..l - 1].iter().filter(|&&a| a <= moved).count();
                count += window[l..].iter().filter(|&&b| moved <= b).count();
            }
            self.parts.push(normalize(count, l, w - l));
        }

        self.sorted.clear();
        self.sorted.extend_from_slice(&self.parts);
        self.sorted.sort_unstable_by(f64::total_cmp);
        statistic_from_sorted(&self.sorted)
    }

    /// Partition statistics of the most recently evaluated window.
    pub fn partitions(&self) -> &[f64] {
        &self.parts
    }

    /// Extremal partition of the most recently evaluated window.
    pub fn extremal(&self) -> ExtremalPartition {
        extremal_in(&self.parts, self.cfg)
    }
}
