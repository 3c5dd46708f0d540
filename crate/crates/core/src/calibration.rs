//! Monte-Carlo calibration of the per-window conditional control limits.
//!
//! `h_1` is the `1 - alpha` quantile of `T_1` over all replicates; `h_i` is
//! the `1 - alpha` quantile of `T_i` over the replicates that have not
//! signaled at windows `1..i`. Estimation stops once fewer than
//! `survivor_floor` replicates remain, after which every window uses the
//! tail limit (median of the last `tail_pool` estimates).

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::experiments::RunLengthSummary;
use crate::monitor::WindowStream;
use crate::par;
use crate::sampling::{DistributionSpec, RngStream, Sampler, StreamRng};
use crate::stat::{quantile_sorted, WindowConfig};

#[derive(Clone, Debug, PartialEq)]
pub struct CalibrationSettings {
    pub cfg: WindowConfig,
    /// Conditional false-alarm probability per window.
    pub alpha: f64,
    pub replications: usize,
    /// Observations simulated per replicate; yields `n - w + 1` windows.
    pub sequence_length: usize,
    pub survivor_floor: usize,
    pub tail_pool: usize,
    pub seed: u64,
    pub source: DistributionSpec,
}

impl CalibrationSettings {
    pub const DEFAULT_ALPHA: f64 = 0.004;
    pub const DEFAULT_REPLICATIONS: usize = 10_000;
    pub const DEFAULT_SEQUENCE_LENGTH: usize = 2500;
    pub const DEFAULT_SURVIVOR_FLOOR: usize = 1000;
    pub const DEFAULT_TAIL_POOL: usize = 50;

    /// Default settings calibrated from i.i.d. uniform norms.
    pub fn new(cfg: WindowConfig, seed: u64) -> Self {
        Self {
            cfg,
            alpha: Self::DEFAULT_ALPHA,
            replications: Self::DEFAULT_REPLICATIONS,
            sequence_length: Self::DEFAULT_SEQUENCE_LENGTH,
            survivor_floor: Self::DEFAULT_SURVIVOR_FLOOR,
            tail_pool: Self::DEFAULT_TAIL_POOL,
            seed,
            source: DistributionSpec::UniformNorms,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 0.5) {
            return Err(Error::invalid("alpha must lie in (0, 0.5)"));
        }
        if self.survivor_floor < 10 {
            return Err(Error::invalid("survivor floor must be at least 10"));
        }
        if self.replications < self.survivor_floor {
            return Err(Error::invalid("replications must be at least the survivor floor"));
        }
        if self.sequence_length < self.cfg.w() {
            return Err(Error::invalid("sequence length is shorter than one window"));
        }
        if self.tail_pool == 0 {
            return Err(Error::invalid("tail pool must be at least 1"));
        }
        self.source.validate()
    }

    pub fn windows(&self) -> usize {
        self.sequence_length - self.cfg.w() + 1
    }
}

/// Calibrated limit profile `h_1 .. h_m` plus the tail limit used beyond `m`.
#[derive(Clone, Debug, PartialEq)]
pub struct ControlLimits {
    alpha: f64,
    cfg: WindowConfig,
    limits: Vec<f64>,
    tail_limit: f64,
    replications: usize,
    seed: u64,
    survivor_floor: usize,
}

impl ControlLimits {
    /// Assembles a profile from its parts. Limits above 1 are accepted (they
    /// can never be reached); [`Self::check_range`] enforces `[0.5, 1]`.
    pub fn from_parts(
        alpha: f64,
        cfg: WindowConfig,
        limits: Vec<f64>,
        tail_limit: f64,
        replications: usize,
        seed: u64,
        survivor_floor: usize,
    ) -> Result<Self> {
        if limits.is_empty() {
            return Err(Error::invalid("control limits need at least one estimated window"));
        }
        if limits.iter().chain([&tail_limit]).any(|h| !h.is_finite()) {
            return Err(Error::invalid("control limits must be finite"));
        }
        if !(alpha > 0.0 && alpha < 0.5) {
            return Err(Error::invalid("alpha must lie in (0, 0.5)"));
        }
        Ok(Self { alpha, cfg, limits, tail_limit, replications, seed, survivor_floor })
    }

    /// Same limit at every window.
    pub fn constant(cfg: WindowConfig, alpha: f64, h: f64) -> Result<Self> {
        Self::from_parts(alpha, cfg, alloc::vec![h], h, 0, 0, 0)
    }

    /// Every limit lies in `[0.5, 1]`, the range of the window statistic.
    pub fn check_range(&self) -> Result<()> {
        match self
            .limits
            .iter()
            .chain([&self.tail_limit])
            .find(|h| !(0.5..=1.0).contains(*h))
        {
            Some(h) => Err(Error::invalid(alloc::format!("control limit {h} outside [0.5, 1]"))),
            None => Ok(()),
        }
    }

    /// Limit for window `i` (1-based).
    pub fn limit(&self, i: usize) -> f64 {
        debug_assert!(i >= 1);
        self.limits.get(i - 1).copied().unwrap_or(self.tail_limit)
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn config(&self) -> WindowConfig {
        self.cfg
    }

    pub fn limits(&self) -> &[f64] {
        &self.limits
    }

    pub fn tail_limit(&self) -> f64 {
        self.tail_limit
    }

    pub fn estimated_through(&self) -> usize {
        self.limits.len()
    }

    pub fn replications(&self) -> usize {
        self.replications
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn survivor_floor(&self) -> usize {
        self.survivor_floor
    }
}

/// Output of [`calibrate`].
#[derive(Clone, Debug, PartialEq)]
pub struct Calibration {
    pub limits: ControlLimits,
    /// Replicates still at risk at each estimated window.
    pub survivors: Vec<usize>,
    /// Replicates signaled at each estimated window.
    pub signaled: Vec<usize>,
    /// In-control run length of each replicate, `None` if it outlived the
    /// estimated windows.
    pub run_lengths: Vec<Option<usize>>,
}

impl Calibration {
    pub fn summary(&self) -> RunLengthSummary {
        RunLengthSummary::from_run_lengths(&self.run_lengths, self.limits.estimated_through())
    }
}

struct Replica<'a> {
    id: usize,
    rng: StreamRng,
    sampler: Sampler<'a>,
    stream: WindowStream,
    statistic: f64,
}

impl Replica<'_> {
    fn advance(&mut self) {
        let d = self.sampler.draw_norm(&mut self.rng);
        self.statistic = self.stream.push(d).expect("stream is primed with w - 1 norms");
    }
}

/// Estimates the conditional control limits by simulating
/// `settings.replications` in-control streams in lockstep.
pub fn calibrate(settings: &CalibrationSettings) -> Result<Calibration> {
    settings.validate()?;
    let cfg = settings.cfg;
    let q = 1.0 - settings.alpha;

    let mut alive = par::map_indices(settings.replications, |id| {
        let mut rng = RngStream::new(settings.seed, id as u64).rng();
        let mut sampler = Sampler::new(&settings.source).expect("source validated");
        let mut stream = WindowStream::new(cfg);
        for _ in 1..cfg.w() {
            stream.push(sampler.draw_norm(&mut rng));
        }
        Replica { id, rng, sampler, stream, statistic: 0.0 }
    });

    let mut limits = Vec::new();
    let mut survivors = Vec::new();
    let mut signaled = Vec::new();
    let mut run_lengths = alloc::vec![None; settings.replications];
    let mut values = Vec::with_capacity(settings.replications);

    for i in 1..=settings.windows() {
        if alive.len() < settings.survivor_floor {
            break;
        }
        par::for_each_mut(&mut alive, Replica::advance);

        values.clear();
        values.extend(alive.iter().map(|r| r.statistic));
        values.sort_unstable_by(f64::total_cmp);
        let h = quantile_sorted(&values, q);

        let before = alive.len();
        alive.retain(|r| {
            if r.statistic >= h {
                run_lengths[r.id] = Some(i);
                false
            } else {
                true
            }
        });
        limits.push(h);
        survivors.push(before);
        signaled.push(before - alive.len());
    }

    let pool = settings.tail_pool.min(limits.len());
    let mut tail: Vec<f64> = limits[limits.len() - pool..].to_vec();
    tail.sort_unstable_by(f64::total_cmp);
    let tail_limit = quantile_sorted(&tail, 0.5);

    let limits = ControlLimits::from_parts(
        settings.alpha,
        cfg,
        limits,
        tail_limit,
        settings.replications,
        settings.seed,
        settings.survivor_floor,
    )?;
    Ok(Calibration { limits, survivors, signaled, run_lengths })
}

/// Fresh-sample estimate of `P[T_i >= h_i | no signal before i]` for every
/// estimated window. The list stops early if every replicate has signaled.
pub fn conditional_exceedance(
    limits: &ControlLimits,
    spec: &DistributionSpec,
    reps: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    if reps < 1000 {
        return Err(Error::invalid("conditional exceedance needs at least 1000 replicates"));
    }
    spec.validate()?;
    let cfg = limits.config();
    let m = limits.estimated_through();

    let first_signal = par::map_indices(reps, |k| {
        let mut rng = RngStream::new(seed, k as u64).rng();
        let mut sampler = Sampler::new(spec).expect("spec validated");
        let mut stream = WindowStream::new(cfg);
        let mut i = 0;
        while i < m {
            if let Some(t) = stream.push(sampler.draw_norm(&mut rng)) {
                i += 1;
                if t >= limits.limit(i) {
                    return Some(i);
                }
            }
        }
        None
    });

    let mut hits = alloc::vec![0usize; m + 1];
    for i in first_signal.iter().flatten() {
        hits[*i] += 1;
    }
    let mut at_risk = reps;
    let mut rates = Vec::with_capacity(m);
    for &h in &hits[1..] {
        if at_risk == 0 {
            break;
        }
        rates.push(h as f64 / at_risk as f64);
        at_risk -= h;
    }
    Ok(rates)
}
