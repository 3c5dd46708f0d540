//! Run-length experiments: in-control studies, planted-change studies and
//! detection-rate grids.
//!
//! Replicate `k` of a study always draws from substream `k` of the study
//! seed, so summaries are identical for any worker count.

use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;

use crate::calibration::ControlLimits;
use crate::error::{Error, Result};
use crate::monitor::{Monitor, Signal, StepOutcome};
use crate::par;
use crate::sampling::{DistributionSpec, RngStream, Sampler, StreamRng};
use crate::stat::quantile_sorted;

/// Aggregates over Monte-Carlo replicates. Run lengths count windows;
/// censored runs enter the mean and median at `horizon`.
#[derive(Clone, Debug, PartialEq)]
pub struct RunLengthSummary {
    pub arl: f64,
    pub mrl: f64,
    pub n_runs: usize,
    pub censored: usize,
    pub horizon: usize,
    pub median_tau_hat: Option<f64>,
    pub detection_rate: Option<f64>,
    pub false_alarms: Option<usize>,
}

impl RunLengthSummary {
    pub fn from_run_lengths(run_lengths: &[Option<usize>], horizon: usize) -> Self {
        assert!(!run_lengths.is_empty(), "summary of zero runs");
        let mut values: Vec<f64> = run_lengths
            .iter()
            .map(|r| r.unwrap_or(horizon) as f64)
            .collect();
        values.sort_unstable_by(f64::total_cmp);
        let n = values.len();
        Self {
            arl: values.iter().sum::<f64>() / n as f64,
            mrl: quantile_sorted(&values, 0.5),
            n_runs: n,
            censored: run_lengths.iter().filter(|r| r.is_none()).count(),
            horizon,
            median_tau_hat: None,
            detection_rate: None,
            false_alarms: None,
        }
    }

    /// Fraction of runs that never signaled.
    pub fn censored_fraction(&self) -> f64 {
        self.censored as f64 / self.n_runs as f64
    }
}

/// A stream whose first `tau` observations follow `ic` and the rest `ooc`.
#[derive(Clone, Debug, PartialEq)]
pub struct ChangeScenario {
    pub ic: DistributionSpec,
    pub ooc: DistributionSpec,
    pub tau: usize,
}

impl ChangeScenario {
    pub fn new(ic: DistributionSpec, ooc: DistributionSpec, tau: usize) -> Result<Self> {
        let s = Self { ic, ooc, tau };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.tau == 0 {
            return Err(Error::invalid("change-point tau must be at least 1"));
        }
        self.ic.validate()?;
        self.ooc.validate()?;
        if self.ic.dimension() != self.ooc.dimension() {
            return Err(Error::invalid("in-control and shifted laws differ in dimension"));
        }
        Ok(())
    }
}

/// Runs one monitor until its first signal or `max_windows` windows.
fn first_signal(
    limits: &Arc<ControlLimits>,
    rng: &mut StreamRng,
    mut next_norm: impl FnMut(&mut StreamRng) -> f64,
    max_windows: usize,
) -> Option<Signal> {
    let mut monitor = Monitor::new(limits.config(), Arc::clone(limits))
        .expect("config taken from limits")
        .with_trace(false);
    loop {
        match monitor.push_norm(next_norm(rng)).expect("sampled norms are valid") {
            StepOutcome::Raised(signal) => return Some(signal),
            StepOutcome::Point { window, .. } if window >= max_windows => return None,
            _ => {}
        }
    }
}

/// In-control run-length study: `reps` fresh monitors on streams from
/// `spec`, censored at `max_windows`.
pub fn ic_study(
    limits: &ControlLimits,
    spec: &DistributionSpec,
    reps: usize,
    max_windows: usize,
    seed: u64,
) -> Result<RunLengthSummary> {
    if reps < 1000 {
        return Err(Error::invalid("in-control study needs at least 1000 replicates"));
    }
    if max_windows == 0 {
        return Err(Error::invalid("max_windows must be at least 1"));
    }
    spec.validate()?;
    let limits = Arc::new(limits.clone());
    let run_lengths = par::map_indices(reps, |k| {
        let mut rng = RngStream::new(seed, k as u64).rng();
        let mut sampler = Sampler::new(spec).expect("spec validated");
        first_signal(&limits, &mut rng, |rng| sampler.draw_norm(rng), max_windows).map(|s| s.window)
    });
    Ok(RunLengthSummary::from_run_lengths(&run_lengths, max_windows))
}

/// Planted-change study. A replicate counts as a detection when its first
/// signal comes at a window `r` with `r + w - 1 > tau` (the window reaches
/// the first shifted observation); earlier signals are false alarms.
pub fn ooc_study(
    limits: &ControlLimits,
    scenario: &ChangeScenario,
    reps: usize,
    horizon: usize,
    seed: u64,
) -> Result<RunLengthSummary> {
    if reps < 1000 {
        return Err(Error::invalid("out-of-control study needs at least 1000 replicates"));
    }
    scenario.validate()?;
    if horizon <= scenario.tau {
        return Err(Error::invalid("horizon must exceed the change-point"));
    }
    let w = limits.config().w();
    let tau = scenario.tau;
    let limits = Arc::new(limits.clone());

    let signals = par::map_indices(reps, |k| {
        let mut rng = RngStream::new(seed, k as u64).rng();
        let mut ic = Sampler::new(&scenario.ic).expect("scenario validated");
        let mut ooc = Sampler::new(&scenario.ooc).expect("scenario validated");
        let mut drawn = 0usize;
        let next = |rng: &mut StreamRng| {
            drawn += 1;
            if drawn <= tau {
                ic.draw_norm(rng)
            } else {
                ooc.draw_norm(rng)
            }
        };
        first_signal(&limits, &mut rng, next, horizon)
    });

    let run_lengths: Vec<Option<usize>> = signals.iter().map(|s| s.map(|s| s.window)).collect();
    let mut summary = RunLengthSummary::from_run_lengths(&run_lengths, horizon);

    let mut tau_hats: Vec<f64> = signals.iter().flatten().map(|s| s.tau_hat as f64).collect();
    tau_hats.sort_unstable_by(f64::total_cmp);
    summary.median_tau_hat = (!tau_hats.is_empty()).then(|| quantile_sorted(&tau_hats, 0.5));

    let detections = signals.iter().flatten().filter(|s| s.window + w - 1 > tau).count();
    summary.detection_rate = Some(detections as f64 / reps as f64);
    summary.false_alarms = Some(signals.iter().flatten().count() - detections);
    Ok(summary)
}

/// One cell of a detection-rate grid.
#[derive(Clone, Debug)]
pub struct SensitivityCell<'a> {
    pub label: String,
    pub limits: &'a ControlLimits,
    pub scenario: &'a ChangeScenario,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SensitivityRow {
    pub label: String,
    pub w: usize,
    pub l0: usize,
    pub summary: RunLengthSummary,
}

impl SensitivityRow {
    pub fn detection_rate(&self) -> f64 {
        self.summary.detection_rate.expect("set by ooc_study")
    }
}

/// Runs [`ooc_study`] on every cell. All cells share `seed`, so cells that
/// differ only in `(w, l0)` are compared on the same simulated streams.
pub fn sensitivity_grid(
    cells: &[SensitivityCell<'_>],
    reps: usize,
    horizon: usize,
    seed: u64,
) -> Result<Vec<SensitivityRow>> {
    cells
        .iter()
        .map(|cell| {
            let cfg = cell.limits.config();
            Ok(SensitivityRow {
                label: cell.label.clone(),
                w: cfg.w(),
                l0: cfg.l0(),
                summary: ooc_study(cell.limits, cell.scenario, reps, horizon, seed)?,
            })
        })
        .collect()
}
