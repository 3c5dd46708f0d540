//! Online monitoring engine.

use alloc::collections::VecDeque;
use alloc::sync::Arc;
use alloc::vec::Vec;

use crate::calibration::ControlLimits;
use crate::error::{Error, Result};
use crate::stat::{estimate_changepoint, l2_norm, Side, WindowConfig, WindowEvaluator};

/// Sliding window of the last `w` norms that evaluates `T_i` each time it
/// is full.
#[derive(Clone, Debug)]
pub struct WindowStream {
    buf: VecDeque<f64>,
    eval: WindowEvaluator,
}

impl WindowStream {
    pub fn new(cfg: WindowConfig) -> Self {
        Self {
            buf: VecDeque::with_capacity(cfg.w() + 1),
            eval: WindowEvaluator::new(cfg),
        }
    }

    /// Appends a norm; returns the statistic of the window ending at it once
    /// `w` norms have arrived.
    pub fn push(&mut self, d: f64) -> Option<f64> {
        let w = self.eval.config().w();
        if self.buf.len() == w {
            self.buf.pop_front();
        }
        self.buf.push_back(d);
        if self.buf.len() < w {
            return None;
        }
        Some(self.eval.evaluate(self.buf.make_contiguous()))
    }

    pub fn evaluator(&self) -> &WindowEvaluator {
        &self.eval
    }

    pub fn clear(&mut self) {
        self.buf.clear();
    }

    pub fn len(&self) -> usize {
        self.buf.len()
    }

    pub fn is_empty(&self) -> bool {
        self.buf.is_empty()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Warming,
    Running,
    Signaled,
}

/// A raised alarm.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Signal {
    /// Window index `r` at which `T_r >= h_r`.
    pub window: usize,
    pub statistic: f64,
    pub limit: f64,
    pub side: Side,
    /// 1-based position `l_cp` of the extremal partition.
    pub partition_index: usize,
    /// `r + l0 + l_cp - 1`, counted from the start of the current segment.
    pub tau_hat: usize,
    /// Observations consumed before the current segment began (non-zero
    /// only after a restart).
    pub segment_offset: usize,
}

impl Signal {
    /// Estimated change-point counted from the first observation ever pushed.
    pub fn absolute_tau_hat(&self) -> usize {
        self.segment_offset + self.tau_hat
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum StepOutcome {
    Warming,
    Point { window: usize, statistic: f64, limit: f64 },
    Raised(Signal),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TraceRow {
    pub window: usize,
    pub statistic: f64,
    pub limit: f64,
    pub signaled: bool,
    pub tau_hat: Option<usize>,
}

/// Single-writer monitor over one stream of observations or norms.
///
/// Monitoring stops at the first signal unless restart mode is on, in which
/// case the next push clears the window and starts again at window 1.
#[derive(Clone, Debug)]
pub struct Monitor {
    cfg: WindowConfig,
    limits: Arc<ControlLimits>,
    stream: WindowStream,
    observations_seen: usize,
    segment_offset: usize,
    next_window_index: usize,
    status: Status,
    restart: bool,
    record_trace: bool,
    trace: Vec<TraceRow>,
    dimension: Option<usize>,
}

impl Monitor {
    pub fn new(cfg: WindowConfig, limits: impl Into<Arc<ControlLimits>>) -> Result<Self> {
        let limits = limits.into();
        if limits.config() != cfg {
            return Err(Error::invalid(alloc::format!(
                "limits were calibrated for (w={}, l0={}), monitor uses (w={}, l0={})",
                limits.config().w(),
                limits.config().l0(),
                cfg.w(),
                cfg.l0()
            )));
        }
        Ok(Self {
            cfg,
            limits,
            stream: WindowStream::new(cfg),
            observations_seen: 0,
            segment_offset: 0,
            next_window_index: 1,
            status: Status::Warming,
            restart: false,
            record_trace: true,
            trace: Vec::new(),
            dimension: None,
        })
    }

    pub fn with_restart(mut self, restart: bool) -> Self {
        self.restart = restart;
        self
    }

    /// Turns trace recording on or off (on by default).
    pub fn with_trace(mut self, record: bool) -> Self {
        self.record_trace = record;
        self
    }

    pub fn config(&self) -> WindowConfig {
        self.cfg
    }

    pub fn limits(&self) -> &ControlLimits {
        &self.limits
    }

    pub fn status(&self) -> Status {
        self.status
    }

    pub fn observations_seen(&self) -> usize {
        self.observations_seen
    }

    pub fn next_window_index(&self) -> usize {
        self.next_window_index
    }

    pub fn trace(&self) -> &[TraceRow] {
        &self.trace
    }

    /// Pushes one observation vector; its norm is taken internally.
    pub fn push_observation(&mut self, y: &[f64]) -> Result<StepOutcome> {
        match self.dimension {
            Some(p) if p != y.len() => {
                return Err(Error::invalid(alloc::format!(
                    "observation has {} coordinates, stream dimension is {p}",
                    y.len()
                )))
            }
            _ => {}
        }
        let d = l2_norm(y)?;
        self.check_ready()?;
        self.dimension = Some(y.len());
        self.step(d)
    }

    /// Pushes one precomputed norm.
    pub fn push_norm(&mut self, d: f64) -> Result<StepOutcome> {
        if !d.is_finite() || d < 0.0 {
            return Err(Error::invalid("norm must be finite and nonnegative"));
        }
        self.check_ready()?;
        self.step(d)
    }

    fn check_ready(&mut self) -> Result<()> {
        if self.status == Status::Signaled {
            if !self.restart {
                return Err(Error::State("monitor has already signaled".into()));
            }
            self.stream.clear();
            self.segment_offset = self.observations_seen;
            self.next_window_index = 1;
            self.status = Status::Warming;
        }
        Ok(())
    }

    fn step(&mut self, d: f64) -> Result<StepOutcome> {
        self.observations_seen += 1;
        let Some(statistic) = self.stream.push(d) else {
            return Ok(StepOutcome::Warming);
        };
        self.status = Status::Running;
        let window = self.next_window_index;
        self.next_window_index += 1;
        let limit = self.limits.limit(window);

        if statistic < limit {
            if self.record_trace {
                self.trace.push(TraceRow { window, statistic, limit, signaled: false, tau_hat: None });
            }
            return Ok(StepOutcome::Point { window, statistic, limit });
        }

        let ext = self.stream.evaluator().extremal();
        let tau_hat = estimate_changepoint(window, self.cfg, &ext);
        self.status = Status::Signaled;
        if self.record_trace {
            self.trace.push(TraceRow { window, statistic, limit, signaled: true, tau_hat: Some(tau_hat) });
        }
        Ok(StepOutcome::Raised(Signal {
            window,
            statistic,
            limit,
            side: ext.side,
            partition_index: ext.index,
            tau_hat,
            segment_offset: self.segment_offset,
        }))
    }
}
