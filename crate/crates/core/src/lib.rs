//! Distribution-free change-point monitoring for high-dimensional streams.
//!
//! Each observation is reduced to its Euclidean norm. A moving window of `w`
//! norms is split at every admissible point, a weighted-precedence rank
//! statistic compares the two halves, and the quartiles of those statistics
//! form the window statistic `T_i`. `T_i` is compared against per-window
//! control limits `h_i` calibrated by Monte Carlo so that the conditional
//! false-alarm probability at every window is `alpha`.
//!
//! The crate is `no_std` (with `alloc`) when built without the default
//! `std` feature. The `parallel` feature spreads Monte-Carlo replicates over
//! a rayon pool; results do not depend on the number of workers.

#![cfg_attr(not(feature = "std"), no_std)]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod calibration;
pub mod error;
pub mod experiments;
pub mod monitor;
pub mod sampling;
pub mod stat;

pub use calibration::{calibrate, conditional_exceedance, Calibration, CalibrationSettings, ControlLimits};
pub use error::{Error, Result};
pub use experiments::{ic_study, ooc_study, sensitivity_grid, ChangeScenario, RunLengthSummary};
pub use monitor::{Monitor, Signal, StepOutcome, Status, TraceRow};
pub use sampling::{DistributionSpec, RngStream};
pub use stat::{Side, WindowConfig};

mod par {
    use alloc::vec::Vec;

    /// `(0..n).map(f)`, evaluated on the rayon pool when available. Output
    /// order always follows the index.
    #[cfg(feature = "parallel")]
    pub(crate) fn map_indices<T, F>(n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        use rayon::prelude::*;
        (0..n).into_par_iter().map(f).collect()
    }

    #[cfg(not(feature = "parallel"))]
    pub(crate) fn map_indices<T, F>(n: usize, f: F) -> Vec<T>
    where
        F: Fn(usize) -> T,
    {
        (0..n).map(f).collect()
    }

    #[cfg(feature = "parallel")]
    pub(crate) fn for_each_mut<T, F>(items: &mut [T], f: F)
    where
        T: Send,
        F: Fn(&mut T) + Sync + Send,
    {
        use rayon::prelude::*;
        items.par_iter_mut().for_each(f);
    }

    #[cfg(not(feature = "parallel"))]
    pub(crate) fn for_each_mut<T, F>(items: &mut [T], f: F)
    where
        F: Fn(&mut T),
    {
        items.iter_mut().for_each(f);
    }
}
