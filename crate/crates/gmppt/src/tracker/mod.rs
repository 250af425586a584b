//! Fast global maximum power point tracking over a [`MeasurementPort`].
//!
//! The search samples the array at integer multiples of the module MPP
//! voltage, bounds the power reachable in each voltage region from the
//! sampled current, and only spends perturb-and-observe samples where a
//! bound still exceeds the best power found.

mod detect;
mod port;
mod region;
mod search;
mod trace;

pub use detect::PowerDropDetector;
pub use port::{FnPort, MeasurementPort, SimulatedPort};
pub(crate) use port::Recorder;
pub(crate) use search::climb;
pub use region::{compute_regions, delta_v_max, split_region, Region, RegionStatus};
pub use search::{
    coarse_scan, left_neighbor_check, perturb_observe, refine_region, run_gmppt, LeftCheck,
    Peak, Refinement,
};
pub use trace::{AlgorithmResult, Phase, Summary, TraceEntry, TrackingTrace};

use crate::error::{invalid, Error, Result};

/// Tracker parameters. Voltages in volts, times in milliseconds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackerConfig {
    pub v_mpp_mod: f64,
    pub v_oc_mod: f64,
    pub n_series: usize,
    pub v_step: f64,
    pub sample_interval: f64,
    /// Consecutive direction reversals without improvement that end a climb.
    pub p_and_o_convergence: usize,
    /// Overrides the top of the search range (`0.9 * n_series * v_oc_mod`).
    pub range_top: Option<f64>,
}

impl TrackerConfig {
    pub fn new(n_series: usize) -> Self {
        Self {
            v_mpp_mod: 24.0,
            v_oc_mod: 30.0,
            n_series,
            v_step: 1.0,
            sample_interval: 20.0,
            p_and_o_convergence: 2,
            range_top: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.v_step > 0.0 && self.v_step.is_finite()) {
            return Err(invalid("tracker.v_step", "must be positive"));
        }
        if !(self.v_mpp_mod > 0.0 && self.v_mpp_mod < self.v_oc_mod) {
            return Err(invalid("tracker.v_mpp_mod", "must satisfy 0 < v_mpp_mod < v_oc_mod"));
        }
        if !(self.sample_interval > 0.0 && self.sample_interval.is_finite()) {
            return Err(invalid("tracker.sample_interval", "must be positive"));
        }
        if self.p_and_o_convergence == 0 {
            return Err(invalid("tracker.p_and_o_convergence", "must be at least 1"));
        }
        if self.n_series == 0 {
            return Err(invalid("array.n_series", "must be at least 1"));
        }
        let (lo, hi) = self.search_range();
        if !(hi > 2.0 * lo) {
            return Err(Error::EmptySearchRange(format!(
                "no sample beyond {lo} V fits below the range top {hi} V"
            )));
        }
        Ok(())
    }

    /// Lower and upper end of the searched voltage range.
    pub fn search_range(&self) -> (f64, f64) {
        let top = self
            .range_top
            .unwrap_or(0.9 * self.n_series as f64 * self.v_oc_mod);
        (self.v_mpp_mod, top)
    }

    /// Highest voltage a climb may command.
    pub fn v_max(&self) -> f64 {
        self.n_series as f64 * self.v_oc_mod
    }

    /// Fresh samples a single climb may take before it is declared divergent.
    pub fn p_and_o_budget(&self) -> usize {
        (3.0 * self.v_mpp_mod / self.v_step).ceil() as usize
    }

    /// Width of the zone left of a confirmed peak that holds no other peak.
    pub fn exclusion_width(&self) -> f64 {
        0.8 * self.v_oc_mod
    }

    /// Coarse sample multipliers, highest first.
    pub fn coarse_multiples(&self) -> Vec<usize> {
        let (lo, hi) = self.search_range();
        let mut out = Vec::new();
        let mut m = 1;
        while (m as f64) * lo < hi - 1e-9 {
            out.push(m);
            m += 1;
        }
        out.reverse();
        out
    }

    /// Length of an exhaustive scan of the search range on the `v_step` grid.
    pub fn exhaustive_samples(&self) -> usize {
        let (lo, hi) = self.search_range();
        ((hi - lo) / self.v_step).floor() as usize + 1
    }
}
