use super::TrackerConfig;
use crate::plant::OperatingPoint;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegionStatus {
    Candidate,
    Searched,
    Eliminated,
}

impl RegionStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            RegionStatus::Candidate => "candidate",
            RegionStatus::Searched => "searched",
            RegionStatus::Eliminated => "eliminated",
        }
    }
}

/// A voltage interval with the power bound implied by the sample at its
/// low corner: current cannot rise with voltage, so `p <= i_s * v_hi`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Region {
    pub m: usize,
    pub v_lo: f64,
    pub v_hi: f64,
    pub p_s: f64,
    pub i_s: f64,
    pub p_up: f64,
    pub status: RegionStatus,
}

impl Region {
    pub fn new(m: usize, v_lo: f64, v_hi: f64, p_s: f64, i_s: f64) -> Self {
        Self {
            m,
            v_lo,
            v_hi,
            p_s,
            i_s,
            p_up: p_s + i_s.max(0.0) * (v_hi - v_lo),
            status: RegionStatus::Candidate,
        }
    }

    pub fn width(&self) -> f64 {
        self.v_hi - self.v_lo
    }

    pub fn contains(&self, v: f64) -> bool {
        v >= self.v_lo && v <= self.v_hi
    }
}

/// Farthest a local peak can sit to the right of the sample `m * v_mpp_mod`.
pub fn delta_v_max(m: usize, cfg: &TrackerConfig) -> f64 {
    cfg.v_mpp_mod
        .min(m as f64 * (cfg.v_oc_mod - cfg.v_mpp_mod))
}

/// One region per coarse sample, ordered by ascending voltage.
pub fn compute_regions(samples: &[OperatingPoint], cfg: &TrackerConfig) -> Vec<Region> {
    let (_, top) = cfg.search_range();
    let mut out: Vec<Region> = samples
        .iter()
        .filter_map(|s| {
            let m = (s.v / cfg.v_mpp_mod).round().max(1.0) as usize;
            let v_hi = (s.v + delta_v_max(m, cfg)).min(top);
            (v_hi > s.v).then(|| Region::new(m, s.v, v_hi, s.p(), s.i))
        })
        .collect();
    out.sort_by(|a, b| a.v_lo.total_cmp(&b.v_lo));
    out
}

/// Halves `region` given the measurement at its midpoint.
pub fn split_region(region: &Region, mid: OperatingPoint) -> (Region, Region) {
    (
        Region::new(region.m, region.v_lo, mid.v, region.p_s, region.i_s),
        Region::new(region.m, mid.v, region.v_hi, mid.p(), mid.i),
    )
}
