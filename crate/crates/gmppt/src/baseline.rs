//! Comparison trackers: textbook perturb-and-observe and a fixed-interval
//! peak scan that stops once peak powers start to fall.

use crate::error::{invalid, Result};
use crate::plant::OperatingPoint;
use crate::tracker::{
    climb, AlgorithmResult, MeasurementPort, Phase, Recorder, TraceEntry, TrackerConfig,
    TrackingTrace,
};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BaselineConfig {
    /// Scan interval as a fraction of the module open-circuit voltage.
    pub voc_fraction_step: f64,
    /// Relative power change treated as a shading event.
    pub power_change_threshold: f64,
    pub v_step: f64,
    pub sample_interval: f64,
    pub v_oc_mod: f64,
    pub n_series: usize,
    pub p_and_o_convergence: usize,
}

impl BaselineConfig {
    pub fn new(n_series: usize) -> Self {
        Self::from_tracker(&TrackerConfig::new(n_series))
    }

    pub fn from_tracker(cfg: &TrackerConfig) -> Self {
        Self {
            voc_fraction_step: 0.8,
            power_change_threshold: 0.05,
            v_step: cfg.v_step,
            sample_interval: cfg.sample_interval,
            v_oc_mod: cfg.v_oc_mod,
            n_series: cfg.n_series,
            p_and_o_convergence: cfg.p_and_o_convergence,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.voc_fraction_step > 0.0 && self.voc_fraction_step <= 1.0) {
            return Err(invalid("baseline.voc_fraction_step", "must lie in (0, 1]"));
        }
        if !(self.v_step > 0.0) {
            return Err(invalid("baseline.v_step", "must be positive"));
        }
        if !(self.v_oc_mod > 0.0) || self.n_series == 0 {
            return Err(invalid("baseline.n_series", "array must have a positive open-circuit voltage"));
        }
        Ok(())
    }

    pub fn scan_step(&self) -> f64 {
        self.voc_fraction_step * self.v_oc_mod
    }

    pub fn range_top(&self) -> f64 {
        0.9 * self.n_series as f64 * self.v_oc_mod
    }

    fn climb_config(&self) -> TrackerConfig {
        TrackerConfig {
            v_mpp_mod: self.scan_step(),
            v_oc_mod: self.v_oc_mod,
            n_series: self.n_series,
            v_step: self.v_step,
            sample_interval: self.sample_interval,
            p_and_o_convergence: self.p_and_o_convergence,
            range_top: None,
        }
    }
}

/// Classic perturb-and-observe for `steps` perturbations after the first
/// sample at `v_start`: keep the direction while power rises, reverse
/// otherwise.
pub fn plain_p_and_o<P: MeasurementPort + ?Sized>(
    port: &mut P,
    v_start: f64,
    steps: usize,
    cfg: &BaselineConfig,
) -> Result<TrackingTrace> {
    let t0 = port.clock_ms();
    let mut trace = TrackingTrace::default();
    let record = |port: &P, op: OperatingPoint, trace: &mut TrackingTrace| {
        trace.push(TraceEntry {
            t_ms: port.clock_ms() - t0,
            v: op.v,
            i: op.i,
            phase: Phase::Steady,
        });
    };
    let mut prev = port.measure(v_start)?;
    record(port, prev, &mut trace);
    let mut dir = 1.0;
    for _ in 0..steps {
        let op = port.measure((prev.v + dir * cfg.v_step).max(0.0))?;
        record(port, op, &mut trace);
        if op.p() < prev.p() {
            dir = -dir;
        }
        prev = op;
    }
    Ok(trace)
}

/// Perturb-and-observe run as a tracker: climbs from `v_start` until the
/// three-point limit cycle around a local peak is established.
pub fn p_and_o_tracker<P: MeasurementPort + ?Sized>(
    port: &mut P,
    v_start: f64,
    cfg: &BaselineConfig,
) -> Result<AlgorithmResult> {
    cfg.validate()?;
    let ccfg = cfg.climb_config();
    let mut s = Recorder::new(port);
    s.phase = Phase::PerturbObserve;
    let top = cfg.n_series as f64 * cfg.v_oc_mod;
    let pk = climb(&mut s, v_start.clamp(0.0, top), 0.0, top, 1, &ccfg)?.point;
    Ok(AlgorithmResult {
        v_gmpp: pk.v,
        p_gmpp: pk.p(),
        samples_used: s.samples(),
        elapsed_ms: s.clock_ms(),
        trace: s.trace,
        bounds: Vec::new(),
    })
}

/// Scans downward from the top of the range at `0.8 * v_oc_mod` intervals.
/// A probe one step above each sample gives the slope; where power falls
/// with voltage a downward climb pins the peak below. The scan stops at the
/// first new peak lower than the best one.
pub fn baseline11_gmppt<P: MeasurementPort + ?Sized>(
    port: &mut P,
    cfg: &BaselineConfig,
) -> Result<AlgorithmResult> {
    cfg.validate()?;
    let ccfg = cfg.climb_config();
    let mut s = Recorder::new(port);
    let step = cfg.scan_step();
    let mut peaks: Vec<OperatingPoint> = Vec::new();
    let mut best: Option<OperatingPoint> = None;
    let mut v = cfg.range_top();
    while v >= step - 1e-9 {
        s.phase = Phase::CoarseScan;
        let here = s.measure(v)?;
        let probe = s.measure(v + cfg.v_step)?;
        let mut next = v - step;
        if probe.p() < here.p() {
            s.phase = Phase::PerturbObserve;
            let pk = climb(&mut s, v, 0.0, v + cfg.v_step, -1, &ccfg)?.point;
            next = pk.v - step;
            if !peaks.iter().any(|q| (q.v - pk.v).abs() <= 2.0 * cfg.v_step + 1e-9) {
                peaks.push(pk);
                match best {
                    Some(b) if pk.p() < b.p() => break,
                    _ => best = Some(pk),
                }
            }
        }
        v = next;
    }
    let best = match best {
        Some(b) => b,
        None => s
            .trace
            .iter()
            .map(|e| OperatingPoint::new(e.v, e.i))
            .fold(OperatingPoint::new(0.0, 0.0), |a, x| if x.p() > a.p() { x } else { a }),
    };
    Ok(AlgorithmResult {
        v_gmpp: best.v,
        p_gmpp: best.p(),
        samples_used: s.samples(),
        elapsed_ms: s.clock_ms(),
        trace: s.trace,
        bounds: Vec::new(),
    })
}
