use std::collections::HashMap;

use super::trace::{Phase, TraceEntry, TrackingTrace};
use crate::error::Result;
use crate::plant::{OperatingPoint, PvArray};

/// Voltage-commanded access to a PV source.
///
/// One call is one sample: the setpoint is applied, the source settles for
/// one sampling interval and the resulting operating point is read back.
pub trait MeasurementPort {
    fn measure(&mut self, v: f64) -> Result<OperatingPoint>;

    /// Samples taken so far.
    fn samples(&self) -> usize;

    /// Simulated time in milliseconds.
    fn clock_ms(&self) -> f64;

    fn sample_interval_ms(&self) -> f64;
}

/// Ideal converter in front of a simulated array: every setpoint is reached
/// exactly after one interval.
#[derive(Debug, Clone)]
pub struct SimulatedPort {
    plant: PvArray,
    interval_ms: f64,
    samples: usize,
}

impl SimulatedPort {
    pub fn new(plant: PvArray, interval_ms: f64) -> Self {
        Self {
            plant,
            interval_ms,
            samples: 0,
        }
    }

    pub fn plant(&self) -> &PvArray {
        &self.plant
    }

    /// Swaps the plant in place, e.g. when the shading changes.
    pub fn set_plant(&mut self, plant: PvArray) {
        self.plant = plant;
    }
}

impl MeasurementPort for SimulatedPort {
    fn measure(&mut self, v: f64) -> Result<OperatingPoint> {
        let v = v.max(0.0);
        let i = self.plant.current(v)?;
        self.samples += 1;
        Ok(OperatingPoint::new(v, i))
    }

    fn samples(&self) -> usize {
        self.samples
    }

    fn clock_ms(&self) -> f64 {
        self.samples as f64 * self.interval_ms
    }

    fn sample_interval_ms(&self) -> f64 {
        self.interval_ms
    }
}

/// Any closure `v -> i` can stand in for a plant, which keeps tests small.
pub struct FnPort<F> {
    f: F,
    interval_ms: f64,
    samples: usize,
}

impl<F: FnMut(f64) -> f64> FnPort<F> {
    pub fn new(f: F, interval_ms: f64) -> Self {
        Self {
            f,
            interval_ms,
            samples: 0,
        }
    }
}

impl<F: FnMut(f64) -> f64> MeasurementPort for FnPort<F> {
    fn measure(&mut self, v: f64) -> Result<OperatingPoint> {
        self.samples += 1;
        Ok(OperatingPoint::new(v, (self.f)(v)))
    }

    fn samples(&self) -> usize {
        self.samples
    }

    fn clock_ms(&self) -> f64 {
        self.samples as f64 * self.interval_ms
    }

    fn sample_interval_ms(&self) -> f64 {
        self.interval_ms
    }
}

/// Records every fresh sample and answers repeated setpoints from memory.
pub(crate) struct Recorder<'a, P: MeasurementPort + ?Sized> {
    port: &'a mut P,
    pub(crate) phase: Phase,
    t0: f64,
    s0: usize,
    pub(crate) trace: TrackingTrace,
    memo: HashMap<i64, OperatingPoint>,
}

impl<'a, P: MeasurementPort + ?Sized> Recorder<'a, P> {
    pub(crate) fn new(port: &'a mut P) -> Self {
        let t0 = port.clock_ms();
        let s0 = port.samples();
        Self {
            port,
            phase: Phase::CoarseScan,
            t0,
            s0,
            trace: TrackingTrace::default(),
            memo: HashMap::new(),
        }
    }
}

fn memo_key(v: f64) -> i64 {
    (v * 1e6).round() as i64
}

impl<P: MeasurementPort + ?Sized> MeasurementPort for Recorder<'_, P> {
    fn measure(&mut self, v: f64) -> Result<OperatingPoint> {
        if let Some(op) = self.memo.get(&memo_key(v)) {
            return Ok(*op);
        }
        let op = self.port.measure(v)?;
        self.trace.push(TraceEntry {
            t_ms: self.clock_ms(),
            v: op.v,
            i: op.i,
            phase: self.phase,
        });
        self.memo.insert(memo_key(v), op);
        Ok(op)
    }

    fn samples(&self) -> usize {
        self.port.samples() - self.s0
    }

    fn clock_ms(&self) -> f64 {
        self.port.clock_ms() - self.t0
    }

    fn sample_interval_ms(&self) -> f64 {
        self.port.sample_interval_ms()
    }
}

