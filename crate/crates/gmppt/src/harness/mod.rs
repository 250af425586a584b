//! Scenario timelines, tracker-versus-oracle comparison and random sweeps.

mod config;
mod sweep;

pub use config::{format_scenario, parse_scenario};
pub use sweep::{generate_case, random_sweep, run_case, SweepCase, SweepConfig, SweepReport, SweepRow};

use std::fmt::Write as _;
use std::path::PathBuf;

use crate::baseline::{baseline11_gmppt, p_and_o_tracker, plain_p_and_o, BaselineConfig};
use crate::error::{invalid, Result};
use crate::plant::{calibrate_module, ArraySpec, DatasheetSpec, OperatingPoint, PvArray, ShadingPattern};
use crate::tracker::{
    run_gmppt, AlgorithmResult, PowerDropDetector, SimulatedPort, TrackerConfig, TrackingTrace,
};

/// Environment variable naming the default directory for written files.
pub const OUT_DIR_ENV: &str = "GMPPT_OUT_DIR";

/// `$GMPPT_OUT_DIR`, or the current directory when unset or empty.
pub fn default_output_dir() -> PathBuf {
    match std::env::var_os(OUT_DIR_ENV) {
        Some(d) if !d.is_empty() => PathBuf::from(d),
        _ => PathBuf::from("."),
    }
}

/// Efficiency at or above which a run counts as a success.
pub const SUCCESS_EFFICIENCY: f64 = 0.995;

/// Oracle grid spacing in volts.
pub const ORACLE_DV: f64 = 0.25;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Algorithm {
    Proposed,
    Baseline11,
    PerturbObserve,
}

impl Algorithm {
    pub fn as_str(self) -> &'static str {
        match self {
            Algorithm::Proposed => "proposed",
            Algorithm::Baseline11 => "baseline11",
            Algorithm::PerturbObserve => "p-and-o",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "proposed" => Some(Algorithm::Proposed),
            "baseline11" => Some(Algorithm::Baseline11),
            "p-and-o" | "po" => Some(Algorithm::PerturbObserve),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub array: ArraySpec,
    /// Uniform conditions before the shading event.
    pub initial_pattern: ShadingPattern,
    pub psc_pattern: ShadingPattern,
    /// Seconds.
    pub psc_time: f64,
    /// Perturbations run under the initial pattern before the event.
    pub uic_steps: usize,
    pub algorithms: Vec<Algorithm>,
    pub seed: u64,
    pub tracker: TrackerConfig,
}

impl Scenario {
    pub fn new(name: &str, array: ArraySpec, initial: ShadingPattern, psc: ShadingPattern) -> Self {
        let d = array.module.datasheet;
        let mut tracker = TrackerConfig::new(array.n_series);
        tracker.v_mpp_mod = d.v_mpp_stc;
        tracker.v_oc_mod = d.v_oc_stc;
        Self {
            name: name.to_string(),
            array,
            initial_pattern: initial,
            psc_pattern: psc,
            psc_time: 0.3,
            uic_steps: 20,
            algorithms: vec![Algorithm::Proposed, Algorithm::Baseline11],
            seed: 0,
            tracker,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.array.validate()?;
        self.initial_pattern.validate(&self.array)?;
        self.psc_pattern.validate(&self.array)?;
        if !(self.psc_time >= 0.0) {
            return Err(invalid("timeline.psc_time", "must be non-negative"));
        }
        if self.tracker.n_series != self.array.n_series {
            return Err(invalid("tracker.n_series", "must match array.n_series"));
        }
        self.tracker.validate()
    }

    pub fn baseline_config(&self) -> BaselineConfig {
        BaselineConfig::from_tracker(&self.tracker)
    }

    pub fn psc_plant(&self) -> Result<PvArray> {
        PvArray::new(self.array, self.psc_pattern.clone())
    }
}

fn reference_module() -> Result<crate::plant::ModuleParams> {
    calibrate_module(DatasheetSpec::reference())
}

/// Two strings of eight modules. String 1 has five modules at 0.9 kW/m^2
/// and three at 0.3; string 2 has two at 0.9 and six at 0.3.
pub fn scenario_2x8() -> Result<Scenario> {
    let array = ArraySpec::new(2, 8, reference_module()?);
    Ok(Scenario::new(
        "array2x8",
        array,
        ShadingPattern::uniform(&array, 0.9),
        ShadingPattern::two_level(8, &[5, 2], 0.9, 0.3),
    ))
}

/// Three strings of seven modules with three, four and five modules at
/// 0.9 kW/m^2 and the rest at 0.35.
pub fn scenario_3x7() -> Result<Scenario> {
    let array = ArraySpec::new(3, 7, reference_module()?);
    Ok(Scenario::new(
        "array3x7",
        array,
        ShadingPattern::uniform(&array, 0.9),
        ShadingPattern::two_level(7, &[3, 4, 5], 0.9, 0.35),
    ))
}

/// Continuous global maximum: dense grid scan, then golden-section polish.
pub fn oracle(plant: &PvArray) -> Result<OperatingPoint> {
    let g = plant.oracle_gmpp(ORACLE_DV)?;
    let r = plant.refine_peak(g.v, ORACLE_DV)?;
    Ok(if r.p() >= g.p() { r } else { g })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrackerOutcome {
    pub algorithm: Algorithm,
    pub result: AlgorithmResult,
    pub efficiency: f64,
    pub success: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonReport {
    pub scenario: String,
    pub psc_time: f64,
    pub uic_trace: TrackingTrace,
    pub uic_final: OperatingPoint,
    pub uic_oracle: OperatingPoint,
    /// Whether the relative-power-drop detector sees the event.
    pub psc_detected: bool,
    pub oracle: OperatingPoint,
    pub outcomes: Vec<TrackerOutcome>,
}

impl ComparisonReport {
    pub fn outcome(&self, a: Algorithm) -> Option<&TrackerOutcome> {
        self.outcomes.iter().find(|o| o.algorithm == a)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from(
            "algorithm,v_gmpp,p_gmpp,samples_used,elapsed_ms,oracle_v,oracle_p,efficiency,success\n",
        );
        for o in &self.outcomes {
            let _ = writeln!(
                s,
                "{},{:.4},{:.4},{},{:.1},{:.4},{:.4},{:.6},{}",
                o.algorithm.as_str(),
                o.result.v_gmpp,
                o.result.p_gmpp,
                o.result.samples_used,
                o.result.elapsed_ms,
                self.oracle.v,
                self.oracle.p(),
                o.efficiency,
                o.success
            );
        }
        s
    }

    pub fn to_table(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "scenario {} (shading event at t = {} s)", self.scenario, self.psc_time);
        let _ = writeln!(
            s,
            "oracle GMPP: {:.2} V, {:.2} W   uniform-phase P&O: {:.2} W of {:.2} W",
            self.oracle.v,
            self.oracle.p(),
            self.uic_final.p(),
            self.uic_oracle.p()
        );
        let _ = writeln!(
            s,
            "{:<12} {:>9} {:>10} {:>8} {:>10} {:>10} {:>8}",
            "algorithm", "v_gmpp", "p_gmpp", "samples", "elapsed", "efficiency", "success"
        );
        for o in &self.outcomes {
            let _ = writeln!(
                s,
                "{:<12} {:>9.2} {:>10.2} {:>8} {:>8.0}ms {:>10.4} {:>8}",
                o.algorithm.as_str(),
                o.result.v_gmpp,
                o.result.p_gmpp,
                o.result.samples_used,
                o.result.elapsed_ms,
                o.efficiency,
                if o.success { "yes" } else { "no" }
            );
        }
        s
    }
}

/// Runs one selected tracker against the shaded plant on a fresh port.
pub fn run_tracker(sc: &Scenario, algorithm: Algorithm, v_start: f64) -> Result<AlgorithmResult> {
    let mut port = SimulatedPort::new(sc.psc_plant()?, sc.tracker.sample_interval);
    match algorithm {
        Algorithm::Proposed => run_gmppt(&mut port, &sc.tracker),
        Algorithm::Baseline11 => baseline11_gmppt(&mut port, &sc.baseline_config()),
        Algorithm::PerturbObserve => p_and_o_tracker(&mut port, v_start, &sc.baseline_config()),
    }
}

fn efficiency(p: f64, oracle: f64) -> f64 {
    if oracle > 0.0 {
        p / oracle
    } else {
        1.0
    }
}

/// Uniform-phase P&O, shading event, then every selected tracker.
pub fn run_scenario(sc: &Scenario) -> Result<ComparisonReport> {
    sc.validate()?;
    let bcfg = sc.baseline_config();
    let uic_plant = PvArray::new(sc.array, sc.initial_pattern.clone())?;
    let uic_oracle = oracle(&uic_plant)?;
    let mut uic_port = SimulatedPort::new(uic_plant, sc.tracker.sample_interval);
    let v0 = 0.8 * sc.array.n_series as f64 * sc.tracker.v_oc_mod;
    let uic_trace = plain_p_and_o(&mut uic_port, v0, sc.uic_steps, &bcfg)?;
    let last = uic_trace.entries.last().expect("P&O records its first sample");
    let uic_final = OperatingPoint::new(last.v, last.i);

    let plant = sc.psc_plant()?;
    let mut det = PowerDropDetector::new(bcfg.power_change_threshold);
    det.observe(uic_final.p());
    let psc_detected = det.observe(uic_final.v * plant.current(uic_final.v)?);
    let oracle = oracle(&plant)?;

    let outcomes = sc
        .algorithms
        .iter()
        .map(|&a| {
            let result = run_tracker(sc, a, uic_final.v)?;
            let efficiency = efficiency(result.p_gmpp, oracle.p());
            Ok(TrackerOutcome {
                algorithm: a,
                success: efficiency >= SUCCESS_EFFICIENCY,
                efficiency,
                result,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(ComparisonReport {
        scenario: sc.name.clone(),
        psc_time: sc.psc_time,
        uic_trace,
        uic_final,
        uic_oracle,
        psc_detected,
        oracle,
        outcomes,
    })
}
