use std::fmt::Write as _;

use super::Region;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Phase {
    CoarseScan,
    PerturbObserve,
    Refine,
    LeftCheck,
    Steady,
}

impl Phase {
    pub fn as_str(self) -> &'static str {
        match self {
            Phase::CoarseScan => "coarse-scan",
            Phase::PerturbObserve => "p-and-o",
            Phase::Refine => "refine",
            Phase::LeftCheck => "left-check",
            Phase::Steady => "steady",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceEntry {
    pub t_ms: f64,
    pub v: f64,
    pub i: f64,
    pub phase: Phase,
}

impl TraceEntry {
    pub fn p(&self) -> f64 {
        self.v * self.i
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrackingTrace {
    pub entries: Vec<TraceEntry>,
}

impl TrackingTrace {
    pub fn push(&mut self, e: TraceEntry) {
        self.entries.push(e);
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, TraceEntry> {
        self.entries.iter()
    }

    pub fn count_phase(&self, phase: Phase) -> usize {
        self.entries.iter().filter(|e| e.phase == phase).count()
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("t_ms,v,i,p,phase\n");
        for e in &self.entries {
            let _ = writeln!(
                s,
                "{:.1},{:.4},{:.6},{:.4},{}",
                e.t_ms,
                e.v,
                e.i,
                e.p(),
                e.phase.as_str()
            );
        }
        s
    }
}

/// Outcome of one tracker run started by a shading event.
#[derive(Debug, Clone, PartialEq)]
pub struct AlgorithmResult {
    pub v_gmpp: f64,
    pub p_gmpp: f64,
    pub samples_used: usize,
    pub elapsed_ms: f64,
    pub trace: TrackingTrace,
    /// Every region and sub-region whose bound was evaluated.
    pub bounds: Vec<Region>,
}

impl AlgorithmResult {
    pub fn summary(&self, oracle_p: f64) -> Summary {
        Summary {
            v_gmpp: self.v_gmpp,
            p_gmpp: self.p_gmpp,
            samples_used: self.samples_used,
            elapsed_ms: self.elapsed_ms,
            oracle_p,
            efficiency: if oracle_p > 0.0 {
                self.p_gmpp / oracle_p
            } else {
                1.0
            },
        }
    }
}

/// Flat `key=value` record of a run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary {
    pub v_gmpp: f64,
    pub p_gmpp: f64,
    pub samples_used: usize,
    pub elapsed_ms: f64,
    pub oracle_p: f64,
    pub efficiency: f64,
}

impl Summary {
    pub fn to_kv(&self) -> String {
        format!(
            "v_gmpp={:.4}\np_gmpp={:.4}\nsamples_used={}\nelapsed_ms={:.1}\noracle_p={:.4}\nefficiency={:.6}\n",
            self.v_gmpp, self.p_gmpp, self.samples_used, self.elapsed_ms, self.oracle_p, self.efficiency
        )
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut vals = [None; 6];
        const KEYS: [&str; 6] = [
            "v_gmpp",
            "p_gmpp",
            "samples_used",
            "elapsed_ms",
            "oracle_p",
            "efficiency",
        ];
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |reason: String| Error::Config { line: n + 1, reason };
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| err(format!("expected key=value, got `{line}`")))?;
            let idx = KEYS
                .iter()
                .position(|&x| x == k.trim())
                .ok_or_else(|| err(format!("unknown key `{}`", k.trim())))?;
            let x: f64 = v
                .trim()
                .parse()
                .map_err(|_| err(format!("`{}` is not a number", v.trim())))?;
            vals[idx] = Some(x);
        }
        let get = |i: usize| {
            vals[i].ok_or_else(|| Error::Config {
                line: 0,
                reason: format!("missing key `{}`", KEYS[i]),
            })
        };
        Ok(Self {
            v_gmpp: get(0)?,
            p_gmpp: get(1)?,
            samples_used: get(2)? as usize,
            elapsed_ms: get(3)?,
            oracle_p: get(4)?,
            efficiency: get(5)?,
        })
    }
}
