//! Sampled characteristics, the brute-force GMPP oracle and peak finding.

use std::fmt::Write as _;

use crate::error::{invalid, Result};
use crate::plant::array::{ArraySpec, PvArray, ShadingPattern};

/// A measured or simulated `(v, i)` pair; power is always derived.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OperatingPoint {
    pub v: f64,
    pub i: f64,
}

impl OperatingPoint {
    pub fn new(v: f64, i: f64) -> Self {
        Self { v, i }
    }

    /// Builds a point from a voltage and a power reading.
    pub fn from_power(v: f64, p: f64) -> Self {
        Self { v, i: p / v }
    }

    #[inline]
    pub fn p(&self) -> f64 {
        self.v * self.i
    }
}

/// Points on a uniform, strictly increasing voltage grid.
#[derive(Debug, Clone, PartialEq)]
pub struct IVCurve {
    pub points: Vec<OperatingPoint>,
}

impl IVCurve {
    pub fn max_power(&self) -> Option<OperatingPoint> {
        // first maximum wins, so ties resolve to the lower voltage
        self.points
            .iter()
            .copied()
            .fold(None, |best: Option<OperatingPoint>, pt| match best {
                Some(b) if b.p() >= pt.p() => Some(b),
                _ => Some(pt),
            })
    }

    /// Maximum power over the closed interval `[v1, v2]`.
    pub fn max_power_in(&self, v1: f64, v2: f64) -> Option<OperatingPoint> {
        IVCurve {
            points: self
                .points
                .iter()
                .copied()
                .filter(|p| p.v >= v1 - 1e-9 && p.v <= v2 + 1e-9)
                .collect(),
        }
        .max_power()
    }

    /// Nearest grid point to `v`.
    pub fn at(&self, v: f64) -> Option<OperatingPoint> {
        self.points
            .iter()
            .copied()
            .min_by(|a, b| (a.v - v).abs().total_cmp(&(b.v - v).abs()))
    }

    /// Strictly increasing voltage, non-increasing current and, with a
    /// blocking diode, non-negative current.
    pub fn check_invariants(&self, blocking_diode: bool) -> std::result::Result<(), String> {
        for w in self.points.windows(2) {
            if w[1].v <= w[0].v {
                return Err(format!("voltage not increasing at {} V", w[1].v));
            }
            if w[1].i > w[0].i + 1e-9 {
                return Err(format!("current rises between {} V and {} V", w[0].v, w[1].v));
            }
        }
        if blocking_diode {
            if let Some(p) = self.points.iter().find(|p| p.i < 0.0) {
                return Err(format!("negative current at {} V", p.v));
            }
        }
        Ok(())
    }

    /// `v,i,p` CSV with one row per grid point.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("v,i,p\n");
        for pt in &self.points {
            let _ = writeln!(out, "{:.4},{:.6},{:.4}", pt.v, pt.i, pt.p());
        }
        out
    }
}

fn grid(v_lo: f64, v_hi: f64, dv: f64) -> Vec<f64> {
    let n = ((v_hi - v_lo) / dv + 1e-9).floor() as usize;
    (0..=n).map(|k| v_lo + k as f64 * dv).collect()
}

impl PvArray {
    /// Samples the characteristic at `v_lo + k * dv` up to `v_hi`.
    pub fn sample_curve(&self, v_lo: f64, v_hi: f64, dv: f64) -> Result<IVCurve> {
        if !(v_lo >= 0.0 && v_hi > v_lo) {
            return Err(invalid("curve range", format!("need 0 <= v_lo < v_hi, got [{v_lo}, {v_hi}]")));
        }
        if !(dv > 0.0) {
            return Err(invalid("dv", "grid spacing must be positive"));
        }
        let vs = grid(v_lo, v_hi, dv);
        let is = self.currents_on(&vs)?;
        Ok(IVCurve {
            points: vs.into_iter().zip(is).map(|(v, i)| OperatingPoint::new(v, i)).collect(),
        })
    }

    /// Dense curve over `[0, n_series * v_oc_stc]`.
    pub fn oracle_curve(&self, dv: f64) -> Result<IVCurve> {
        if !(dv > 0.0 && dv <= 0.25) {
            return Err(invalid("dv", "oracle grid must be finer than 0.25 V"));
        }
        self.sample_curve(0.0, self.spec().v_oc_stc(), dv)
    }

    /// Brute-force global maximum power point on the oracle grid.
    pub fn oracle_gmpp(&self, dv: f64) -> Result<OperatingPoint> {
        Ok(self
            .oracle_curve(dv)?
            .max_power()
            .expect("oracle grid is never empty"))
    }

    /// Locates the continuous power maximum near a grid peak by golden
    /// section over `[v - dv, v + dv]`.
    pub fn refine_peak(&self, v: f64, dv: f64) -> Result<OperatingPoint> {
        let phi = 0.5 * (5f64.sqrt() - 1.0);
        let mut a = (v - dv).max(0.0);
        let mut b = v + dv;
        let pw = |x: f64| -> Result<f64> { Ok(x * self.current(x)?) };
        let mut c = b - phi * (b - a);
        let mut d = a + phi * (b - a);
        let (mut fc, mut fd) = (pw(c)?, pw(d)?);
        while b - a > 1e-6 {
            if fc > fd {
                b = d;
                d = c;
                fd = fc;
                c = b - phi * (b - a);
                fc = pw(c)?;
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + phi * (b - a);
                fd = pw(d)?;
            }
        }
        let x = 0.5 * (a + b);
        Ok(OperatingPoint::new(x, self.current(x)?))
    }
}

pub fn sample_curve(
    array: &ArraySpec,
    pattern: &ShadingPattern,
    v_lo: f64,
    v_hi: f64,
    dv: f64,
) -> Result<IVCurve> {
    PvArray::new(*array, pattern.clone())?.sample_curve(v_lo, v_hi, dv)
}

pub fn oracle_gmpp(array: &ArraySpec, pattern: &ShadingPattern, dv: f64) -> Result<OperatingPoint> {
    PvArray::new(*array, pattern.clone())?.oracle_gmpp(dv)
}

/// Strict interior maxima of power over the grid, in increasing voltage.
pub fn find_local_peaks(curve: &IVCurve) -> Vec<OperatingPoint> {
    let pts = &curve.points;
    let mut peaks = Vec::new();
    let mut k = 1;
    while k + 1 < pts.len() {
        let p = pts[k].p();
        if p > pts[k - 1].p() {
            // walk across an exactly flat top, if any
            let mut j = k;
            while j + 1 < pts.len() && pts[j + 1].p() == p {
                j += 1;
            }
            if j + 1 < pts.len() && pts[j + 1].p() < p {
                peaks.push(pts[k]);
            }
            k = j + 1;
        } else {
            k += 1;
        }
    }
    peaks
}
