//! Series strings with bypass diodes, and parallel strings with blocking diodes.

use crate::error::{invalid, Error, Result};
use crate::plant::module::ModuleParams;
use crate::solve::newton_bracketed;

/// Geometry and protection devices of a series-parallel array.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArraySpec {
    pub n_parallel: usize,
    pub n_series: usize,
    pub module: ModuleParams,
    /// forward drop of each (ideal, constant-drop) bypass diode
    pub bypass_drop: f64,
    pub blocking_diode: bool,
}

impl ArraySpec {
    pub fn new(n_parallel: usize, n_series: usize, module: ModuleParams) -> Self {
        Self {
            n_parallel,
            n_series,
            module,
            bypass_drop: 0.8,
            blocking_diode: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_parallel == 0 {
            return Err(invalid("array.n_parallel", "need at least one string"));
        }
        if self.n_series == 0 {
            return Err(invalid("array.n_series", "need at least one module per string"));
        }
        if !(0.7..=1.0).contains(&self.bypass_drop) {
            return Err(invalid(
                "array.bypass_drop",
                format!("{} V outside [0.7, 1.0]", self.bypass_drop),
            ));
        }
        self.module.validate()
    }

    /// Open-circuit voltage of a uniformly lit string at STC.
    pub fn v_oc_stc(&self) -> f64 {
        self.n_series as f64 * self.module.datasheet.v_oc_stc
    }
}

/// Per-module irradiance, one row per string, in kW/m^2.
#[derive(Debug, Clone, PartialEq)]
pub struct ShadingPattern {
    pub irradiance: Vec<Vec<f64>>,
}

impl ShadingPattern {
    pub fn new(irradiance: Vec<Vec<f64>>) -> Self {
        Self { irradiance }
    }

    pub fn uniform(array: &ArraySpec, s: f64) -> Self {
        Self::new(vec![vec![s; array.n_series]; array.n_parallel])
    }

    /// Each string gets `lit` modules at `s_high` followed by modules at `s_low`.
    pub fn two_level(n_series: usize, lit: &[usize], s_high: f64, s_low: f64) -> Self {
        let rows = lit
            .iter()
            .map(|&n| {
                (0..n_series)
                    .map(|k| if k < n { s_high } else { s_low })
                    .collect()
            })
            .collect();
        Self::new(rows)
    }

    pub fn validate(&self, array: &ArraySpec) -> Result<()> {
        if self.irradiance.len() != array.n_parallel {
            return Err(invalid(
                "pattern",
                format!("{} rows for {} strings", self.irradiance.len(), array.n_parallel),
            ));
        }
        for (r, row) in self.irradiance.iter().enumerate() {
            if row.len() != array.n_series {
                return Err(invalid(
                    format!("pattern.row{r}"),
                    format!("{} entries for {} series modules", row.len(), array.n_series),
                ));
            }
            if let Some(s) = row.iter().find(|s| !(0.0..=1.5).contains(*s)) {
                return Err(invalid(format!("pattern.row{r}"), format!("irradiance {s} outside [0, 1.5]")));
            }
        }
        Ok(())
    }

    pub fn is_uniform(&self) -> bool {
        let first = self.irradiance.first().and_then(|r| r.first());
        self.irradiance
            .iter()
            .flatten()
            .all(|s| Some(s) == first)
    }
}

/// One string reduced to its distinct irradiance levels.
#[derive(Debug, Clone)]
struct StringModel {
    groups: Vec<(f64, usize)>,
    i_top: f64,
}

impl StringModel {
    fn new(module: &ModuleParams, row: &[f64]) -> Self {
        let mut groups: Vec<(f64, usize)> = Vec::new();
        for &s in row {
            match groups.iter_mut().find(|(g, _)| *g == s) {
                Some((_, n)) => *n += 1,
                None => groups.push((s, 1)),
            }
        }
        groups.sort_by(|a, b| b.0.total_cmp(&a.0));
        let i_top = groups
            .iter()
            .map(|(s, _)| module.photocurrent(*s))
            .fold(0.0, f64::max)
            + 1.0;
        Self { groups, i_top }
    }

    /// String voltage when it carries `i`, and its derivative.
    fn voltage(&self, module: &ModuleParams, bypass: f64, i: f64) -> Result<(f64, f64)> {
        let mut v = 0.0;
        let mut dv = 0.0;
        for &(s, n) in &self.groups {
            let (vm, dvm) = module.voltage_at(s, i)?;
            if vm > -bypass {
                v += n as f64 * vm;
                dv += n as f64 * dvm;
            } else {
                v -= n as f64 * bypass;
            }
        }
        Ok((v, dv))
    }

    fn current(&self, array: &ArraySpec, v: f64, guess: Option<f64>) -> Result<f64> {
        let m = &array.module;
        let bd = array.bypass_drop;
        let err = Error::NoConvergence { v, s: self.groups[0].0 };
        let (v_open, _) = self.voltage(m, bd, 0.0)?;
        if array.blocking_diode && v >= v_open {
            return Ok(0.0);
        }
        let mut i_lo = 0.0;
        if !array.blocking_diode && v > v_open {
            i_lo = -1.0;
            while self.voltage(m, bd, i_lo)?.0 <= v {
                i_lo *= 2.0;
                if i_lo < -1e6 {
                    return Err(err);
                }
            }
        }
        let mut i_hi = self.i_top;
        while self.voltage(m, bd, i_hi)?.0 >= v {
            i_hi *= 2.0;
            if i_hi > 1e6 {
                return Err(err);
            }
        }
        // solver errors inside the closure surface as NaN and end the iteration
        let h = |i: f64| match self.voltage(m, bd, i) {
            Ok((vs, dvs)) => (vs - v, dvs),
            Err(_) => (f64::NAN, f64::NAN),
        };
        let root = newton_bracketed(h, i_lo, i_hi, guess, 1e-9, 300).ok_or(err.clone())?;
        if root.is_nan() {
            return Err(err);
        }
        Ok(if array.blocking_diode { root.max(0.0) } else { root })
    }
}

/// Current of one string at terminal voltage `v`.
///
/// Each module is clamped at `-bypass_drop` once the demanded current
/// exceeds what it can carry at that voltage; with a blocking diode the
/// string never carries reverse current.
pub fn string_current(array: &ArraySpec, row: &[f64], v: f64) -> Result<f64> {
    if row.len() != array.n_series {
        return Err(invalid("row", format!("expected {} modules", array.n_series)));
    }
    if !(v >= 0.0) {
        return Err(invalid("v", "string voltage must be non-negative"));
    }
    StringModel::new(&array.module, row).current(array, v, None)
}

/// Sum of string currents at a common terminal voltage `v`.
pub fn array_current(array: &ArraySpec, pattern: &ShadingPattern, v: f64) -> Result<f64> {
    PvArray::new(*array, pattern.clone())?.current(v)
}

/// An array bound to one shading pattern, ready for repeated evaluation.
#[derive(Debug, Clone)]
pub struct PvArray {
    spec: ArraySpec,
    pattern: ShadingPattern,
    strings: Vec<StringModel>,
}

impl PvArray {
    pub fn new(spec: ArraySpec, pattern: ShadingPattern) -> Result<Self> {
        spec.validate()?;
        pattern.validate(&spec)?;
        let strings = pattern
            .irradiance
            .iter()
            .map(|row| StringModel::new(&spec.module, row))
            .collect();
        Ok(Self {
            spec,
            pattern,
            strings,
        })
    }

    pub fn spec(&self) -> &ArraySpec {
        &self.spec
    }

    pub fn pattern(&self) -> &ShadingPattern {
        &self.pattern
    }

    pub fn current(&self, v: f64) -> Result<f64> {
        if !(v >= 0.0) {
            return Err(invalid("v", "array voltage must be non-negative"));
        }
        let mut total = 0.0;
        for s in &self.strings {
            total += s.current(&self.spec, v, None)?;
        }
        Ok(total)
    }

    /// Per-string currents at `v`, in row order.
    pub fn string_currents(&self, v: f64) -> Result<Vec<f64>> {
        self.strings
            .iter()
            .map(|s| s.current(&self.spec, v, None))
            .collect()
    }

    /// Currents on an ascending voltage grid, warm-starting each solve from
    /// the previous grid point.
    pub(crate) fn currents_on(&self, grid: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; grid.len()];
        for s in &self.strings {
            let mut guess = None;
            for (slot, &v) in out.iter_mut().zip(grid) {
                let i = s.current(&self.spec, v, guess)?;
                guess = (i > 0.0).then_some(i);
                *slot += i;
            }
        }
        Ok(out)
    }
}
