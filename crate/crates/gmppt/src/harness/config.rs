//! Scenario files: `[section]` headers, `key = value` lines, `#` comments.
//!
//! ```text
//! [scenario]
//! name = array2x8
//! seed = 0
//! algorithms = proposed, baseline11
//!
//! [array]
//! n_parallel = 2
//! n_series = 8
//! bypass_drop = 0.8
//! blocking_diode = true
//!
//! [datasheet]
//! v_oc = 30
//! i_sc = 8.7
//! v_mpp = 24
//! i_mpp = 8.2
//!
//! [pattern.initial]
//! uniform = 0.9
//!
//! [pattern.psc]
//! row1 = 0.9, 0.9, 0.9, 0.9, 0.9, 0.3, 0.3, 0.3
//! row2 = 0.9, 0.9, 0.3, 0.3, 0.3, 0.3, 0.3, 0.3
//!
//! [timeline]
//! psc_time = 0.3
//! uic_steps = 20
//!
//! [tracker]
//! v_step = 1
//! sample_interval = 20
//! p_and_o_convergence = 2
//! range_top = 190
//! ```
//!
//! A pattern section holds either `uniform = s` or one `rowK` line per
//! string (1-based). Only `n_parallel`, `n_series` and both pattern sections are
//! required; other keys default to the values above, and `range_top`
//! defaults to the full search range.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use super::{Algorithm, Scenario};
use crate::error::{Error, Result};
use crate::plant::{calibrate_module, ArraySpec, DatasheetSpec, ShadingPattern};
use crate::tracker::TrackerConfig;

struct Entry {
    line: usize,
    value: String,
}

struct Doc {
    keys: BTreeMap<String, Entry>,
}

impl Doc {
    fn parse(text: &str) -> Result<Self> {
        let mut keys = BTreeMap::new();
        let mut section = String::new();
        for (n, raw) in text.lines().enumerate() {
            let line_no = n + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('[') {
                let name = rest.strip_suffix(']').ok_or_else(|| Error::Config {
                    line: line_no,
                    reason: format!("unterminated section header `{line}`"),
                })?;
                section = name.trim().to_string();
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| Error::Config {
                line: line_no,
                reason: format!("expected `key = value`, got `{line}`"),
            })?;
            if section.is_empty() {
                return Err(Error::Config {
                    line: line_no,
                    reason: format!("key `{}` appears before any section", k.trim()),
                });
            }
            let path = format!("{section}.{}", k.trim());
            let prev = keys.insert(
                path.clone(),
                Entry {
                    line: line_no,
                    value: v.trim().to_string(),
                },
            );
            if prev.is_some() {
                return Err(Error::Config {
                    line: line_no,
                    reason: format!("duplicate key `{path}`"),
                });
            }
        }
        Ok(Self { keys })
    }

    fn take(&mut self, path: &str) -> Option<Entry> {
        self.keys.remove(path)
    }

    fn num<T: std::str::FromStr>(&mut self, path: &str, default: Option<T>) -> Result<T> {
        match self.take(path) {
            Some(e) => e.value.parse().map_err(|_| Error::Config {
                line: e.line,
                reason: format!("{path}: `{}` is not a valid number", e.value),
            }),
            None => default.ok_or_else(|| Error::Config {
                line: 0,
                reason: format!("{path}: missing"),
            }),
        }
    }

    fn list(&mut self, path: &str, line: usize, value: &str) -> Result<Vec<f64>> {
        value
            .split(',')
            .map(|x| {
                x.trim().parse().map_err(|_| Error::Config {
                    line,
                    reason: format!("{path}: `{}` is not a valid irradiance", x.trim()),
                })
            })
            .collect()
    }

    fn pattern(&mut self, section: &str, array: &ArraySpec) -> Result<ShadingPattern> {
        if let Some(e) = self.take(&format!("{section}.uniform")) {
            let s: f64 = e.value.parse().map_err(|_| Error::Config {
                line: e.line,
                reason: format!("{section}.uniform: `{}` is not a valid irradiance", e.value),
            })?;
            return Ok(ShadingPattern::uniform(array, s));
        }
        let mut rows = Vec::with_capacity(array.n_parallel);
        for k in 1..=array.n_parallel {
            let path = format!("{section}.row{k}");
            let e = self.take(&path).ok_or_else(|| Error::Config {
                line: 0,
                reason: format!("{path}: missing (need `uniform` or one row per string)"),
            })?;
            let row = self.list(&path, e.line, &e.value)?;
            if row.len() != array.n_series {
                return Err(Error::Config {
                    line: e.line,
                    reason: format!("{path}: {} entries, expected {}", row.len(), array.n_series),
                });
            }
            rows.push(row);
        }
        let p = ShadingPattern::new(rows);
        p.validate(array).map_err(|e| Error::Config {
            line: 0,
            reason: format!("{section}: {e}"),
        })?;
        Ok(p)
    }

    fn finish(self) -> Result<()> {
        match self.keys.into_iter().next() {
            Some((k, e)) => Err(Error::Config {
                line: e.line,
                reason: format!("unknown key `{k}`"),
            }),
            None => Ok(()),
        }
    }
}

fn field_err(e: Error) -> Error {
    match e {
        Error::InvalidParameter { field, reason } => Error::Config {
            line: 0,
            reason: format!("{field}: {reason}"),
        },
        other => other,
    }
}

/// Parses a scenario file.
pub fn parse_scenario(text: &str) -> Result<Scenario> {
    let mut d = Doc::parse(text)?;
    let name = d
        .take("scenario.name")
        .map(|e| e.value)
        .unwrap_or_else(|| "scenario".into());
    let seed: u64 = d.num("scenario.seed", Some(0))?;
    let algorithms = match d.take("scenario.algorithms") {
        Some(e) => e
            .value
            .split(',')
            .map(|x| {
                Algorithm::parse(x.trim()).ok_or_else(|| Error::Config {
                    line: e.line,
                    reason: format!("scenario.algorithms: unknown tracker `{}`", x.trim()),
                })
            })
            .collect::<Result<Vec<_>>>()?,
        None => vec![Algorithm::Proposed, Algorithm::Baseline11],
    };

    let ds = DatasheetSpec::new(
        d.num("datasheet.v_oc", Some(30.0))?,
        d.num("datasheet.i_sc", Some(8.7))?,
        d.num("datasheet.v_mpp", Some(24.0))?,
        d.num("datasheet.i_mpp", Some(8.2))?,
    );
    ds.validate().map_err(field_err)?;
    let module = calibrate_module(ds)?;

    let mut array = ArraySpec::new(
        d.num("array.n_parallel", None)?,
        d.num("array.n_series", None)?,
        module,
    );
    array.bypass_drop = d.num("array.bypass_drop", Some(array.bypass_drop))?;
    if let Some(e) = d.take("array.blocking_diode") {
        array.blocking_diode = match e.value.as_str() {
            "true" | "on" | "1" => true,
            "false" | "off" | "0" => false,
            other => {
                return Err(Error::Config {
                    line: e.line,
                    reason: format!("array.blocking_diode: `{other}` is not a boolean"),
                })
            }
        };
    }
    array.validate().map_err(field_err)?;

    let initial_pattern = d.pattern("pattern.initial", &array)?;
    let psc_pattern = d.pattern("pattern.psc", &array)?;

    let psc_time: f64 = d.num("timeline.psc_time", Some(0.3))?;
    let uic_steps: usize = d.num("timeline.uic_steps", Some(20))?;

    let mut tracker = TrackerConfig::new(array.n_series);
    tracker.v_mpp_mod = ds.v_mpp_stc;
    tracker.v_oc_mod = ds.v_oc_stc;
    tracker.v_step = d.num("tracker.v_step", Some(tracker.v_step))?;
    tracker.sample_interval = d.num("tracker.sample_interval", Some(tracker.sample_interval))?;
    tracker.p_and_o_convergence =
        d.num("tracker.p_and_o_convergence", Some(tracker.p_and_o_convergence))?;
    if d.keys.contains_key("tracker.range_top") {
        tracker.range_top = Some(d.num("tracker.range_top", None)?);
    }
    d.finish()?;

    let sc = Scenario {
        name,
        array,
        initial_pattern,
        psc_pattern,
        psc_time,
        uic_steps,
        algorithms,
        seed,
        tracker,
    };
    sc.validate().map_err(field_err)?;
    Ok(sc)
}

fn pattern_lines(out: &mut String, section: &str, p: &ShadingPattern) {
    let _ = writeln!(out, "\n[{section}]");
    if p.is_uniform() && !p.irradiance.is_empty() && !p.irradiance[0].is_empty() {
        let _ = writeln!(out, "uniform = {}", p.irradiance[0][0]);
        return;
    }
    for (k, row) in p.irradiance.iter().enumerate() {
        let vals: Vec<String> = row.iter().map(|x| x.to_string()).collect();
        let _ = writeln!(out, "row{} = {}", k + 1, vals.join(", "));
    }
}

/// Writes a scenario in the format read by [`parse_scenario`].
pub fn format_scenario(sc: &Scenario) -> String {
    let ds = sc.array.module.datasheet;
    let algos: Vec<&str> = sc.algorithms.iter().map(|a| a.as_str()).collect();
    let mut out = String::new();
    let _ = writeln!(out, "[scenario]\nname = {}\nseed = {}\nalgorithms = {}", sc.name, sc.seed, algos.join(", "));
    let _ = writeln!(
        out,
        "\n[array]\nn_parallel = {}\nn_series = {}\nbypass_drop = {}\nblocking_diode = {}",
        sc.array.n_parallel, sc.array.n_series, sc.array.bypass_drop, sc.array.blocking_diode
    );
    let _ = writeln!(
        out,
        "\n[datasheet]\nv_oc = {}\ni_sc = {}\nv_mpp = {}\ni_mpp = {}",
        ds.v_oc_stc, ds.i_sc_stc, ds.v_mpp_stc, ds.i_mpp_stc
    );
    pattern_lines(&mut out, "pattern.initial", &sc.initial_pattern);
    pattern_lines(&mut out, "pattern.psc", &sc.psc_pattern);
    let _ = writeln!(out, "\n[timeline]\npsc_time = {}\nuic_steps = {}", sc.psc_time, sc.uic_steps);
    let t = &sc.tracker;
    let _ = writeln!(
        out,
        "\n[tracker]\nv_step = {}\nsample_interval = {}\np_and_o_convergence = {}",
        t.v_step, t.sample_interval, t.p_and_o_convergence
    );
    if let Some(top) = t.range_top {
        let _ = writeln!(out, "range_top = {top}");
    }
    out
}
