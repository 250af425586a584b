//! Plain functions behind the browser bindings. Inputs and outputs are text
//! so the page needs no serialization layer.

use gmppt::harness::{oracle, parse_scenario, run_scenario, run_tracker, Algorithm, Scenario};
use gmppt::plant::PvArray;

const ARRAY_2X8: &str = include_str!("../../../scenarios/array2x8.cfg");
const ARRAY_3X7: &str = include_str!("../../../scenarios/array3x7.cfg");

pub fn preset(name: &str) -> Result<String, String> {
    match name {
        "array2x8" => Ok(ARRAY_2X8.to_string()),
        "array3x7" => Ok(ARRAY_3X7.to_string()),
        other => Err(format!("unknown preset `{other}`")),
    }
}

fn scenario(config: &str) -> Result<Scenario, String> {
    parse_scenario(config).map_err(|e| e.to_string())
}

/// `v,i,p` CSV of the initial or shaded characteristic.
pub fn curve_csv(config: &str, pattern: &str, dv: f64) -> Result<String, String> {
    let sc = scenario(config)?;
    let pat = match pattern {
        "initial" => sc.initial_pattern.clone(),
        "psc" => sc.psc_pattern.clone(),
        other => return Err(format!("pattern must be `initial` or `psc`, got `{other}`")),
    };
    if !(dv > 0.0 && dv <= 5.0) {
        return Err(format!("dv must lie in (0, 5] V, got {dv}"));
    }
    let plant = PvArray::new(sc.array, pat).map_err(|e| e.to_string())?;
    plant
        .sample_curve(0.0, sc.array.v_oc_stc(), dv)
        .map(|c| c.to_csv())
        .map_err(|e| e.to_string())
}

/// Runs one tracker; returns its trace CSV and key-value summary.
pub fn track(config: &str, algorithm: &str) -> Result<(String, String), String> {
    let sc = scenario(config)?;
    let a = Algorithm::parse(algorithm).ok_or_else(|| format!("unknown tracker `{algorithm}`"))?;
    let plant = sc.psc_plant().map_err(|e| e.to_string())?;
    let o = oracle(&plant).map_err(|e| e.to_string())?;
    let v0 = 0.8 * sc.array.n_series as f64 * sc.tracker.v_oc_mod;
    let r = run_tracker(&sc, a, v0).map_err(|e| e.to_string())?;
    Ok((r.trace.to_csv(), r.summary(o.p()).to_kv()))
}

/// Human-readable comparison of every tracker listed in the scenario.
pub fn compare_table(config: &str) -> Result<String, String> {
    let sc = scenario(config)?;
    run_scenario(&sc)
        .map(|r| r.to_table())
        .map_err(|e| e.to_string())
}
