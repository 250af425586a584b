//! Single-diode model of one PV module and its five-parameter calibration.

use crate::error::{invalid, Error, Result};
use crate::solve::newton_bracketed;

/// Standard test temperature; the model has no temperature coefficients.
pub const T_STC: f64 = 25.0;

/// Datasheet anchors of a module at standard test conditions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DatasheetSpec {
    pub v_oc_stc: f64,
    pub i_sc_stc: f64,
    pub v_mpp_stc: f64,
    pub i_mpp_stc: f64,
    pub t_stc: f64,
}

impl DatasheetSpec {
    pub fn new(v_oc_stc: f64, i_sc_stc: f64, v_mpp_stc: f64, i_mpp_stc: f64) -> Self {
        Self {
            v_oc_stc,
            i_sc_stc,
            v_mpp_stc,
            i_mpp_stc,
            t_stc: T_STC,
        }
    }

    /// The 30 V / 24 V reference module used throughout the examples and tests.
    pub fn reference() -> Self {
        Self::new(30.0, 8.7, 24.0, 8.2)
    }

    /// `v_mpp / v_oc`
    pub fn alpha(&self) -> f64 {
        self.v_mpp_stc / self.v_oc_stc
    }

    pub fn p_mpp_stc(&self) -> f64 {
        self.v_mpp_stc * self.i_mpp_stc
    }

    pub fn validate(&self) -> Result<()> {
        let all = [self.v_oc_stc, self.i_sc_stc, self.v_mpp_stc, self.i_mpp_stc];
        if all.iter().any(|x| !x.is_finite() || *x <= 0.0) {
            return Err(invalid("datasheet", "all anchors must be finite and positive"));
        }
        if self.v_mpp_stc >= self.v_oc_stc {
            return Err(invalid("datasheet.v_mpp", "must be below v_oc"));
        }
        if self.i_mpp_stc >= self.i_sc_stc {
            return Err(invalid("datasheet.i_mpp", "must be below i_sc"));
        }
        if self.t_stc != T_STC {
            return Err(invalid("datasheet.t_stc", "only 25 C is modeled"));
        }
        Ok(())
    }
}

/// Operating environment of one module.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Env {
    /// irradiance in kW/m^2
    pub s: f64,
    /// cell temperature in degrees Celsius
    pub t: f64,
}

impl Env {
    pub fn new(s: f64) -> Self {
        Self { s, t: T_STC }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.5).contains(&self.s) {
            return Err(invalid("env.s", format!("irradiance {} outside [0, 1.5]", self.s)));
        }
        if self.t != T_STC {
            return Err(invalid("env.t", "temperature is fixed at 25 C"));
        }
        Ok(())
    }
}

/// Calibrated single-diode parameters of one module at STC.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModuleParams {
    /// photocurrent at 1 kW/m^2
    pub i_pv: f64,
    /// diode saturation current
    pub i_o: f64,
    /// ideality factor times thermal voltage of the series-connected cells
    pub a_vt: f64,
    pub r_s: f64,
    pub r_sh: f64,
    pub datasheet: DatasheetSpec,
}

impl ModuleParams {
    pub fn validate(&self) -> Result<()> {
        let all = [self.i_pv, self.i_o, self.a_vt, self.r_s, self.r_sh];
        if all.iter().any(|x| !x.is_finite() || *x <= 0.0) {
            return Err(invalid("module", "all single-diode parameters must be positive"));
        }
        if self.r_sh <= self.r_s {
            return Err(invalid("module.r_sh", "shunt resistance must exceed series resistance"));
        }
        self.datasheet.validate()
    }

    /// Photocurrent at irradiance `s`; proportional to irradiance.
    #[inline]
    pub fn photocurrent(&self, s: f64) -> f64 {
        self.i_pv * s
    }

    /// Residual of the implicit diode equation and its derivative in `i`.
    #[inline]
    fn current_residual(&self, s: f64, v: f64, i: f64) -> (f64, f64) {
        let x = v + self.r_s * i;
        let e = self.i_o * (x / self.a_vt).exp();
        let f = self.photocurrent(s) - (e - self.i_o) - x / self.r_sh - i;
        let df = -(e / self.a_vt + 1.0 / self.r_sh) * self.r_s - 1.0;
        (f, df)
    }

    /// Terminal voltage while the module carries current `i`, together with
    /// `dV/dI`. Works for any current; above the photocurrent the result is
    /// the (negative) reverse-bias voltage before any bypass clamping.
    pub fn voltage_at(&self, s: f64, i: f64) -> Result<(f64, f64)> {
        let ip = self.photocurrent(s);
        // in terms of the junction voltage x = V + R_s I the equation is
        // explicit up to the shunt term, so the bracket is analytic
        let f = |x: f64| {
            let e = self.i_o * (x / self.a_vt).exp();
            (
                ip + self.i_o - e - x / self.r_sh - i,
                -e / self.a_vt - 1.0 / self.r_sh,
            )
        };
        let x_lo = (-(i - ip) * self.r_sh).min(0.0) - 1.0;
        let x_hi = self.a_vt * (2.0 + (ip - i).max(0.0) / self.i_o).ln();
        let guess = if i < ip {
            self.a_vt * ((ip - i) / self.i_o + 1.0).ln()
        } else {
            -(i - ip) * self.r_sh
        };
        let x = newton_bracketed(f, x_lo, x_hi, Some(guess), 1e-12 * (1.0 + ip), 200)
            .ok_or(Error::NoConvergence { v: f64::NAN, s })?;
        let e = self.i_o * (x / self.a_vt).exp();
        let dx_di = -1.0 / (e / self.a_vt + 1.0 / self.r_sh);
        Ok((x - self.r_s * i, dx_di - self.r_s))
    }
}

/// Module current at terminal voltage `v` (any sign) under `env`.
pub fn module_current(params: &ModuleParams, env: Env, v: f64) -> Result<f64> {
    env.validate()?;
    let s = env.s;
    let ip = params.photocurrent(s);
    let err = Error::NoConvergence { v, s };
    let g = |i: f64| params.current_residual(s, v, i);
    let i_hi = ip + params.i_o + v.abs() / params.r_sh + 1.0;
    let mut i_lo = -1.0;
    let mut expansions = 0;
    while g(i_lo).0 <= 0.0 {
        i_lo *= 4.0;
        expansions += 1;
        if expansions > 60 {
            return Err(err);
        }
    }
    let tol = 1e-9 * ip.max(1.0);
    newton_bracketed(g, i_lo, i_hi, None, tol, 200).ok_or(err)
}

fn solve3(m: [[f64; 3]; 3], b: [f64; 3]) -> Option<[f64; 3]> {
    let det = |m: &[[f64; 3]; 3]| {
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    };
    let d = det(&m);
    if d == 0.0 || !d.is_finite() {
        return None;
    }
    let mut out = [0.0; 3];
    for (col, slot) in out.iter_mut().enumerate() {
        let mut mc = m;
        for row in 0..3 {
            mc[row][col] = b[row];
        }
        *slot = det(&mc) / d;
    }
    Some(out)
}

/// For fixed `a_vt` and `r_s`, the three point anchors are linear in
/// `(i_pv, i_o, 1/r_sh)`.
fn linear_fit(spec: &DatasheetSpec, a: f64, rs: f64) -> Option<(f64, f64, f64, f64)> {
    let (voc, isc, vmp, imp) = (spec.v_oc_stc, spec.i_sc_stc, spec.v_mpp_stc, spec.i_mpp_stc);
    let e_sc = (rs * isc / a).exp();
    let e_oc = (voc / a).exp();
    let e_mp = ((vmp + rs * imp) / a).exp();
    let m = [
        [1.0, -(e_sc - 1.0), -rs * isc],
        [1.0, -(e_oc - 1.0), -voc],
        [1.0, -(e_mp - 1.0), -(vmp + rs * imp)],
    ];
    let [ipv, io, g] = solve3(m, [isc, 0.0, imp])?;
    Some((ipv, io, g, e_mp))
}

/// Slope condition dI/dV = -I/V at the maximum power anchor.
fn mpp_slope_error(spec: &DatasheetSpec, a: f64, rs: f64) -> Option<f64> {
    let (_, io, g, e_mp) = linear_fit(spec, a, rs)?;
    let d = io / a * e_mp + g;
    Some(d / (1.0 + rs * d) - spec.i_mpp_stc / spec.v_mpp_stc)
}

fn bisect(mut f: impl FnMut(f64) -> Option<f64>, mut lo: f64, mut hi: f64) -> Option<f64> {
    let mut flo = f(lo)?;
    let fhi = f(hi)?;
    if (flo > 0.0) == (fhi > 0.0) {
        return None;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid)?;
        if (fm > 0.0) == (flo > 0.0) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-15 * hi.abs().max(1e-300) {
            break;
        }
    }
    Some(0.5 * (lo + hi))
}

/// Series resistance that puts the power maximum exactly on the datasheet
/// anchor for a given `a_vt`.
fn fit_series_resistance(spec: &DatasheetSpec, a: f64) -> Option<f64> {
    let rs_max = (spec.v_oc_stc - spec.v_mpp_stc) / spec.i_mpp_stc;
    let n = 64;
    let mut prev: Option<(f64, f64)> = None;
    for k in 0..=n {
        let rs = rs_max * (k as f64 + 1e-6) / n as f64;
        let Some(err) = mpp_slope_error(spec, a, rs) else { continue };
        if let Some((rs_prev, err_prev)) = prev {
            if (err > 0.0) != (err_prev > 0.0) {
                return bisect(|r| mpp_slope_error(spec, a, r), rs_prev, rs);
            }
        }
        prev = Some((rs, err));
    }
    None
}

/// Fits the five single-diode parameters to the datasheet anchors.
///
/// Four anchor conditions (short circuit, open circuit, maximum-power point
/// and zero power slope there) leave one degree of freedom. It is closed by
/// requiring `r_sh = 100 * v_oc / i_sc`, a conventional shunt level for
/// crystalline modules.
pub fn calibrate_module(spec: DatasheetSpec) -> Result<ModuleParams> {
    spec.validate()?;
    let fail = |anchor, detail: String| Error::Calibration { anchor, detail };
    let target_g = spec.i_sc_stc / (100.0 * spec.v_oc_stc);

    // 1/r_sh decreases with a_vt and passes smoothly through zero
    let shunt_error = |a: f64| -> Option<f64> {
        let rs = fit_series_resistance(&spec, a)?;
        let (_, _, g, _) = linear_fit(&spec, a, rs)?;
        Some(g - target_g)
    };
    let a_lo = 0.01 * spec.v_oc_stc;
    let a_hi = 0.08 * spec.v_oc_stc;
    let mut bracket = None;
    let steps = 140;
    let mut prev: Option<(f64, f64)> = None;
    for k in 0..=steps {
        let a = a_lo + (a_hi - a_lo) * k as f64 / steps as f64;
        let Some(err) = shunt_error(a) else { continue };
        if let Some((a_prev, e_prev)) = prev {
            if e_prev > 0.0 && err <= 0.0 {
                bracket = Some((a_prev, a));
                break;
            }
        }
        prev = Some((a, err));
    }
    let (lo, hi) = bracket.ok_or_else(|| {
        fail("maximum-power", "no ideality factor reproduces the fill factor".into())
    })?;
    let a_vt = bisect(shunt_error, lo, hi)
        .ok_or_else(|| fail("maximum-power", "shunt fit did not converge".into()))?;
    let r_s = fit_series_resistance(&spec, a_vt)
        .ok_or_else(|| fail("maximum-power", "series resistance fit failed".into()))?;
    let (i_pv, i_o, g, _) = linear_fit(&spec, a_vt, r_s)
        .ok_or_else(|| fail("short-circuit", "singular anchor system".into()))?;
    let params = ModuleParams {
        i_pv,
        i_o,
        a_vt,
        r_s,
        r_sh: 1.0 / g,
        datasheet: spec,
    };
    params
        .validate()
        .map_err(|e| fail("maximum-power", e.to_string()))?;
    verify_anchors(&params)?;
    Ok(params)
}

/// Checks the calibrated curve against the datasheet anchors.
pub fn verify_anchors(params: &ModuleParams) -> Result<()> {
    let spec = &params.datasheet;
    let stc = Env::new(1.0);
    let fail = |anchor, detail: String| Error::Calibration { anchor, detail };

    let (v_oc, _) = params.voltage_at(1.0, 0.0)?;
    if (v_oc - spec.v_oc_stc).abs() > 1e-3 {
        return Err(fail("open-circuit", format!("open-circuit voltage {v_oc:.6} V")));
    }
    let i_sc = module_current(params, stc, 0.0)?;
    if (i_sc - spec.i_sc_stc).abs() > 0.005 * spec.i_sc_stc {
        return Err(fail("short-circuit", format!("short-circuit current {i_sc:.6} A")));
    }
    let (v_best, _) = scan_module_mpp(params, stc, 0.01)?;
    if (v_best - spec.v_mpp_stc).abs() > 0.25 {
        return Err(fail("maximum-power", format!("power peaks at {v_best:.3} V")));
    }
    Ok(())
}

/// Grid maximum of module power over `[0, v_oc]` at spacing `dv`.
pub fn scan_module_mpp(params: &ModuleParams, env: Env, dv: f64) -> Result<(f64, f64)> {
    let n = (params.datasheet.v_oc_stc / dv).round() as usize;
    let mut best = (0.0, 0.0);
    for k in 0..=n {
        let v = k as f64 * dv;
        let p = v * module_current(params, env, v)?;
        if p > best.1 {
            best = (v, p);
        }
    }
    Ok(best)
}
