//! Electrical model of modules, strings and arrays under arbitrary shading.

mod array;
mod curve;
mod module;

pub use array::{array_current, string_current, ArraySpec, PvArray, ShadingPattern};
pub use curve::{find_local_peaks, oracle_gmpp, sample_curve, IVCurve, OperatingPoint};
pub use module::{
    calibrate_module, module_current, scan_module_mpp, verify_anchors, DatasheetSpec, Env,
    ModuleParams, T_STC,
};
