//! wasm-bindgen exports for the static demo page in `www/`.

pub mod api;

use wasm_bindgen::prelude::*;

fn js(e: String) -> JsError {
    JsError::new(&e)
}

#[wasm_bindgen]
pub fn preset(name: &str) -> Result<String, JsError> {
    api::preset(name).map_err(js)
}

#[wasm_bindgen]
pub fn curve_csv(config: &str, pattern: &str, dv: f64) -> Result<String, JsError> {
    api::curve_csv(config, pattern, dv).map_err(js)
}

#[wasm_bindgen]
pub struct TrackOutput {
    trace_csv: String,
    summary: String,
}

#[wasm_bindgen]
impl TrackOutput {
    #[wasm_bindgen(getter)]
    pub fn trace_csv(&self) -> String {
        self.trace_csv.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn summary(&self) -> String {
        self.summary.clone()
    }
}

#[wasm_bindgen]
pub fn track(config: &str, algorithm: &str) -> Result<TrackOutput, JsError> {
    let (trace_csv, summary) = api::track(config, algorithm).map_err(js)?;
    Ok(TrackOutput { trace_csv, summary })
}

#[wasm_bindgen]
pub fn compare_table(config: &str) -> Result<String, JsError> {
    api::compare_table(config).map_err(js)
}
