use wasm_bindgen::prelude::*;

pub mod demo;

fn js(e: demo::DemoError) -> JsError {
    JsError::new(&e.to_string())
}

/// JSON `{family, level, mode, points: [[n, s], ...], tail_window, tail, drift}`.
#[wasm_bindgen(js_name = sTrace)]
pub fn s_trace(family: &str, horizon: u32, level: u32, mode: &str, max_points: u32) -> Result<String, JsError> {
    demo::trace_plot(family, horizon.into(), level, mode, max_points as usize)
        .map(|p| demo::to_json(&p))
        .map_err(js)
}

/// JSON report, including the escalation path for `escalate`.
#[wasm_bindgen]
pub fn classify(family: &str, horizon: u32, test: &str) -> Result<String, JsError> {
    demo::verdict(family, horizon.into(), test).map(|v| demo::to_json(&v)).map_err(js)
}

/// JSON simulation estimate plus the exact return probability.
#[wasm_bindgen]
pub fn simulate(lambda: f64, mu: f64, trials: u32, step_cap: u32, seed: u32) -> Result<String, JsError> {
    demo::simulation(lambda, mu, trials.into(), step_cap.into(), seed.into())
        .map(|v| demo::to_json(&v))
        .map_err(js)
}
