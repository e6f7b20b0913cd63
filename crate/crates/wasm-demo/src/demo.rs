//! Plain-Rust operations behind the browser bindings.

use demorgan_core::bdp::{simulate_bdp, BdpFamily, BdpRates, SimulationConfig};
use demorgan_core::catalog::Family;
use demorgan_core::classifier::{auto_escalate, classify_necsuf};
use demorgan_core::io::Report;
use demorgan_core::iterlog::BertrandLevel;
use demorgan_core::series::{s_trace, DriftFit, Mode};
use serde::Serialize;

pub const MAX_HORIZON: u64 = 2_000_000;
pub const MAX_TRIALS: u64 = 200_000;

#[derive(Debug, thiserror::Error)]
pub enum DemoError {
    #[error(transparent)]
    Core(#[from] demorgan_core::Error),
    #[error("{0}")]
    Input(String),
}

#[derive(Debug, Serialize)]
pub struct TracePlot {
    pub family: String,
    pub level: u32,
    pub mode: &'static str,
    /// `(n, s_n)`, thinned to roughly log-spaced indices.
    pub points: Vec<(u64, f64)>,
    pub tail_window: (u64, u64),
    pub tail: (f64, f64),
    pub drift: Option<DriftFit>,
}

fn horizon_ok(h: u64) -> Result<u64, DemoError> {
    if (1000..=MAX_HORIZON).contains(&h) {
        Ok(h)
    } else {
        Err(DemoError::Input(format!("horizon must lie in [1000, {MAX_HORIZON}], got {h}")))
    }
}

fn thin(entries: &[(u64, f64)], max_points: usize) -> Vec<(u64, f64)> {
    if entries.len() <= max_points || max_points < 2 {
        return entries.to_vec();
    }
    let (lo, hi) = ((entries[0].0 as f64).ln(), (entries[entries.len() - 1].0 as f64).ln());
    let mut out: Vec<(u64, f64)> = Vec::with_capacity(max_points);
    let mut i = 0;
    for j in 0..max_points {
        let target = (lo + (hi - lo) * j as f64 / (max_points - 1) as f64).exp();
        while i + 1 < entries.len() && (entries[i].0 as f64) < target {
            i += 1;
        }
        if out.last().is_none_or(|p| p.0 < entries[i].0) {
            out.push(entries[i]);
        }
    }
    out
}

pub fn trace_plot(family: &str, horizon: u64, level: u32, mode: &str, max_points: usize) -> Result<TracePlot, DemoError> {
    let fam: Family = family.parse()?;
    let mode: Mode = mode.parse()?;
    let ts = fam.stream(horizon_ok(horizon)?)?;
    let tr = s_trace(&ts, BertrandLevel::new(level)?, mode)?;
    Ok(TracePlot {
        family: fam.to_string(),
        level,
        mode: mode.name(),
        points: thin(&tr.entries, max_points),
        tail_window: tr.tail_window,
        tail: (tr.tail_liminf_est, tr.tail_limsup_est),
        drift: tr.drift,
    })
}

/// `test` is `necsuf` or `escalate`.
pub fn verdict(family: &str, horizon: u64, test: &str) -> Result<Report, DemoError> {
    let fam: Family = family.parse()?;
    let ts = fam.stream(horizon_ok(horizon)?)?;
    let v = match test {
        "necsuf" => classify_necsuf(&ts)?,
        "escalate" => auto_escalate(&ts, Mode::Ratio)?.0,
        other => return Err(DemoError::Input(format!("unknown test {other:?}"))),
    };
    Ok(Report::from_verdict(&v, None))
}

pub fn simulation(lambda: f64, mu: f64, trials: u64, step_cap: u64, seed: u64) -> Result<serde_json::Value, DemoError> {
    if trials == 0 || trials > MAX_TRIALS {
        return Err(DemoError::Input(format!("trials must lie in [1, {MAX_TRIALS}], got {trials}")));
    }
    let rates = BdpRates::builtin(BdpFamily::Constant { lambda, mu }, 1000)?;
    let cfg = SimulationConfig { trials, step_cap, seed, ..Default::default() };
    let est = simulate_bdp(&rates, &cfg)?;
    let mut v = serde_json::to_value(&est).map_err(|e| DemoError::Input(e.to_string()))?;
    v["exact"] = serde_json::json!(f64::min(1.0, mu / lambda));
    Ok(v)
}

pub fn to_json<T: Serialize>(v: &T) -> String {
    serde_json::to_string(v).expect("plain data serializes")
}
