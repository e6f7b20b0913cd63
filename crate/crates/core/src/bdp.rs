//! Birth-death chains on `{0, 1, 2, ...}`: recurrence/transience through the
//! series `Σ Π_{k<=n} μ_k/λ_k`, and a Monte Carlo return-probability check on
//! the embedded jump chain.

use std::io::Read;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classifier::{classify_necsuf_with, classify_ratio_sufficient_with, ClassifierConfig, Decision, Verdict};
use crate::error::{Error, Result};
use crate::series::TermStream;

/// Birth rates `λ_n` and death rates `μ_n` for `n = 1..=horizon`.
#[derive(Debug, Clone, PartialEq)]
pub struct BdpRates {
    lambda: Vec<f64>,
    mu: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum BdpFamily {
    /// `λ_k = k + 2`, `μ_k = k`.
    Telescoping,
    /// `λ_k = μ_k = 1`.
    Symmetric,
    Constant { lambda: f64, mu: f64 },
    /// `μ_k/λ_k = 1 + 1/(k ln k)` for `k >= 3`, `1` before.
    LogBoundary,
    /// `μ_k/λ_k = 1 - α ln k / k`.
    LogDrift { alpha: f64 },
}

#[derive(Deserialize)]
struct RateRow {
    n: u64,
    lambda: f64,
    mu: f64,
}

impl BdpRates {
    pub fn new(lambda: Vec<f64>, mu: Vec<f64>) -> Result<Self> {
        if lambda.len() != mu.len() {
            return Err(Error::Rate {
                row: lambda.len().min(mu.len()) + 1,
                msg: "lambda and mu have different lengths".into(),
            });
        }
        if lambda.is_empty() {
            return Err(Error::Rate { row: 0, msg: "no rates".into() });
        }
        for (i, (l, m)) in lambda.iter().zip(&mu).enumerate() {
            if !(*l > 0.0 && l.is_finite() && *m > 0.0 && m.is_finite()) {
                return Err(Error::Rate {
                    row: i + 1,
                    msg: format!("rates must lie in (0, inf), got lambda = {l}, mu = {m}"),
                });
            }
        }
        Ok(Self { lambda, mu })
    }

    pub fn builtin(family: BdpFamily, horizon: u64) -> Result<Self> {
        let ks = 1..=horizon;
        let (lambda, mu): (Vec<f64>, Vec<f64>) = match family {
            BdpFamily::Telescoping => ks.map(|k| (k as f64 + 2.0, k as f64)).unzip(),
            BdpFamily::Symmetric => ks.map(|_| (1.0, 1.0)).unzip(),
            BdpFamily::Constant { lambda, mu } => ks.map(|_| (lambda, mu)).unzip(),
            BdpFamily::LogBoundary => ks
                .map(|k| {
                    let kf = k as f64;
                    (1.0, if k >= 3 { 1.0 + 1.0 / (kf * kf.ln()) } else { 1.0 })
                })
                .unzip(),
            BdpFamily::LogDrift { alpha } => ks
                .map(|k| {
                    let kf = k as f64;
                    (1.0, 1.0 - alpha * kf.ln() / kf)
                })
                .unzip(),
        };
        Self::new(lambda, mu)
    }

    /// CSV with header `n,lambda,mu`; `n` runs 1, 2, 3, ...
    pub fn from_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let headers = rdr.headers().map_err(|e| Error::Rate { row: 0, msg: e.to_string() })?;
        if headers.iter().collect::<Vec<_>>() != ["n", "lambda", "mu"] {
            return Err(Error::Rate { row: 0, msg: "header must be n,lambda,mu".into() });
        }
        let (mut lambda, mut mu) = (Vec::new(), Vec::new());
        for (i, rec) in rdr.deserialize::<RateRow>().enumerate() {
            let row = i + 1;
            let r = rec.map_err(|e| Error::Rate { row, msg: e.to_string() })?;
            if r.n != row as u64 {
                return Err(Error::Rate {
                    row,
                    msg: format!("expected n = {row}, got {}", r.n),
                });
            }
            lambda.push(r.lambda);
            mu.push(r.mu);
        }
        Self::new(lambda, mu)
    }

    pub fn horizon(&self) -> u64 {
        self.lambda.len() as u64
    }

    pub fn lambda(&self, n: u64) -> f64 {
        self.lambda[(n - 1) as usize]
    }

    pub fn mu(&self, n: u64) -> f64 {
        self.mu[(n - 1) as usize]
    }
}

/// `a_n = Π_{k=1}^{n} μ_k/λ_k` in log form, with exact step ratios
/// `a_n / a_{n+1} = λ_{n+1}/μ_{n+1}`.
pub fn bdp_series(rates: &BdpRates) -> Result<TermStream> {
    if rates.horizon() < 10 {
        return Err(Error::InvalidArgument(format!("horizon must be >= 10, got {}", rates.horizon())));
    }
    let ln_first = rates.mu[0].ln() - rates.lambda[0].ln();
    let log_ratios: Vec<f64> = rates.lambda[1..]
        .iter()
        .zip(&rates.mu[1..])
        .map(|(l, m)| l.ln() - m.ln())
        .collect();
    let monotone = rates.lambda.iter().zip(&rates.mu).all(|(l, m)| m <= l);
    Ok(TermStream::from_log_ratios(1, ln_first, log_ratios)?.with_monotone_flag(monotone))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ChainDecision {
    Recurrent,
    Transient,
    Inconclusive,
}

impl ChainDecision {
    pub fn name(&self) -> &'static str {
        match self {
            ChainDecision::Recurrent => "RECURRENT",
            ChainDecision::Transient => "TRANSIENT",
            ChainDecision::Inconclusive => "INCONCLUSIVE",
        }
    }
}

impl From<Decision> for ChainDecision {
    fn from(d: Decision) -> Self {
        match d {
            Decision::Converges => ChainDecision::Transient,
            Decision::Diverges => ChainDecision::Recurrent,
            Decision::Inconclusive => ChainDecision::Inconclusive,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimplifiedConditions {
    /// `μ_n/λ_n` stays within `1 ± tolerance` over the tail window.
    pub ratio_to_one: bool,
    /// `ln(μ_n/λ_n) < -α ln n / n` from `n0` to the horizon.
    pub log_bound: bool,
    pub alpha_used: f64,
    pub n0: Option<u64>,
    pub tolerance: f64,
}

pub const RATIO_TOLERANCE: f64 = 0.01;

pub fn check_simplified_conditions(rates: &BdpRates, alpha: f64) -> Result<SimplifiedConditions> {
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(Error::InvalidArgument(format!("alpha must be > 0, got {alpha}")));
    }
    let h = rates.horizon();
    let tail_start = (h - h / 4).max(1);
    let ratio_to_one = (tail_start..=h).all(|n| (rates.mu(n) / rates.lambda(n) - 1.0).abs() <= RATIO_TOLERANCE);
    let holds = |n: u64| {
        let nf = n as f64;
        rates.mu(n).ln() - rates.lambda(n).ln() < -alpha * nf.ln() / nf
    };
    let last_bad = (1..=h).rev().find(|&n| !holds(n));
    let n0 = match last_bad {
        None => Some(1),
        Some(b) if b < h => Some(b + 1),
        Some(_) => None,
    };
    Ok(SimplifiedConditions {
        ratio_to_one,
        log_bound: n0.is_some_and(|n| n <= tail_start),
        alpha_used: alpha,
        n0,
        tolerance: RATIO_TOLERANCE,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimulationConfig {
    pub trials: u64,
    pub step_cap: u64,
    pub seed: u64,
    /// A walker reaching this level counts as not returning.
    pub escape_level: u64,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        Self {
            trials: 100_000,
            step_cap: 1_000_000,
            seed: 0,
            escape_level: 1000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationEstimate {
    pub return_prob: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub trials: u64,
    pub returned: u64,
    pub escaped: u64,
    pub capped: u64,
    pub step_cap: u64,
    pub escape_level: u64,
    pub seed: u64,
    /// False for chains with `μ_n/λ_n -> 1`, where return times outrun any cap.
    pub dispositive: bool,
    pub warnings: Vec<String>,
}

const Z95: f64 = 1.959964;

/// Wilson score interval at 95%.
pub fn wilson_interval(successes: u64, trials: u64) -> (f64, f64) {
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = Z95 * Z95;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = Z95 / denom * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    let lo = if successes == 0 { 0.0 } else { (center - half).max(0.0) };
    let hi = if successes == trials { 1.0 } else { (center + half).min(1.0) };
    (lo, hi)
}

#[derive(Clone, Copy)]
enum Outcome {
    Returned,
    Escaped,
    Capped,
}

/// Embedded jump chain from state 1, one ChaCha stream per trial.
pub fn simulate_bdp(rates: &BdpRates, cfg: &SimulationConfig) -> Result<SimulationEstimate> {
    if cfg.trials == 0 {
        return Err(Error::InvalidArgument("trials must be >= 1".into()));
    }
    if cfg.step_cap == 0 {
        return Err(Error::InvalidArgument("step cap must be >= 1".into()));
    }
    if cfg.escape_level < 2 {
        return Err(Error::InvalidArgument("escape level must be >= 2".into()));
    }
    let escape = cfg.escape_level.min(rates.horizon() + 1);
    let p_up: Vec<f64> = rates
        .lambda
        .iter()
        .zip(&rates.mu)
        .map(|(l, m)| l / (l + m))
        .collect();
    let run = |trial: u64| -> Outcome {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(trial);
        let mut state = 1u64;
        for _ in 0..cfg.step_cap {
            let u: f64 = rng.random();
            if u < p_up[(state - 1) as usize] {
                state += 1;
                if state >= escape {
                    return Outcome::Escaped;
                }
            } else {
                state -= 1;
                if state == 0 {
                    return Outcome::Returned;
                }
            }
        }
        Outcome::Capped
    };
    let (returned, escaped, capped) = (0..cfg.trials)
        .into_par_iter()
        .map(|t| match run(t) {
            Outcome::Returned => (1u64, 0u64, 0u64),
            Outcome::Escaped => (0, 1, 0),
            Outcome::Capped => (0, 0, 1),
        })
        .reduce(|| (0, 0, 0), |a, b| (a.0 + b.0, a.1 + b.1, a.2 + b.2));
    let (ci_low, ci_high) = wilson_interval(returned, cfg.trials);
    let mut warnings = Vec::new();
    if capped * 100 > cfg.trials {
        warnings.push(format!("{capped} of {} trials hit the step cap without returning", cfg.trials));
    }
    let tail = check_simplified_conditions(rates, 1.0)?;
    Ok(SimulationEstimate {
        return_prob: returned as f64 / cfg.trials as f64,
        ci_low,
        ci_high,
        trials: cfg.trials,
        returned,
        escaped,
        capped,
        step_cap: cfg.step_cap,
        escape_level: escape,
        seed: cfg.seed,
        dispositive: !tail.ratio_to_one,
        warnings,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BdpVerdict {
    pub decision: ChainDecision,
    /// Series verdict behind `decision`.
    pub series: Verdict,
    /// Ratio-only sufficiency run, when the series is nonincreasing.
    pub ratio_sufficient: Option<Decision>,
    pub simplified: SimplifiedConditions,
    pub simulation: Option<SimulationEstimate>,
}

pub fn classify_bdp(rates: &BdpRates) -> Result<BdpVerdict> {
    classify_bdp_with(rates, &ClassifierConfig::default(), 1.0, None)
}

pub fn classify_bdp_with(
    rates: &BdpRates,
    cfg: &ClassifierConfig,
    alpha: f64,
    simulation: Option<&SimulationConfig>,
) -> Result<BdpVerdict> {
    let ts = bdp_series(rates)?;
    let mut series = classify_necsuf_with(&ts, cfg)?;
    let ratio_sufficient = if ts.monotone_nonincreasing() {
        let v = classify_ratio_sufficient_with(&ts, cfg)?;
        let d = v.decision;
        if series.decision == Decision::Inconclusive && d == Decision::Converges {
            series = v;
        }
        Some(d)
    } else {
        None
    };
    let simulation = simulation.map(|s| simulate_bdp(rates, s)).transpose()?;
    Ok(BdpVerdict {
        decision: series.decision.into(),
        series,
        ratio_sufficient,
        simplified: check_simplified_conditions(rates, alpha)?,
        simulation,
    })
}
