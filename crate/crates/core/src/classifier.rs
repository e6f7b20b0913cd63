//! Decision procedures: the level-K ratio and root tests, automatic level
//! escalation, and the almost-all-index criterion with its ratio-only
//! sufficient variant.
//!
//! All verdicts are finite-horizon evidence. A level decides only when the
//! tail window of `s_n` and the extrapolated limit of its drift fit sit on
//! the same side of `1 ± decision_margin`; when either lies inside the band
//! the excess is carried to the next level.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::envelope::{envelope_fit, EnvelopeFit};
use crate::error::{Error, Result};
use crate::index_set::{index_set_stats_with, DensityClass, IndexSetConfig, IndexSetStats};
use crate::iterlog::{iter_ln, BertrandLevel, CLASSIFIER_MARGIN, MAX_LEVEL};
use crate::series::{s_entries, s_trace_with, valid_range, Mode, SLevelTrace, TermStream, TraceConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Decision {
    Converges,
    Diverges,
    Inconclusive,
}

impl Decision {
    pub fn name(&self) -> &'static str {
        match self {
            Decision::Converges => "CONVERGES",
            Decision::Diverges => "DIVERGES",
            Decision::Inconclusive => "INCONCLUSIVE",
        }
    }
}

/// Which procedure produced a verdict.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Test {
    /// `a_n/a_{n+1} = B_K(n) + s_n/D_K(n)`.
    BertrandRatio,
    /// Root measurement at level K.
    BertrandRoot,
    /// Root-form inequality for strongly almost all / almost all n.
    AlmostAllIndex,
    /// Ratio-form inequality for strongly almost all n (sufficiency only).
    AlmostAllRatio,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifierConfig {
    pub decision_margin: f64,
    pub c_grid: Vec<f64>,
    pub safety_margin: f64,
    pub trace: TraceConfig,
    pub index: IndexSetConfig,
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        Self {
            decision_margin: 0.05,
            c_grid: vec![1.01, 1.1, 1.25, 1.5, 2.0, 3.0],
            safety_margin: CLASSIFIER_MARGIN,
            trace: TraceConfig::default(),
            index: IndexSetConfig::default(),
        }
    }
}

impl ClassifierConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.decision_margin > 0.0 && self.decision_margin < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "decision margin must lie in (0, 1), got {}",
                self.decision_margin
            )));
        }
        if self.c_grid.is_empty() || self.c_grid.iter().any(|c| !(*c > 1.0) || !c.is_finite()) {
            return Err(Error::InvalidArgument("c grid must be non-empty with every c > 1".into()));
        }
        if !(self.trace.tail_fraction > 0.0 && self.trace.tail_fraction <= 1.0) {
            return Err(Error::InvalidArgument("tail fraction must lie in (0, 1]".into()));
        }
        Ok(())
    }

    fn level(&self, k: u32) -> Result<BertrandLevel> {
        BertrandLevel::with_margin(k, self.safety_margin)
    }
}

/// Tail evidence of one s-trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailSummary {
    pub level: u32,
    pub mode: Mode,
    pub tail_liminf_est: f64,
    pub tail_limsup_est: f64,
    pub tail_window: (u64, u64),
    pub drift_limit: Option<f64>,
    pub drift_slope: Option<f64>,
    pub samples: usize,
}

impl From<&SLevelTrace> for TailSummary {
    fn from(t: &SLevelTrace) -> Self {
        Self {
            level: t.level.k(),
            mode: t.mode,
            tail_liminf_est: t.tail_liminf_est,
            tail_limsup_est: t.tail_limsup_est,
            tail_window: t.tail_window,
            drift_limit: t.drift.map(|d| d.limit),
            drift_slope: t.drift.map(|d| d.slope),
            samples: t.entries.len(),
        }
    }
}

/// One `(K, c)` cell of the almost-all grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridCell {
    pub level: u32,
    pub c: f64,
    pub class: DensityClass,
    pub density_est: f64,
    pub defect_sup_tail: u64,
    /// First index of the membership window.
    pub from_n: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Certificate {
    Tail(TailSummary),
    IndexSet {
        chosen: Option<GridCell>,
        cells: Vec<GridCell>,
        envelope: Option<EnvelopeFit>,
    },
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum StepOutcome {
    Decided,
    NearOneEscalate,
    DomainExhausted,
    /// Tail and drift straddle the band without concentrating at 1.
    Undecided,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EscalationStep {
    pub level: u32,
    pub summary: Option<TailSummary>,
    pub outcome: StepOutcome,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EscalationPath {
    pub steps: Vec<EscalationStep>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub decision: Decision,
    pub test: Test,
    pub mode: Mode,
    pub level: Option<u32>,
    pub certificate: Certificate,
    pub horizon: u64,
    pub decision_margin: f64,
    pub safety_margin: f64,
    pub warnings: Vec<String>,
    pub escalation: Option<EscalationPath>,
    /// Traces behind the verdict, for plotting. Not serialised.
    #[serde(skip)]
    pub traces: Vec<SLevelTrace>,
}

impl Verdict {
    fn new(test: Test, mode: Mode, ts: &TermStream, cfg: &ClassifierConfig) -> Self {
        let mut warnings = Vec::new();
        if !ts.monotone_nonincreasing() {
            warnings.push("terms are not nonincreasing; result relies on the envelope hypothesis only".into());
        }
        Self {
            decision: Decision::Inconclusive,
            test,
            mode,
            level: None,
            certificate: Certificate::None,
            horizon: ts.end_index(),
            decision_margin: cfg.decision_margin,
            safety_margin: cfg.safety_margin,
            warnings,
            escalation: None,
            traces: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum LevelOutcome {
    Decided(Decision),
    NearOne,
    Split,
}

fn judge(trace: &SLevelTrace, margin: f64) -> LevelOutcome {
    let (lo, hi) = (trace.tail_liminf_est, trace.tail_limsup_est);
    let limit = trace.drift.map(|d| d.limit);
    let (up, down) = (1.0 + margin, 1.0 - margin);
    if lo > up && limit.is_none_or(|l| l > up) {
        LevelOutcome::Decided(Decision::Converges)
    } else if hi < down && limit.is_none_or(|l| l < down) {
        LevelOutcome::Decided(Decision::Diverges)
    } else if (lo >= down && hi <= up) || limit.is_some_and(|l| (down..=up).contains(&l)) {
        LevelOutcome::NearOne
    } else {
        LevelOutcome::Split
    }
}

fn test_for(mode: Mode) -> Test {
    match mode {
        Mode::Ratio => Test::BertrandRatio,
        Mode::Root | Mode::RootExponent => Test::BertrandRoot,
    }
}

/// Single-level test in the given reading.
pub fn classify_at(ts: &TermStream, level: BertrandLevel, mode: Mode, cfg: &ClassifierConfig) -> Result<Verdict> {
    cfg.validate()?;
    let trace = s_trace_with(ts, level, mode, &cfg.trace)?;
    let mut v = Verdict::new(test_for(mode), mode, ts, cfg);
    v.level = Some(level.k());
    v.safety_margin = level.safety_margin();
    v.certificate = Certificate::Tail(TailSummary::from(&trace));
    v.decision = match judge(&trace, cfg.decision_margin) {
        LevelOutcome::Decided(d) => d,
        _ => Decision::Inconclusive,
    };
    v.traces.push(trace);
    Ok(v)
}

/// Ratio test at a fixed level.
pub fn classify_ratio(ts: &TermStream, level: BertrandLevel) -> Result<Verdict> {
    classify_at(ts, level, Mode::Ratio, &ClassifierConfig::default())
}

/// Root test at a fixed level, read through the exponent form of the root
/// measurement.
pub fn classify_root(ts: &TermStream, level: BertrandLevel) -> Result<Verdict> {
    classify_at(ts, level, Mode::RootExponent, &ClassifierConfig::default())
}

/// Next-level trace from the current one: `s_{K+1}(n) = (s_K(n) - 1) ln_(K+1) n`,
/// the coefficient returned by [`crate::iterlog::escalate_excess`].
fn escalate_trace(prev: &SLevelTrace, next: BertrandLevel, cfg: &TraceConfig) -> Result<SLevelTrace> {
    let start = next.domain_start()?;
    let k1 = next.k();
    let entries: Vec<(u64, f64)> = prev
        .entries
        .par_iter()
        .filter(|e| e.0 >= start)
        .map(|&(n, s)| (n, (s - 1.0) * iter_ln(k1, n as f64).expect("inside level domain")))
        .collect();
    SLevelTrace::from_entries(next, prev.mode, entries, cfg)
}

/// Starts at K = 1 and moves one level deeper whenever the tail
/// concentrates in `1 ± margin`, until a decision, the level cap, or the end
/// of the level domain.
pub fn auto_escalate(ts: &TermStream, mode: Mode) -> Result<(Verdict, EscalationPath)> {
    auto_escalate_with(ts, mode, &ClassifierConfig::default())
}

pub fn auto_escalate_with(ts: &TermStream, mode: Mode, cfg: &ClassifierConfig) -> Result<(Verdict, EscalationPath)> {
    cfg.validate()?;
    let mut v = Verdict::new(test_for(mode), mode, ts, cfg);
    let mut path = EscalationPath::default();
    let mut prev: Option<SLevelTrace> = None;
    for k in 1..=MAX_LEVEL {
        let level = cfg.level(k)?;
        let trace = match (&prev, mode) {
            (Some(p), Mode::Ratio | Mode::Root) => escalate_trace(p, level, &cfg.trace),
            _ => s_trace_with(ts, level, mode, &cfg.trace),
        };
        let trace = match trace {
            Ok(t) => t,
            Err(Error::InsufficientData(_)) | Err(Error::Domain(_)) | Err(Error::Overflow(_)) => {
                path.steps.push(EscalationStep {
                    level: k,
                    summary: None,
                    outcome: StepOutcome::DomainExhausted,
                });
                v.warnings.push(format!("level {k} domain exhausted before a decision"));
                break;
            }
            Err(e) => return Err(e),
        };
        let summary = TailSummary::from(&trace);
        let outcome = judge(&trace, cfg.decision_margin);
        v.level = Some(k);
        v.certificate = Certificate::Tail(summary.clone());
        v.traces.push(trace.clone());
        match outcome {
            LevelOutcome::Decided(d) => {
                path.steps.push(EscalationStep { level: k, summary: Some(summary), outcome: StepOutcome::Decided });
                v.decision = d;
                break;
            }
            LevelOutcome::Split => {
                path.steps.push(EscalationStep { level: k, summary: Some(summary), outcome: StepOutcome::Undecided });
                break;
            }
            LevelOutcome::NearOne => {
                path.steps.push(EscalationStep {
                    level: k,
                    summary: Some(summary),
                    outcome: StepOutcome::NearOneEscalate,
                });
                if k == MAX_LEVEL {
                    v.warnings.push(format!("level cap {MAX_LEVEL} reached with s_n near 1"));
                }
                prev = Some(trace);
            }
        }
    }
    v.escalation = Some(path.clone());
    Ok((v, path))
}

/// Membership `{n : s_K(n) >= c}` read literally (no drift correction) over
/// the valid range of the level; index `i` of the stats is `from_n + i - 1`.
pub fn eq13_membership(
    ts: &TermStream,
    level: BertrandLevel,
    mode: Mode,
    c: f64,
    cfg: &IndexSetConfig,
) -> Result<(u64, IndexSetStats)> {
    let entries = s_entries(ts, level, mode, 0, u64::MAX)?;
    let from = entries
        .first()
        .map(|e| e.0)
        .ok_or_else(|| Error::InsufficientData("no valid index at this level".into()))?;
    let stats = index_set_stats_with(|i| entries[(i - 1) as usize].1 >= c, entries.len() as u64, cfg);
    Ok((from, stats))
}

/// Runs the `(K, c)` grid on drift-corrected traces of `mode`. Returns the
/// cells of every feasible level, ordered by level then grid order.
fn grid_cells(ts: &TermStream, mode: Mode, cfg: &ClassifierConfig) -> Result<(Vec<GridCell>, Vec<SLevelTrace>)> {
    let mut cells = Vec::new();
    let mut traces = Vec::new();
    for k in 1..=MAX_LEVEL {
        let level = cfg.level(k)?;
        if valid_range(ts, level, mode)?.is_none() {
            continue;
        }
        let trace = match s_trace_with(ts, level, mode, &cfg.trace) {
            Ok(t) => t,
            Err(Error::InsufficientData(_)) | Err(Error::Domain(_)) => continue,
            Err(e) => return Err(e),
        };
        let corrected = trace.corrected();
        let from = trace.entries[0].0;
        let len = corrected.len() as u64;
        let mut level_cells: Vec<GridCell> = cfg
            .c_grid
            .par_iter()
            .map(|&c| {
                let st = index_set_stats_with(|i| corrected[(i - 1) as usize] >= c, len, &cfg.index);
                GridCell {
                    level: k,
                    c,
                    class: st.class,
                    density_est: st.density_est,
                    defect_sup_tail: st.defect_sup_tail,
                    from_n: from,
                }
            })
            .collect();
        cells.append(&mut level_cells);
        traces.push(trace);
    }
    Ok((cells, traces))
}

/// Smallest level, then largest `c`, among strongly-almost-all cells.
fn pick_certificate(cells: &[GridCell]) -> Option<GridCell> {
    let k = cells
        .iter()
        .filter(|c| c.class == DensityClass::StronglyAlmostAll)
        .map(|c| c.level)
        .min()?;
    cells
        .iter()
        .filter(|c| c.level == k && c.class == DensityClass::StronglyAlmostAll)
        .max_by(|a, b| a.c.total_cmp(&b.c))
        .cloned()
}

/// Almost-all-index criterion: converges when some `(K, c > 1)` root
/// inequality holds for strongly almost all n, diverges when for every
/// feasible K and every c the inequality holds on a set of density bounded
/// away from one. Falls back to [`auto_escalate`] (ratio) when the
/// polynomial envelope hypothesis fails.
pub fn classify_necsuf(ts: &TermStream) -> Result<Verdict> {
    classify_necsuf_with(ts, &ClassifierConfig::default())
}

pub fn classify_necsuf_with(ts: &TermStream, cfg: &ClassifierConfig) -> Result<Verdict> {
    cfg.validate()?;
    let envelope = match envelope_fit(ts) {
        Ok(env) => env,
        Err(Error::NoEnvelope) => {
            let (mut v, _) = auto_escalate_with(ts, Mode::Ratio, cfg)?;
            v.warnings
                .push("no polynomial envelope a_n < r n^-alpha; almost-all criterion not applicable, ratio escalation used".into());
            return Ok(v);
        }
        Err(e) => return Err(e),
    };
    let mode = Mode::RootExponent;
    let (cells, traces) = grid_cells(ts, mode, cfg)?;
    let mut v = Verdict::new(Test::AlmostAllIndex, mode, ts, cfg);
    v.traces = traces;
    if cells.is_empty() {
        v.warnings.push("no feasible level for this horizon".into());
        v.certificate = Certificate::IndexSet { chosen: None, cells, envelope: Some(envelope) };
        return Ok(v);
    }
    let chosen = pick_certificate(&cells);
    v.decision = if chosen.is_some() {
        Decision::Converges
    } else if cells.iter().all(|c| c.density_est <= cfg.index.below_one) {
        Decision::Diverges
    } else {
        Decision::Inconclusive
    };
    v.level = chosen.as_ref().map(|c| c.level);
    v.certificate = Certificate::IndexSet { chosen, cells, envelope: Some(envelope) };
    Ok(v)
}

/// Sufficiency half of the almost-all criterion with ratio measurements.
/// Never returns `Diverges`.
pub fn classify_ratio_sufficient(ts: &TermStream) -> Result<Verdict> {
    classify_ratio_sufficient_with(ts, &ClassifierConfig::default())
}

pub fn classify_ratio_sufficient_with(ts: &TermStream, cfg: &ClassifierConfig) -> Result<Verdict> {
    cfg.validate()?;
    if !ts.monotone_nonincreasing() {
        return Err(Error::Monotonicity);
    }
    let (cells, traces) = grid_cells(ts, Mode::Ratio, cfg)?;
    let mut v = Verdict::new(Test::AlmostAllRatio, Mode::Ratio, ts, cfg);
    v.traces = traces;
    let chosen = pick_certificate(&cells);
    if chosen.is_some() {
        v.decision = Decision::Converges;
    }
    v.level = chosen.as_ref().map(|c| c.level);
    v.certificate = Certificate::IndexSet { chosen, cells, envelope: None };
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn stream(start: u64, end: u64, f: impl Fn(f64) -> f64) -> TermStream {
        TermStream::from_logs(start, (start..=end).map(|n| f(n as f64)).collect()).unwrap()
    }

    fn l(k: u32) -> BertrandLevel {
        BertrandLevel::with_margin(k, CLASSIFIER_MARGIN).unwrap()
    }

    #[test]
    fn ratio_examples() {
        let harmonic = stream(1, 100_000, |n| -n.ln());
        assert_eq!(classify_ratio(&harmonic, l(1)).unwrap().decision, Decision::Diverges);
        let sq = stream(1, 100_000, |n| -2.0 * n.ln());
        assert_eq!(classify_ratio(&sq, l(1)).unwrap().decision, Decision::Converges);
        let nlogn = stream(2, 1_000_000, |n| -n.ln() - n.ln().ln());
        assert_eq!(classify_ratio(&nlogn, l(1)).unwrap().decision, Decision::Inconclusive);
    }

    #[test]
    fn root_examples() {
        let sq = stream(1, 100_000, |n| -1.0 - 2.0 * n.ln());
        assert_eq!(classify_root(&sq, l(1)).unwrap().decision, Decision::Converges);
        let half = stream(1, 100_000, |n| -1.0 - 0.5 * n.ln());
        assert_eq!(classify_root(&half, l(1)).unwrap().decision, Decision::Diverges);
        // boundary of the exponent reading: e^-1 / n
        let boundary = stream(1, 100_000, |n| -1.0 - n.ln());
        assert_eq!(classify_root(&boundary, l(1)).unwrap().decision, Decision::Inconclusive);
    }

    #[test]
    fn escalation_examples() {
        let nlogn = stream(2, 1_000_000, |n| -n.ln() - n.ln().ln());
        let (v, path) = auto_escalate(&nlogn, Mode::Ratio).unwrap();
        assert_eq!((v.decision, v.level), (Decision::Diverges, Some(2)));
        assert_eq!(path.steps[0].outcome, StepOutcome::NearOneEscalate);

        let sq = stream(1, 100_000, |n| -2.0 * n.ln());
        let (v, path) = auto_escalate(&sq, Mode::Ratio).unwrap();
        assert_eq!((v.decision, v.level, path.steps.len()), (Decision::Converges, Some(1), 1));
    }

    #[test]
    fn escalated_trace_matches_direct_trace() {
        let ts = stream(3, 200_000, |n| -n.ln() - n.ln().ln() - 2.0 * n.ln().ln().ln());
        let cfg = TraceConfig::default();
        let t1 = s_trace_with(&ts, l(1), Mode::Ratio, &cfg).unwrap();
        let via = escalate_trace(&t1, l(2), &cfg).unwrap();
        let direct = s_trace_with(&ts, l(2), Mode::Ratio, &cfg).unwrap();
        assert_eq!(via.entries.len(), direct.entries.len());
        for (a, b) in via.entries.iter().zip(&direct.entries).step_by(101) {
            assert_eq!(a.0, b.0);
            assert!((a.1 - b.1).abs() < 1e-6, "n={} {} vs {}", a.0, a.1, b.1);
        }
    }

    #[test]
    fn necsuf_examples() {
        let sq = stream(1, 200_000, |n| -1.0 - 2.0 * n.ln());
        let v = classify_necsuf(&sq).unwrap();
        assert_eq!(v.decision, Decision::Converges);
        let Certificate::IndexSet { chosen: Some(cell), .. } = &v.certificate else { panic!() };
        assert_eq!(cell.level, 1);
        assert_eq!(cell.class, DensityClass::StronglyAlmostAll);
        assert!(cell.c >= 1.5);

        let nlogn = stream(2, 1_000_000, |n| -n.ln() - n.ln().ln());
        let v = classify_necsuf(&nlogn).unwrap();
        assert_eq!(v.decision, Decision::Diverges);
        let Certificate::IndexSet { cells, .. } = &v.certificate else { panic!() };
        assert!(cells.iter().all(|c| c.density_est <= 0.95));
    }

    #[test]
    fn necsuf_without_envelope_falls_back() {
        let flat = stream(1, 50_000, |_| 0.0);
        let v = classify_necsuf(&flat).unwrap();
        assert_eq!(v.test, Test::BertrandRatio);
        assert_eq!(v.decision, Decision::Diverges);
        assert!(v.warnings.iter().any(|w| w.contains("envelope")));
    }

    #[test]
    fn ratio_sufficient_examples() {
        let sq = stream(1, 200_000, |n| -1.0 - 2.0 * n.ln());
        assert_eq!(classify_ratio_sufficient(&sq).unwrap().decision, Decision::Converges);
        let harmonic = stream(1, 200_000, |n| -n.ln());
        let v = classify_ratio_sufficient(&harmonic).unwrap();
        assert_eq!(v.decision, Decision::Inconclusive);
        let Certificate::IndexSet { cells, .. } = &v.certificate else { panic!() };
        assert!(cells.iter().filter(|c| c.level == 1).all(|c| c.density_est == 0.0));
        let rising = stream(1, 20_000, |n| n.ln());
        assert_eq!(classify_ratio_sufficient(&rising), Err(Error::Monotonicity));
    }

    #[test]
    fn config_validation() {
        let cfg = ClassifierConfig { decision_margin: 0.0, ..Default::default() };
        assert!(cfg.validate().is_err());
        let cfg = ClassifierConfig { c_grid: vec![1.0], ..Default::default() };
        assert!(cfg.validate().is_err());
    }
}
