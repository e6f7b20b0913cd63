//! Term streams, ratio/root measurements and level-K s-traces.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::iterlog::{baseline_excess_unchecked, denom_unchecked, ln_chain, BertrandLevel};

/// Positive terms `a_n`, `n = start_index, start_index + 1, ...`, stored as
/// natural logarithms.
///
/// Streams produced by cumulative constructions (ratio plants, birth-death
/// products) also keep the exact step log-ratios `ln(a_n / a_{n+1})`, so
/// ratio measurements do not pay for the rounding of the running sum.
#[derive(Debug, Clone, PartialEq)]
pub struct TermStream {
    start_index: u64,
    log_terms: Vec<f64>,
    log_ratios: Option<Vec<f64>>,
    monotone_nonincreasing: bool,
}

impl TermStream {
    pub fn from_logs(start_index: u64, log_terms: Vec<f64>) -> Result<Self> {
        if start_index == 0 {
            return Err(Error::InvalidArgument("start index must be >= 1".into()));
        }
        if log_terms.is_empty() {
            return Err(Error::InvalidArgument("empty term stream".into()));
        }
        if let Some(i) = log_terms.iter().position(|v| !v.is_finite()) {
            return Err(Error::Domain(format!(
                "term at n = {} is not a finite positive number",
                start_index + i as u64
            )));
        }
        let monotone = log_terms.windows(2).all(|w| w[1] <= w[0]);
        Ok(Self {
            start_index,
            log_terms,
            log_ratios: None,
            monotone_nonincreasing: monotone,
        })
    }

    pub fn from_terms(start_index: u64, terms: &[f64]) -> Result<Self> {
        if let Some(i) = terms.iter().position(|a| !(*a > 0.0) || !a.is_finite()) {
            return Err(Error::Domain(format!(
                "term at n = {} is not positive",
                start_index + i as u64
            )));
        }
        Self::from_logs(start_index, terms.iter().map(|a| a.ln()).collect())
    }

    /// Builds a stream from `ln a_start` and the step log-ratios
    /// `ln(a_n / a_{n+1})`.
    pub fn from_log_ratios(start_index: u64, ln_first: f64, log_ratios: Vec<f64>) -> Result<Self> {
        let mut log_terms = Vec::with_capacity(log_ratios.len() + 1);
        log_terms.push(ln_first);
        let mut acc = crate::sum::CompensatedSum::new();
        acc.add(ln_first);
        for r in &log_ratios {
            acc.add(-r);
            log_terms.push(acc.value());
        }
        let mut ts = Self::from_logs(start_index, log_terms)?;
        ts.monotone_nonincreasing = log_ratios.iter().all(|r| *r >= 0.0);
        ts.log_ratios = Some(log_ratios);
        Ok(ts)
    }

    pub fn start_index(&self) -> u64 {
        self.start_index
    }

    pub fn end_index(&self) -> u64 {
        self.start_index + self.log_terms.len() as u64 - 1
    }

    pub fn len(&self) -> usize {
        self.log_terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.log_terms.is_empty()
    }

    pub fn log_terms(&self) -> &[f64] {
        &self.log_terms
    }

    pub fn monotone_nonincreasing(&self) -> bool {
        self.monotone_nonincreasing
    }

    pub(crate) fn with_monotone_flag(mut self, flag: bool) -> Self {
        self.monotone_nonincreasing = flag;
        self
    }

    pub fn has_exact_ratios(&self) -> bool {
        self.log_ratios.is_some()
    }

    fn offset(&self, n: u64) -> Result<usize> {
        if n < self.start_index || n > self.end_index() {
            return Err(Error::Index {
                index: n,
                start: self.start_index,
                end: self.end_index(),
            });
        }
        Ok((n - self.start_index) as usize)
    }

    /// `ln a_n`.
    pub fn ln_a(&self, n: u64) -> Result<f64> {
        Ok(self.log_terms[self.offset(n)?])
    }

    /// `ln(a_n / a_{n+1})`.
    pub fn log_ratio(&self, n: u64) -> Result<f64> {
        let i = self.offset(n)?;
        self.offset(n + 1)?;
        Ok(match &self.log_ratios {
            Some(r) => r[i],
            None => self.log_terms[i] - self.log_terms[i + 1],
        })
    }

    /// Sub-stream on `[from, to]`.
    pub fn slice(&self, from: u64, to: u64) -> Result<Self> {
        let i = self.offset(from)?;
        let j = self.offset(to)?;
        if j < i {
            return Err(Error::InvalidArgument(format!("empty slice {from}..={to}")));
        }
        let mut out = Self::from_logs(from, self.log_terms[i..=j].to_vec())?;
        if let Some(r) = &self.log_ratios {
            let rs = r[i..j].to_vec();
            out.monotone_nonincreasing = rs.iter().all(|v| *v >= 0.0);
            out.log_ratios = Some(rs);
        }
        Ok(out)
    }
}

/// `a_n / a_{n+1}`.
pub fn measure_ratio(ts: &TermStream, n: u64) -> Result<f64> {
    Ok(ts.log_ratio(n)?.exp())
}

/// `a_n^{-1/n} = exp(-(1/n) ln a_n)`.
pub fn measure_root(ts: &TermStream, n: u64) -> Result<f64> {
    Ok((-ts.ln_a(n)? / n as f64).exp())
}

/// Solves `measured = B_K(n) + s / D_K(n)` for `s`.
pub fn extract_s(level: BertrandLevel, n: u64, measured: f64) -> Result<f64> {
    extract_s_from_excess(level, n, measured - 1.0)
}

/// Same as [`extract_s`] with `measured - 1` supplied directly, which keeps
/// the digits that forming `1 + x` would drop.
pub fn extract_s_from_excess(level: BertrandLevel, n: u64, measured_minus_one: f64) -> Result<f64> {
    let start = level.domain_start()?;
    if n < start {
        return Err(Error::Domain(format!(
            "level {} needs n >= {start}, got n = {n}",
            level.k()
        )));
    }
    Ok(s_from_excess_unchecked(level.k(), n as f64, measured_minus_one))
}

#[inline]
fn s_from_excess_unchecked(k: u32, n: f64, measured_minus_one: f64) -> f64 {
    (measured_minus_one - baseline_excess_unchecked(k, n)) * denom_unchecked(k, n)
}

/// Which measurement an s-trace reads.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Mode {
    /// `a_n / a_{n+1}` against `B_K(n) + s/D_K(n)`.
    Ratio,
    /// `a_n^{-1/n}` against `B_K(n) + s/D_K(n)`, read literally.
    Root,
    /// Exponent form of the root measurement: `s` is the slope of
    /// `ln(1/a_n) - Σ_{j<K} ln_(j) n` against `ln_(K) n` over `[n/2, n]`,
    /// so that `a_n = C / (n Π_{k=1}^{K-2} ln_(k) n · ln_(K-1)^s n)` reads
    /// back as `s` for any constant `C`.
    RootExponent,
}

impl Mode {
    pub fn name(&self) -> &'static str {
        match self {
            Mode::Ratio => "ratio",
            Mode::Root => "root",
            Mode::RootExponent => "root-exponent",
        }
    }
}

impl std::str::FromStr for Mode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ratio" => Ok(Mode::Ratio),
            "root" | "root-literal" => Ok(Mode::Root),
            "root-exponent" | "exponent" => Ok(Mode::RootExponent),
            other => Err(Error::InvalidArgument(format!("unknown mode {other:?}"))),
        }
    }
}

/// Least-squares fit `s(n) ≈ limit + slope · x(n)` where `x(n)` is the
/// vanishing scale one level down (`1/ln_(K+1) n` for the ratio and literal
/// root readings, `1/ln_(K) n` for the exponent reading).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriftFit {
    pub limit: f64,
    pub slope: f64,
    pub from_n: u64,
    pub samples: usize,
}

/// Window and fit parameters of an s-trace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceConfig {
    /// Fraction of valid indices (from the end) forming the tail window.
    pub tail_fraction: f64,
    pub min_tail_samples: usize,
    /// Margin kept above `ln_(k) x = 0` by the drift scale.
    pub drift_margin: f64,
}

impl Default for TraceConfig {
    fn default() -> Self {
        Self {
            tail_fraction: 0.25,
            min_tail_samples: 100,
            drift_margin: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SLevelTrace {
    pub level: BertrandLevel,
    pub mode: Mode,
    pub entries: Vec<(u64, f64)>,
    pub tail_liminf_est: f64,
    pub tail_limsup_est: f64,
    /// First and last index of the tail window.
    pub tail_window: (u64, u64),
    pub drift: Option<DriftFit>,
}

impl SLevelTrace {
    /// Assembles a trace from entries sorted by `n`. Entries computed over
    /// disjoint ranges can be concatenated in index order before calling this.
    pub fn from_entries(
        level: BertrandLevel,
        mode: Mode,
        entries: Vec<(u64, f64)>,
        cfg: &TraceConfig,
    ) -> Result<Self> {
        if entries.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(Error::InvalidArgument("trace entries must be strictly increasing in n".into()));
        }
        let tail_len = ((entries.len() as f64) * cfg.tail_fraction).floor() as usize;
        if tail_len < cfg.min_tail_samples {
            return Err(Error::InsufficientData(format!(
                "level {} {} trace has {} valid indices, tail window {} < {} samples",
                level.k(),
                mode.name(),
                entries.len(),
                tail_len,
                cfg.min_tail_samples
            )));
        }
        let tail = &entries[entries.len() - tail_len..];
        let (lo, hi) = tail
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &(_, s)| (lo.min(s), hi.max(s)));
        let drift = fit_drift(level.k(), mode, &entries, cfg);
        Ok(Self {
            level,
            mode,
            tail_window: (tail[0].0, tail[tail.len() - 1].0),
            entries,
            tail_liminf_est: lo,
            tail_limsup_est: hi,
            drift,
        })
    }

    pub fn horizon(&self) -> u64 {
        self.entries.last().map(|e| e.0).unwrap_or(0)
    }

    /// `s(n)` with the fitted vanishing drift removed; unchanged when no
    /// fit is available.
    pub fn corrected(&self) -> Vec<f64> {
        match self.drift {
            None => self.entries.iter().map(|e| e.1).collect(),
            Some(fit) => self
                .entries
                .iter()
                .map(|&(n, s)| match drift_scale(self.level.k(), self.mode, n as f64, 0.0) {
                    Some(x) => s - fit.slope * x,
                    None => s,
                })
                .collect(),
        }
    }
}

/// Scale on which the next level's content enters an s-trace.
fn drift_scale(k: u32, mode: Mode, n: f64, margin: f64) -> Option<f64> {
    let depth = match mode {
        Mode::Ratio | Mode::Root => k + 1,
        Mode::RootExponent => k,
    };
    let chain = ln_chain(depth, n);
    let l = chain[depth as usize];
    (l.is_finite() && l > margin).then(|| 1.0 / l)
}

fn fit_drift(k: u32, mode: Mode, entries: &[(u64, f64)], cfg: &TraceConfig) -> Option<DriftFit> {
    let last = entries.last()?.0;
    let from = (last as f64).sqrt().ceil() as u64;
    let pts: Vec<(f64, f64)> = entries
        .iter()
        .filter(|e| e.0 >= from)
        .filter_map(|&(n, s)| drift_scale(k, mode, n as f64, cfg.drift_margin).map(|x| (x, s)))
        .collect();
    if pts.len() < cfg.min_tail_samples {
        return None;
    }
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let (sxx, sxy) = pts.iter().fold((0.0, 0.0), |(sxx, sxy), &(x, y)| {
        (sxx + (x - mx) * (x - mx), sxy + (x - mx) * (y - my))
    });
    if !(sxx / m > 1e-12) {
        return None;
    }
    let slope = sxy / sxx;
    let limit = my - slope * mx;
    (limit.is_finite() && slope.is_finite()).then_some(DriftFit {
        limit,
        slope,
        from_n: from,
        samples: pts.len(),
    })
}

/// Index range on which `mode` at `level` can be evaluated on `ts`.
pub fn valid_range(ts: &TermStream, level: BertrandLevel, mode: Mode) -> Result<Option<(u64, u64)>> {
    let start = level.domain_start()?.max(ts.start_index());
    let (lo, hi) = match mode {
        Mode::Ratio => (start, ts.end_index().saturating_sub(1)),
        Mode::Root => (start, ts.end_index()),
        Mode::RootExponent => (start.saturating_mul(2), ts.end_index()),
    };
    Ok((lo <= hi).then_some((lo, hi)))
}

/// `s_n` at one index.
pub fn s_at(ts: &TermStream, level: BertrandLevel, mode: Mode, n: u64) -> Result<f64> {
    let (lo, hi) = valid_range(ts, level, mode)?.ok_or_else(|| {
        Error::Domain(format!("no valid index for level {} in this stream", level.k()))
    })?;
    if n < lo || n > hi {
        return Err(Error::Index { index: n, start: lo, end: hi });
    }
    Ok(s_unchecked(ts, level.k(), mode, n))
}

fn s_unchecked(ts: &TermStream, k: u32, mode: Mode, n: u64) -> f64 {
    let nf = n as f64;
    match mode {
        Mode::Ratio => {
            let d = ts.log_ratio(n).expect("range checked");
            s_from_excess_unchecked(k, nf, d.exp_m1())
        }
        Mode::Root => {
            let la = ts.ln_a(n).expect("range checked");
            s_from_excess_unchecked(k, nf, (-la / nf).exp_m1())
        }
        Mode::RootExponent => {
            let m = n / 2;
            let g = |x: u64| -> (f64, f64) {
                let chain = ln_chain(k, x as f64);
                let lower: f64 = chain.iter().take(k as usize).skip(1).sum();
                (-ts.ln_a(x).expect("range checked") - lower, chain[k as usize])
            };
            let (g_n, l_n) = g(n);
            let (g_m, l_m) = g(m);
            (g_n - g_m) / (l_n - l_m)
        }
    }
}

/// Raw `(n, s_n)` pairs on `[from, to]` (clipped to the valid range).
pub fn s_entries(ts: &TermStream, level: BertrandLevel, mode: Mode, from: u64, to: u64) -> Result<Vec<(u64, f64)>> {
    let Some((lo, hi)) = valid_range(ts, level, mode)? else {
        return Ok(Vec::new());
    };
    let (lo, hi) = (lo.max(from), hi.min(to));
    if lo > hi {
        return Ok(Vec::new());
    }
    let k = level.k();
    Ok((lo..=hi)
        .into_par_iter()
        .map(|n| (n, s_unchecked(ts, k, mode, n)))
        .collect())
}

pub fn s_trace(ts: &TermStream, level: BertrandLevel, mode: Mode) -> Result<SLevelTrace> {
    s_trace_with(ts, level, mode, &TraceConfig::default())
}

pub fn s_trace_with(ts: &TermStream, level: BertrandLevel, mode: Mode, cfg: &TraceConfig) -> Result<SLevelTrace> {
    let entries = s_entries(ts, level, mode, 0, u64::MAX)?;
    SLevelTrace::from_entries(level, mode, entries, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::E;

    fn lvl(k: u32) -> BertrandLevel {
        BertrandLevel::new(k).unwrap()
    }

    fn stream(start: u64, end: u64, f: impl Fn(f64) -> f64) -> TermStream {
        TermStream::from_logs(start, (start..=end).map(|n| f(n as f64)).collect()).unwrap()
    }

    #[test]
    fn ratio_examples() {
        let harmonic = stream(1, 50, |n| -n.ln());
        assert!((measure_ratio(&harmonic, 10).unwrap() - 1.1).abs() < 1e-15);
        let constant = stream(1, 50, |_| 0.3);
        assert_eq!(measure_ratio(&constant, 7).unwrap(), 1.0);
        let sq = stream(1, 200, |n| -1.0 - 2.0 * n.ln());
        assert!((measure_ratio(&sq, 100).unwrap() - 1.0201).abs() < 1e-14);
        assert!(matches!(measure_ratio(&sq, 200), Err(Error::Index { .. })));
    }

    #[test]
    fn root_examples() {
        let geo = stream(1, 60, |n| -n * 2f64.ln());
        assert!((measure_root(&geo, 37).unwrap() - 2.0).abs() < 1e-15);
        let one = stream(1, 10, |_| 0.0);
        assert_eq!(measure_root(&one, 4).unwrap(), 1.0);
        let sq = stream(1, 2000, |n| -1.0 - 2.0 * n.ln());
        let want = 1.014_925_804_247_136_5;
        assert!((measure_root(&sq, 1000).unwrap() - want).abs() < 1e-15);
        assert!(matches!(measure_root(&sq, 0), Err(Error::Index { .. })));
    }

    #[test]
    fn extract_s_examples() {
        let l2 = lvl(2);
        let b = crate::iterlog::baseline(l2, 500).unwrap();
        let d = crate::iterlog::denom(l2, 500).unwrap();
        assert!(extract_s(l2, 500, b).unwrap().abs() < 1e-9);
        assert!((extract_s(l2, 500, b + 2.0 / d).unwrap() - 2.0).abs() < 1e-9);
        let harmonic = stream(1, 100, |n| -n.ln());
        for n in 3..99 {
            let s = s_at(&harmonic, lvl(1), Mode::Ratio, n).unwrap();
            assert!(s.abs() < 1e-10, "n={n} s={s}");
        }
        assert!(matches!(extract_s(l2, 2, 1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn trace_of_inverse_square_grows() {
        let sq = stream(1, 100_000, |n| -2.0 * n.ln());
        let t = s_trace(&sq, lvl(1), Mode::Ratio).unwrap();
        // s_n = ((1+1/n)^2 - 1 - 1/n) n ln n = (1 + 1/n) ln n
        for &(n, s) in t.entries.iter().step_by(997) {
            let nf = n as f64;
            let want = (1.0 + 1.0 / nf) * nf.ln();
            assert!((s - want).abs() < 1e-6 * want, "n={n}");
        }
        assert!(t.tail_liminf_est > 11.0);
        assert!(t.tail_liminf_est <= t.tail_limsup_est);
        assert_eq!(t.tail_window.1, 99_999);
    }

    #[test]
    fn trace_of_log_square_tends_to_two() {
        let ts = stream(2, 1_000_000, |n| -n.ln() - 2.0 * n.ln().ln());
        let t = s_trace(&ts, lvl(1), Mode::Ratio).unwrap();
        assert!((t.tail_liminf_est - 2.0).abs() < 0.05);
        assert!((t.tail_limsup_est - 2.0).abs() < 0.05);
        let ts = stream(2, 1_000_000, |n| -n.ln() - n.ln().ln());
        let t = s_trace(&ts, lvl(1), Mode::Ratio).unwrap();
        assert!((t.tail_liminf_est - 1.0).abs() < 0.01);
        assert!((t.drift.unwrap().limit - 1.0).abs() < 0.01);
    }

    #[test]
    fn drift_fit_exposes_next_level_content() {
        // 1/(n ln n (ln ln n)^2): level-1 ratio s_n = 1 + 2/ln ln n + o(1)
        let ts = stream(3, 1_000_000, |n| -n.ln() - n.ln().ln() - 2.0 * n.ln().ln().ln());
        let t = s_trace(&ts, lvl(1), Mode::Ratio).unwrap();
        assert!(t.tail_liminf_est > 1.7);
        let fit = t.drift.unwrap();
        assert!((fit.limit - 1.0).abs() < 0.02, "{fit:?}");
        assert!((fit.slope - 2.0).abs() < 0.05, "{fit:?}");
    }

    #[test]
    fn root_exponent_reads_closed_forms() {
        // e^{-1} n^{-2}: exponent 2 at level 1
        let ts = stream(1, 10_000, |n| -1.0 - 2.0 * n.ln());
        let t = s_trace(&ts, lvl(1), Mode::RootExponent).unwrap();
        assert!((t.tail_liminf_est - 2.0).abs() < 1e-9 && (t.tail_limsup_est - 2.0).abs() < 1e-9);
        // 5 / (n ln^1.5 n): exponent 1.5 at level 2 regardless of the constant
        let ts = stream(2, 10_000, |n| 5f64.ln() - n.ln() - 1.5 * n.ln().ln());
        let t = s_trace(&ts, lvl(2), Mode::RootExponent).unwrap();
        assert!((t.tail_liminf_est - 1.5).abs() < 1e-9);
    }

    #[test]
    fn insufficient_tail() {
        let ts = stream(1, 300, |n| -2.0 * n.ln());
        assert!(matches!(s_trace(&ts, lvl(1), Mode::Ratio), Err(Error::InsufficientData(_))));
    }

    #[test]
    fn split_traces_merge_in_order() {
        let ts = stream(1, 20_000, |n| -1.5 * n.ln() - 0.1 * (n * 0.01).sin());
        let l = lvl(2);
        let whole = s_entries(&ts, l, Mode::Ratio, 0, u64::MAX).unwrap();
        let mut parts = s_entries(&ts, l, Mode::Ratio, 0, 7_000).unwrap();
        parts.extend(s_entries(&ts, l, Mode::Ratio, 7_001, 13_000).unwrap());
        parts.extend(s_entries(&ts, l, Mode::Ratio, 13_001, u64::MAX).unwrap());
        assert_eq!(whole, parts);
        let cfg = TraceConfig::default();
        assert_eq!(
            SLevelTrace::from_entries(l, Mode::Ratio, whole, &cfg).unwrap(),
            SLevelTrace::from_entries(l, Mode::Ratio, parts, &cfg).unwrap()
        );
    }

    #[test]
    fn stream_validation() {
        assert!(TermStream::from_terms(1, &[1.0, 0.0]).is_err());
        assert!(TermStream::from_logs(0, vec![0.0]).is_err());
        let ts = TermStream::from_terms(1, &[1.0, 0.5, 0.5, 0.25]).unwrap();
        assert!(ts.monotone_nonincreasing());
        let ts = TermStream::from_terms(1, &[1.0, 2.0]).unwrap();
        assert!(!ts.monotone_nonincreasing());
        let ts = TermStream::from_log_ratios(5, -1.0, vec![E.ln(), 0.0]).unwrap();
        assert_eq!(ts.end_index(), 7);
        assert!((ts.ln_a(7).unwrap() + 2.0).abs() < 1e-15);
        assert_eq!(ts.log_ratio(5).unwrap(), 1.0);
    }
}
