//! Fixture generators with known convergence behaviour: closed forms, planted
//! root and ratio streams, boundary families, alternating HIGH/LOW schedules,
//! the paired counterexample separating the ratio and root forms, and the
//! divergent constructions.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::iterlog::{baseline_excess_unchecked, denom_unchecked, domain_threshold, ln_chain, min_domain, BertrandLevel, CLASSIFIER_MARGIN, MAX_LEVEL};
use crate::series::TermStream;

/// Inclusive index range `start:end`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndexRange {
    pub start: u64,
    pub end: u64,
}

impl IndexRange {
    pub fn new(start: u64, end: u64) -> Result<Self> {
        if start == 0 || end < start {
            return Err(Error::InvalidArgument(format!("invalid range {start}:{end}")));
        }
        Ok(Self { start, end })
    }

    pub fn len(&self) -> usize {
        (self.end - self.start + 1) as usize
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn iter(&self) -> std::ops::RangeInclusive<u64> {
        self.start..=self.end
    }
}

impl FromStr for IndexRange {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (a, b) = s
            .split_once(':')
            .ok_or_else(|| Error::InvalidArgument(format!("range must look like a:b, got {s:?}")))?;
        let parse = |t: &str| {
            t.trim()
                .parse::<u64>()
                .map_err(|_| Error::InvalidArgument(format!("bad range bound {t:?}")))
        };
        Self::new(parse(a)?, parse(b)?)
    }
}

impl fmt::Display for IndexRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.start, self.end)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchedulePattern {
    /// Alternating HIGH/LOW blocks of lengths 1, 1, 2, 2, 3, 3, ...
    Table1,
    /// HIGH at even n, LOW at odd n.
    EvenOdd,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Table1Schedule {
    pub n0: u64,
    pub c: f64,
    pub pattern: SchedulePattern,
}

impl Table1Schedule {
    pub fn new(n0: u64, c: f64, pattern: SchedulePattern) -> Result<Self> {
        if !(c > 1.0) || !c.is_finite() {
            return Err(Error::InvalidArgument(format!("schedule constant must be > 1, got {c}")));
        }
        if n0 == 0 {
            return Err(Error::InvalidArgument("schedule start must be >= 1".into()));
        }
        Ok(Self { n0, c, pattern })
    }

    /// Whether `n` falls in a HIGH block. Indices before `n0` are LOW.
    pub fn is_high(&self, n: u64) -> bool {
        if n < self.n0 {
            return false;
        }
        match self.pattern {
            SchedulePattern::EvenOdd => n.is_multiple_of(2),
            SchedulePattern::Table1 => {
                // pair p = (HIGH, LOW) blocks of length p + 1 each, starting at offset p(p+1)
                let d = n - self.n0;
                let mut p = ((((4 * d + 1) as f64).sqrt() - 1.0) / 2.0) as u64;
                while p * (p + 1) > d {
                    p -= 1;
                }
                while (p + 1) * (p + 2) <= d {
                    p += 1;
                }
                d - p * (p + 1) <= p
            }
        }
    }

    /// HIGH: `2C / ln_(K+1) n`; LOW: `0`.
    fn eps(&self, n: u64, l_next: f64) -> f64 {
        if self.is_high(n) {
            2.0 * self.c / l_next
        } else {
            0.0
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EpsKind {
    /// `C / ln_(K+1) n`, `C > 1`.
    COverLog { c: f64 },
    /// `1 / ln_(K+1) n`.
    OneOverLog,
    Scheduled(Table1Schedule),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SFunction {
    Constant { s: f64 },
    OnePlusEps { eps: EpsKind },
}

impl SFunction {
    pub fn constant(s: f64) -> Self {
        SFunction::Constant { s }
    }

    pub fn one_plus(eps: EpsKind) -> Self {
        SFunction::OnePlusEps { eps }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            SFunction::Constant { s } if !s.is_finite() => {
                Err(Error::InvalidArgument(format!("s must be finite, got {s}")))
            }
            SFunction::OnePlusEps { eps: EpsKind::COverLog { c } } if !(*c > 1.0) || !c.is_finite() => {
                Err(Error::InvalidArgument(format!("C must be > 1, got {c}")))
            }
            _ => Ok(()),
        }
    }

    /// Levels whose logarithms must be positive on the range.
    fn depth(&self, k: u32) -> u32 {
        match self {
            SFunction::Constant { .. } => k,
            SFunction::OnePlusEps { .. } => k + 1,
        }
    }

    /// `s_n` at level `k`; `chain` must reach `ln_(k+1) n` for the eps forms.
    fn value(&self, k: u32, n: u64, chain: &[f64]) -> f64 {
        match self {
            SFunction::Constant { s } => *s,
            SFunction::OnePlusEps { eps } => {
                let l = chain[k as usize + 1];
                1.0 + match eps {
                    EpsKind::COverLog { c } => c / l,
                    EpsKind::OneOverLog => 1.0 / l,
                    EpsKind::Scheduled(sched) => sched.eps(n, l),
                }
            }
        }
    }

    pub fn at(&self, k: u32, n: u64) -> f64 {
        self.value(k, n, &ln_chain(self.depth(k).min(MAX_LEVEL + 1), n as f64))
    }
}

fn check_domain(depth: u32, range: IndexRange) -> Result<()> {
    let need = min_domain(depth)?;
    if range.start < need {
        return Err(Error::Domain(format!(
            "range start {} below the level-{depth} domain (n >= {need})",
            range.start
        )));
    }
    Ok(())
}

fn check_level(k: u32) -> Result<()> {
    BertrandLevel::new(k).map(|_| ())
}

/// `a_n = e^{-1} / (n Π_{k=1}^{K-2} ln_(k) n · (ln_(K-1) n)^{s_n})`, and
/// `e^{-1} n^{-s_n}` for `K = 1`.
pub fn closed_form_terms(k: u32, s: &SFunction, range: IndexRange) -> Result<TermStream> {
    check_level(k)?;
    s.validate()?;
    let depth = s.depth(k);
    check_domain(depth, range)?;
    let logs: Vec<f64> = range
        .iter()
        .into_par_iter()
        .map(|n| {
            let chain = ln_chain(depth, n as f64);
            let lower: f64 = chain.iter().take(k as usize).skip(1).sum();
            -1.0 - lower - s.value(k, n, &chain) * chain[k as usize]
        })
        .collect();
    TermStream::from_logs(range.start, logs)
}

/// `a_n = (B_K(n) + s_n / D_K(n))^{-n}`.
pub fn from_root(k: u32, s: &SFunction, range: IndexRange) -> Result<TermStream> {
    check_level(k)?;
    s.validate()?;
    let depth = s.depth(k);
    check_domain(depth, range)?;
    let logs: Vec<std::result::Result<f64, u64>> = range
        .iter()
        .into_par_iter()
        .map(|n| {
            let nf = n as f64;
            let chain = ln_chain(depth, nf);
            let x = baseline_excess_unchecked(k, nf) + s.value(k, n, &chain) / denom_unchecked(k, nf);
            if x <= -1.0 {
                Err(n)
            } else {
                Ok(-nf * x.ln_1p())
            }
        })
        .collect();
    let logs = logs.into_iter().collect::<std::result::Result<Vec<_>, _>>().map_err(Error::NegativeBase)?;
    TermStream::from_logs(range.start, logs)
}

/// Cumulative product `a_{n+1} = a_n / (B_K(n) + s_n / D_K(n))` from
/// `a_{range.start} = a_start`.
pub fn from_ratio(k: u32, s: &SFunction, a_start: f64, range: IndexRange) -> Result<TermStream> {
    check_level(k)?;
    s.validate()?;
    if !(a_start > 0.0) || !a_start.is_finite() {
        return Err(Error::InvalidArgument(format!("a_start must be positive, got {a_start}")));
    }
    let depth = s.depth(k);
    // s = 0 never touches D_K, so the level-K domain is not needed
    if *s != SFunction::constant(0.0) {
        check_domain(depth, range)?;
    }
    let ratios: Vec<std::result::Result<f64, u64>> = (range.start..range.end)
        .into_par_iter()
        .map(|n| {
            let nf = n as f64;
            let chain = ln_chain(depth, nf);
            let sv = s.value(k, n, &chain);
            let mut x = baseline_excess_unchecked(k, nf);
            if sv != 0.0 {
                x += sv / denom_unchecked(k, nf);
            }
            if x <= -1.0 {
                Err(n)
            } else {
                Ok(x.ln_1p())
            }
        })
        .collect();
    let ratios = ratios.into_iter().collect::<std::result::Result<Vec<_>, _>>().map_err(Error::NegativeBase)?;
    TermStream::from_log_ratios(range.start, a_start.ln(), ratios)
}

/// Root stream with `s_n = 1 + eps_n`.
pub fn boundary_family(k: u32, eps: EpsKind, range: IndexRange) -> Result<TermStream> {
    from_root(k, &SFunction::one_plus(eps), range)
}

/// Scheduled boundary stream and its HIGH membership over `range`.
pub fn table1_schedule_stream(
    k: u32,
    sched: Table1Schedule,
    range: IndexRange,
) -> Result<(TermStream, Vec<bool>)> {
    check_level(k)?;
    let need = min_domain(k + 1)?;
    if sched.n0 < need {
        return Err(Error::Domain(format!("schedule start {} below n >= {need}", sched.n0)));
    }
    let ts = boundary_family(k, EpsKind::Scheduled(sched), range)?;
    let high = range.iter().map(|n| sched.is_high(n)).collect();
    Ok((ts, high))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RenumberCheck {
    pub checked: usize,
    pub violations: usize,
    pub first_violation: Option<u64>,
}

/// Renumbers the LOW-block terms from `n0` as `a'_{n0}, a'_{n0+1}, ...` and
/// checks `a'_j^{-1/j} <= B_{K+1}(j)` at each renumbered index.
pub fn renumbered_low_check(
    k: u32,
    sched: &Table1Schedule,
    ts: &TermStream,
) -> Result<RenumberCheck> {
    let next = BertrandLevel::new(k + 1)?;
    let from = sched.n0.max(ts.start_index()).max(next.domain_start()?);
    let lows: Vec<u64> = (from..=ts.end_index()).filter(|n| !sched.is_high(*n)).collect();
    let mut out = RenumberCheck { checked: 0, violations: 0, first_violation: None };
    for (i, &m) in lows.iter().enumerate() {
        let j = from + i as u64;
        let jf = j as f64;
        let lhs = (-ts.ln_a(m)? / jf).exp_m1();
        let rhs = baseline_excess_unchecked(k + 1, jf);
        out.checked += 1;
        if lhs > rhs {
            out.violations += 1;
            out.first_violation.get_or_insert(j);
        }
    }
    Ok(out)
}

/// Nonincreasing stream with `a_{2k-1} = a_{2k}` and
/// `a_{2k} / a_{2k+1} = B_K(k) + c / D_K(k)` at each pair index `k`.
pub fn paired_counterexample(k: u32, c: f64, range: IndexRange) -> Result<TermStream> {
    check_level(k)?;
    if !(c > 1.0) || !c.is_finite() {
        return Err(Error::InvalidArgument(format!("c must be > 1, got {c}")));
    }
    let need = 2 * min_domain(k)?;
    if range.start < need {
        return Err(Error::Domain(format!("range start {} below n >= {need}", range.start)));
    }
    let ratios: Vec<f64> = (range.start..range.end)
        .into_par_iter()
        .map(|n| {
            if n % 2 == 1 {
                0.0
            } else {
                let p = (n / 2) as f64;
                (baseline_excess_unchecked(k, p) + c / denom_unchecked(k, p)).ln_1p()
            }
        })
        .collect();
    TermStream::from_log_ratios(range.start, 0.0, ratios)
}

/// Level schedule `n -> K(n)`: `(from_n, level)` steps, nondecreasing in both.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepMap {
    pub steps: Vec<(u64, u32)>,
}

impl StepMap {
    /// Steps to level `k` exactly at the classifier threshold of `ln_(k)`.
    pub fn aggressive(range: IndexRange) -> Result<Self> {
        let mut steps = vec![(range.start, 1)];
        for k in 2..=MAX_LEVEL {
            let at = domain_threshold(k, CLASSIFIER_MARGIN)?;
            if at > range.end {
                break;
            }
            if at <= range.start {
                steps[0].1 = k;
            } else {
                steps.push((at, k));
            }
        }
        Ok(Self { steps })
    }

    pub fn validate(&self) -> Result<()> {
        if self.steps.is_empty() {
            return Err(Error::Step("empty step map".into()));
        }
        for w in self.steps.windows(2) {
            if w[1].0 <= w[0].0 || w[1].1 < w[0].1 {
                return Err(Error::Step(format!("steps must increase: {:?} then {:?}", w[0], w[1])));
            }
        }
        for &(n, k) in &self.steps {
            check_level(k)?;
            let need = min_domain(k)?;
            if n < need {
                return Err(Error::Step(format!("level {k} entered at n = {n}, its domain starts at {need}")));
            }
        }
        Ok(())
    }

    pub fn level_at(&self, n: u64) -> u32 {
        self.steps.iter().take_while(|s| s.0 <= n).last().map_or(self.steps[0].1, |s| s.1)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "case")]
pub enum DivergentCase {
    /// Root stream with `s ≡ c*`, `c* <= 1`.
    I { level: u32, c_star: f64 },
    /// Root stream with `s ≡ 1` at level `K(n)`.
    II { steps: StepMap },
}

pub fn divergent_case_terms(case: &DivergentCase, range: IndexRange) -> Result<TermStream> {
    match case {
        DivergentCase::I { level, c_star } => {
            if !(*c_star <= 1.0) {
                return Err(Error::InvalidArgument(format!("case I needs c* <= 1, got {c_star}")));
            }
            from_root(*level, &SFunction::constant(*c_star), range)
        }
        DivergentCase::II { steps } => {
            steps.validate()?;
            if range.start < steps.steps[0].0 {
                return Err(Error::Step(format!(
                    "range starts at {} before the first step {}",
                    range.start, steps.steps[0].0
                )));
            }
            let logs: Vec<f64> = range
                .iter()
                .into_par_iter()
                .map(|n| {
                    let k = steps.level_at(n);
                    let nf = n as f64;
                    let x = baseline_excess_unchecked(k, nf) + 1.0 / denom_unchecked(k, nf);
                    -nf * x.ln_1p()
                })
                .collect();
            TermStream::from_logs(range.start, logs)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Truth {
    Converges,
    Diverges,
    Boundary,
    Unknown,
}

/// Sidecar metadata written next to a generated stream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthMetadata {
    pub generator: String,
    pub parameters: serde_json::Value,
    pub truth: Truth,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub round_trip_verified: Option<bool>,
}

impl SynthMetadata {
    pub fn new(generator: &str, parameters: serde_json::Value, truth: Truth) -> Self {
        Self {
            generator: generator.into(),
            parameters,
            truth,
            round_trip_verified: None,
        }
    }
}

/// Convergence of a closed-form stream.
pub fn closed_form_truth(s: &SFunction) -> Truth {
    match s {
        SFunction::Constant { s } if *s > 1.0 => Truth::Converges,
        SFunction::Constant { .. } => Truth::Diverges,
        // eps_n ln_(K) n outgrows ln_(K+1) n
        SFunction::OnePlusEps { eps: EpsKind::COverLog { .. } | EpsKind::OneOverLog } => Truth::Converges,
        SFunction::OnePlusEps { eps: EpsKind::Scheduled(_) } => Truth::Diverges,
    }
}

/// Root streams tend to `e^{-1}`, whatever `s` is.
pub fn root_truth() -> Truth {
    Truth::Diverges
}

pub fn ratio_truth(s: &SFunction) -> Truth {
    match s {
        SFunction::Constant { s } if *s > 1.0 => Truth::Converges,
        SFunction::Constant { .. } => Truth::Diverges,
        SFunction::OnePlusEps { eps: EpsKind::COverLog { .. } } => Truth::Converges,
        SFunction::OnePlusEps { eps: EpsKind::OneOverLog } => Truth::Diverges,
        SFunction::OnePlusEps { eps: EpsKind::Scheduled(_) } => Truth::Unknown,
    }
}
