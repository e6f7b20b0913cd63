//! Iterated logarithms and the level-K baseline/denominator of the
//! Bertrand-De Morgan threshold
//!
//! ```text
//! B_K(n) = 1 + 1/n + (1/n) Σ_{i=1}^{K-1} 1 / Π_{k=1}^{i} ln_(k) n
//! D_K(n) = n Π_{k=1}^{K} ln_(k) n
//! ```

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sum::CompensatedSum;

/// Deepest supported level. `min_domain(5)` is `e^(3.8e6)`.
pub const MAX_LEVEL: u32 = 4;

/// Default margin the classifiers keep above `ln_(K) n = 0`.
pub const CLASSIFIER_MARGIN: f64 = 0.1;

/// `ln` applied `k` times to `x`. Every value the logarithm is applied to
/// must be strictly positive.
pub fn iter_ln(k: u32, x: f64) -> Result<f64> {
    let mut v = x;
    for i in 0..k {
        if !(v > 0.0) {
            return Err(Error::Domain(format!(
                "ln_({}) undefined at x = {x}: iterate {i} is {v}",
                k
            )));
        }
        v = v.ln();
    }
    Ok(v)
}

/// Smallest integer `n` with `ln_(k) n > margin`.
pub fn domain_threshold(k: u32, margin: f64) -> Result<u64> {
    if k == 0 {
        return Err(Error::InvalidArgument("level must be >= 1".into()));
    }
    if k > MAX_LEVEL {
        return Err(Error::Overflow(format!(
            "level {k} exceeds the supported cap {MAX_LEVEL}"
        )));
    }
    let mut t = margin;
    for _ in 0..k {
        t = t.exp();
    }
    if !t.is_finite() || t >= 9.0e15 {
        return Err(Error::Overflow(format!(
            "ln_({k}) n > {margin} needs n > {t}"
        )));
    }
    let above = |n: u64| iter_ln(k, n as f64).map(|v| v > margin).unwrap_or(false);
    let mut n = (t.floor() as u64 + 1).max(1);
    while n > 1 && above(n - 1) {
        n -= 1;
    }
    while !above(n) {
        n += 1;
    }
    Ok(n)
}

/// Smallest integer `n` with `ln_(k) n > 0`.
pub fn min_domain(k: u32) -> Result<u64> {
    domain_threshold(k, 0.0)
}

/// Test level `K` together with the margin kept above the positivity
/// threshold of `ln_(K)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BertrandLevel {
    k: u32,
    safety_margin: f64,
}

impl BertrandLevel {
    pub fn new(k: u32) -> Result<Self> {
        Self::with_margin(k, 0.0)
    }

    pub fn with_margin(k: u32, safety_margin: f64) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidArgument("level must be >= 1".into()));
        }
        if k > MAX_LEVEL {
            return Err(Error::Overflow(format!(
                "level {k} exceeds the supported cap {MAX_LEVEL}"
            )));
        }
        if !(safety_margin >= 0.0) || !safety_margin.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "safety margin must be finite and >= 0, got {safety_margin}"
            )));
        }
        Ok(Self { k, safety_margin })
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn safety_margin(&self) -> f64 {
        self.safety_margin
    }

    /// Same margin, one level deeper.
    pub fn next(&self) -> Result<Self> {
        Self::with_margin(self.k + 1, self.safety_margin)
    }

    /// First index at which this level may be evaluated.
    pub fn domain_start(&self) -> Result<u64> {
        domain_threshold(self.k, self.safety_margin)
    }

    fn check(&self, n: u64) -> Result<()> {
        let start = self.domain_start()?;
        if n < start {
            return Err(Error::Domain(format!(
                "level {} needs n >= {start}, got n = {n}",
                self.k
            )));
        }
        Ok(())
    }
}

/// `[ln_(1) n, ..., ln_(K) n]`; index 0 is unused and set to `n`.
pub(crate) fn ln_chain(k: u32, n: f64) -> [f64; MAX_LEVEL as usize + 2] {
    let mut out = [f64::NAN; MAX_LEVEL as usize + 2];
    out[0] = n;
    let mut v = n;
    for slot in out.iter_mut().take(k as usize + 1).skip(1) {
        v = if v > 0.0 { v.ln() } else { f64::NAN };
        *slot = v;
    }
    out
}

/// `B_K(n) - 1` summed with compensation. Domain is not checked.
pub(crate) fn baseline_excess_unchecked(k: u32, n: f64) -> f64 {
    let chain = ln_chain(k, n);
    let mut acc = CompensatedSum::new();
    acc.add(1.0 / n);
    let mut prod = 1.0;
    for l in chain.iter().take(k as usize).skip(1) {
        prod *= l;
        acc.add(1.0 / (n * prod));
    }
    acc.value()
}

/// `D_K(n)`. Domain is not checked.
pub(crate) fn denom_unchecked(k: u32, n: f64) -> f64 {
    let chain = ln_chain(k, n);
    chain.iter().take(k as usize + 1).skip(1).fold(n, |acc, l| acc * l)
}

/// `B_K(n)`.
pub fn baseline(level: BertrandLevel, n: u64) -> Result<f64> {
    level.check(n)?;
    Ok(1.0 + baseline_excess_unchecked(level.k, n as f64))
}

/// `B_K(n) - 1`, without the cancellation of forming `B_K(n)` first.
pub fn baseline_excess(level: BertrandLevel, n: u64) -> Result<f64> {
    level.check(n)?;
    Ok(baseline_excess_unchecked(level.k, n as f64))
}

/// `D_K(n) = n Π_{k=1}^{K} ln_(k) n`.
pub fn denom(level: BertrandLevel, n: u64) -> Result<f64> {
    level.check(n)?;
    Ok(denom_unchecked(level.k, n as f64))
}

/// Coefficient `eps · ln_(K+1) n` that carries a level-K excess
/// `(1 + eps) / D_K(n)` to level K+1:
/// `(1 + eps)/D_K = 1/D_K + (eps ln_(K+1) n) / D_{K+1}`.
pub fn escalate_excess(level: BertrandLevel, n: u64, eps: f64) -> Result<f64> {
    let next = level.next()?;
    let start = min_domain(next.k)?.max(next.domain_start()?);
    if n < start {
        return Err(Error::Domain(format!(
            "escalation to level {} needs n >= {start}, got n = {n}",
            next.k
        )));
    }
    Ok(eps * iter_ln(next.k, n as f64)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::E;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn iter_ln_examples() {
        assert_eq!(iter_ln(1, E).unwrap(), 1.0);
        assert!((iter_ln(2, E.powf(E)).unwrap() - 1.0).abs() < 1e-15);
        // 40-digit reference: ln ln ln 20.
        let want = 0.092_751_181_418_134_88_f64;
        assert!(rel(iter_ln(3, 20.0).unwrap(), want) < 1e-14);
    }

    #[test]
    fn iter_ln_domain_errors() {
        assert!(matches!(iter_ln(2, 1.0), Err(Error::Domain(_))));
        assert!(matches!(iter_ln(1, 0.0), Err(Error::Domain(_))));
        assert!(matches!(iter_ln(3, 2.0), Err(Error::Domain(_))));
        // the final iterate itself may be negative
        assert!(iter_ln(1, 0.5).unwrap() < 0.0);
    }

    #[test]
    fn min_domain_matches_direct_scan() {
        for k in 1..=3 {
            let scan = (1u64..100)
                .find(|&n| iter_ln(k, n as f64).map(|v| v > 0.0).unwrap_or(false))
                .unwrap();
            assert_eq!(min_domain(k).unwrap(), scan, "k = {k}");
        }
        assert_eq!(min_domain(1).unwrap(), 2);
        assert_eq!(min_domain(2).unwrap(), 3);
        assert_eq!(min_domain(3).unwrap(), 16);
        // e^(e^e) = 3814279.1047...
        assert_eq!(min_domain(4).unwrap(), 3_814_280);
        assert!(matches!(min_domain(5), Err(Error::Overflow(_))));
        assert!(matches!(BertrandLevel::new(5), Err(Error::Overflow(_))));
    }

    #[test]
    fn classifier_margin_thresholds() {
        assert_eq!(domain_threshold(1, CLASSIFIER_MARGIN).unwrap(), 2);
        assert_eq!(domain_threshold(2, CLASSIFIER_MARGIN).unwrap(), 4);
        assert_eq!(domain_threshold(3, CLASSIFIER_MARGIN).unwrap(), 21);
    }

    #[test]
    fn baseline_and_denom_examples() {
        let l1 = BertrandLevel::new(1).unwrap();
        let l2 = BertrandLevel::new(2).unwrap();
        assert_eq!(baseline(l1, 100).unwrap(), 1.01);
        assert!(rel(baseline(l2, 100).unwrap(), 1.012_171_472_409_516_3) < 1e-15);
        assert!(rel(denom(l1, 10).unwrap(), 23.025_850_929_940_457) < 1e-15);
        assert!(rel(denom(l2, 16).unwrap(), 45.238_952_338_971_586) < 1e-14);
        let b = baseline(l2, 1_000_000_000).unwrap();
        assert!(b > 1.0 && b < 1.0 + 2e-9 + 1e-15);
        assert!(matches!(baseline(l2, 2), Err(Error::Domain(_))));
    }

    #[test]
    fn escalate_excess_examples() {
        let l1 = BertrandLevel::new(1).unwrap();
        let l2 = BertrandLevel::new(2).unwrap();
        assert_eq!(escalate_excess(l1, 100, 0.0).unwrap(), 0.0);
        assert!(rel(escalate_excess(l1, 100, 0.5).unwrap(), 0.763_589_812_903_950_6) < 1e-14);
        assert!(rel(escalate_excess(l2, 1_000_000, 1.0).unwrap(), 0.965_382_532_251_958_6) < 1e-13);
        assert!(matches!(escalate_excess(l1, 2, 0.5), Err(Error::Domain(_))));
        let l4 = BertrandLevel::new(4).unwrap();
        assert!(matches!(escalate_excess(l4, 10_000_000, 0.5), Err(Error::Overflow(_))));
    }

    #[test]
    fn denom_is_multiplicative_in_level() {
        for k in 1..=3 {
            let lk = BertrandLevel::new(k).unwrap();
            let lk1 = BertrandLevel::new(k + 1).unwrap();
            let start = min_domain(k + 1).unwrap();
            for n in [start, start + 1, 10 * start, 4_000_000, 123_456_789] {
                let lhs = denom(lk1, n).unwrap();
                let rhs = denom(lk, n).unwrap() * iter_ln(k + 1, n as f64).unwrap();
                assert!(rel(lhs, rhs) <= 1e-13, "k={k} n={n}");
            }
        }
    }

    #[test]
    fn baseline_decreases_towards_one() {
        for k in 1..=3 {
            let level = BertrandLevel::new(k).unwrap();
            let start = min_domain(k).unwrap() + 1;
            let mut prev = f64::INFINITY;
            let mut n = start;
            while n < 10_000_000 {
                let b = baseline(level, n).unwrap();
                assert!(b < prev && b > 1.0, "k={k} n={n}");
                prev = b;
                n = n + 1 + n / 7;
            }
            assert!(prev - 1.0 < 1e-6);
        }
    }

    #[test]
    fn iter_ln_inverts_iterated_exp() {
        for k in 1..=3u32 {
            for t in [0.5, 1.0, 2.0] {
                let x = (0..k).fold(t, |acc, _| f64::exp(acc));
                // exp^3(2) = e^1618 is not representable
                if !x.is_finite() {
                    continue;
                }
                assert!(rel(iter_ln(k, x).unwrap(), t) <= 1e-12, "k={k} t={t}");
            }
        }
    }
}
