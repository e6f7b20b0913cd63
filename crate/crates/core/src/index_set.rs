//! Counting functions of index sets and their almost-all classification.
//!
//! A set contains almost all integers when `N(n)/n -> 1` and strongly almost
//! all when `N(n) = n + O(1)`. Both are asymptotic; the classes below are
//! empirical readings over a finite horizon.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "class", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum DensityClass {
    StronglyAlmostAll,
    AlmostAll,
    DensityBelowOne { alpha: f64 },
    Undecided,
}

impl DensityClass {
    pub fn name(&self) -> &'static str {
        match self {
            DensityClass::StronglyAlmostAll => "STRONGLY_ALMOST_ALL",
            DensityClass::AlmostAll => "ALMOST_ALL",
            DensityClass::DensityBelowOne { .. } => "DENSITY_BELOW_ONE",
            DensityClass::Undecided => "UNDECIDED",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IndexSetConfig {
    pub min_horizon: u64,
    /// Largest tail defect `n - N(n)` still read as bounded.
    pub defect_cap: u64,
    pub tail_fraction: f64,
    /// `density_est >= 1 - almost_tol` reads as density one.
    pub almost_tol: f64,
    /// `density_est <= below_one` reads as density bounded away from one.
    pub below_one: f64,
}

impl Default for IndexSetConfig {
    fn default() -> Self {
        Self {
            min_horizon: 10_000,
            defect_cap: 64,
            tail_fraction: 0.25,
            almost_tol: 0.01,
            below_one: 0.95,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexSetStats {
    pub horizon: u64,
    /// `counting[i] = N(i + 1)`.
    #[serde(skip)]
    pub counting: Vec<u64>,
    pub density_est: f64,
    pub defect_sup_tail: u64,
    /// Whether the defect rose between `[1, H/10)` and `[H/10, H]`.
    pub defect_grew: bool,
    pub class: DensityClass,
}

impl IndexSetStats {
    pub fn count(&self, n: u64) -> u64 {
        if n == 0 {
            0
        } else {
            self.counting[(n - 1) as usize]
        }
    }
}

pub fn index_set_stats(membership: impl Fn(u64) -> bool, horizon: u64) -> IndexSetStats {
    index_set_stats_with(membership, horizon, &IndexSetConfig::default())
}

pub fn index_set_stats_with(
    membership: impl Fn(u64) -> bool,
    horizon: u64,
    cfg: &IndexSetConfig,
) -> IndexSetStats {
    let mut counting = Vec::with_capacity(horizon as usize);
    let mut acc = 0u64;
    for n in 1..=horizon {
        acc += membership(n) as u64;
        counting.push(acc);
    }
    if horizon == 0 {
        return IndexSetStats {
            horizon,
            counting,
            density_est: f64::NAN,
            defect_sup_tail: 0,
            defect_grew: false,
            class: DensityClass::Undecided,
        };
    }
    let defect = |n: u64| n - counting[(n - 1) as usize];
    let tail_start = ((horizon as f64) * (1.0 - cfg.tail_fraction)).floor() as u64 + 1;
    let tail_start = tail_start.clamp(1, horizon);
    let before = if tail_start > 1 { counting[(tail_start - 2) as usize] } else { 0 };
    let density_est = (acc - before) as f64 / (horizon - tail_start + 1) as f64;
    let defect_sup_tail = (tail_start..=horizon).map(defect).max().unwrap_or(0);
    let split = (horizon / 10).max(1);
    let early = (1..split).map(defect).max().unwrap_or(0);
    let late = (split..=horizon).map(defect).max().unwrap_or(0);
    let defect_grew = late > early;

    let class = if horizon < cfg.min_horizon {
        DensityClass::Undecided
    } else if density_est >= 1.0 - cfg.almost_tol {
        if defect_sup_tail <= cfg.defect_cap && !defect_grew {
            DensityClass::StronglyAlmostAll
        } else {
            DensityClass::AlmostAll
        }
    } else if density_est <= cfg.below_one {
        DensityClass::DensityBelowOne { alpha: density_est }
    } else {
        DensityClass::Undecided
    };
    IndexSetStats {
        horizon,
        counting,
        density_est,
        defect_sup_tail,
        defect_grew,
        class,
    }
}
