//! Analytic families with known convergence behaviour.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::iterlog::ln_chain;
use crate::series::TermStream;
use crate::synth::Truth;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Family {
    /// `n^-p`
    Power { p: f64 },
    /// `1 / (n ln^p n)`
    LogPower { p: f64 },
    /// `1 / (n ln n (ln ln n)^p)`
    LogLogPower { p: f64 },
    /// `r^n`, `0 < r < 1`
    Geometric { r: f64 },
}

impl Family {
    fn depth(&self) -> u32 {
        match self {
            Family::Power { .. } | Family::Geometric { .. } => 0,
            Family::LogPower { .. } => 1,
            Family::LogLogPower { .. } => 2,
        }
    }

    /// First index where every logarithm in the formula is positive.
    pub fn start_index(&self) -> u64 {
        match self.depth() {
            0 => 1,
            1 => 2,
            _ => 3,
        }
    }

    pub fn ln_term(&self, n: u64) -> f64 {
        let c = ln_chain(self.depth().max(1) + 1, n as f64);
        match *self {
            Family::Power { p } => -p * c[1],
            Family::LogPower { p } => -c[1] - p * c[2],
            Family::LogLogPower { p } => -c[1] - c[2] - p * c[3],
            Family::Geometric { r } => n as f64 * r.ln(),
        }
    }

    pub fn stream(&self, horizon: u64) -> Result<TermStream> {
        let start = self.start_index();
        if horizon < start {
            return Err(Error::InvalidArgument(format!("horizon {horizon} below start index {start}")));
        }
        let logs: Vec<f64> = (start..=horizon).into_par_iter().map(|n| self.ln_term(n)).collect();
        TermStream::from_logs(start, logs)
    }

    pub fn truth(&self) -> Truth {
        match *self {
            Family::Power { p } | Family::LogPower { p } | Family::LogLogPower { p } => {
                if p > 1.0 {
                    Truth::Converges
                } else {
                    Truth::Diverges
                }
            }
            Family::Geometric { .. } => Truth::Converges,
        }
    }

    /// Distance of the exponent from the convergence boundary `p = 1`.
    pub fn boundary_distance(&self) -> f64 {
        match *self {
            Family::Power { p } | Family::LogPower { p } | Family::LogLogPower { p } => (p - 1.0).abs(),
            Family::Geometric { .. } => f64::INFINITY,
        }
    }
}

impl FromStr for Family {
    type Err = Error;

    /// `power:P`, `log_power:P`, `loglog_power:P`, `geometric:R`, or an alias
    /// such as `harmonic` or `one_over_n_logsq`.
    fn from_str(s: &str) -> Result<Self> {
        let alias = match s {
            "harmonic" => Some(Family::Power { p: 1.0 }),
            "one_over_n_sq" => Some(Family::Power { p: 2.0 }),
            "one_over_sqrt_n" => Some(Family::Power { p: 0.5 }),
            "one_over_n_logn" => Some(Family::LogPower { p: 1.0 }),
            "one_over_n_logsq" => Some(Family::LogPower { p: 2.0 }),
            "one_over_n_logn_loglogn" => Some(Family::LogLogPower { p: 1.0 }),
            "one_over_n_logn_loglogsq" => Some(Family::LogLogPower { p: 2.0 }),
            "geometric" => Some(Family::Geometric { r: 0.5 }),
            _ => None,
        };
        if let Some(f) = alias {
            return Ok(f);
        }
        let bad = || Error::InvalidArgument(format!("unknown family {s:?}"));
        let (name, arg) = s.split_once(':').ok_or_else(bad)?;
        let v: f64 = arg.parse().map_err(|_| bad())?;
        if !v.is_finite() {
            return Err(bad());
        }
        match name {
            "power" => Ok(Family::Power { p: v }),
            "log_power" => Ok(Family::LogPower { p: v }),
            "loglog_power" => Ok(Family::LogLogPower { p: v }),
            "geometric" if v > 0.0 && v < 1.0 => Ok(Family::Geometric { r: v }),
            _ => Err(bad()),
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Family::Power { p } => write!(f, "power:{p}"),
            Family::LogPower { p } => write!(f, "log_power:{p}"),
            Family::LogLogPower { p } => write!(f, "loglog_power:{p}"),
            Family::Geometric { r } => write!(f, "geometric:{r}"),
        }
    }
}

/// The eleven reference families: three exponents around the boundary at
/// each of three depths, plus `n^-1.5` and `2^-n`.
pub fn catalog() -> Vec<Family> {
    let mut out = vec![
        Family::Power { p: 0.5 },
        Family::Power { p: 1.0 },
        Family::Power { p: 1.5 },
        Family::Power { p: 2.0 },
    ];
    for p in [0.5, 1.0, 2.0] {
        out.push(Family::LogPower { p });
    }
    for p in [0.5, 1.0, 2.0] {
        out.push(Family::LogLogPower { p });
    }
    out.push(Family::Geometric { r: 0.5 });
    out
}
