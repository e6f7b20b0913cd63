//! Convergence tests for positive series built on the extended
//! Bertrand-De Morgan hierarchy, its root-exponent counterpart and the
//! almost-all-index criterion, with an application to birth-death chains.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bdp;
pub mod catalog;
pub mod classifier;
pub mod envelope;
pub mod error;
pub mod index_set;
pub mod io;
pub mod iterlog;
pub mod series;
pub mod sum;
pub mod synth;

pub use classifier::{Decision, Verdict};
pub use error::{Error, Result};
pub use iterlog::BertrandLevel;
pub use series::{Mode, SLevelTrace, TermStream};
