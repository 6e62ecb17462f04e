//! Point-source recovery from one-bit measurements taken against an unknown
//! threshold.

pub mod acquisition;
pub mod baselines;
pub mod harness;
pub mod lp;
pub mod metrics;
pub mod parallel;
pub mod patch;
pub mod signal;
pub mod solver;
