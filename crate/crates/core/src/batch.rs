//! Batch decisions over collections of systems.
//!
//! Each decision is independent, so a batch parallelizes trivially. With
//! the `parallel` feature (on by default) [`decide_all`] fans the jobs out
//! over a rayon pool; [`decide_all_seq`] is always available and the two
//! return identical results in the input order, because every individual
//! decision is deterministic.

use crate::decide::{decide_contextuality, DecideError, DecideOptions, Verdict};
use crate::model::System;
use crate::split::SplitPlan;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// One unit of batch work: a system and the plan to decide it under.
pub type Job = (System, SplitPlan);

pub fn decide_all_seq(jobs: &[Job], opts: &DecideOptions) -> Vec<Result<Verdict, DecideError>> {
    jobs.iter()
        .map(|(system, plan)| decide_contextuality(system, plan, opts))
        .collect()
}

/// Decides every job, in parallel when the `parallel` feature is enabled.
#[cfg(feature = "parallel")]
pub fn decide_all(jobs: &[Job], opts: &DecideOptions) -> Vec<Result<Verdict, DecideError>> {
    jobs.par_iter()
        .map(|(system, plan)| decide_contextuality(system, plan, opts))
        .collect()
}

/// Decides every job, in parallel when the `parallel` feature is enabled.
#[cfg(not(feature = "parallel"))]
pub fn decide_all(jobs: &[Job], opts: &DecideOptions) -> Vec<Result<Verdict, DecideError>> {
    decide_all_seq(jobs, opts)
}
