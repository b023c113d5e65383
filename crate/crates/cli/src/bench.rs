//! Locality benchmark: contrasts the local elimination path against the
//! materialize-the-joint path on the same model.

use std::time::Instant;

use cpm_core::{max_abs_diff, oracle_joint, GeneratingSequence, Result, VarId};

/// Outcome of the joint-composition side of a benchmark run.
#[derive(Debug, Clone)]
pub enum JointOutcome {
    Ran { millis: f64, entries: u128 },
    /// The joint would exceed the entry ceiling and was not attempted.
    Refused { entries: u128, limit: u64 },
}

#[derive(Debug, Clone)]
pub struct BenchReport {
    pub factors: usize,
    pub union_entries: u128,
    pub eliminated: String,
    pub eliminate_millis: f64,
    pub peak_entries: usize,
    pub joint: JointOutcome,
    /// Max-abs deviation of the eliminated chain from the oracle marginal,
    /// available only when the oracle could run.
    pub oracle_delta: Option<f64>,
}

pub fn run_bench(
    seq: &GeneratingSequence,
    var: VarId,
    max_entries: u64,
) -> Result<BenchReport> {
    let start = Instant::now();
    let res = seq.eliminate_variable(var, false)?;
    let eliminate_millis = start.elapsed().as_secs_f64() * 1e3;

    let entries = seq.union_entries();
    let (joint, oracle_delta) = if entries <= max_entries as u128 {
        let start = Instant::now();
        let _joint = seq.compose_right()?;
        let millis = start.elapsed().as_secs_f64() * 1e3;
        let truth = oracle_joint(seq)?.marginalize_out(var)?;
        let delta = max_abs_diff(&res.reduced.compose_right()?, &truth)?;
        (JointOutcome::Ran { millis, entries }, Some(delta))
    } else {
        (JointOutcome::Refused { entries, limit: max_entries }, None)
    };

    Ok(BenchReport {
        factors: seq.len(),
        union_entries: entries,
        eliminated: seq.registry().name(var).to_string(),
        eliminate_millis,
        peak_entries: res.stats.peak_entries,
        joint,
        oracle_delta,
    })
}
