//! Iterative Proportional Fitting over the union scope of a generating
//! sequence. Each step is a left composition of the running estimate with
//! one target; the first cycle starting from uniform therefore reproduces
//! the ◁-chain, and perfect sequences terminate after that cycle.

use crate::compose::compose_left;
use crate::error::{Error, Result};
use crate::factor::{max_abs_diff, Factor};
use crate::sequence::GeneratingSequence;

pub const DEFAULT_MAX_CYCLES: usize = 500;
pub const DEFAULT_IPFP_TOL: f64 = 1e-9;

/// Result of an IPFP run.
#[derive(Clone, Debug)]
pub struct IpfpRun {
    pub result: Factor,
    /// Number of cycles that moved the estimate by more than the tolerance.
    pub cycles_used: usize,
    /// Max-abs change of the full estimate per completed cycle.
    pub per_cycle_change: Vec<f64>,
    pub converged: bool,
}

/// One fitting step: rescales `current` so its marginal on the target's
/// scope equals the target. The estimate must live on a superset scope.
pub fn ipfp_step(current: &Factor, target: &Factor) -> Result<Factor> {
    if !target.scope().is_subset_of(current.scope()) {
        return Err(Error::ScopeMismatch);
    }
    compose_left(current, target)
}

/// Cycles through the sequence members as fitting targets, starting from
/// the uniform distribution on the union scope, until the estimate changes
/// by at most `tol` over a full cycle or `max_cycles` is reached.
pub fn ipfp_run(
    seq: &GeneratingSequence,
    max_cycles: usize,
    tol: f64,
    max_entries: u64,
) -> Result<IpfpRun> {
    seq.ensure_within(max_entries)?;
    let union = seq.union_scope();
    let cards: Vec<usize> = union.iter().map(|v| seq.registry().card(v)).collect();
    let mut estimate = Factor::uniform(union, cards);

    let mut per_cycle_change = Vec::new();
    let mut converged = false;
    for _ in 0..max_cycles {
        let previous = estimate.clone();
        for (k, target) in seq.factors().iter().enumerate() {
            estimate = ipfp_step(&estimate, target).map_err(|e| e.with_step(k + 1))?;
        }
        let change = max_abs_diff(&estimate, &previous)?;
        per_cycle_change.push(change);
        if change <= tol {
            converged = true;
            break;
        }
    }
    let cycles_used = per_cycle_change.iter().filter(|c| **c > tol).count();
    Ok(IpfpRun {
        result: estimate,
        cycles_used,
        per_cycle_change,
        converged,
    })
}
