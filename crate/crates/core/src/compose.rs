//! The two composition operators, dominance and consistency predicates, and
//! the context-parameterized anticipating operator used to reassociate chains.

use crate::error::{Error, Result};
use crate::factor::{max_abs_diff, Factor, Tolerance, DEFAULT_TOL};
use crate::scope::Scope;

/// Choice of the auxiliary distribution R in the anticipating operator.
/// The composed result is the same for any strictly positive R; the default
/// takes the right operand's own marginal.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RChoice {
    OwnMarginal,
    Uniform,
}

fn check_shared_cards(a: &Factor, b: &Factor) -> Result<()> {
    for v in a.scope().intersect(b.scope()).iter() {
        if a.table().card_of(v) != b.table().card_of(v) {
            return Err(Error::CardinalityMismatch(v));
        }
    }
    Ok(())
}

/// Configuration where `b`'s marginal on `s` is exactly zero while `a`'s is
/// positive, if any. Zeros are exact: tiny positives do not count.
fn dominance_witness(a: &Factor, b: &Factor, s: &Scope) -> Option<Vec<usize>> {
    let s_eff = s.intersect(a.scope()).intersect(b.scope());
    let ma = a.marginal(&s_eff);
    let mb = b.marginal(&s_eff);
    for (idx, d) in mb.values().iter().enumerate() {
        if *d == 0.0 && ma.values()[idx] != 0.0 {
            return Some(mb.table().config_of(idx));
        }
    }
    None
}

/// Whether `a`'s marginal on `s` is absolutely continuous w.r.t. `b`'s:
/// every zero of `b`'s marginal forces a zero of `a`'s.
pub fn dominates(a: &Factor, b: &Factor, s: &Scope) -> bool {
    dominance_witness(a, b, s).is_none()
}

/// Right composition: `p1 · p2 / p2^(K1∩K2)` over the union scope, with
/// 0·0/0 = 0. Defined iff `p1`'s intersection marginal is dominated by
/// `p2`'s; the result keeps `p1` as its marginal on K1.
pub fn compose_right(p1: &Factor, p2: &Factor) -> Result<Factor> {
    check_shared_cards(p1, p2)?;
    let shared = p1.scope().intersect(p2.scope());
    if let Some(config) = dominance_witness(p1, p2, &shared) {
        return Err(Error::DominanceViolation {
            step: 0,
            scope: shared.vars().to_vec(),
            config,
        });
    }
    let den = p2.marginal(&shared);
    let num = p1.table().multiply(p2.table())?;
    Factor::from_table(num.divide_by_marginal(&den)?, DEFAULT_TOL)
}

/// Left composition: `p1 · p2 / p1^(K1∩K2)`, dominance reversed. The result
/// keeps `p2` as its marginal on K2.
pub fn compose_left(p1: &Factor, p2: &Factor) -> Result<Factor> {
    check_shared_cards(p1, p2)?;
    let shared = p1.scope().intersect(p2.scope());
    if let Some(config) = dominance_witness(p2, p1, &shared) {
        return Err(Error::DominanceViolation {
            step: 0,
            scope: shared.vars().to_vec(),
            config,
        });
    }
    let den = p1.marginal(&shared);
    let num = p1.table().multiply(p2.table())?;
    Factor::from_table(num.divide_by_marginal(&den)?, DEFAULT_TOL)
}

/// Whether the two distributions agree on their shared variables.
pub fn is_consistent(p1: &Factor, p2: &Factor, tol: &Tolerance) -> Result<bool> {
    check_shared_cards(p1, p2)?;
    let shared = p1.scope().intersect(p2.scope());
    let d = max_abs_diff(&p1.marginal(&shared), &p2.marginal(&shared))?;
    Ok(d <= tol.eq_tol)
}

/// The anticipating operator with context scope K: `(R^((K\K2)∩K3) · p2) ▷ p3`
/// where R is `p3` itself or the uniform distribution. When the auxiliary
/// scope is empty this is exactly `p2 ▷ p3`.
pub fn anticipate(p2: &Factor, p3: &Factor, context: &Scope, r: RChoice) -> Result<Factor> {
    let aux = context.difference(p2.scope()).intersect(p3.scope());
    if aux.is_empty() {
        return compose_right(p2, p3);
    }
    let r_marg = match r {
        RChoice::OwnMarginal => p3.marginal(&aux),
        RChoice::Uniform => Factor::uniform(aux.clone(), p3.table().cards_for(&aux)),
    };
    // aux is disjoint from scope(p2), so the product is itself a distribution
    let left = Factor::from_table(r_marg.table().multiply(p2.table())?, DEFAULT_TOL)?;
    compose_right(&left, p3)
}
