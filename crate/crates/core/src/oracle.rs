//! Brute-force evaluation of a generating sequence, written as an
//! independent check on the operator chain. Each joint entry is computed
//! directly from the closed-form product
//! `P1(x) · ∏ P_k(x) / P_k^(K_k ∩ (K_1∪…∪K_{k−1}))(x)`,
//! with its own index arithmetic and summation, deliberately not going
//! through the table-algebra code path.

use crate::error::{Error, Result};
use crate::factor::{Factor, Table, DEFAULT_TOL};
use crate::registry::VarId;
use crate::scope::Scope;
use crate::sequence::GeneratingSequence;

/// Strides for a variable list, last variable fastest.
fn local_strides(cards: &[usize]) -> Vec<usize> {
    let mut s = vec![1usize; cards.len()];
    for i in (0..cards.len().saturating_sub(1)).rev() {
        s[i] = s[i + 1] * cards[i + 1];
    }
    s
}

/// Entry of `factor` at the configuration given for `full_vars`.
fn lookup(factor: &Factor, full_vars: &[VarId], config: &[usize]) -> f64 {
    let strides = local_strides(factor.table().cards());
    let mut idx = 0;
    for (pos, v) in factor.scope().iter().enumerate() {
        let full_pos = full_vars.iter().position(|w| *w == v).unwrap();
        idx += config[full_pos] * strides[pos];
    }
    factor.values()[idx]
}

/// Marginal of `factor` on `vars`, summed entry by entry.
fn brute_marginal(factor: &Factor, vars: &[VarId]) -> Vec<f64> {
    let cards: Vec<usize> = vars
        .iter()
        .map(|v| factor.table().card_of(*v).unwrap())
        .collect();
    let out_strides = local_strides(&cards);
    let in_strides = local_strides(factor.table().cards());
    let mut out = vec![0.0; cards.iter().product::<usize>().max(1)];
    for (idx, value) in factor.values().iter().enumerate() {
        let mut rem = idx;
        let mut out_idx = 0;
        for (pos, v) in factor.scope().iter().enumerate() {
            let digit = rem / in_strides[pos];
            rem %= in_strides[pos];
            if let Some(p) = vars.iter().position(|w| *w == v) {
                out_idx += digit * out_strides[p];
            }
        }
        out[out_idx] += value;
    }
    out
}

/// Evaluates the expanded right-composition chain entrywise over the union
/// scope. Errors with the 1-based index `k` at which dominance failed.
pub fn oracle_joint(seq: &GeneratingSequence) -> Result<Factor> {
    let factors = seq.factors();
    let union = seq.union_scope();
    let union_vars: Vec<VarId> = union.vars().to_vec();
    let union_cards: Vec<usize> = union_vars
        .iter()
        .map(|v| {
            factors
                .iter()
                .find_map(|f| f.table().card_of(*v))
                .expect("union variable missing from every factor")
        })
        .collect();

    // per step k >= 2: the shared scope with the prefix union and the
    // marginal of P_k on it
    let mut step_shared: Vec<Vec<VarId>> = Vec::new();
    let mut step_marg: Vec<Vec<f64>> = Vec::new();
    let mut prefix: Vec<VarId> = factors[0].scope().vars().to_vec();
    for f in &factors[1..] {
        let shared: Vec<VarId> = f
            .scope()
            .iter()
            .filter(|v| prefix.contains(v))
            .collect();
        step_marg.push(brute_marginal(f, &shared));
        step_shared.push(shared);
        for v in f.scope().iter() {
            if !prefix.contains(&v) {
                prefix.push(v);
            }
        }
    }

    let total: usize = union_cards.iter().product::<usize>().max(1);
    let mut values = vec![0.0; total];
    let mut config = vec![0usize; union_vars.len()];
    for slot in values.iter_mut().take(total) {
        let mut acc = lookup(&factors[0], &union_vars, &config);
        for (step, f) in factors[1..].iter().enumerate() {
            let shared = &step_shared[step];
            let shared_cards: Vec<usize> = shared
                .iter()
                .map(|v| f.table().card_of(*v).unwrap())
                .collect();
            let strides = local_strides(&shared_cards);
            let mut marg_idx = 0;
            for (pos, v) in shared.iter().enumerate() {
                let full_pos = union_vars.iter().position(|w| w == v).unwrap();
                marg_idx += config[full_pos] * strides[pos];
            }
            let den = step_marg[step][marg_idx];
            if den == 0.0 {
                if acc != 0.0 {
                    return Err(Error::DominanceViolation {
                        step: step + 2,
                        scope: shared.clone(),
                        config: shared
                            .iter()
                            .map(|v| config[union_vars.iter().position(|w| w == v).unwrap()])
                            .collect(),
                    });
                }
                acc = 0.0;
            } else {
                acc *= lookup(f, &union_vars, &config) / den;
            }
        }
        *slot = acc;
        // odometer increment, last variable fastest
        for pos in (0..config.len()).rev() {
            config[pos] += 1;
            if config[pos] < union_cards[pos] {
                break;
            }
            config[pos] = 0;
        }
    }

    Factor::from_table(
        Table::new(Scope::from_sorted(union_vars), union_cards, values),
        DEFAULT_TOL,
    )
}
