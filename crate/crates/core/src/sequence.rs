//! Generating sequences: chain composition, perfectness checks, and the
//! local single-variable elimination that rewrites a sequence into one
//! representing the marginal without materializing the joint.

use crate::compose::{anticipate, compose_left, compose_right, RChoice};
use crate::error::{Error, Result};
use crate::factor::{max_abs_diff, Factor, Tolerance};
use crate::registry::{VarId, VariableRegistry};
use crate::scope::Scope;

/// Default ceiling on joint table sizes for the operations that must
/// materialize the full joint (perfectness checks, IPFP, oracle comparisons).
pub const DEFAULT_MAX_ENTRIES: u64 = 1 << 24;

/// An ordered list of factors defining a multidimensional model through
/// left-to-right right-composition.
#[derive(Clone, Debug)]
pub struct GeneratingSequence {
    factors: Vec<Factor>,
    registry: VariableRegistry,
}

impl GeneratingSequence {
    pub fn new(factors: Vec<Factor>, registry: VariableRegistry) -> Result<Self> {
        if factors.is_empty() {
            return Err(Error::EmptySequence);
        }
        for f in &factors {
            for (pos, v) in f.scope().iter().enumerate() {
                if f.table().cards()[pos] != registry.card(v) {
                    return Err(Error::CardinalityMismatch(v));
                }
            }
        }
        Ok(GeneratingSequence { factors, registry })
    }

    pub fn factors(&self) -> &[Factor] {
        &self.factors
    }

    pub fn registry(&self) -> &VariableRegistry {
        &self.registry
    }

    pub fn len(&self) -> usize {
        self.factors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.factors.is_empty()
    }

    pub fn union_scope(&self) -> Scope {
        self.factors
            .iter()
            .fold(Scope::empty(), |acc, f| acc.union(f.scope()))
    }

    /// Number of entries a table over the union scope would need.
    pub fn union_entries(&self) -> u128 {
        self.union_scope()
            .iter()
            .map(|v| self.registry.card(v) as u128)
            .product()
    }

    pub fn ensure_within(&self, max_entries: u64) -> Result<()> {
        let entries = self.union_entries();
        if entries > max_entries as u128 {
            return Err(Error::TooLarge { entries, limit: max_entries });
        }
        Ok(())
    }

    /// `(…((P1 ▷ P2) ▷ P3)… ▷ Pn)`. Dominance errors carry the 1-based
    /// index of the factor being composed.
    pub fn compose_right(&self) -> Result<Factor> {
        let mut acc = self.factors[0].clone();
        for (k, f) in self.factors.iter().enumerate().skip(1) {
            acc = compose_right(&acc, f).map_err(|e| e.with_step(k + 1))?;
        }
        Ok(acc)
    }

    /// The ◁-chain. Each step marginalizes the accumulated joint, so this is
    /// for desk-scale checks only.
    pub fn compose_left(&self) -> Result<Factor> {
        let mut acc = self.factors[0].clone();
        for (k, f) in self.factors.iter().enumerate().skip(1) {
            acc = compose_left(&acc, f).map_err(|e| e.with_step(k + 1))?;
        }
        Ok(acc)
    }

    pub fn is_perfect(
        &self,
        method: PerfectMethod,
        tol: &Tolerance,
        max_entries: u64,
    ) -> Result<PerfectnessReport> {
        self.ensure_within(max_entries)?;
        match method {
            PerfectMethod::Definition => self.perfect_by_definition(tol),
            PerfectMethod::Marginals => self.perfect_by_marginals(tol),
            PerfectMethod::Both => {
                let d = self.perfect_by_definition(tol)?;
                let m = self.perfect_by_marginals(tol)?;
                if d.verdict != m.verdict {
                    return Err(Error::MethodDisagreement {
                        definition: d.verdict,
                        marginals: m.verdict,
                    });
                }
                Ok(PerfectnessReport {
                    verdict: d.verdict,
                    method: PerfectMethod::Both,
                    worst_deviation: d.worst_deviation.max(m.worst_deviation),
                    failing_index: d.failing_index.or(m.failing_index),
                })
            }
        }
    }

    /// Checks the prefix equalities `P1▷…▷Pk = P1◁…◁Pk` for k = 2…n.
    fn perfect_by_definition(&self, tol: &Tolerance) -> Result<PerfectnessReport> {
        let mut right = self.factors[0].clone();
        let mut left = self.factors[0].clone();
        let mut worst = 0.0f64;
        let mut failing_index = None;
        for (k, f) in self.factors.iter().enumerate().skip(1) {
            right = compose_right(&right, f).map_err(|e| e.with_step(k + 1))?;
            left = compose_left(&left, f).map_err(|e| e.with_step(k + 1))?;
            let d = max_abs_diff(&right, &left)?;
            if d > worst {
                worst = d;
            }
            if d > tol.eq_tol && failing_index.is_none() {
                failing_index = Some(k + 1);
            }
        }
        Ok(PerfectnessReport {
            verdict: worst <= tol.eq_tol,
            method: PerfectMethod::Definition,
            worst_deviation: worst,
            failing_index,
        })
    }

    /// Composes the chain once and checks that every member is a marginal of it.
    fn perfect_by_marginals(&self, tol: &Tolerance) -> Result<PerfectnessReport> {
        let joint = self.compose_right()?;
        let mut worst = 0.0f64;
        let mut failing_index = None;
        for (k, f) in self.factors.iter().enumerate() {
            let d = max_abs_diff(&joint.marginal(f.scope()), f)?;
            if d > worst {
                worst = d;
            }
            if d > tol.eq_tol && failing_index.is_none() {
                failing_index = Some(k + 1);
            }
        }
        Ok(PerfectnessReport {
            verdict: worst <= tol.eq_tol,
            method: PerfectMethod::Marginals,
            worst_deviation: worst,
            failing_index,
        })
    }

    /// Rewrites the sequence into one over the union scope minus `l`,
    /// touching only the factors that contain `l`. With `keep_residual` the
    /// final accumulator is returned as well; appending it to the reduced
    /// sequence reconstructs the original joint.
    pub fn eliminate_variable(&self, l: VarId, keep_residual: bool) -> Result<EliminationResult> {
        let indices: Vec<usize> = self
            .factors
            .iter()
            .enumerate()
            .filter(|(_, f)| f.scope().contains(l))
            .map(|(i, _)| i)
            .collect();
        if indices.is_empty() {
            return Err(Error::VariableAbsent(l));
        }

        // prefix_union[j] = K_1 ∪ … ∪ K_j (1-based j)
        let mut prefix_union = Vec::with_capacity(self.factors.len() + 1);
        prefix_union.push(Scope::empty());
        for f in &self.factors {
            let last = prefix_union.last().unwrap().clone();
            prefix_union.push(last.union(f.scope()));
        }

        let mut reduced = self.factors.clone();
        let mut acc = self.factors[indices[0]].clone();
        let mut peak = acc.len();
        let q = acc.marginalize_out(l)?;
        peak = peak.max(q.len());
        reduced[indices[0]] = q;

        for (step, &i) in indices.iter().enumerate().skip(1) {
            let context = prefix_union[i].without(l);
            acc = anticipate(&acc, &self.factors[i], &context, RChoice::OwnMarginal)
                .map_err(|e| e.with_step(step + 1))?;
            peak = peak.max(acc.len());
            let q = acc.marginalize_out(l)?;
            peak = peak.max(q.len());
            reduced[i] = q;
        }

        let residual = keep_residual.then(|| acc);
        let stats = EliminationStats {
            peak_entries: peak,
            factors_touched: indices.len(),
            rounds: vec![RoundStats { var: l, indices }],
        };
        Ok(EliminationResult {
            reduced: GeneratingSequence {
                factors: reduced,
                registry: self.registry.clone(),
            },
            residual,
            stats,
        })
    }

    /// Eliminates several variables in the given order, one at a time,
    /// without residuals. Stats aggregate peak sizes across rounds.
    pub fn eliminate_variables(
        &self,
        vars: &[VarId],
        ignore_missing: bool,
    ) -> Result<EliminationResult> {
        let mut seq = self.clone();
        let mut peak = 0usize;
        let mut touched = 0usize;
        let mut rounds = Vec::new();
        for &v in vars {
            if !seq.union_scope().contains(v) {
                if ignore_missing {
                    continue;
                }
                return Err(Error::VariableAbsent(v));
            }
            let round = seq.eliminate_variable(v, false)?;
            peak = peak.max(round.stats.peak_entries);
            touched += round.stats.factors_touched;
            rounds.extend(round.stats.rounds);
            seq = round.reduced;
        }
        Ok(EliminationResult {
            reduced: seq,
            residual: None,
            stats: EliminationStats {
                peak_entries: peak,
                factors_touched: touched,
                rounds,
            },
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PerfectMethod {
    Definition,
    Marginals,
    Both,
}

/// Outcome of a perfectness check.
#[derive(Clone, Debug)]
pub struct PerfectnessReport {
    pub verdict: bool,
    pub method: PerfectMethod,
    pub worst_deviation: f64,
    /// 1-based index of the first member failing the check, if any.
    pub failing_index: Option<usize>,
}

/// The reduced sequence produced by elimination, the optional residual
/// factor that reconstructs the original joint, and locality statistics.
#[derive(Clone, Debug)]
pub struct EliminationResult {
    pub reduced: GeneratingSequence,
    pub residual: Option<Factor>,
    pub stats: EliminationStats,
}

#[derive(Clone, Debug)]
pub struct EliminationStats {
    /// Largest intermediate table built during elimination, in entries.
    pub peak_entries: usize,
    pub factors_touched: usize,
    pub rounds: Vec<RoundStats>,
}

#[derive(Clone, Debug)]
pub struct RoundStats {
    pub var: VarId,
    /// 0-based positions of the factors containing the eliminated variable.
    pub indices: Vec<usize>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::oracle_joint;

    fn factor(reg: &VariableRegistry, vars: &[VarId], values: &[f64]) -> Factor {
        Factor::new(Scope::new(vars.to_vec()).unwrap(), values.to_vec(), reg).unwrap()
    }

    fn reg(n: usize) -> VariableRegistry {
        let mut r = VariableRegistry::new();
        for i in 1..=n {
            r.add(&format!("X{i}"), 2).unwrap();
        }
        r
    }

    #[test]
    fn single_factor_chains() {
        let r = reg(1);
        let p1 = factor(&r, &[VarId(0)], &[0.3, 0.7]);
        let seq = GeneratingSequence::new(vec![p1.clone()], r).unwrap();
        assert_eq!(seq.compose_right().unwrap().values(), p1.values());
        assert_eq!(seq.compose_left().unwrap().values(), p1.values());
    }

    #[test]
    fn later_factor_over_earlier_scope_is_ignored() {
        // P1(X1) ▷ P2(X2) ▷ P3(X1,X2) = P1(X1)·P2(X2)
        let r = reg(2);
        let x1 = VarId(0);
        let x2 = VarId(1);
        let p1 = factor(&r, &[x1], &[0.3, 0.7]);
        let p2 = factor(&r, &[x2], &[0.6, 0.4]);
        let p3 = factor(&r, &[x1, x2], &[0.4, 0.1, 0.2, 0.3]);
        let product = p1.table().multiply(p2.table()).unwrap();
        let seq = GeneratingSequence::new(vec![p1, p2, p3], r).unwrap();
        let joint = seq.compose_right().unwrap();
        assert!(joint.table().max_abs_diff(&product).unwrap() <= 1e-12);
    }

    #[test]
    fn right_chain_matches_oracle() {
        let r = reg(4);
        let p1 = factor(&r, &[VarId(0), VarId(1)], &[0.1, 0.3, 0.2, 0.4]);
        let p2 = factor(&r, &[VarId(1), VarId(2)], &[0.25, 0.15, 0.35, 0.25]);
        let p3 = factor(&r, &[VarId(2), VarId(3)], &[0.3, 0.2, 0.1, 0.4]);
        let seq = GeneratingSequence::new(vec![p1, p2, p3], r).unwrap();
        let chain = seq.compose_right().unwrap();
        let oracle = oracle_joint(&seq).unwrap();
        assert!(max_abs_diff(&chain, &oracle).unwrap() <= 1e-12);
    }

    #[test]
    fn perfect_disjoint_pair() {
        let r = reg(2);
        let p1 = factor(&r, &[VarId(0)], &[0.3, 0.7]);
        let p2 = factor(&r, &[VarId(1)], &[0.5, 0.5]);
        let seq = GeneratingSequence::new(vec![p1, p2], r).unwrap();
        let tol = Tolerance::default();
        let rep = seq
            .is_perfect(PerfectMethod::Both, &tol, DEFAULT_MAX_ENTRIES)
            .unwrap();
        assert!(rep.verdict);
        assert_eq!(rep.failing_index, None);
    }

    #[test]
    fn inconsistent_pair_fails_at_index_2() {
        let r = reg(3);
        let p1 = factor(&r, &[VarId(0), VarId(1)], &[0.1, 0.2, 0.3, 0.4]); // X2: [0.4,0.6]
        let p2 = factor(&r, &[VarId(1), VarId(2)], &[0.25, 0.25, 0.25, 0.25]); // X2: [0.5,0.5]
        let seq = GeneratingSequence::new(vec![p1, p2], r).unwrap();
        let tol = Tolerance::default();
        let rep = seq
            .is_perfect(PerfectMethod::Both, &tol, DEFAULT_MAX_ENTRIES)
            .unwrap();
        assert!(!rep.verdict);
        assert_eq!(rep.failing_index, Some(2));
    }

    #[test]
    fn eliminate_single_occurrence_marginalizes_in_place() {
        let r = reg(3);
        let x3 = VarId(2);
        let p1 = factor(&r, &[VarId(0), VarId(1)], &[0.1, 0.2, 0.3, 0.4]);
        let p2 = factor(&r, &[VarId(1), VarId(2)], &[0.2, 0.3, 0.25, 0.25]);
        let seq = GeneratingSequence::new(vec![p1.clone(), p2.clone()], r).unwrap();
        let res = seq.eliminate_variable(x3, false).unwrap();
        assert_eq!(res.reduced.factors()[0], p1);
        assert_eq!(
            res.reduced.factors()[1].values(),
            p2.marginalize_out(x3).unwrap().values()
        );
        assert_eq!(res.stats.factors_touched, 1);
        assert_eq!(res.stats.rounds[0].indices, vec![1]);
    }

    #[test]
    fn eliminate_absent_variable_errors() {
        let r = reg(3);
        let p1 = factor(&r, &[VarId(0)], &[0.3, 0.7]);
        let seq = GeneratingSequence::new(vec![p1], r).unwrap();
        assert_eq!(
            seq.eliminate_variable(VarId(2), false).unwrap_err(),
            Error::VariableAbsent(VarId(2))
        );
        // with ignore_missing the multi-variable form skips it
        let res = seq.eliminate_variables(&[VarId(2)], true).unwrap();
        assert_eq!(res.reduced.len(), 1);
    }

    #[test]
    fn eliminate_empty_list_is_identity() {
        let r = reg(2);
        let p1 = factor(&r, &[VarId(0), VarId(1)], &[0.1, 0.2, 0.3, 0.4]);
        let seq = GeneratingSequence::new(vec![p1.clone()], r).unwrap();
        let res = seq.eliminate_variables(&[], false).unwrap();
        assert_eq!(res.reduced.factors()[0], p1);
        assert_eq!(res.stats.factors_touched, 0);
    }

    #[test]
    fn worked_example_structure() {
        // P1(X1,X3), P2(X2), P3(X1,X2,X3,X4): eliminating X1 touches
        // factors 1 and 3 and leaves P2 untouched.
        let mut r = VariableRegistry::new();
        let x1 = r.add("X1", 2).unwrap();
        let x2 = r.add("X2", 2).unwrap();
        let x3 = r.add("X3", 2).unwrap();
        let x4 = r.add("X4", 2).unwrap();
        let p1 = factor(&r, &[x1, x3], &[0.1, 0.2, 0.3, 0.4]);
        let p2 = factor(&r, &[x2], &[0.45, 0.55]);
        let p3_values = [
            0.05, 0.07, 0.06, 0.02, 0.09, 0.11, 0.04, 0.06, 0.08, 0.02, 0.05, 0.05, 0.1, 0.1,
            0.03, 0.07,
        ];
        let p3 = factor(&r, &[x1, x2, x3, x4], &p3_values);
        let seq = GeneratingSequence::new(vec![p1.clone(), p2.clone(), p3], r).unwrap();

        let res = seq.eliminate_variable(x1, true).unwrap();
        assert_eq!(res.stats.rounds[0].indices, vec![0, 2]);
        assert_eq!(res.reduced.factors()[1], p2);
        assert_eq!(
            res.reduced.factors()[0].values(),
            p1.marginalize_out(x1).unwrap().values()
        );
        assert!(!res.reduced.union_scope().contains(x1));

        // the reduced chain equals the marginalized joint
        let truth = oracle_joint(&seq).unwrap().marginalize_out(x1).unwrap();
        let got = res.reduced.compose_right().unwrap();
        assert!(max_abs_diff(&got, &truth).unwrap() <= 1e-9);

        // appending the residual reconstructs the joint
        let mut with_residual = res.reduced.factors().to_vec();
        with_residual.push(res.residual.unwrap());
        let rebuilt = GeneratingSequence::new(with_residual, seq.registry().clone())
            .unwrap()
            .compose_right()
            .unwrap();
        assert!(
            max_abs_diff(&rebuilt, &oracle_joint(&seq).unwrap()).unwrap() <= 1e-9
        );
    }

    #[test]
    fn too_large_guard() {
        let r = reg(2);
        let p1 = factor(&r, &[VarId(0), VarId(1)], &[0.1, 0.2, 0.3, 0.4]);
        let seq = GeneratingSequence::new(vec![p1], r).unwrap();
        assert!(matches!(
            seq.is_perfect(PerfectMethod::Definition, &Tolerance::default(), 2),
            Err(Error::TooLarge { entries: 4, limit: 2 })
        ));
    }
}
