//! Deterministic fixture generators: perfect sequences built through the
//! Bayesian-network correspondence, perturbed non-perfect variants, and
//! random positive factors and sequences for randomized checks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::factor::{Factor, Table, DEFAULT_TOL};
use crate::registry::{VarId, VariableRegistry};
use crate::scope::Scope;
use crate::sequence::GeneratingSequence;

/// Parent-set shape used by [`gen_perfect_fixture`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Structure {
    /// Every variable is a root: the sequence is a list of univariate marginals.
    Independent,
    /// pa(X_j) = {X_{j-1}}.
    Chain,
    /// Random parent sets of bounded size drawn from the predecessors.
    Random { max_parents: usize },
}

pub fn rng_for(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Registry of `num_vars` variables X1…Xn with cardinalities drawn from
/// 2..=max_card (or 1 when max_card is 1).
pub fn random_registry(rng: &mut ChaCha8Rng, num_vars: usize, max_card: usize) -> VariableRegistry {
    let mut reg = VariableRegistry::new();
    for i in 1..=num_vars {
        let card = if max_card <= 1 { 1 } else { rng.gen_range(2..=max_card) };
        reg.add(&format!("X{i}"), card).unwrap();
    }
    reg
}

/// Strictly positive factor over `scope` with entries bounded away from zero.
pub fn random_positive_factor(
    rng: &mut ChaCha8Rng,
    scope: Scope,
    registry: &VariableRegistry,
) -> Factor {
    let cards: Vec<usize> = scope.iter().map(|v| registry.card(v)).collect();
    let total: usize = cards.iter().product::<usize>().max(1);
    let mut values: Vec<f64> = (0..total).map(|_| rng.gen_range(0.1..1.0)).collect();
    let sum: f64 = values.iter().sum();
    for v in &mut values {
        *v /= sum;
    }
    Factor::new(scope, values, registry).unwrap()
}

/// Random positive sequence of `n` factors with scopes of up to
/// `max_scope_vars` variables drawn from the registry.
pub fn random_positive_sequence(
    rng: &mut ChaCha8Rng,
    registry: &VariableRegistry,
    n: usize,
    max_scope_vars: usize,
) -> GeneratingSequence {
    let all: Vec<VarId> = registry.vars().collect();
    let factors = (0..n)
        .map(|_| {
            let size = rng.gen_range(1..=max_scope_vars.min(all.len()));
            let mut picked = Vec::new();
            while picked.len() < size {
                let v = all[rng.gen_range(0..all.len())];
                if !picked.contains(&v) {
                    picked.push(v);
                }
            }
            random_positive_factor(rng, Scope::new(picked).unwrap(), registry)
        })
        .collect();
    GeneratingSequence::new(factors, registry.clone()).unwrap()
}

fn parent_sets(rng: &mut ChaCha8Rng, num_vars: usize, structure: Structure) -> Vec<Vec<usize>> {
    (0..num_vars)
        .map(|j| match structure {
            Structure::Independent => Vec::new(),
            Structure::Chain => {
                if j == 0 {
                    Vec::new()
                } else {
                    vec![j - 1]
                }
            }
            Structure::Random { max_parents } => {
                let bound = max_parents.min(j);
                let count = if bound == 0 { 0 } else { rng.gen_range(0..=bound) };
                let mut parents = Vec::new();
                while parents.len() < count {
                    let p = rng.gen_range(0..j);
                    if !parents.contains(&p) {
                        parents.push(p);
                    }
                }
                parents.sort_unstable();
                parents
            }
        })
        .collect()
}

/// Builds a perfect sequence through the Bayesian-network route: draw a
/// random positive joint Q, assemble B as the product of the conditionals
/// Q(X_j | pa(X_j)) over a topological parent assignment, then emit the
/// family marginals B^({X_j} ∪ pa(X_j)) in topological order.
pub fn gen_perfect_fixture(
    seed: u64,
    num_vars: usize,
    max_card: usize,
    structure: Structure,
) -> GeneratingSequence {
    assert!(num_vars >= 1);
    let mut rng = rng_for(seed);
    let registry = random_registry(&mut rng, num_vars, max_card);
    let full = Scope::new(registry.vars().collect()).unwrap();
    let q = random_positive_factor(&mut rng, full, &registry);
    let parents = parent_sets(&mut rng, num_vars, structure);

    let mut acc = Table::scalar(1.0);
    let mut families = Vec::with_capacity(num_vars);
    for (j, pa) in parents.iter().enumerate() {
        let pa_scope = Scope::new(pa.iter().map(|p| VarId(*p)).collect()).unwrap();
        let family = pa_scope.union(&Scope::new(vec![VarId(j)]).unwrap());
        let conditional = q
            .marginal(&family)
            .into_table()
            .divide_by_marginal(&q.marginal(&pa_scope))
            .expect("positive joint cannot hit a zero marginal");
        acc = acc.multiply(&conditional).unwrap();
        families.push(family);
    }
    let joint = Factor::from_table(acc, DEFAULT_TOL).expect("conditional product is a distribution");

    let factors = families.iter().map(|family| joint.marginal(family)).collect();
    GeneratingSequence::new(factors, registry).unwrap()
}

/// A chain-structured perfect fixture with one factor perturbed so its
/// shared marginal no longer agrees with the prefix. `magnitude` 0 leaves
/// the fixture perfect.
pub fn gen_nonperfect_fixture(
    seed: u64,
    num_vars: usize,
    max_card: usize,
    magnitude: f64,
) -> GeneratingSequence {
    let num_vars = num_vars.max(2);
    let seq = gen_perfect_fixture(seed, num_vars, max_card.max(2), Structure::Chain);
    if magnitude == 0.0 {
        return seq;
    }
    let mut factors = seq.factors().to_vec();
    // factor 1 has scope {X1, X2} under chain parents; shift its X1-marginal
    let shared = factors[0].scope().intersect(factors[1].scope());
    let shared_var = shared.vars()[0];
    factors[1] = perturb_along(&factors[1], shared_var, magnitude)
        .expect("perturbation preserves nonnegativity and total mass");
    GeneratingSequence::new(factors, seq.registry().clone()).unwrap()
}

/// Moves probability mass between two configurations differing in `var`,
/// shifting the factor's marginal on that variable by the moved amount.
fn perturb_along(factor: &Factor, var: VarId, magnitude: f64) -> Result<Factor> {
    let pos = factor.scope().position(var).unwrap();
    let table = factor.table();
    let mut values = factor.values().to_vec();
    let from = (0..values.len())
        .find(|i| table.config_of(*i)[pos] == 1 && values[*i] > 0.0)
        .unwrap();
    let mut to_config = table.config_of(from);
    to_config[pos] = 0;
    let to = table.index_of(&to_config);
    let delta = magnitude.min(0.9 * values[from]);
    values[from] -= delta;
    values[to] += delta;
    Ok(Factor::from_table(
        Table::new(factor.scope().clone(), table.cards().to_vec(), values),
        DEFAULT_TOL,
    )?)
}

/// A chain of `num_vars` binary variables with `num_vars - 1` random
/// positive pairwise factors P_k(X_k, X_{k+1}).
pub fn binary_chain(seed: u64, num_vars: usize) -> GeneratingSequence {
    assert!(num_vars >= 2);
    let mut rng = rng_for(seed);
    let mut registry = VariableRegistry::new();
    let vars: Vec<VarId> = (1..=num_vars)
        .map(|i| registry.add(&format!("X{i}"), 2).unwrap())
        .collect();
    let factors = vars
        .windows(2)
        .map(|w| {
            random_positive_factor(&mut rng, Scope::new(w.to_vec()).unwrap(), &registry)
        })
        .collect();
    GeneratingSequence::new(factors, registry).unwrap()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::factor::Tolerance;
    use crate::sequence::{PerfectMethod, DEFAULT_MAX_ENTRIES};

    #[test]
    fn single_variable_fixture_is_perfect() {
        let seq = gen_perfect_fixture(7, 1, 3, Structure::Independent);
        assert_eq!(seq.len(), 1);
        let rep = seq
            .is_perfect(PerfectMethod::Both, &Tolerance::default(), DEFAULT_MAX_ENTRIES)
            .unwrap();
        assert!(rep.verdict);
    }

    #[test]
    fn independent_fixture_joint_is_product() {
        let seq = gen_perfect_fixture(11, 4, 3, Structure::Independent);
        let rep = seq
            .is_perfect(PerfectMethod::Both, &Tolerance::default(), DEFAULT_MAX_ENTRIES)
            .unwrap();
        assert!(rep.verdict);
        let joint = seq.compose_right().unwrap();
        let mut product = Table::scalar(1.0);
        for f in seq.factors() {
            product = product.multiply(f.table()).unwrap();
        }
        assert!(joint.table().max_abs_diff(&product).unwrap() <= 1e-12);
    }

    #[test]
    fn ternary_chain_fixture_is_perfect() {
        let seq = gen_perfect_fixture(3, 5, 3, Structure::Chain);
        let rep = seq
            .is_perfect(PerfectMethod::Both, &Tolerance::default(), DEFAULT_MAX_ENTRIES)
            .unwrap();
        assert!(rep.verdict, "worst deviation {}", rep.worst_deviation);
    }

    #[test]
    fn zero_magnitude_perturbation_stays_perfect() {
        let seq = gen_nonperfect_fixture(5, 4, 2, 0.0);
        let rep = seq
            .is_perfect(PerfectMethod::Both, &Tolerance::default(), DEFAULT_MAX_ENTRIES)
            .unwrap();
        assert!(rep.verdict);
    }

    #[test]
    fn perturbed_fixture_is_not_perfect() {
        let tol = Tolerance::default();
        let seq = gen_nonperfect_fixture(5, 4, 2, 0.05);
        let rep = seq
            .is_perfect(PerfectMethod::Both, &tol, DEFAULT_MAX_ENTRIES)
            .unwrap();
        assert!(!rep.verdict);
        assert!(rep.worst_deviation > 10.0 * tol.eq_tol);
    }

    #[test]
    fn both_checkers_agree_on_random_fixtures() {
        let tol = Tolerance::default();
        for seed in 0..10 {
            let seq = gen_nonperfect_fixture(seed, 4, 3, 0.05);
            // `Both` errors out if the two methods disagree
            let rep = seq
                .is_perfect(PerfectMethod::Both, &tol, DEFAULT_MAX_ENTRIES)
                .unwrap();
            assert!(!rep.verdict);
        }
    }

    #[test]
    fn binary_chain_shape() {
        let seq = binary_chain(1, 6);
        assert_eq!(seq.len(), 5);
        assert_eq!(seq.union_entries(), 64);
        assert!(seq.factors().iter().all(|f| f.len() == 4));
    }
}
