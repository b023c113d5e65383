//! Dense probability tables over canonically sorted scopes.
//!
//! Tables are row-major with the last scope variable varying fastest. A
//! [`Table`] is a raw nonnegative table (intermediates such as products are
//! generally unnormalized); a [`Factor`] wraps a table whose entries sum to 1
//! within tolerance. No operation renormalizes silently.

use crate::error::{Error, Result};
use crate::registry::{VarId, VariableRegistry};
use crate::scope::Scope;

/// Default absolute tolerance for both equality and normalization checks.
pub const DEFAULT_TOL: f64 = 1e-9;

/// Comparison and normalization bounds. "Zero" is always exact 0.0; these
/// tolerances never apply to the dominance / division rules.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tolerance {
    pub eq_tol: f64,
    pub norm_tol: f64,
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance { eq_tol: DEFAULT_TOL, norm_tol: DEFAULT_TOL }
    }
}

/// A raw dense table over a scope. Length equals the product of the scope
/// cardinalities; layout is row-major with the last variable fastest.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    scope: Scope,
    cards: Vec<usize>,
    values: Vec<f64>,
}

fn strides_for(cards: &[usize]) -> Vec<usize> {
    let mut s = vec![1usize; cards.len()];
    for i in (0..cards.len().saturating_sub(1)).rev() {
        s[i] = s[i + 1] * cards[i + 1];
    }
    s
}

impl Table {
    pub(crate) fn new(scope: Scope, cards: Vec<usize>, values: Vec<f64>) -> Table {
        debug_assert_eq!(scope.len(), cards.len());
        debug_assert_eq!(cards.iter().product::<usize>(), values.len());
        Table { scope, cards, values }
    }

    pub fn scalar(value: f64) -> Table {
        Table::new(Scope::empty(), Vec::new(), vec![value])
    }

    pub fn scope(&self) -> &Scope {
        &self.scope
    }

    pub fn cards(&self) -> &[usize] {
        &self.cards
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }

    pub fn card_of(&self, v: VarId) -> Option<usize> {
        self.scope.position(v).map(|p| self.cards[p])
    }

    /// Linear index of a configuration given per-axis values.
    pub fn index_of(&self, config: &[usize]) -> usize {
        debug_assert_eq!(config.len(), self.cards.len());
        let strides = strides_for(&self.cards);
        config.iter().zip(&strides).map(|(c, s)| c * s).sum()
    }

    /// Per-axis values of the configuration at a linear index.
    pub fn config_of(&self, mut idx: usize) -> Vec<usize> {
        let strides = strides_for(&self.cards);
        let mut out = Vec::with_capacity(self.cards.len());
        for s in &strides {
            out.push(idx / s);
            idx %= s;
        }
        out
    }

    /// Cardinalities for a sub-scope, looked up in this table.
    pub(crate) fn cards_for(&self, sub: &Scope) -> Vec<usize> {
        sub.iter()
            .map(|v| self.card_of(v).expect("sub-scope not contained in table scope"))
            .collect()
    }

    /// For each axis of `self`, the stride contribution into a table over
    /// `child` (0 when the variable is absent there).
    fn projection_onto(&self, child_scope: &Scope, child_cards: &[usize]) -> Vec<usize> {
        let child_strides = strides_for(child_cards);
        self.scope
            .iter()
            .map(|v| child_scope.position(v).map_or(0, |p| child_strides[p]))
            .collect()
    }

    /// Maps a linear index of `self` to the linear index of the projected
    /// configuration, using a projection from `projection_onto`.
    fn project_index(&self, strides: &[usize], proj: &[usize], mut idx: usize) -> usize {
        let mut out = 0;
        for (s, p) in strides.iter().zip(proj) {
            out += (idx / s) * p;
            idx %= s;
        }
        out
    }

    /// Sums this table onto `scope(self) ∩ l`. Total mass is preserved.
    pub fn marginal_onto(&self, l: &Scope) -> Table {
        let out_scope = self.scope.intersect(l);
        let out_cards = self.cards_for(&out_scope);
        let mut out_values = vec![0.0; out_cards.iter().product::<usize>().max(1)];
        let strides = strides_for(&self.cards);
        let proj = self.projection_onto(&out_scope, &out_cards);
        for (idx, v) in self.values.iter().enumerate() {
            out_values[self.project_index(&strides, &proj, idx)] += v;
        }
        Table::new(out_scope, out_cards, out_values)
    }

    /// Pointwise product with broadcasting over the union scope.
    pub fn multiply(&self, other: &Table) -> Result<Table> {
        for v in self.scope.intersect(&other.scope).iter() {
            if self.card_of(v) != other.card_of(v) {
                return Err(Error::CardinalityMismatch(v));
            }
        }
        let out_scope = self.scope.union(&other.scope);
        let out_cards: Vec<usize> = out_scope
            .iter()
            .map(|v| self.card_of(v).or_else(|| other.card_of(v)).unwrap())
            .collect();
        let total: usize = out_cards.iter().product::<usize>().max(1);
        let out = Table::new(out_scope, out_cards, vec![0.0; total]);
        let strides = strides_for(&out.cards);
        let pa = out.projection_onto(&self.scope, &self.cards);
        let pb = out.projection_onto(&other.scope, &other.cards);
        let mut values = out.values;
        for (idx, slot) in values.iter_mut().enumerate() {
            let ia = out_project(&strides, &pa, idx);
            let ib = out_project(&strides, &pb, idx);
            *slot = self.values[ia] * other.values[ib];
        }
        Ok(Table::new(out.scope, out.cards, values))
    }

    /// Pointwise quotient by a marginal over a sub-scope, with 0/0 = 0.
    /// A nonzero numerator over a zero denominator is a dominance violation
    /// the caller failed to screen.
    pub fn divide_by_marginal(&self, den: &Factor) -> Result<Table> {
        if !den.scope().is_subset_of(&self.scope) {
            return Err(Error::ScopeMismatch);
        }
        let strides = strides_for(&self.cards);
        let proj = self.projection_onto(den.scope(), den.table().cards());
        let mut values = Vec::with_capacity(self.values.len());
        for (idx, v) in self.values.iter().enumerate() {
            let d = den.values()[self.project_index(&strides, &proj, idx)];
            if d == 0.0 {
                if *v != 0.0 {
                    return Err(Error::ZeroDivision { index: idx });
                }
                values.push(0.0);
            } else {
                values.push(v / d);
            }
        }
        Ok(Table::new(self.scope.clone(), self.cards.clone(), values))
    }

    /// Maximum absolute entrywise difference; scopes must match exactly.
    pub fn max_abs_diff(&self, other: &Table) -> Result<f64> {
        if self.scope != other.scope || self.cards != other.cards {
            return Err(Error::ScopeMismatch);
        }
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max))
    }
}

fn out_project(strides: &[usize], proj: &[usize], mut idx: usize) -> usize {
    let mut out = 0;
    for (s, p) in strides.iter().zip(proj) {
        out += (idx / s) * p;
        idx %= s;
    }
    out
}

/// A probability distribution over a scope: a nonnegative table summing to 1
/// within tolerance. Immutable after construction.
#[derive(Clone, Debug, PartialEq)]
pub struct Factor {
    table: Table,
}

impl Factor {
    /// Builds a factor from values in canonical layout, validating shape,
    /// nonnegativity and normalization. Values are stored verbatim.
    pub fn new(scope: Scope, values: Vec<f64>, registry: &VariableRegistry) -> Result<Factor> {
        Factor::with_tolerance(scope, values, registry, DEFAULT_TOL)
    }

    pub fn with_tolerance(
        scope: Scope,
        values: Vec<f64>,
        registry: &VariableRegistry,
        norm_tol: f64,
    ) -> Result<Factor> {
        let cards: Vec<usize> = scope.iter().map(|v| registry.card(v)).collect();
        let expected = cards.iter().product::<usize>().max(1);
        if values.len() != expected {
            return Err(Error::ShapeMismatch { expected, got: values.len() });
        }
        for (index, v) in values.iter().enumerate() {
            if *v < 0.0 {
                return Err(Error::NegativeEntry { index, value: *v });
            }
        }
        let sum: f64 = values.iter().sum();
        if (sum - 1.0).abs() > norm_tol {
            return Err(Error::NotNormalized { sum });
        }
        Ok(Factor { table: Table::new(scope, cards, values) })
    }

    /// Wraps a table that should already be a distribution, asserting the
    /// normalization invariant instead of renormalizing.
    pub fn from_table(table: Table, norm_tol: f64) -> Result<Factor> {
        let sum = table.sum();
        if (sum - 1.0).abs() > norm_tol {
            return Err(Error::NotNormalized { sum });
        }
        Ok(Factor { table })
    }

    #[cfg(test)]
    pub(crate) fn from_table_unchecked(table: Table) -> Factor {
        Factor { table }
    }

    /// The empty-scope distribution: a single entry equal to 1.
    pub fn scalar() -> Factor {
        Factor { table: Table::scalar(1.0) }
    }

    pub fn uniform(scope: Scope, cards: Vec<usize>) -> Factor {
        let total: usize = cards.iter().product::<usize>().max(1);
        let values = vec![1.0 / total as f64; total];
        Factor { table: Table::new(scope, cards, values) }
    }

    pub fn table(&self) -> &Table {
        &self.table
    }

    pub fn into_table(self) -> Table {
        self.table
    }

    pub fn scope(&self) -> &Scope {
        self.table.scope()
    }

    pub fn values(&self) -> &[f64] {
        self.table.values()
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }

    /// The marginal distribution over `scope(self) ∩ l` (general L allowed).
    pub fn marginal(&self, l: &Scope) -> Factor {
        // summation preserves total mass, so the result stays normalized
        Factor { table: self.table.marginal_onto(l) }
    }

    /// One-variable removal; the variable must occur in the scope.
    pub fn marginalize_out(&self, v: VarId) -> Result<Factor> {
        if !self.scope().contains(v) {
            return Err(Error::VariableAbsent(v));
        }
        Ok(self.marginal(&self.scope().without(v)))
    }
}

/// Maximum absolute entrywise difference between two factors over the same scope.
pub fn max_abs_diff(a: &Factor, b: &Factor) -> Result<f64> {
    a.table().max_abs_diff(b.table())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reg2x2() -> (VariableRegistry, VarId, VarId) {
        let mut reg = VariableRegistry::new();
        let x1 = reg.add("X1", 2).unwrap();
        let x2 = reg.add("X2", 2).unwrap();
        (reg, x1, x2)
    }

    #[test]
    fn make_factor_layout() {
        let (reg, x1, x2) = reg2x2();
        let scope = Scope::new(vec![x1, x2]).unwrap();
        let f = Factor::new(scope, vec![0.1, 0.2, 0.3, 0.4], &reg).unwrap();
        // index order (x1=0,x2=0),(0,1),(1,0),(1,1): last variable fastest
        assert_eq!(f.table().index_of(&[0, 1]), 1);
        assert_eq!(f.table().index_of(&[1, 0]), 2);
        assert_eq!(f.values()[f.table().index_of(&[1, 1])], 0.4);
    }

    #[test]
    fn make_factor_empty_scope() {
        let (reg, _, _) = reg2x2();
        let f = Factor::new(Scope::empty(), vec![1.0], &reg).unwrap();
        assert_eq!(f.values(), &[1.0]);
    }

    #[test]
    fn make_factor_rejects_bad_values() {
        let (reg, x1, _) = reg2x2();
        let scope = Scope::new(vec![x1]).unwrap();
        assert!(matches!(
            Factor::new(scope.clone(), vec![0.6, 0.5], &reg),
            Err(Error::NotNormalized { .. })
        ));
        assert!(matches!(
            Factor::new(scope.clone(), vec![0.5], &reg),
            Err(Error::ShapeMismatch { expected: 2, got: 1 })
        ));
        assert!(matches!(
            Factor::new(scope, vec![-0.1, 1.1], &reg),
            Err(Error::NegativeEntry { index: 0, .. })
        ));
    }

    #[test]
    fn marginal_examples() {
        let (reg, x1, x2) = reg2x2();
        let scope = Scope::new(vec![x1, x2]).unwrap();
        let p = Factor::new(scope.clone(), vec![0.1, 0.2, 0.3, 0.4], &reg).unwrap();

        let m = p.marginal(&Scope::new(vec![x1]).unwrap());
        assert_eq!(m.values(), &[0.30000000000000004, 0.7]);

        // L ⊇ scope → unchanged
        let same = p.marginal(&scope);
        assert_eq!(same.values(), p.values());

        // disjoint L → scalar 1
        let scalar = p.marginal(&Scope::empty());
        assert_eq!(scalar.scope(), &Scope::empty());
        assert!((scalar.values()[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn marginalize_out_examples() {
        let (reg, x1, x2) = reg2x2();
        let scope = Scope::new(vec![x1, x2]).unwrap();
        let p = Factor::new(scope, vec![0.1, 0.2, 0.3, 0.4], &reg).unwrap();
        let m = p.marginalize_out(x2).unwrap();
        assert!((m.values()[0] - 0.3).abs() < 1e-12);
        assert!((m.values()[1] - 0.7).abs() < 1e-12);

        let p1 = Factor::new(Scope::new(vec![x1]).unwrap(), vec![0.3, 0.7], &reg).unwrap();
        let s = p1.marginalize_out(x1).unwrap();
        assert_eq!(s.scope(), &Scope::empty());
        assert!((s.values()[0] - 1.0).abs() < 1e-12);

        let p2 = Factor::new(Scope::new(vec![x2]).unwrap(), vec![0.3, 0.7], &reg).unwrap();
        assert_eq!(p2.marginalize_out(x1).unwrap_err(), Error::VariableAbsent(x1));
    }

    #[test]
    fn multiply_examples() {
        let (reg, x1, x2) = reg2x2();
        let a = Factor::new(Scope::new(vec![x1]).unwrap(), vec![0.3, 0.7], &reg).unwrap();
        let b = Factor::new(Scope::new(vec![x2]).unwrap(), vec![0.5, 0.5], &reg).unwrap();
        let prod = a.table().multiply(b.table()).unwrap();
        assert_eq!(prod.values(), &[0.15, 0.15, 0.35, 0.35]);

        let scalar = Factor::scalar();
        let same = a.table().multiply(scalar.table()).unwrap();
        assert_eq!(same.values(), a.values());

        let sq = a.table().multiply(a.table()).unwrap();
        assert_eq!(sq.values(), &[0.09, 0.48999999999999994]);
    }

    #[test]
    fn multiply_cardinality_mismatch() {
        let mut reg_a = VariableRegistry::new();
        let x = reg_a.add("X1", 2).unwrap();
        let mut reg_b = VariableRegistry::new();
        reg_b.add("X1", 3).unwrap();
        let a = Factor::new(Scope::new(vec![x]).unwrap(), vec![0.5, 0.5], &reg_a).unwrap();
        let b = Factor::new(
            Scope::new(vec![x]).unwrap(),
            vec![0.2, 0.3, 0.5],
            &reg_b,
        )
        .unwrap();
        assert_eq!(
            a.table().multiply(b.table()).unwrap_err(),
            Error::CardinalityMismatch(x)
        );
    }

    #[test]
    fn divide_by_marginal_zero_convention() {
        let (reg, x1, _) = reg2x2();
        let scope = Scope::new(vec![x1]).unwrap();
        let num = Table::new(scope.clone(), vec![2], vec![0.0, 0.4]);
        let den = Factor::new(Scope::new(vec![x1]).unwrap(), vec![0.0, 1.0], &reg).unwrap();
        // den [0.0, 0.8] is not normalized; build via from_table_unchecked
        let den08 = Factor::from_table_unchecked(Table::new(scope.clone(), vec![2], vec![0.0, 0.8]));
        let q = num.divide_by_marginal(&den08).unwrap();
        assert_eq!(q.values(), &[0.0, 0.5]);

        let identity = Table::new(scope.clone(), vec![2], vec![0.2, 0.4]);
        let ones = Factor::from_table_unchecked(Table::new(scope.clone(), vec![2], vec![1.0, 1.0]));
        assert_eq!(identity.divide_by_marginal(&ones).unwrap().values(), &[0.2, 0.4]);

        let bad = Table::new(scope, vec![2], vec![0.1, 0.4]);
        assert_eq!(
            bad.divide_by_marginal(&den08).unwrap_err(),
            Error::ZeroDivision { index: 0 }
        );
        let _ = den;
    }

    #[test]
    fn max_abs_diff_examples() {
        let (reg, x1, x2) = reg2x2();
        let a = Factor::new(Scope::new(vec![x1]).unwrap(), vec![0.5, 0.5], &reg).unwrap();
        let b = Factor::new(Scope::new(vec![x1]).unwrap(), vec![0.4, 0.6], &reg).unwrap();
        assert_eq!(max_abs_diff(&a, &a).unwrap(), 0.0);
        assert!((max_abs_diff(&a, &b).unwrap() - 0.1).abs() < 1e-15);
        let c = Factor::new(Scope::new(vec![x2]).unwrap(), vec![0.5, 0.5], &reg).unwrap();
        assert_eq!(max_abs_diff(&a, &c).unwrap_err(), Error::ScopeMismatch);
    }
}
