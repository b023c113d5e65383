use crate::error::{Error, Result};
use crate::registry::VarId;

/// An ordered set of variables, strictly ascending in the canonical
/// (registry) order. The empty scope is legal and denotes a scalar.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Default)]
pub struct Scope(Vec<VarId>);

impl Scope {
    pub fn empty() -> Self {
        Scope(Vec::new())
    }

    /// Sorts the given variables into canonical order; duplicates are an error.
    pub fn new(mut vars: Vec<VarId>) -> Result<Self> {
        vars.sort_unstable();
        for w in vars.windows(2) {
            if w[0] == w[1] {
                return Err(Error::DuplicateVariable(w[0]));
            }
        }
        Ok(Scope(vars))
    }

    pub(crate) fn from_sorted(vars: Vec<VarId>) -> Self {
        debug_assert!(vars.windows(2).all(|w| w[0] < w[1]));
        Scope(vars)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn vars(&self) -> &[VarId] {
        &self.0
    }

    pub fn iter(&self) -> impl Iterator<Item = VarId> + '_ {
        self.0.iter().copied()
    }

    pub fn contains(&self, v: VarId) -> bool {
        self.0.binary_search(&v).is_ok()
    }

    /// Position of `v` within this scope's ordering, if present.
    pub fn position(&self, v: VarId) -> Option<usize> {
        self.0.binary_search(&v).ok()
    }

    pub fn union(&self, other: &Scope) -> Scope {
        let mut out = Vec::with_capacity(self.len() + other.len());
        let (mut i, mut j) = (0, 0);
        while i < self.0.len() && j < other.0.len() {
            match self.0[i].cmp(&other.0[j]) {
                std::cmp::Ordering::Less => {
                    out.push(self.0[i]);
                    i += 1;
                }
                std::cmp::Ordering::Greater => {
                    out.push(other.0[j]);
                    j += 1;
                }
                std::cmp::Ordering::Equal => {
                    out.push(self.0[i]);
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&self.0[i..]);
        out.extend_from_slice(&other.0[j..]);
        Scope(out)
    }

    pub fn intersect(&self, other: &Scope) -> Scope {
        Scope(self.0.iter().copied().filter(|v| other.contains(*v)).collect())
    }

    pub fn difference(&self, other: &Scope) -> Scope {
        Scope(self.0.iter().copied().filter(|v| !other.contains(*v)).collect())
    }

    pub fn without(&self, v: VarId) -> Scope {
        Scope(self.0.iter().copied().filter(|w| *w != v).collect())
    }

    pub fn is_subset_of(&self, other: &Scope) -> bool {
        self.0.iter().all(|v| other.contains(*v))
    }
}

impl IntoIterator for Scope {
    type Item = VarId;
    type IntoIter = std::vec::IntoIter<VarId>;
    fn into_iter(self) -> Self::IntoIter {
        self.0.into_iter()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(ids: &[usize]) -> Scope {
        Scope::new(ids.iter().map(|i| VarId(*i)).collect()).unwrap()
    }

    #[test]
    fn sorts_to_canonical_order() {
        assert_eq!(s(&[2, 0, 1]).vars(), &[VarId(0), VarId(1), VarId(2)]);
    }

    #[test]
    fn rejects_duplicates() {
        let err = Scope::new(vec![VarId(1), VarId(1)]).unwrap_err();
        assert_eq!(err, Error::DuplicateVariable(VarId(1)));
    }

    #[test]
    fn set_operations() {
        let a = s(&[0, 1, 2]);
        let b = s(&[1, 3]);
        assert_eq!(a.union(&b), s(&[0, 1, 2, 3]));
        assert_eq!(a.intersect(&b), s(&[1]));
        assert_eq!(a.difference(&b), s(&[0, 2]));
        assert_eq!(a.without(VarId(1)), s(&[0, 2]));
        assert!(s(&[1]).is_subset_of(&a));
        assert!(!b.is_subset_of(&a));
        assert!(Scope::empty().is_subset_of(&b));
    }
}
