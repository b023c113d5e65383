use std::collections::HashMap;
use std::fmt;

use crate::error::{Error, Result};

/// Identifier of a variable: its index in the registry. The index order is
/// the canonical total order used for all scope sorting.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct VarId(pub usize);

impl fmt::Display for VarId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

/// Maps symbolic variable names to finite cardinalities.
#[derive(Clone, Debug, Default)]
pub struct VariableRegistry {
    names: Vec<String>,
    cards: Vec<usize>,
    by_name: HashMap<String, VarId>,
}

impl VariableRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, name: &str, cardinality: usize) -> Result<VarId> {
        if cardinality == 0 {
            return Err(Error::InvalidCardinality(name.to_string()));
        }
        if self.by_name.contains_key(name) {
            return Err(Error::DuplicateName(name.to_string()));
        }
        let id = VarId(self.names.len());
        self.names.push(name.to_string());
        self.cards.push(cardinality);
        self.by_name.insert(name.to_string(), id);
        Ok(id)
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    /// Cardinality of a variable. Panics on an id from a different registry.
    pub fn card(&self, v: VarId) -> usize {
        self.cards[v.0]
    }

    pub fn name(&self, v: VarId) -> &str {
        &self.names[v.0]
    }

    pub fn lookup(&self, name: &str) -> Option<VarId> {
        self.by_name.get(name).copied()
    }

    pub fn vars(&self) -> impl Iterator<Item = VarId> + '_ {
        (0..self.names.len()).map(VarId)
    }
}
