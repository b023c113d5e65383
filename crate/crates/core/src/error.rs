use crate::registry::VarId;

pub type Result<T> = std::result::Result<T, Error>;

/// Errors produced by table algebra, composition, and sequence operations.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("table has {got} values but the scope requires {expected}")]
    ShapeMismatch { expected: usize, got: usize },

    #[error("negative entry {value} at index {index}")]
    NegativeEntry { index: usize, value: f64 },

    #[error("table sums to {sum}, expected 1 within tolerance")]
    NotNormalized { sum: f64 },

    #[error("variable {0} is not in scope")]
    VariableAbsent(VarId),

    #[error("variable {0} has conflicting cardinalities")]
    CardinalityMismatch(VarId),

    #[error("duplicate variable {0} in scope")]
    DuplicateVariable(VarId),

    #[error("duplicate variable name {0:?} in registry")]
    DuplicateName(String),

    #[error("variable {0:?} must have cardinality >= 1")]
    InvalidCardinality(String),

    #[error("nonzero numerator over zero denominator at index {index}")]
    ZeroDivision { index: usize },

    #[error("operands are defined over different scopes")]
    ScopeMismatch,

    /// The `step` is the 1-based index of the sequence member being composed
    /// when the violation surfaced; 0 for a standalone binary composition.
    #[error("dominance violated at step {step}: denominator marginal is zero at {config:?} over {scope:?} while the numerator is positive")]
    DominanceViolation {
        step: usize,
        scope: Vec<VarId>,
        config: Vec<usize>,
    },

    #[error("joint would need {entries} entries, limit is {limit}")]
    TooLarge { entries: u128, limit: u64 },

    #[error("a generating sequence must contain at least one factor")]
    EmptySequence,

    #[error("perfectness checks disagree: definition={definition}, marginals={marginals}")]
    MethodDisagreement { definition: bool, marginals: bool },
}

impl Error {
    /// Attach a sequence step index to a dominance violation bubbling up
    /// from a binary operator.
    pub(crate) fn with_step(self, step: usize) -> Error {
        match self {
            Error::DominanceViolation { scope, config, .. } => {
                Error::DominanceViolation { step, scope, config }
            }
            other => other,
        }
    }
}
