//! Desk-scale structures: Hilbert balls with expansions, finite classical
//! structures, theories and model files.

pub mod discrete;
pub mod file;
pub mod hilbert;
pub mod theory;

pub use discrete::{
    build_discrete, cyclic_product, direct_product, elementary_abelian, grid, group_from_table,
    kpartite, union_complete, DiscreteModel,
};
pub use file::{roots_of_unity, Model, ModelFile};
pub use hilbert::{
    build_hilbert, expand_group_action, expand_projection, expand_unitary, Expansion, GroupAction,
    HilbertModel,
};
pub use theory::{
    check_axioms, AxiomReport, AxiomResult, Condition, ConditionKind, Theory, TheoryError,
};

use crate::logic::signature::SignatureError;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ModelError {
    #[error("dimension must be at least 1")]
    ZeroDimension,
    #[error("universe must be nonempty")]
    EmptyUniverse,
    #[error("constant `{0}` has norm {1} > 1")]
    ConstantOutsideBall(String, f64),
    #[error("constant `{0}` has {1} coordinates, expected {2}")]
    ConstantDimension(String, usize, usize),
    #[error("`{0}` has complex entries but the model is real")]
    ComplexInRealModel(String),
    #[error("a model carries at most one expansion")]
    AlreadyExpanded,
    #[error("a unitary expansion needs a complex model")]
    RequiresComplex,
    #[error("expected {expected} eigenvalues, found {found}")]
    EigenvalueCount { expected: usize, found: usize },
    #[error("eigenvalue {0} has modulus {1}, not 1")]
    NotUnimodular(usize, f64),
    #[error("projection rank {rank} outside 1..={}", dim - 1)]
    RankOutOfRange { rank: usize, dim: usize },
    #[error("matrix `{0}` has the wrong shape")]
    MatrixShape(String),
    #[error("matrix `{0}` is not unitary")]
    NotUnitary(String),
    #[error("inconsistent group table: {0}")]
    InconsistentTable(String),
    #[error("table of `{0}` is not total over the universe")]
    PartialTable(String),
    #[error("relation `{0}` has entries other than 0 and 1")]
    NotBoolean(String),
    #[error("`{0}` refers to an element outside the universe")]
    ElementOutOfRange(String),
    #[error("unknown element `{0}`")]
    UnknownElement(String),
    #[error("structure has no group multiplication")]
    NotAGroup,
    #[error("bad number `{0}`")]
    BadNumber(String),
    #[error("model file: {0}")]
    Json(String),
    #[error(transparent)]
    Signature(#[from] SignatureError),
}
