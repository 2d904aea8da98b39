//! Affine normal forms of terms, semantic term comparison and term enumeration.

mod enumerate;
mod form;

pub use enumerate::{
    all_assignments, enumerate_terms, random_assignments, random_point, term_equal_semantic,
    EnumerateError, EnumerationBudget, Verdict,
};
pub use form::{
    apply_op, atom_term, lambda_and_offset, normalize_term, AffineNormalForm, Atom, AtomRecord,
    Base, ExactNormalForm, GroupWords, NormalFormRecord, NormalizeError, OpWord, TheoryTag,
};

pub type NormalForm64 = AffineNormalForm<crate::scalar::Complex64>;
