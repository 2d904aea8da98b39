//! Syntax, intervals, moduli and evaluation of continuous-logic formulas.

pub mod eval;
pub mod interval;
pub mod lipschitz;
pub mod parse;
pub mod rescale;
pub mod sampling;
pub mod signature;
pub mod structure;
pub mod syntax;

pub use eval::{eval_formula, eval_formula_with, eval_qf, eval_term, Enclosure, EvalBudget, Mode};
pub use interval::{interval_of, Interval};
pub use lipschitz::{lipschitz_of, term_lipschitz, Modulus};
pub use parse::{parse_formula, parse_term, ParseError, ParseErrorKind};
pub use rescale::{rescale_to_unit, AtomKind, ManySortedAtom, Rescaled};
pub use signature::{Field, FuncSym, Signature, SignatureError, SortId};
pub use structure::{Assignment, EvalError, Point, Structure, Universe, Vector};
pub use syntax::{Formula, Term, Var};
