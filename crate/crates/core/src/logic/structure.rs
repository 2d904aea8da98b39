use std::collections::BTreeMap;

use nalgebra::DVector;

use super::signature::{Field, FuncSym, Signature, SortId};
use crate::scalar::Complex64;

pub type Vector = DVector<Complex64>;

/// An element of a structure: a vector of a Hilbert ball or the index of a
/// finite-universe element.
#[derive(Debug, Clone, PartialEq)]
pub enum Point {
    Vector(Vector),
    Element(usize),
}

impl Point {
    pub fn as_vector(&self) -> Option<&Vector> {
        match self {
            Point::Vector(v) => Some(v),
            Point::Element(_) => None,
        }
    }

    pub fn as_element(&self) -> Option<usize> {
        match self {
            Point::Element(i) => Some(*i),
            Point::Vector(_) => None,
        }
    }
}

/// Variable assignment.
pub type Assignment = BTreeMap<String, Point>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Universe {
    /// Elements `0..n`.
    Finite(usize),
    /// Closed unit ball of `K^dim`.
    Ball { dim: usize, field: Field },
}

impl Universe {
    pub fn real_dim(&self) -> Option<usize> {
        match self {
            Universe::Ball { dim, field } => Some(dim * field.real_factor()),
            Universe::Finite(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EvalError {
    #[error("assignment has no value for variable `{0}`")]
    MissingVariable(String),
    #[error("structure does not interpret `{0}`")]
    UnknownSymbol(String),
    #[error("`{0}` applied to {1} arguments")]
    Arity(String, usize),
    #[error("point of the wrong kind passed to `{0}`")]
    WrongPoint(String),
}

/// Interpretation of a signature.
pub trait Structure: Sync {
    fn signature(&self) -> &Signature;

    fn universe(&self, sort: SortId) -> Universe;

    fn distance(&self, a: &Point, b: &Point) -> f64;

    fn constant(&self, name: &str) -> Result<Point, EvalError>;

    fn apply(&self, f: &FuncSym, args: &[Point]) -> Result<Point, EvalError>;

    fn predicate(&self, name: &str, args: &[Point]) -> Result<f64, EvalError>;

    /// Distinguished points tried first by sampled quantifier search.
    fn seed_points(&self, _sort: SortId) -> Vec<Point> {
        Vec::new()
    }
}
