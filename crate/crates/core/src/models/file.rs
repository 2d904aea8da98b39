//! JSON model descriptions. Every real or complex number is a decimal string
//! (`"0.5"`, `"-0.25+0.5i"`, `"1/3"`); counts and 0/1 table entries are JSON
//! integers.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::discrete::{self, DiscreteModel};
use super::hilbert::{self, HilbertModel, Matrix};
use super::ModelError;
use crate::logic::signature::{Field, Signature};
use crate::logic::structure::{Structure, Vector};
use crate::scalar::{parse_qcomplex, qcomplex_to_c64, Complex64};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ModelFile {
    Hilbert(HilbertFile),
    Discrete(DiscreteFile),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HilbertFile {
    pub dimension: usize,
    pub field: Field,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub constants: BTreeMap<String, Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub unitary: Option<UnitaryFile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub projection: Option<ProjectionFile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub group: Option<GroupFile>,
}

/// Either explicit eigenvalues or the `n`-th roots of unity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum UnitaryFile {
    Eigenvalues(Vec<String>),
    RootsOfUnity(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProjectionFile {
    pub rank: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroupFile {
    /// Element name to row-major matrix.
    pub elements: BTreeMap<String, Vec<Vec<String>>>,
    /// `table[a][b]` names `a·b`; rows and columns follow `elements` order.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub table: Option<Vec<Vec<String>>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiscreteFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub builder: Option<BuilderFile>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub elements: Vec<String>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub relations: BTreeMap<String, RelationFile>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub functions: BTreeMap<String, FunctionFile>,
    /// Constant name to element name.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub constants: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub partition: Option<Vec<Vec<String>>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case", deny_unknown_fields)]
pub enum BuilderFile {
    Kpartite { parts: usize, size: usize },
    UnionComplete { copies: usize, size: usize },
    Grid { n: usize, size: usize },
    ElementaryAbelian { p: usize, rank: usize },
    CyclicProduct { orders: Vec<usize> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RelationFile {
    pub arity: usize,
    pub table: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FunctionFile {
    pub arity: usize,
    pub table: Vec<String>,
}

/// A structure built from a model file.
#[derive(Debug, Clone)]
pub enum Model {
    Hilbert(HilbertModel),
    Discrete(DiscreteModel),
}

impl Model {
    pub fn structure(&self) -> &dyn Structure {
        match self {
            Model::Hilbert(m) => m,
            Model::Discrete(m) => m,
        }
    }

    pub fn signature(&self) -> &Signature {
        self.structure().signature()
    }
}

/// The `n`-th roots of unity `e^{2πik/n}`.
pub fn roots_of_unity(n: usize) -> Vec<Complex64> {
    (0..n)
        .map(|k| Complex64::from_polar(1.0, std::f64::consts::TAU * k as f64 / n as f64))
        .collect()
}

fn number(text: &str) -> Result<Complex64, ModelError> {
    parse_qcomplex(text)
        .map(|q| qcomplex_to_c64(&q))
        .ok_or_else(|| ModelError::BadNumber(text.to_string()))
}

impl ModelFile {
    pub fn from_json(text: &str) -> Result<Self, ModelError> {
        serde_json::from_str(text).map_err(|e| ModelError::Json(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model files serialize")
    }

    pub fn build(&self) -> Result<Model, ModelError> {
        match self {
            ModelFile::Hilbert(h) => h.build().map(Model::Hilbert),
            ModelFile::Discrete(d) => d.build().map(Model::Discrete),
        }
    }
}

impl HilbertFile {
    pub fn new(dimension: usize, field: Field) -> Self {
        HilbertFile {
            dimension,
            field,
            constants: BTreeMap::new(),
            unitary: None,
            projection: None,
            group: None,
        }
    }

    fn build(&self) -> Result<HilbertModel, ModelError> {
        let mut constants = Vec::new();
        for (name, entries) in &self.constants {
            let v = entries
                .iter()
                .map(|t| number(t))
                .collect::<Result<Vec<_>, _>>()?;
            constants.push((name.clone(), Vector::from_vec(v)));
        }
        let mut m = hilbert::build_hilbert(self.dimension, self.field, constants)?;
        let expansions = self.unitary.is_some() as usize
            + self.projection.is_some() as usize
            + self.group.is_some() as usize;
        if expansions > 1 {
            return Err(ModelError::AlreadyExpanded);
        }
        if let Some(u) = &self.unitary {
            let ev = match u {
                UnitaryFile::Eigenvalues(list) => {
                    list.iter()
                        .map(|t| number(t))
                        .collect::<Result<Vec<_>, _>>()?
                }
                UnitaryFile::RootsOfUnity(n) => roots_of_unity(*n),
            };
            m = hilbert::expand_unitary(m, ev)?;
        }
        if let Some(p) = &self.projection {
            m = hilbert::expand_projection(m, p.rank)?;
        }
        if let Some(g) = &self.group {
            let names: Vec<String> = g.elements.keys().cloned().collect();
            let mut elements = Vec::new();
            for (name, rows) in &g.elements {
                let n = self.dimension;
                if rows.len() != n || rows.iter().any(|r| r.len() != n) {
                    return Err(ModelError::MatrixShape(name.clone()));
                }
                let flat = rows
                    .iter()
                    .flatten()
                    .map(|t| number(t))
                    .collect::<Result<Vec<_>, _>>()?;
                elements.push((name.clone(), Matrix::from_row_slice(n, n, &flat)));
            }
            let table = match &g.table {
                None => None,
                Some(rows) => Some(
                    rows.iter()
                        .map(|r| {
                            r.iter()
                                .map(|c| {
                                    names
                                        .iter()
                                        .position(|n| n == c)
                                        .ok_or_else(|| ModelError::UnknownElement(c.clone()))
                                })
                                .collect::<Result<Vec<_>, _>>()
                        })
                        .collect::<Result<Vec<_>, _>>()?,
                ),
            };
            m = hilbert::expand_group_action(m, elements, table)?;
        }
        Ok(m)
    }
}

impl DiscreteFile {
    fn build(&self) -> Result<DiscreteModel, ModelError> {
        let mut m = match &self.builder {
            Some(b) => {
                let m = match b {
                    BuilderFile::Kpartite { parts, size } => discrete::kpartite(*parts, *size)?,
                    BuilderFile::UnionComplete { copies, size } => {
                        discrete::union_complete(*copies, *size)?
                    }
                    BuilderFile::Grid { n, size } => discrete::grid(*n, *size)?,
                    BuilderFile::ElementaryAbelian { p, rank } => {
                        discrete::elementary_abelian(*p, *rank)?
                    }
                    BuilderFile::CyclicProduct { orders } => discrete::cyclic_product(orders)?,
                };
                if !self.elements.is_empty()
                    || !self.relations.is_empty()
                    || !self.functions.is_empty()
                {
                    return Err(ModelError::Json(
                        "a builder model cannot also list tables".into(),
                    ));
                }
                m
            }
            None => {
                let lookup = |c: &String| {
                    self.elements
                        .iter()
                        .position(|e| e == c)
                        .ok_or_else(|| ModelError::UnknownElement(c.clone()))
                };
                let relations = self
                    .relations
                    .iter()
                    .map(|(k, r)| (k.clone(), r.arity, r.table.clone()))
                    .collect();
                let mut functions = Vec::new();
                for (k, f) in &self.functions {
                    let table = f.table.iter().map(lookup).collect::<Result<Vec<_>, _>>()?;
                    functions.push((k.clone(), f.arity, table));
                }
                discrete::build_discrete(self.elements.clone(), relations, functions, vec![])?
            }
        };
        for (name, el) in &self.constants {
            let e = m
                .element_by_name(el)
                .ok_or_else(|| ModelError::UnknownElement(el.clone()))?;
            m.add_constant(name, e)?;
        }
        if let Some(blocks) = &self.partition {
            let blocks = blocks
                .iter()
                .map(|b| {
                    b.iter()
                        .map(|e| {
                            m.element_by_name(e)
                                .ok_or_else(|| ModelError::UnknownElement(e.clone()))
                        })
                        .collect::<Result<Vec<_>, _>>()
                })
                .collect::<Result<Vec<_>, _>>()?;
            m.set_partition(blocks);
        }
        Ok(m)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hilbert_file_round_trip() {
        let text = r#"{
            "kind": "hilbert",
            "dimension": 2,
            "field": "complex",
            "constants": {"v0": ["0.5", "0.25i"]},
            "unitary": {"eigenvalues": ["i", "-i"]}
        }"#;
        let f = ModelFile::from_json(text).unwrap();
        assert_eq!(ModelFile::from_json(&f.to_json()).unwrap(), f);
        let Model::Hilbert(m) = f.build().unwrap() else {
            panic!()
        };
        assert_eq!(m.constants()["v0"][1], Complex64::new(0.0, 0.25));
        assert_eq!(m.eigenvalues().unwrap().len(), 2);
    }

    #[test]
    fn discrete_files() {
        let text = r#"{"kind": "discrete", "builder": {"name": "kpartite", "parts": 2, "size": 3},
                       "constants": {"c1": "0", "c2": "3"}}"#;
        let Model::Discrete(m) = ModelFile::from_json(text).unwrap().build().unwrap() else {
            panic!()
        };
        assert_eq!(m.constants()["c2"], 3);
        assert_eq!(m.natural_partition().unwrap().len(), 2);
        let text = r#"{"kind": "discrete", "elements": ["a", "b"],
                       "relations": {"R": {"arity": 1, "table": [1, 0]}},
                       "functions": {"s": {"arity": 1, "table": ["b", "a"]}}}"#;
        let Model::Discrete(m) = ModelFile::from_json(text).unwrap().build().unwrap() else {
            panic!()
        };
        assert_eq!(m.apply_fn("s", &[0]), Some(1));
        assert_eq!(m.holds("R", &[0]), Some(true));
    }

    #[test]
    fn rejects_bad_files() {
        let text = r#"{"kind": "hilbert", "dimension": 2, "field": "real", "constants": {"v": ["0.9", "0.9"]}}"#;
        assert!(matches!(
            ModelFile::from_json(text).unwrap().build(),
            Err(ModelError::ConstantOutsideBall(..))
        ));
        let text =
            r#"{"kind": "hilbert", "dimension": 2, "field": "real", "constants": {"v": [0.5, 0]}}"#;
        assert!(ModelFile::from_json(text).is_err());
    }
}
