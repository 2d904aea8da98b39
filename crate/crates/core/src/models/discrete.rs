//! Finite classical structures as metric structures with the 0/1 metric.
//! A relation symbol is read as a predicate with value 0 on tuples in the
//! relation and 1 elsewhere.

use std::collections::BTreeMap;

use super::ModelError;
use crate::logic::interval::Interval;
use crate::logic::signature::{FuncSym, Signature, SortId};
use crate::logic::structure::{EvalError, Point, Structure, Universe};
use crate::scalar::rat;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Relation {
    pub arity: usize,
    /// Row-major over `size^arity` tuples.
    pub table: Vec<bool>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Function {
    pub arity: usize,
    pub table: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct DiscreteModel {
    sig: Signature,
    names: Vec<String>,
    relations: BTreeMap<String, Relation>,
    functions: BTreeMap<String, Function>,
    constants: BTreeMap<String, usize>,
    partition: Option<Vec<Vec<usize>>>,
}

pub const ELEMENTS: SortId = 0;

/// Row-major index of a tuple.
pub fn tuple_index(size: usize, tuple: &[usize]) -> usize {
    tuple.iter().fold(0, |acc, &a| acc * size + a)
}

/// All tuples of length `arity` over `0..size`, in row-major order.
pub fn all_tuples(size: usize, arity: usize) -> impl Iterator<Item = Vec<usize>> {
    let total = size.checked_pow(arity as u32).unwrap_or(usize::MAX);
    (0..total).map(move |mut i| {
        let mut t = vec![0; arity];
        for slot in t.iter_mut().rev() {
            *slot = i % size;
            i /= size;
        }
        t
    })
}

/// Builds a structure from explicit tables. Relation tables are 0/1 with 1
/// meaning the tuple is in the relation.
pub fn build_discrete(
    elements: Vec<String>,
    relations: Vec<(String, usize, Vec<u8>)>,
    functions: Vec<(String, usize, Vec<usize>)>,
    constants: Vec<(String, usize)>,
) -> Result<DiscreteModel, ModelError> {
    let n = elements.len();
    if n == 0 {
        return Err(ModelError::EmptyUniverse);
    }
    let mut m = DiscreteModel::empty(elements)?;
    for (name, arity, table) in relations {
        if table.len() != n.pow(arity as u32) {
            return Err(ModelError::PartialTable(name));
        }
        if table.iter().any(|&b| b > 1) {
            return Err(ModelError::NotBoolean(name));
        }
        m.add_relation(&name, arity, table.into_iter().map(|b| b == 1).collect())?;
    }
    for (name, arity, table) in functions {
        m.add_function(&name, arity, table)?;
    }
    for (name, e) in constants {
        m.add_constant(&name, e)?;
    }
    Ok(m)
}

impl DiscreteModel {
    fn empty(names: Vec<String>) -> Result<Self, ModelError> {
        let mut sig = Signature::new();
        sig.add_sort("M", rat(1, 1))?;
        Ok(DiscreteModel {
            sig,
            names,
            relations: BTreeMap::new(),
            functions: BTreeMap::new(),
            constants: BTreeMap::new(),
            partition: None,
        })
    }

    fn numbered(n: usize) -> Result<Self, ModelError> {
        Self::empty((0..n).map(|i| i.to_string()).collect())
    }

    pub fn add_relation(
        &mut self,
        name: &str,
        arity: usize,
        table: Vec<bool>,
    ) -> Result<(), ModelError> {
        if table.len() != self.size().pow(arity as u32) {
            return Err(ModelError::PartialTable(name.to_string()));
        }
        let iv = Interval::new(rat(0, 1), rat(1, 1)).expect("ordered");
        self.sig
            .add_predicate(name, vec![ELEMENTS; arity], iv, vec![1.0; arity])?;
        self.relations
            .insert(name.to_string(), Relation { arity, table });
        Ok(())
    }

    pub fn add_function(
        &mut self,
        name: &str,
        arity: usize,
        table: Vec<usize>,
    ) -> Result<(), ModelError> {
        let n = self.size();
        if table.len() != n.pow(arity as u32) {
            return Err(ModelError::PartialTable(name.to_string()));
        }
        if table.iter().any(|&v| v >= n) {
            return Err(ModelError::ElementOutOfRange(name.to_string()));
        }
        self.sig
            .add_function(name, vec![ELEMENTS; arity], ELEMENTS, vec![1.0; arity])?;
        self.functions
            .insert(name.to_string(), Function { arity, table });
        Ok(())
    }

    pub fn add_constant(&mut self, name: &str, element: usize) -> Result<(), ModelError> {
        if element >= self.size() {
            return Err(ModelError::ElementOutOfRange(name.to_string()));
        }
        self.sig.add_constant(name, ELEMENTS)?;
        self.constants.insert(name.to_string(), element);
        Ok(())
    }

    pub fn with_constant(mut self, name: &str, element: usize) -> Result<Self, ModelError> {
        self.add_constant(name, element)?;
        Ok(self)
    }

    pub fn set_partition(&mut self, blocks: Vec<Vec<usize>>) {
        self.partition = Some(blocks);
    }

    pub fn size(&self) -> usize {
        self.names.len()
    }

    pub fn element_name(&self, i: usize) -> &str {
        &self.names[i]
    }

    pub fn element_names(&self) -> &[String] {
        &self.names
    }

    pub fn element_by_name(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn relations(&self) -> &BTreeMap<String, Relation> {
        &self.relations
    }

    pub fn functions(&self) -> &BTreeMap<String, Function> {
        &self.functions
    }

    pub fn constants(&self) -> &BTreeMap<String, usize> {
        &self.constants
    }

    /// The partition the builder constructed the structure from, if any.
    pub fn natural_partition(&self) -> Option<&[Vec<usize>]> {
        self.partition.as_deref()
    }

    pub fn holds(&self, relation: &str, tuple: &[usize]) -> Option<bool> {
        let r = self.relations.get(relation)?;
        (r.arity == tuple.len()).then(|| r.table[tuple_index(self.size(), tuple)])
    }

    pub fn apply_fn(&self, function: &str, args: &[usize]) -> Option<usize> {
        let f = self.functions.get(function)?;
        (f.arity == args.len()).then(|| f.table[tuple_index(self.size(), args)])
    }

    fn elements(&self, args: &[Point], symbol: &str) -> Result<Vec<usize>, EvalError> {
        args.iter()
            .map(|p| match p {
                Point::Element(i) if *i < self.size() => Ok(*i),
                _ => Err(EvalError::WrongPoint(symbol.to_string())),
            })
            .collect()
    }
}

impl Structure for DiscreteModel {
    fn signature(&self) -> &Signature {
        &self.sig
    }

    fn universe(&self, _sort: SortId) -> Universe {
        Universe::Finite(self.size())
    }

    fn distance(&self, a: &Point, b: &Point) -> f64 {
        if a == b {
            0.0
        } else {
            1.0
        }
    }

    fn constant(&self, name: &str) -> Result<Point, EvalError> {
        self.constants
            .get(name)
            .map(|&e| Point::Element(e))
            .ok_or_else(|| EvalError::UnknownSymbol(name.to_string()))
    }

    fn apply(&self, f: &FuncSym, args: &[Point]) -> Result<Point, EvalError> {
        let FuncSym::Named(name) = f else {
            return Err(EvalError::UnknownSymbol(f.to_string()));
        };
        let els = self.elements(args, name)?;
        let func = self
            .functions
            .get(name)
            .ok_or_else(|| EvalError::UnknownSymbol(name.clone()))?;
        if func.arity != els.len() {
            return Err(EvalError::Arity(name.clone(), els.len()));
        }
        Ok(Point::Element(func.table[tuple_index(self.size(), &els)]))
    }

    fn predicate(&self, name: &str, args: &[Point]) -> Result<f64, EvalError> {
        let els = self.elements(args, name)?;
        let rel = self
            .relations
            .get(name)
            .ok_or_else(|| EvalError::UnknownSymbol(name.to_string()))?;
        if rel.arity != els.len() {
            return Err(EvalError::Arity(name.to_string(), els.len()));
        }
        Ok(if rel.table[tuple_index(self.size(), &els)] {
            0.0
        } else {
            1.0
        })
    }
}

fn graph(
    n: usize,
    blocks: Vec<Vec<usize>>,
    edge: impl Fn(usize, usize) -> bool,
) -> Result<DiscreteModel, ModelError> {
    let mut m = DiscreteModel::numbered(n)?;
    let table = all_tuples(n, 2).map(|t| edge(t[0], t[1])).collect();
    m.add_relation("E", 2, table)?;
    m.set_partition(blocks);
    Ok(m)
}

/// Complete `k`-partite graph with parts of size `s`; part `i` holds
/// `i*s .. (i+1)*s`.
pub fn kpartite(k: usize, s: usize) -> Result<DiscreteModel, ModelError> {
    let blocks = (0..k).map(|i| (i * s..(i + 1) * s).collect()).collect();
    graph(k * s, blocks, |a, b| a / s != b / s)
}

/// Disjoint union of `m` copies of the complete graph `K_s`.
pub fn union_complete(m: usize, s: usize) -> Result<DiscreteModel, ModelError> {
    let blocks = (0..m).map(|i| (i * s..(i + 1) * s).collect()).collect();
    graph(m * s, blocks, |a, b| a != b && a / s == b / s)
}

/// `{0..size}^n` with `E_i(a, b) <=> a_i = b_i` (named `E1..En`) and the
/// `n`-ary diagonal map `f(a_1, .., a_n) = (a_11, .., a_nn)`.
pub fn grid(n: usize, size: usize) -> Result<DiscreteModel, ModelError> {
    let points: Vec<Vec<usize>> = all_tuples(size, n).collect();
    let names = points
        .iter()
        .map(|p| {
            format!(
                "({})",
                p.iter()
                    .map(|c| c.to_string())
                    .collect::<Vec<_>>()
                    .join(",")
            )
        })
        .collect();
    let mut m = DiscreteModel::empty(names)?;
    let total = points.len();
    for i in 0..n {
        let table = all_tuples(total, 2)
            .map(|t| points[t[0]][i] == points[t[1]][i])
            .collect();
        m.add_relation(&format!("E{}", i + 1), 2, table)?;
    }
    let table = all_tuples(total, n)
        .map(|args| {
            let diag: Vec<usize> = (0..n).map(|i| points[args[i]][i]).collect();
            tuple_index(size, &diag)
        })
        .collect();
    m.add_function("f", n, table)?;
    Ok(m)
}

/// A group in the signature `mul`, `inv`, `e` from its multiplication table.
pub fn group_from_table(
    names: Vec<String>,
    table: Vec<Vec<usize>>,
) -> Result<DiscreteModel, ModelError> {
    let n = names.len();
    if n == 0 {
        return Err(ModelError::EmptyUniverse);
    }
    if table.len() != n
        || table
            .iter()
            .any(|r| r.len() != n || r.iter().any(|&v| v >= n))
    {
        return Err(ModelError::PartialTable("mul".into()));
    }
    let e = (0..n)
        .find(|&e| (0..n).all(|a| table[e][a] == a && table[a][e] == a))
        .ok_or_else(|| ModelError::InconsistentTable("no identity element".into()))?;
    let mut inv = vec![0; n];
    for a in 0..n {
        inv[a] = (0..n)
            .find(|&b| table[a][b] == e && table[b][a] == e)
            .ok_or_else(|| ModelError::InconsistentTable(format!("{} has no inverse", names[a])))?;
    }
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                if table[table[a][b]][c] != table[a][table[b][c]] {
                    return Err(ModelError::InconsistentTable(format!(
                        "multiplication is not associative at ({}, {}, {})",
                        names[a], names[b], names[c]
                    )));
                }
            }
        }
    }
    let mut m = DiscreteModel::empty(names)?;
    m.add_function("mul", 2, table.concat())?;
    m.add_function("inv", 1, inv)?;
    m.add_constant("e", e)?;
    Ok(m)
}

/// `Z/n_1 × .. × Z/n_r` with elements named by their coordinate tuples.
pub fn cyclic_product(orders: &[usize]) -> Result<DiscreteModel, ModelError> {
    let mut elems: Vec<Vec<usize>> = vec![vec![]];
    for &o in orders {
        elems = elems
            .into_iter()
            .flat_map(|p| (0..o).map(move |c| [p.clone(), vec![c]].concat()))
            .collect();
    }
    let index = |t: &[usize]| t.iter().zip(orders).fold(0, |acc, (&c, &o)| acc * o + c);
    let table = elems
        .iter()
        .map(|a| {
            elems
                .iter()
                .map(|b| {
                    let s: Vec<usize> = a
                        .iter()
                        .zip(b)
                        .zip(orders)
                        .map(|((x, y), o)| (x + y) % o)
                        .collect();
                    index(&s)
                })
                .collect()
        })
        .collect();
    let names = elems
        .iter()
        .map(|p| {
            format!(
                "({})",
                p.iter()
                    .map(|c| c.to_string())
                    .collect::<Vec<_>>()
                    .join(",")
            )
        })
        .collect();
    group_from_table(names, table)
}

/// `(Z/p)^m`.
pub fn elementary_abelian(p: usize, m: usize) -> Result<DiscreteModel, ModelError> {
    cyclic_product(&vec![p; m])
}

/// Direct product of two groups built by [`group_from_table`].
pub fn direct_product(a: &DiscreteModel, b: &DiscreteModel) -> Result<DiscreteModel, ModelError> {
    let (na, nb) = (a.size(), b.size());
    let ma = a.functions.get("mul").ok_or(ModelError::NotAGroup)?;
    let mb = b.functions.get("mul").ok_or(ModelError::NotAGroup)?;
    let names = (0..na * nb)
        .map(|i| format!("{}x{}", a.names[i / nb], b.names[i % nb]))
        .collect();
    let table = (0..na * nb)
        .map(|i| {
            (0..na * nb)
                .map(|j| ma.table[(i / nb) * na + j / nb] * nb + mb.table[(i % nb) * nb + j % nb])
                .collect()
        })
        .collect();
    group_from_table(names, table)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kpartite_edges_cross_parts() {
        let g = kpartite(2, 3).unwrap();
        for a in 0..6 {
            for b in 0..6 {
                assert_eq!(g.holds("E", &[a, b]), Some(a / 3 != b / 3));
            }
        }
        let e = [Point::Element(0), Point::Element(4)];
        assert_eq!(g.predicate("E", &e).unwrap(), 0.0);
    }

    #[test]
    fn union_complete_edges_within_copies() {
        let g = union_complete(3, 4).unwrap();
        assert_eq!(g.holds("E", &[0, 3]), Some(true));
        assert_eq!(g.holds("E", &[0, 4]), Some(false));
        assert_eq!(g.holds("E", &[5, 5]), Some(false));
    }

    #[test]
    fn grid_diagonal() {
        let g = grid(2, 3).unwrap();
        let a = g.element_by_name("(1,2)").unwrap();
        let b = g.element_by_name("(0,1)").unwrap();
        let c = g.apply_fn("f", &[a, b]).unwrap();
        assert_eq!(g.element_name(c), "(1,1)");
        assert_eq!(
            g.holds("E1", &[a, g.element_by_name("(1,0)").unwrap()]),
            Some(true)
        );
    }

    #[test]
    fn groups() {
        let g = elementary_abelian(2, 3).unwrap();
        assert_eq!(g.size(), 8);
        let x = g.element_by_name("(1,0,1)").unwrap();
        assert_eq!(g.apply_fn("mul", &[x, x]), g.constants().get("e").copied());
        let c3 = cyclic_product(&[3]).unwrap();
        let p = direct_product(&elementary_abelian(2, 2).unwrap(), &c3).unwrap();
        assert_eq!(p.size(), 12);
        assert!(
            group_from_table(vec!["a".into(), "b".into()], vec![vec![0, 0], vec![0, 1]]).is_err()
        );
    }

    #[test]
    fn partial_tables_rejected() {
        let r = build_discrete(
            vec!["a".into(), "b".into()],
            vec![("R".into(), 2, vec![1, 0, 1])],
            vec![],
            vec![],
        );
        assert!(matches!(r, Err(ModelError::PartialTable(_))));
    }
}
