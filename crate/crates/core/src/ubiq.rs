//! Finite classical structures: partition witnesses, ultrahomogeneity by
//! automorphism extension, partition expansions and equivariant maps.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::logic::eval::eval_term;
use crate::logic::structure::{Assignment, Point};
use crate::logic::syntax::{Term, Var};
use crate::models::discrete::{all_tuples, tuple_index, DiscreteModel};
use crate::models::ModelError;
use crate::normalizer::{enumerate_terms, EnumerateError, EnumerationBudget};

pub type FiniteStructure = DiscreteModel;

/// Largest universe accepted by [`check_ultrahomogeneous`].
pub const MAX_ULTRA_SIZE: usize = 12;
/// Largest tuple length accepted by [`check_ultrahomogeneous`].
pub const MAX_ULTRA_TUPLE: usize = 4;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum UbiqError {
    #[error("malformed partition: {0}")]
    Partition(String),
    #[error("budget exceeded: {0}")]
    Budget(String),
    #[error("function table has {found} entries, expected {expected}")]
    TableSize { expected: usize, found: usize },
    #[error("function value {0} outside the universe")]
    ValueOutOfRange(usize),
    #[error("function is not equivariant at {args:?} under {automorphism:?}")]
    NotEquivariant {
        args: Vec<usize>,
        automorphism: Vec<usize>,
    },
    #[error("no candidate term agrees with the function at {0:?}")]
    Uncovered(Vec<usize>),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Enumerate(#[from] EnumerateError),
}

/// A symbol whose table a permutation fails to preserve, at `tuple`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub symbol: String,
    pub tuple: Vec<usize>,
}

/// Images of every symbol table under `perm` are compared with the originals;
/// the first mismatch in symbol-name order is returned.
pub fn violation(m: &FiniteStructure, perm: &[usize]) -> Option<Violation> {
    let n = m.size();
    for (name, &c) in m.constants() {
        if perm[c] != c {
            return Some(Violation {
                symbol: name.clone(),
                tuple: vec![],
            });
        }
    }
    for (name, r) in m.relations() {
        for t in all_tuples(n, r.arity) {
            let image: Vec<usize> = t.iter().map(|&a| perm[a]).collect();
            if r.table[tuple_index(n, &t)] != r.table[tuple_index(n, &image)] {
                return Some(Violation {
                    symbol: name.clone(),
                    tuple: t,
                });
            }
        }
    }
    for (name, f) in m.functions() {
        for t in all_tuples(n, f.arity) {
            let image: Vec<usize> = t.iter().map(|&a| perm[a]).collect();
            if perm[f.table[tuple_index(n, &t)]] != f.table[tuple_index(n, &image)] {
                return Some(Violation {
                    symbol: name.clone(),
                    tuple: t,
                });
            }
        }
    }
    None
}

pub fn is_automorphism(m: &FiniteStructure, perm: &[usize]) -> bool {
    violation(m, perm).is_none()
}

/// Result of checking that `Sym(X_1) × … × Sym(X_n)` acts by automorphisms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionWitness {
    pub blocks: Vec<Vec<usize>>,
    pub holds: bool,
    /// First adjacent transposition within a block that is not an automorphism.
    pub transposition: Option<(usize, usize)>,
    pub violation: Option<Violation>,
}

fn validate_partition(n: usize, blocks: &[Vec<usize>]) -> Result<(), UbiqError> {
    let mut seen = vec![false; n];
    for b in blocks {
        if b.is_empty() {
            return Err(UbiqError::Partition("empty block".into()));
        }
        for &a in b {
            if a >= n {
                return Err(UbiqError::Partition(format!(
                    "element {a} outside the universe"
                )));
            }
            if std::mem::replace(&mut seen[a], true) {
                return Err(UbiqError::Partition(format!("element {a} appears twice")));
            }
        }
    }
    match seen.iter().position(|s| !s) {
        Some(a) => Err(UbiqError::Partition(format!("element {a} is in no block"))),
        None => Ok(()),
    }
}

fn transposition(n: usize, a: usize, b: usize) -> Vec<usize> {
    let mut p: Vec<usize> = (0..n).collect();
    p.swap(a, b);
    p
}

/// Checks the generators `(x_i x_{i+1})` of each block's symmetric group.
pub fn check_finitely_partitioned(
    m: &FiniteStructure,
    blocks: &[Vec<usize>],
) -> Result<PartitionWitness, UbiqError> {
    let n = m.size();
    validate_partition(n, blocks)?;
    for b in blocks {
        for w in b.windows(2) {
            if let Some(v) = violation(m, &transposition(n, w[0], w[1])) {
                return Ok(PartitionWitness {
                    blocks: blocks.to_vec(),
                    holds: false,
                    transposition: Some((w[0], w[1])),
                    violation: Some(v),
                });
            }
        }
    }
    Ok(PartitionWitness {
        blocks: blocks.to_vec(),
        holds: true,
        transposition: None,
        violation: None,
    })
}

/// Adds unary relations `R1, …, Rn` for the blocks.
pub fn expand_partition(
    m: &FiniteStructure,
    blocks: &[Vec<usize>],
) -> Result<FiniteStructure, UbiqError> {
    validate_partition(m.size(), blocks)?;
    let mut out = m.clone();
    for (i, b) in blocks.iter().enumerate() {
        let mut table = vec![false; m.size()];
        for &a in b {
            table[a] = true;
        }
        out.add_relation(&format!("R{}", i + 1), 1, table)?;
    }
    Ok(out)
}

/// Backtracking search for an automorphism extending `partial`.
pub fn extend_to_automorphism(
    m: &FiniteStructure,
    partial: &[(usize, usize)],
) -> Option<Vec<usize>> {
    let n = m.size();
    let mut map = vec![usize::MAX; n];
    let mut used = vec![false; n];
    for &(a, b) in partial {
        if map[a] != usize::MAX && map[a] != b || map[a] == usize::MAX && used[b] {
            return None;
        }
        map[a] = b;
        used[b] = true;
    }
    for &c in m.constants().values() {
        if map[c] != usize::MAX && map[c] != c || map[c] == usize::MAX && used[c] {
            return None;
        }
        map[c] = c;
        used[c] = true;
    }
    let order: Vec<usize> = (0..n).filter(|&a| map[a] == usize::MAX).collect();
    if !consistent(m, &map) {
        return None;
    }
    search(m, &order, &mut map, &mut used).then_some(map)
}

fn search(m: &FiniteStructure, order: &[usize], map: &mut [usize], used: &mut [bool]) -> bool {
    let Some((&a, rest)) = order.split_first() else {
        return is_automorphism(m, map);
    };
    for b in 0..m.size() {
        if used[b] {
            continue;
        }
        map[a] = b;
        used[b] = true;
        if consistent(m, map) && search(m, rest, map, used) {
            return true;
        }
        used[b] = false;
    }
    map[a] = usize::MAX;
    false
}

/// Whether the assigned part of `map` respects every table on which it is defined.
fn consistent(m: &FiniteStructure, map: &[usize]) -> bool {
    let n = m.size();
    let defined: Vec<usize> = (0..n).filter(|&a| map[a] != usize::MAX).collect();
    let k = defined.len();
    for r in m.relations().values() {
        for idx in all_tuples(k, r.arity) {
            let t: Vec<usize> = idx.iter().map(|&i| defined[i]).collect();
            let image: Vec<usize> = t.iter().map(|&a| map[a]).collect();
            if r.table[tuple_index(n, &t)] != r.table[tuple_index(n, &image)] {
                return false;
            }
        }
    }
    for f in m.functions().values() {
        for idx in all_tuples(k, f.arity) {
            let t: Vec<usize> = idx.iter().map(|&i| defined[i]).collect();
            let v = f.table[tuple_index(n, &t)];
            let image: Vec<usize> = t.iter().map(|&a| map[a]).collect();
            if map[v] != usize::MAX && map[v] != f.table[tuple_index(n, &image)] {
                return false;
            }
        }
    }
    true
}

/// A transversal-based generating set of `Aut(M)`: for each prefix of the
/// universe fixed pointwise, one automorphism moving the next point to each
/// reachable image.
pub fn automorphism_generators(m: &FiniteStructure) -> Vec<Vec<usize>> {
    let n = m.size();
    let mut gens = Vec::new();
    for i in 0..n {
        let fixed: Vec<(usize, usize)> = (0..i).map(|a| (a, a)).collect();
        for b in i + 1..n {
            let mut partial = fixed.clone();
            partial.push((i, b));
            if let Some(p) = extend_to_automorphism(m, &partial) {
                gens.push(p);
            }
        }
    }
    gens
}

/// Canonical description of the substructure generated by a tuple: the
/// equality pattern of the tuple, the closure under constants and functions
/// in generation order, and every relation restricted to that closure.
fn generated_type(m: &FiniteStructure, tuple: &[usize]) -> Vec<usize> {
    let n = m.size();
    let mut elems: Vec<usize> = Vec::new();
    let mut pos = vec![usize::MAX; n];
    let mut key = Vec::new();
    let push = |a: usize, elems: &mut Vec<usize>, pos: &mut Vec<usize>| {
        if pos[a] == usize::MAX {
            pos[a] = elems.len();
            elems.push(a);
        }
        pos[a]
    };
    for &c in m.constants().values() {
        key.push(push(c, &mut elems, &mut pos));
    }
    for &a in tuple {
        key.push(push(a, &mut elems, &mut pos));
    }
    let mut done = 0;
    while done < elems.len() {
        done = elems.len();
        for f in m.functions().values() {
            for idx in all_tuples(done, f.arity) {
                let args: Vec<usize> = idx.iter().map(|&i| elems[i]).collect();
                let v = f.table[tuple_index(n, &args)];
                key.push(push(v, &mut elems, &mut pos));
            }
        }
    }
    let k = elems.len();
    for r in m.relations().values() {
        for idx in all_tuples(k, r.arity) {
            let t: Vec<usize> = idx.iter().map(|&i| elems[i]).collect();
            key.push(r.table[tuple_index(n, &t)] as usize);
        }
    }
    key
}

/// Outcome of the extension search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UltraReport {
    pub max_size: usize,
    pub ultrahomogeneous: bool,
    /// Tuples examined, all lengths together.
    pub tuples: usize,
    /// Partial isomorphisms `ā ↦ b̄` with no extension to an automorphism.
    pub failures: Vec<(Vec<usize>, Vec<usize>)>,
}

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn find(&mut self, a: usize) -> usize {
        let mut r = a;
        while self.0[r] != r {
            r = self.0[r];
        }
        let mut a = a;
        while self.0[a] != r {
            let next = self.0[a];
            self.0[a] = r;
            a = next;
        }
        r
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.0[ra.max(rb)] = ra.min(rb);
        }
    }
}

fn distinct_tuples(n: usize, k: usize) -> Vec<Vec<usize>> {
    all_tuples(n, k)
        .filter(|t| t.iter().enumerate().all(|(i, a)| !t[..i].contains(a)))
        .collect()
}

/// Every isomorphism between substructures generated by at most `max_size`
/// elements must extend to an automorphism. Tuples of each length are grouped
/// by the isomorphism type of what they generate; within a group each tuple
/// must lie in the automorphism orbit of the group's first tuple.
pub fn check_ultrahomogeneous(
    m: &FiniteStructure,
    max_size: usize,
) -> Result<UltraReport, UbiqError> {
    let n = m.size();
    if n > MAX_ULTRA_SIZE {
        return Err(UbiqError::Budget(format!(
            "universe of size {n} exceeds {MAX_ULTRA_SIZE}"
        )));
    }
    if max_size > MAX_ULTRA_TUPLE {
        return Err(UbiqError::Budget(format!(
            "tuple length {max_size} exceeds {MAX_ULTRA_TUPLE}"
        )));
    }
    let mut report = UltraReport {
        max_size,
        ultrahomogeneous: true,
        tuples: 0,
        failures: Vec::new(),
    };
    for k in 1..=max_size.min(n) {
        let tuples = distinct_tuples(n, k);
        report.tuples += tuples.len();
        let index: HashMap<Vec<usize>, usize> = tuples
            .iter()
            .cloned()
            .enumerate()
            .map(|(i, t)| (t, i))
            .collect();
        let mut classes: BTreeMap<Vec<usize>, Vec<usize>> = BTreeMap::new();
        for (i, t) in tuples.iter().enumerate() {
            classes.entry(generated_type(m, t)).or_default().push(i);
        }
        let mut orbits = UnionFind((0..tuples.len()).collect());
        for members in classes.values() {
            let rep = members[0];
            for &j in &members[1..] {
                if orbits.find(rep) == orbits.find(j) {
                    continue;
                }
                let partial: Vec<(usize, usize)> = tuples[rep]
                    .iter()
                    .copied()
                    .zip(tuples[j].iter().copied())
                    .collect();
                match extend_to_automorphism(m, &partial) {
                    Some(sigma) => {
                        for (i, t) in tuples.iter().enumerate() {
                            let image: Vec<usize> = t.iter().map(|&a| sigma[a]).collect();
                            orbits.union(i, index[&image]);
                        }
                    }
                    None => {
                        report.ultrahomogeneous = false;
                        report
                            .failures
                            .push((tuples[rep].clone(), tuples[j].clone()));
                    }
                }
            }
        }
    }
    Ok(report)
}

/// Terms in `x1, …, xn` whose pieces jointly reproduce a function table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquivariantCover {
    pub arity: usize,
    pub terms: Vec<String>,
    /// For each argument tuple in row-major order, the index of the first
    /// chosen term agreeing with the function there.
    pub pieces: Vec<usize>,
    pub generators: usize,
}

/// Checks `f(σā) = σf(ā)` for a generating set of automorphisms, then covers
/// `f` greedily by projections and constants, or by terms up to `depth` when
/// the signature has function symbols.
pub fn classify_equivariant_function(
    m: &FiniteStructure,
    arity: usize,
    table: &[usize],
    depth: usize,
) -> Result<EquivariantCover, UbiqError> {
    let n = m.size();
    let expected = n.pow(arity as u32);
    if table.len() != expected {
        return Err(UbiqError::TableSize {
            expected,
            found: table.len(),
        });
    }
    if let Some(&v) = table.iter().find(|&&v| v >= n) {
        return Err(UbiqError::ValueOutOfRange(v));
    }
    let gens = automorphism_generators(m);
    for sigma in &gens {
        for t in all_tuples(n, arity) {
            let image: Vec<usize> = t.iter().map(|&a| sigma[a]).collect();
            if table[tuple_index(n, &image)] != sigma[table[tuple_index(n, &t)]] {
                return Err(UbiqError::NotEquivariant {
                    args: t,
                    automorphism: sigma.clone(),
                });
            }
        }
    }
    let vars: Vec<Var> = (1..=arity).map(|i| Var::new(format!("x{i}"))).collect();
    let depth = if m.functions().is_empty() { 0 } else { depth };
    let budget = EnumerationBudget {
        depth,
        ..Default::default()
    };
    let terms = enumerate_terms(m, &vars, &budget)?;
    let tuples: Vec<Vec<usize>> = all_tuples(n, arity).collect();
    let values: Vec<Vec<usize>> = terms
        .iter()
        .map(|t| term_values(m, t, &vars, &tuples))
        .collect();
    let hits = |j: usize, i: usize| values[j][i] == table[i];
    if let Some(i) = (0..tuples.len()).find(|&i| !(0..terms.len()).any(|j| hits(j, i))) {
        return Err(UbiqError::Uncovered(tuples[i].clone()));
    }
    let mut covered = vec![false; tuples.len()];
    let mut chosen: Vec<usize> = Vec::new();
    while covered.iter().any(|c| !c) {
        let gain = |j: usize| {
            (0..tuples.len())
                .filter(|&i| !covered[i] && hits(j, i))
                .count()
        };
        let best = (0..terms.len())
            .max_by(|&a, &b| gain(a).cmp(&gain(b)).then(b.cmp(&a)))
            .expect("terms exist");
        for (i, c) in covered.iter_mut().enumerate() {
            *c |= hits(best, i);
        }
        chosen.push(best);
    }
    chosen.sort_unstable();
    let pieces = (0..tuples.len())
        .map(|i| chosen.iter().position(|&j| hits(j, i)).expect("covered"))
        .collect();
    Ok(EquivariantCover {
        arity,
        terms: chosen.iter().map(|&j| terms[j].to_string()).collect(),
        pieces,
        generators: gens.len(),
    })
}

fn term_values(m: &FiniteStructure, t: &Term, vars: &[Var], tuples: &[Vec<usize>]) -> Vec<usize> {
    tuples
        .iter()
        .map(|tuple| {
            let env: Assignment = vars
                .iter()
                .zip(tuple)
                .map(|(v, &a)| (v.name.clone(), Point::Element(a)))
                .collect();
            eval_term(m, t, &env)
                .ok()
                .and_then(|p| p.as_element())
                .unwrap_or(usize::MAX)
        })
        .collect()
}
