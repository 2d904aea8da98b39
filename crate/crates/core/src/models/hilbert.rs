//! Unit balls of finite-dimensional Hilbert spaces, optionally expanded by a
//! diagonal unitary, a coordinate projection or a finite group of unitaries.

use std::collections::BTreeMap;

use nalgebra::DMatrix;

use super::ModelError;
use crate::logic::interval::Interval;
use crate::logic::signature::{Field, FuncSym, Signature, SortId};
use crate::logic::structure::{EvalError, Point, Structure, Universe, Vector};
use crate::scalar::{qcomplex_to_c64, rat, Complex64};

const UNIT_TOL: f64 = 1e-9;

pub type Matrix = DMatrix<Complex64>;

/// A finite set of named unitaries with the partial multiplication table they
/// induce.
#[derive(Debug, Clone)]
pub struct GroupAction {
    pub names: Vec<String>,
    pub matrices: Vec<Matrix>,
    /// `table[a][b]` is the index of `a·b` when it is listed.
    pub table: Vec<Vec<Option<usize>>>,
    pub identity: Option<usize>,
    pub inverse: Vec<Option<usize>>,
}

impl GroupAction {
    pub fn index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }
}

#[derive(Debug, Clone)]
pub enum Expansion {
    /// `U = diag(eigenvalues)` in the standard basis.
    Unitary {
        eigenvalues: Vec<Complex64>,
    },
    /// Orthogonal projection onto the first `rank` basis vectors.
    Projection {
        rank: usize,
    },
    Group(GroupAction),
}

#[derive(Debug, Clone)]
pub struct HilbertModel {
    sig: Signature,
    dim: usize,
    field: Field,
    constants: BTreeMap<String, Vector>,
    expansion: Option<Expansion>,
}

pub const BALL: SortId = 0;

/// Symbol naming the action of group element `name`.
pub fn action_symbol(name: &str) -> String {
    format!("g{name}")
}

pub fn build_hilbert(
    dim: usize,
    field: Field,
    constants: Vec<(String, Vector)>,
) -> Result<HilbertModel, ModelError> {
    if dim == 0 {
        return Err(ModelError::ZeroDimension);
    }
    let mut sig = Signature::new();
    let b = sig.add_sort("B", rat(2, 1))?;
    sig.set_affine_family(b, field)?;
    sig.add_constant("0", b)?;
    let unit = Interval::new(rat(-1, 1), rat(1, 1)).expect("ordered");
    sig.add_predicate("ip", vec![b, b], unit.clone(), vec![1.0, 1.0])?;
    sig.add_predicate_alias("rip", "ip");
    if field == Field::Complex {
        sig.add_predicate("iip", vec![b, b], unit, vec![1.0, 1.0])?;
    }
    let mut store = BTreeMap::new();
    for (name, v) in constants {
        if v.len() != dim {
            return Err(ModelError::ConstantDimension(name, v.len(), dim));
        }
        if field == Field::Real && v.iter().any(|z| z.im != 0.0) {
            return Err(ModelError::ComplexInRealModel(name));
        }
        let n = v.norm();
        if n > 1.0 + UNIT_TOL {
            return Err(ModelError::ConstantOutsideBall(name, n));
        }
        sig.add_constant(&name, b)?;
        store.insert(name, v);
    }
    Ok(HilbertModel {
        sig,
        dim,
        field,
        constants: store,
        expansion: None,
    })
}

fn is_unitary(m: &Matrix) -> bool {
    let n = m.nrows();
    let p = m.adjoint() * m;
    (0..n).all(|i| {
        (0..n).all(|j| {
            let target = if i == j {
                Complex64::new(1.0, 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            };
            (p[(i, j)] - target).norm() <= UNIT_TOL
        })
    })
}

fn close(a: &Matrix, b: &Matrix) -> bool {
    a.iter()
        .zip(b.iter())
        .all(|(x, y)| (x - y).norm() <= UNIT_TOL)
}

/// Adds `U` and its inverse `Uinv`, diagonal in the standard basis.
pub fn expand_unitary(
    mut m: HilbertModel,
    eigenvalues: Vec<Complex64>,
) -> Result<HilbertModel, ModelError> {
    if m.expansion.is_some() {
        return Err(ModelError::AlreadyExpanded);
    }
    if m.field != Field::Complex {
        return Err(ModelError::RequiresComplex);
    }
    if eigenvalues.len() != m.dim {
        return Err(ModelError::EigenvalueCount {
            expected: m.dim,
            found: eigenvalues.len(),
        });
    }
    if let Some((i, w)) = eigenvalues
        .iter()
        .enumerate()
        .find(|(_, w)| (w.norm() - 1.0).abs() > UNIT_TOL)
    {
        return Err(ModelError::NotUnimodular(i, w.norm()));
    }
    m.sig.add_function("U", vec![BALL], BALL, vec![1.0])?;
    m.sig.add_function("Uinv", vec![BALL], BALL, vec![1.0])?;
    m.expansion = Some(Expansion::Unitary { eigenvalues });
    Ok(m)
}

pub fn expand_projection(mut m: HilbertModel, rank: usize) -> Result<HilbertModel, ModelError> {
    if m.expansion.is_some() {
        return Err(ModelError::AlreadyExpanded);
    }
    if rank == 0 || rank >= m.dim {
        return Err(ModelError::RankOutOfRange { rank, dim: m.dim });
    }
    m.sig.add_function("P", vec![BALL], BALL, vec![1.0])?;
    m.expansion = Some(Expansion::Projection { rank });
    Ok(m)
}

/// Adds `g<name>` for every listed element. When `table` is given it must
/// agree with the matrix products; otherwise products are matched against the
/// listed matrices and unmatched products are left undefined.
pub fn expand_group_action(
    mut m: HilbertModel,
    elements: Vec<(String, Matrix)>,
    table: Option<Vec<Vec<usize>>>,
) -> Result<HilbertModel, ModelError> {
    if m.expansion.is_some() {
        return Err(ModelError::AlreadyExpanded);
    }
    let k = elements.len();
    for (name, mat) in &elements {
        if mat.nrows() != m.dim || mat.ncols() != m.dim {
            return Err(ModelError::MatrixShape(name.clone()));
        }
        if m.field == Field::Real && mat.iter().any(|z| z.im != 0.0) {
            return Err(ModelError::ComplexInRealModel(name.clone()));
        }
        if !is_unitary(mat) {
            return Err(ModelError::NotUnitary(name.clone()));
        }
    }
    let (names, matrices): (Vec<String>, Vec<Matrix>) = elements.into_iter().unzip();
    let mut derived = vec![vec![None; k]; k];
    for a in 0..k {
        for b in 0..k {
            let p = &matrices[a] * &matrices[b];
            derived[a][b] = (0..k).find(|&c| close(&matrices[c], &p));
        }
    }
    if let Some(t) = &table {
        if t.len() != k || t.iter().any(|row| row.len() != k) {
            return Err(ModelError::InconsistentTable(
                "table is not square over the listed elements".into(),
            ));
        }
        for a in 0..k {
            for b in 0..k {
                let c = t[a][b];
                if c >= k || !close(&matrices[c], &(&matrices[a] * &matrices[b])) {
                    return Err(ModelError::InconsistentTable(format!(
                        "{}·{} listed as {} but the matrices disagree",
                        names[a],
                        names[b],
                        names.get(c).map(String::as_str).unwrap_or("?")
                    )));
                }
                derived[a][b] = Some(c);
            }
        }
    }
    let id = Matrix::identity(m.dim, m.dim);
    let identity = (0..k).find(|&c| close(&matrices[c], &id));
    let inverse = (0..k)
        .map(|a| identity.and_then(|e| (0..k).find(|&b| derived[a][b] == Some(e))))
        .collect();
    for name in &names {
        m.sig
            .add_function(&action_symbol(name), vec![BALL], BALL, vec![1.0])?;
    }
    m.expansion = Some(Expansion::Group(GroupAction {
        names,
        matrices,
        table: derived,
        identity,
        inverse,
    }));
    Ok(m)
}

/// Standard basis vector `e_k` (zero-based).
pub fn basis_vector(dim: usize, k: usize) -> Vector {
    let mut v = Vector::zeros(dim);
    v[k] = Complex64::new(1.0, 0.0);
    v
}

/// `<x, y>`, linear in the first argument.
pub fn inner(x: &Vector, y: &Vector) -> Complex64 {
    y.dotc(x)
}

impl HilbertModel {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn field(&self) -> Field {
        self.field
    }

    pub fn expansion(&self) -> Option<&Expansion> {
        self.expansion.as_ref()
    }

    pub fn constants(&self) -> &BTreeMap<String, Vector> {
        &self.constants
    }

    pub fn constant_vector(&self, name: &str) -> Option<Vector> {
        if name == "0" {
            return Some(Vector::zeros(self.dim));
        }
        self.constants.get(name).cloned()
    }

    pub fn eigenvalues(&self) -> Option<&[Complex64]> {
        match &self.expansion {
            Some(Expansion::Unitary { eigenvalues }) => Some(eigenvalues),
            _ => None,
        }
    }

    pub fn rank(&self) -> Option<usize> {
        match &self.expansion {
            Some(Expansion::Projection { rank }) => Some(*rank),
            _ => None,
        }
    }

    pub fn group(&self) -> Option<&GroupAction> {
        match &self.expansion {
            Some(Expansion::Group(g)) => Some(g),
            _ => None,
        }
    }

    /// `U^j x` for any integer `j`.
    pub fn unitary_power(&self, j: i64, x: &Vector) -> Option<Vector> {
        let ev = self.eigenvalues()?;
        Some(Vector::from_fn(self.dim, |i, _| {
            let w = if j >= 0 { ev[i] } else { ev[i].conj() };
            w.powu(j.unsigned_abs() as u32) * x[i]
        }))
    }

    pub fn project(&self, x: &Vector) -> Option<Vector> {
        let r = self.rank()?;
        Some(Vector::from_fn(self.dim, |i, _| {
            if i < r {
                x[i]
            } else {
                Complex64::new(0.0, 0.0)
            }
        }))
    }

    pub fn act(&self, element: &str, x: &Vector) -> Option<Vector> {
        let g = self.group()?;
        let i = g.index(element)?;
        Some(&g.matrices[i] * x)
    }

    fn vector<'p>(&self, p: &'p Point, symbol: &str) -> Result<&'p Vector, EvalError> {
        match p {
            Point::Vector(v) if v.len() == self.dim => Ok(v),
            _ => Err(EvalError::WrongPoint(symbol.to_string())),
        }
    }

    fn unary(&self, name: &str, x: &Vector) -> Option<Vector> {
        match name {
            "U" => self.unitary_power(1, x),
            "Uinv" => self.unitary_power(-1, x),
            "P" => self.project(x),
            _ => name.strip_prefix('g').and_then(|g| self.act(g, x)),
        }
    }
}

impl Structure for HilbertModel {
    fn signature(&self) -> &Signature {
        &self.sig
    }

    fn universe(&self, _sort: SortId) -> Universe {
        Universe::Ball {
            dim: self.dim,
            field: self.field,
        }
    }

    fn distance(&self, a: &Point, b: &Point) -> f64 {
        match (a, b) {
            (Point::Vector(x), Point::Vector(y)) => (x - y).norm(),
            _ => f64::NAN,
        }
    }

    fn constant(&self, name: &str) -> Result<Point, EvalError> {
        self.constant_vector(name)
            .map(Point::Vector)
            .ok_or_else(|| EvalError::UnknownSymbol(name.to_string()))
    }

    fn apply(&self, f: &FuncSym, args: &[Point]) -> Result<Point, EvalError> {
        match f {
            FuncSym::Affine { alpha, beta } => {
                if args.len() != 2 {
                    return Err(EvalError::Arity(f.to_string(), args.len()));
                }
                let x = self.vector(&args[0], "f")?;
                let y = self.vector(&args[1], "f")?;
                let (a, b) = (qcomplex_to_c64(alpha), qcomplex_to_c64(beta));
                Ok(Point::Vector(x * a + y * b))
            }
            FuncSym::Named(name) => {
                if args.len() != 1 {
                    return Err(EvalError::Arity(name.clone(), args.len()));
                }
                let x = self.vector(&args[0], name)?;
                self.unary(name, x)
                    .map(Point::Vector)
                    .ok_or_else(|| EvalError::UnknownSymbol(name.clone()))
            }
        }
    }

    fn predicate(&self, name: &str, args: &[Point]) -> Result<f64, EvalError> {
        if args.len() != 2 {
            return Err(EvalError::Arity(name.to_string(), args.len()));
        }
        let x = self.vector(&args[0], name)?;
        let y = self.vector(&args[1], name)?;
        match self.sig.canonical_predicate(name) {
            "ip" => Ok(inner(x, y).re),
            "iip" if self.field == Field::Complex => Ok(inner(x, y).im),
            _ => Err(EvalError::UnknownSymbol(name.to_string())),
        }
    }

    fn seed_points(&self, _sort: SortId) -> Vec<Point> {
        let mut out = vec![Point::Vector(Vector::zeros(self.dim))];
        let units: &[Complex64] = match self.field {
            Field::Real => &[Complex64::new(1.0, 0.0), Complex64::new(-1.0, 0.0)],
            Field::Complex => &[
                Complex64::new(1.0, 0.0),
                Complex64::new(-1.0, 0.0),
                Complex64::new(0.0, 1.0),
                Complex64::new(0.0, -1.0),
            ],
        };
        for k in 0..self.dim {
            for u in units {
                out.push(Point::Vector(basis_vector(self.dim, k) * *u));
            }
        }
        out.extend(self.constants.values().cloned().map(Point::Vector));
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::eval::{eval_formula, eval_term, EvalBudget, Mode};
    use crate::logic::parse::{parse_formula, parse_term};
    use crate::logic::structure::Assignment;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn env(pairs: &[(&str, Vector)]) -> Assignment {
        pairs
            .iter()
            .map(|(k, v)| (k.to_string(), Point::Vector(v.clone())))
            .collect()
    }

    #[test]
    fn orthogonal_basis_and_affine_maps() {
        let m = build_hilbert(2, Field::Real, vec![]).unwrap();
        let e1 = basis_vector(2, 0);
        let e2 = basis_vector(2, 1);
        let phi = parse_formula("ip(x,y)", m.signature()).unwrap();
        let e = eval_formula(
            &m,
            &phi,
            &env(&[("x", e1.clone()), ("y", e2.clone())]),
            &EvalBudget::default(),
        )
        .unwrap();
        assert_eq!((e.lo, e.hi, e.mode), (0.0, 0.0, Mode::Exact));
        let t = parse_term("f[0.5,0.5](x,y)", m.signature()).unwrap();
        let v = eval_term(&m, &t, &env(&[("x", e1), ("y", e2)])).unwrap();
        assert!((v.as_vector().unwrap().norm() - 0.5f64.sqrt()).abs() < 1e-12);
        assert!(parse_term("f[0.6,0.5](x,y)", m.signature()).is_err());
    }

    #[test]
    fn rejects_constant_outside_ball() {
        let v = Vector::from_element(2, Complex64::new(0.8, 0.0));
        assert!(matches!(
            build_hilbert(2, Field::Real, vec![("v0".into(), v)]),
            Err(ModelError::ConstantOutsideBall(..))
        ));
    }

    #[test]
    fn unitary_inverse_and_isometry() {
        let m = build_hilbert(2, Field::Complex, vec![]).unwrap();
        let i = Complex64::new(0.0, 1.0);
        let m = expand_unitary(m, vec![i, -i]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..50 {
            let x = crate::logic::sampling::uniform_ball(2, Field::Complex, &mut rng);
            let y = crate::logic::sampling::uniform_ball(2, Field::Complex, &mut rng);
            let back = m
                .unitary_power(1, &m.unitary_power(-1, &x).unwrap())
                .unwrap();
            assert!((back - &x).norm() < 1e-12);
            let ux = m.unitary_power(1, &x).unwrap();
            let uy = m.unitary_power(1, &y).unwrap();
            assert!((inner(&ux, &uy) - inner(&x, &y)).norm() < 1e-9);
        }
        let bad = build_hilbert(2, Field::Complex, vec![]).unwrap();
        assert!(matches!(
            expand_unitary(bad, vec![Complex64::new(0.5, 0.0), i]),
            Err(ModelError::NotUnimodular(0, _))
        ));
    }

    #[test]
    fn projection_is_idempotent_and_self_adjoint() {
        let m = expand_projection(build_hilbert(4, Field::Real, vec![]).unwrap(), 2).unwrap();
        for a in 0..4 {
            for b in 0..4 {
                let (x, y) = (basis_vector(4, a), basis_vector(4, b));
                let px = m.project(&x).unwrap();
                assert!((m.project(&px).unwrap() - &px).norm() <= 1e-12);
                assert!((inner(&px, &y) - inner(&x, &m.project(&y).unwrap())).norm() <= 1e-12);
            }
        }
        let m = build_hilbert(4, Field::Real, vec![]).unwrap();
        assert!(matches!(
            expand_projection(m, 4),
            Err(ModelError::RankOutOfRange { .. })
        ));
    }

    #[test]
    fn group_of_order_two() {
        let one = Complex64::new(1.0, 0.0);
        let tau = Matrix::from_diagonal(&Vector::from_vec(vec![one, -one]));
        let m = build_hilbert(2, Field::Real, vec![]).unwrap();
        let m = expand_group_action(
            m,
            vec![("e".into(), Matrix::identity(2, 2)), ("s".into(), tau)],
            None,
        )
        .unwrap();
        let g = m.group().unwrap();
        assert_eq!(g.table[1][1], Some(0));
        assert_eq!(g.inverse, vec![Some(0), Some(1)]);
        let x = Vector::from_vec(vec![Complex64::new(0.3, 0.0), Complex64::new(-0.4, 0.0)]);
        assert!((m.act("s", &m.act("s", &x).unwrap()).unwrap() - &x).norm() == 0.0);
        let bad = Matrix::from_diagonal(&Vector::from_vec(vec![one, one * 0.5]));
        let m = build_hilbert(2, Field::Real, vec![]).unwrap();
        assert!(matches!(
            expand_group_action(m, vec![("a".into(), bad)], None),
            Err(ModelError::NotUnitary(_))
        ));
    }
}
