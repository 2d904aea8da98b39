use std::collections::BTreeMap;
use std::fmt;

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::logic::signature::{FuncSym, Signature};
use crate::logic::structure::{Assignment, EvalError, Point, Vector};
use crate::logic::syntax::Term;
use crate::models::hilbert::{action_symbol, HilbertModel};
use crate::scalar::{
    format_qcomplex, norm_sqr_exact, parse_qcomplex, qcomplex_to_c64, qreal, Complex64, QComplex,
    Rational, Scalar,
};

/// The theory whose term algebra a normal form lives in.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TheoryTag {
    /// `Σ λ_i x_i + v`.
    Hilbert,
    /// `Σ_j α_j U^j x + v` per variable.
    Unitary,
    /// `α x + β P(x) + v` per variable.
    Projection,
    /// `Σ λ g x + v` over listed group elements.
    Group(GroupWords),
}

/// Element names and the (partial) multiplication table of a finite group.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroupWords {
    pub names: Vec<String>,
    pub table: Vec<Vec<Option<usize>>>,
    pub identity: Option<usize>,
}

impl TheoryTag {
    pub fn of(m: &HilbertModel) -> Self {
        use crate::models::hilbert::Expansion;
        match m.expansion() {
            None => TheoryTag::Hilbert,
            Some(Expansion::Unitary { .. }) => TheoryTag::Unitary,
            Some(Expansion::Projection { .. }) => TheoryTag::Projection,
            Some(Expansion::Group(g)) => TheoryTag::Group(GroupWords {
                names: g.names.clone(),
                table: g.table.clone(),
                identity: g.identity,
            }),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            TheoryTag::Hilbert => "hilbert",
            TheoryTag::Unitary => "unitary",
            TheoryTag::Projection => "projection",
            TheoryTag::Group(_) => "group",
        }
    }
}

/// The operator part of an atom.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum OpWord {
    Id,
    /// `U^j`, `j != 0`.
    Power(i64),
    Proj,
    /// Action of a listed group element other than the identity.
    Act(String),
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Base {
    Var(String),
    Const(String),
}

/// `op(base)`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Atom {
    pub base: Base,
    pub op: OpWord,
}

/// `Σ c · op(base)` with nonzero coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineNormalForm<S> {
    pub terms: BTreeMap<Atom, S>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum NormalizeError {
    #[error("symbol `{symbol}` does not belong to the {theory} signature")]
    ForeignSymbol {
        symbol: String,
        theory: &'static str,
    },
    #[error("product {0}·{1} is not in the listed group elements")]
    UnlistedProduct(String, String),
    #[error("coefficients of the normal form have total modulus above 1")]
    MassTooLarge,
    #[error("bad normal-form record: {0}")]
    Record(String),
}

impl fmt::Display for OpWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OpWord::Id => f.write_str("id"),
            OpWord::Power(j) => write!(f, "U^{j}"),
            OpWord::Proj => f.write_str("P"),
            OpWord::Act(g) => write!(f, "{}", action_symbol(g)),
        }
    }
}

impl OpWord {
    fn parse(text: &str) -> Option<Self> {
        match text {
            "id" => Some(OpWord::Id),
            "P" => Some(OpWord::Proj),
            _ => {
                if let Some(j) = text.strip_prefix("U^") {
                    j.parse().ok().filter(|j| *j != 0).map(OpWord::Power)
                } else {
                    text.strip_prefix('g')
                        .filter(|g| !g.is_empty())
                        .map(|g| OpWord::Act(g.to_string()))
                }
            }
        }
    }
}

impl<S: Scalar> Default for AffineNormalForm<S> {
    fn default() -> Self {
        AffineNormalForm {
            terms: BTreeMap::new(),
        }
    }
}

impl<S: Scalar> AffineNormalForm<S> {
    pub fn atom(atom: Atom) -> Self {
        let mut terms = BTreeMap::new();
        terms.insert(atom, S::one());
        AffineNormalForm { terms }
    }

    pub fn var(name: &str) -> Self {
        Self::atom(Atom {
            base: Base::Var(name.to_string()),
            op: OpWord::Id,
        })
    }

    /// `self + c * other`, dropping zero coefficients.
    pub fn add_scaled(&mut self, other: &Self, c: &S) {
        for (a, v) in &other.terms {
            let entry = self.terms.entry(a.clone()).or_insert_with(S::zero);
            *entry = entry.clone() + c.clone() * v.clone();
            if entry.is_zero() {
                self.terms.remove(a);
            }
        }
    }

    pub fn scaled(&self, c: &S) -> Self {
        let mut out = Self::default();
        out.add_scaled(self, c);
        out
    }

    /// Coefficient of `op(x)` for variable `x`.
    pub fn coefficient(&self, var: &str, op: &OpWord) -> S {
        self.terms
            .get(&Atom {
                base: Base::Var(var.to_string()),
                op: op.clone(),
            })
            .cloned()
            .unwrap_or_else(S::zero)
    }

    /// The part built from constants, i.e. the value at all-zero variables.
    pub fn constant_part(&self) -> Self {
        AffineNormalForm {
            terms: self
                .terms
                .iter()
                .filter(|(a, _)| matches!(a.base, Base::Const(_)))
                .map(|(a, c)| (a.clone(), c.clone()))
                .collect(),
        }
    }

    pub fn variables(&self) -> Vec<String> {
        let mut out: Vec<String> = self
            .terms
            .keys()
            .filter_map(|a| match &a.base {
                Base::Var(v) => Some(v.clone()),
                Base::Const(_) => None,
            })
            .collect();
        out.dedup();
        out
    }

    /// Sum of coefficient moduli.
    pub fn l1_mass(&self) -> f64 {
        self.terms.values().map(|c| c.modulus()).sum()
    }

    /// Sum of coefficient moduli over the atoms of one variable.
    pub fn var_mass(&self, var: &str) -> f64 {
        self.terms
            .iter()
            .filter(|(a, _)| a.base == Base::Var(var.to_string()))
            .map(|(_, c)| c.modulus())
            .sum()
    }

    /// Value in a Hilbert model at an assignment of its variables.
    pub fn eval(&self, m: &HilbertModel, env: &Assignment) -> Result<Vector, EvalError> {
        let mut out = Vector::zeros(m.dim());
        for (atom, c) in &self.terms {
            let base = match &atom.base {
                Base::Var(v) => match env.get(v) {
                    Some(Point::Vector(x)) => x.clone(),
                    Some(_) => return Err(EvalError::WrongPoint(v.clone())),
                    None => return Err(EvalError::MissingVariable(v.clone())),
                },
                Base::Const(k) => m
                    .constant_vector(k)
                    .ok_or_else(|| EvalError::UnknownSymbol(k.clone()))?,
            };
            let v = apply_op(m, &atom.op, &base)?;
            out += v * c.to_complex64();
        }
        Ok(out)
    }
}

/// `op(x)` in a Hilbert model.
pub fn apply_op(m: &HilbertModel, op: &OpWord, x: &Vector) -> Result<Vector, EvalError> {
    let r = match op {
        OpWord::Id => Some(x.clone()),
        OpWord::Power(j) => m.unitary_power(*j, x),
        OpWord::Proj => m.project(x),
        OpWord::Act(g) => m.act(g, x),
    };
    r.ok_or_else(|| EvalError::UnknownSymbol(op.to_string()))
}

pub type ExactNormalForm = AffineNormalForm<QComplex>;

fn foreign(symbol: &str, tag: &TheoryTag) -> NormalizeError {
    NormalizeError::ForeignSymbol {
        symbol: symbol.to_string(),
        theory: tag.name(),
    }
}

fn map_ops(
    nf: ExactNormalForm,
    f: &dyn Fn(&OpWord) -> Result<Option<OpWord>, NormalizeError>,
) -> Result<ExactNormalForm, NormalizeError> {
    let mut out = ExactNormalForm::default();
    for (atom, c) in nf.terms {
        if let Some(op) = f(&atom.op)? {
            let single = ExactNormalForm::atom(Atom {
                base: atom.base,
                op,
            });
            out.add_scaled(&single, &c);
        }
    }
    Ok(out)
}

/// Normal form of a term by structural recursion:
/// `f[a,b](t1, t2) -> a N(t1) + b N(t2)`, `U` shifts Laurent exponents,
/// `P` maps `x` and `P x` to `P x`, and `g` composes group words.
pub fn normalize_term(t: &Term, tag: &TheoryTag) -> Result<ExactNormalForm, NormalizeError> {
    match t {
        Term::Var(v) => Ok(ExactNormalForm::var(&v.name)),
        Term::Const(c) if c == "0" => Ok(ExactNormalForm::default()),
        Term::Const(c) => Ok(ExactNormalForm::atom(Atom {
            base: Base::Const(c.clone()),
            op: OpWord::Id,
        })),
        Term::Apply(FuncSym::Affine { alpha, beta }, args) => {
            let mut out = normalize_term(&args[0], tag)?.scaled(alpha);
            out.add_scaled(&normalize_term(&args[1], tag)?, beta);
            Ok(out)
        }
        Term::Apply(FuncSym::Named(name), args) => {
            let inner = normalize_term(&args[0], tag)?;
            match (name.as_str(), tag) {
                ("U" | "Uinv", TheoryTag::Unitary) => {
                    let step = if name == "U" { 1 } else { -1 };
                    map_ops(inner, &|op| {
                        let j = match op {
                            OpWord::Id => 0,
                            OpWord::Power(j) => *j,
                            _ => unreachable!("unitary forms only hold powers"),
                        } + step;
                        Ok(Some(if j == 0 { OpWord::Id } else { OpWord::Power(j) }))
                    })
                }
                ("P", TheoryTag::Projection) => map_ops(inner, &|_| Ok(Some(OpWord::Proj))),
                (_, TheoryTag::Group(words)) if name.starts_with('g') => {
                    let g = words
                        .names
                        .iter()
                        .position(|n| *n == name[1..])
                        .ok_or_else(|| foreign(name, tag))?;
                    map_ops(inner, &|op| {
                        let h = match op {
                            OpWord::Id => match words.identity {
                                Some(e) => e,
                                None => return Ok(Some(OpWord::Act(words.names[g].clone()))),
                            },
                            OpWord::Act(h) => words
                                .names
                                .iter()
                                .position(|n| n == h)
                                .expect("listed element"),
                            _ => unreachable!("group forms only hold actions"),
                        };
                        let p = words.table[g][h].ok_or_else(|| {
                            NormalizeError::UnlistedProduct(
                                words.names[g].clone(),
                                words.names[h].clone(),
                            )
                        })?;
                        Ok(Some(if Some(p) == words.identity {
                            OpWord::Id
                        } else {
                            OpWord::Act(words.names[p].clone())
                        }))
                    })
                }
                _ => Err(foreign(name, tag)),
            }
        }
    }
}

fn base_term(base: &Base) -> Term {
    match base {
        Base::Var(v) => Term::var(v),
        Base::Const(c) => Term::constant(c),
    }
}

/// `op(base)` as a term.
pub fn atom_term(atom: &Atom) -> Term {
    let b = base_term(&atom.base);
    match &atom.op {
        OpWord::Id => b,
        OpWord::Power(j) => {
            let f = if *j > 0 { "U" } else { "Uinv" };
            (0..j.unsigned_abs()).fold(b, |t, _| Term::apply(f, vec![t]))
        }
        OpWord::Proj => Term::apply("P", vec![b]),
        OpWord::Act(g) => Term::apply(&action_symbol(g), vec![b]),
    }
}

fn rational_sqrt(q: &Rational) -> Option<Rational> {
    let n = q.numer().sqrt();
    let d = q.denom().sqrt();
    (&n * &n == *q.numer() && &d * &d == *q.denom()).then(|| Rational::new(n, d))
}

/// A rational `m >= |c|`, exact when `|c|` is rational, else within `2^-bits`.
fn modulus_upper(c: &QComplex, bits: u32) -> Rational {
    let sq = norm_sqr_exact(c);
    if let Some(r) = rational_sqrt(&sq) {
        return r;
    }
    let scale = Rational::from_integer(num_bigint::BigInt::one() << bits);
    let approx = (qcomplex_to_c64(c).norm() * 2f64.powi(bits as i32)).ceil();
    let mut m = Rational::from_integer(num_bigint::BigInt::from(approx as i128)) / &scale;
    let step = Rational::one() / &scale;
    while &m * &m < sq {
        m += &step;
    }
    m
}

/// Rational bounds `m_i >= |c_i|` with `Σ m_i <= 1`, or `None` when the
/// total modulus exceeds 1.
fn mass_bounds(coeffs: &[&QComplex]) -> Option<Vec<Rational>> {
    for bits in (16..=256).step_by(16) {
        let ms: Vec<Rational> = coeffs.iter().map(|c| modulus_upper(c, bits)).collect();
        let total: Rational = ms.iter().cloned().sum();
        if total <= Rational::one() {
            return Some(ms);
        }
    }
    None
}

impl ExactNormalForm {
    /// The same form over another scalar; `None` if a coefficient does not fit.
    pub fn convert<T: Scalar>(&self) -> Option<AffineNormalForm<T>> {
        let mut terms = BTreeMap::new();
        for (a, c) in &self.terms {
            terms.insert(a.clone(), T::from_exact(c)?);
        }
        Some(AffineNormalForm { terms })
    }

    /// True when the coefficient moduli sum to at most 1, decided exactly.
    pub fn mass_at_most_one(&self) -> bool {
        mass_bounds(&self.terms.values().collect::<Vec<_>>()).is_some()
    }

    /// A term of the signature with this normal form: `f[c1,0](a1,0)` for one
    /// atom, and `f[c1, s](a1, R)` with `R` realizing the rest divided by `s`
    /// otherwise.
    pub fn realize(&self, sig: &Signature) -> Result<Term, NormalizeError> {
        let items: Vec<(&Atom, &QComplex)> = self.terms.iter().collect();
        if items.is_empty() {
            return Ok(Term::zero());
        }
        let bounds = mass_bounds(&items.iter().map(|(_, c)| *c).collect::<Vec<_>>())
            .ok_or(NormalizeError::MassTooLarge)?;
        realize_chain(&items, &bounds, &Rational::one(), sig)
    }
}

/// Realizes `Σ (c_i / scale) a_i` where `Σ bounds_i <= |scale|`.
fn realize_chain(
    items: &[(&Atom, &QComplex)],
    bounds: &[Rational],
    scale: &Rational,
    sig: &Signature,
) -> Result<Term, NormalizeError> {
    let (atom, c) = items[0];
    let c = c / qreal(scale.clone());
    let a = atom_term(atom);
    let affine = |alpha: QComplex, beta: QComplex| {
        sig.affine_symbol(alpha, beta)
            .map_err(|e| NormalizeError::Record(e.to_string()))
    };
    if items.len() == 1 {
        if c.is_one() {
            return Ok(a);
        }
        return Ok(Term::Apply(
            affine(c, QComplex::zero())?,
            vec![a, Term::zero()],
        ));
    }
    let rest: Rational = bounds[1..].iter().cloned().sum();
    let r = realize_chain(&items[1..], &bounds[1..], &rest, sig)?;
    let beta = qreal(rest / scale);
    Ok(Term::Apply(affine(c, beta)?, vec![a, r]))
}

/// Serialized normal form; coefficients are exact decimal or `p/q` strings.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NormalFormRecord {
    pub terms: Vec<AtomRecord>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AtomRecord {
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub var: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub constant: Option<String>,
    pub op: String,
    pub coefficient: String,
}

impl ExactNormalForm {
    pub fn to_record(&self) -> NormalFormRecord {
        NormalFormRecord {
            terms: self
                .terms
                .iter()
                .map(|(a, c)| {
                    let (var, constant) = match &a.base {
                        Base::Var(v) => (Some(v.clone()), None),
                        Base::Const(k) => (None, Some(k.clone())),
                    };
                    AtomRecord {
                        var,
                        constant,
                        op: a.op.to_string(),
                        coefficient: format_qcomplex(c),
                    }
                })
                .collect(),
        }
    }

    pub fn from_record(r: &NormalFormRecord) -> Result<Self, NormalizeError> {
        let mut out = ExactNormalForm::default();
        for t in &r.terms {
            let base = match (&t.var, &t.constant) {
                (Some(v), None) => Base::Var(v.clone()),
                (None, Some(k)) => Base::Const(k.clone()),
                _ => {
                    return Err(NormalizeError::Record(
                        "atom needs exactly one of `var` and `constant`".into(),
                    ))
                }
            };
            let op = OpWord::parse(&t.op)
                .ok_or_else(|| NormalizeError::Record(format!("bad op `{}`", t.op)))?;
            let c = parse_qcomplex(&t.coefficient).ok_or_else(|| {
                NormalizeError::Record(format!("bad coefficient `{}`", t.coefficient))
            })?;
            out.add_scaled(&ExactNormalForm::atom(Atom { base, op }), &c);
        }
        Ok(out)
    }
}

impl fmt::Display for ExactNormalForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        let parts: Vec<String> = self
            .terms
            .iter()
            .map(|(a, c)| {
                let b = match &a.base {
                    Base::Var(v) | Base::Const(v) => v.as_str(),
                };
                let atom = match &a.op {
                    OpWord::Id => b.to_string(),
                    op => format!("{op}({b})"),
                };
                format!("({})·{atom}", format_qcomplex(c))
            })
            .collect();
        f.write_str(&parts.join(" + "))
    }
}

/// Coefficient of a one-variable Hilbert normal form as `(λ, v)`, with `v`
/// evaluated in the model.
pub fn lambda_and_offset(
    nf: &ExactNormalForm,
    var: &str,
    m: &HilbertModel,
) -> Result<(Complex64, Vector), EvalError> {
    let lambda = qcomplex_to_c64(&nf.coefficient(var, &OpWord::Id));
    let v = nf.constant_part().eval(m, &Assignment::new())?;
    Ok((lambda, v))
}
