//! Terms and formulas, and their canonical text form.

use std::collections::BTreeSet;
use std::fmt;

use super::signature::{FuncSym, SortId};
use crate::scalar::{format_qcomplex, format_rational, Rational};

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Var {
    pub name: String,
    pub sort: SortId,
}

impl Var {
    pub fn new(name: impl Into<String>) -> Self {
        Var {
            name: name.into(),
            sort: 0,
        }
    }

    pub fn with_sort(name: impl Into<String>, sort: SortId) -> Self {
        Var {
            name: name.into(),
            sort,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Var(Var),
    Const(String),
    Apply(FuncSym, Vec<Term>),
}

impl Term {
    pub fn var(name: &str) -> Self {
        Term::Var(Var::new(name))
    }

    pub fn constant(name: &str) -> Self {
        Term::Const(name.to_string())
    }

    pub fn zero() -> Self {
        Term::Const("0".to_string())
    }

    pub fn apply(name: &str, args: Vec<Term>) -> Self {
        Term::Apply(FuncSym::named(name), args)
    }

    pub fn depth(&self) -> usize {
        match self {
            Term::Var(_) | Term::Const(_) => 0,
            Term::Apply(_, args) => 1 + args.iter().map(Term::depth).max().unwrap_or(0),
        }
    }

    pub fn size(&self) -> usize {
        match self {
            Term::Var(_) | Term::Const(_) => 1,
            Term::Apply(_, args) => 1 + args.iter().map(Term::size).sum::<usize>(),
        }
    }

    pub fn collect_vars(&self, out: &mut BTreeSet<Var>) {
        match self {
            Term::Var(v) => {
                out.insert(v.clone());
            }
            Term::Const(_) => {}
            Term::Apply(_, args) => args.iter().for_each(|a| a.collect_vars(out)),
        }
    }

    pub fn vars(&self) -> BTreeSet<Var> {
        let mut s = BTreeSet::new();
        self.collect_vars(&mut s);
        s
    }

    /// Replaces variables by name.
    pub fn substitute(&self, f: &dyn Fn(&Var) -> Option<Term>) -> Term {
        match self {
            Term::Var(v) => f(v).unwrap_or_else(|| self.clone()),
            Term::Const(_) => self.clone(),
            Term::Apply(g, args) => {
                Term::Apply(g.clone(), args.iter().map(|a| a.substitute(f)).collect())
            }
        }
    }
}

/// A continuous-logic formula over the fixed connective basis.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Formula {
    Metric(Term, Term),
    Pred(String, Vec<Term>),
    /// 0-ary connective.
    Const(Rational),
    /// `max(I) - x + min(I)` with `I` the child interval.
    Neg(Box<Formula>),
    /// Truncated subtraction `x ∸ r`.
    Sub(Box<Formula>, Rational),
    Min(Box<Formula>, Box<Formula>),
    Max(Box<Formula>, Box<Formula>),
    AbsDiff(Box<Formula>, Box<Formula>),
    Scale(Rational, Box<Formula>),
    AddC(Rational, Box<Formula>),
    /// `min(x + y, 1)`.
    CSum(Box<Formula>, Box<Formula>),
    Sup(Var, Box<Formula>),
    Inf(Var, Box<Formula>),
}

impl Formula {
    pub fn metric(a: Term, b: Term) -> Self {
        Formula::Metric(a, b)
    }

    pub fn pred(name: &str, args: Vec<Term>) -> Self {
        Formula::Pred(name.to_string(), args)
    }

    pub fn min(a: Formula, b: Formula) -> Self {
        Formula::Min(Box::new(a), Box::new(b))
    }

    pub fn max(a: Formula, b: Formula) -> Self {
        Formula::Max(Box::new(a), Box::new(b))
    }

    pub fn absdiff(a: Formula, b: Formula) -> Self {
        Formula::AbsDiff(Box::new(a), Box::new(b))
    }

    pub fn csum(a: Formula, b: Formula) -> Self {
        Formula::CSum(Box::new(a), Box::new(b))
    }

    pub fn scale(q: Rational, a: Formula) -> Self {
        Formula::Scale(q, Box::new(a))
    }

    pub fn addc(q: Rational, a: Formula) -> Self {
        Formula::AddC(q, Box::new(a))
    }

    pub fn sub(a: Formula, r: Rational) -> Self {
        Formula::Sub(Box::new(a), r)
    }

    pub fn sup(v: &str, body: Formula) -> Self {
        Formula::Sup(Var::new(v), Box::new(body))
    }

    pub fn inf(v: &str, body: Formula) -> Self {
        Formula::Inf(Var::new(v), Box::new(body))
    }

    /// `sup v1 . sup v2 . ... body`
    pub fn sup_all(vars: &[&str], body: Formula) -> Self {
        vars.iter().rev().fold(body, |acc, v| Formula::sup(v, acc))
    }

    pub fn inf_all(vars: &[&str], body: Formula) -> Self {
        vars.iter().rev().fold(body, |acc, v| Formula::inf(v, acc))
    }

    /// Maximum of a nonempty list, as a left-nested `max`.
    pub fn max_of(items: Vec<Formula>) -> Option<Self> {
        items.into_iter().reduce(Formula::max)
    }

    pub fn min_of(items: Vec<Formula>) -> Option<Self> {
        items.into_iter().reduce(Formula::min)
    }

    pub fn children(&self) -> Vec<&Formula> {
        match self {
            Formula::Metric(..) | Formula::Pred(..) | Formula::Const(_) => vec![],
            Formula::Neg(a)
            | Formula::Sub(a, _)
            | Formula::Scale(_, a)
            | Formula::AddC(_, a)
            | Formula::Sup(_, a)
            | Formula::Inf(_, a) => vec![a],
            Formula::Min(a, b)
            | Formula::Max(a, b)
            | Formula::AbsDiff(a, b)
            | Formula::CSum(a, b) => {
                vec![a, b]
            }
        }
    }

    pub fn free_vars(&self) -> BTreeSet<Var> {
        let mut out = BTreeSet::new();
        self.collect_free(&mut out);
        out
    }

    fn collect_free(&self, out: &mut BTreeSet<Var>) {
        match self {
            Formula::Metric(a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
            Formula::Pred(_, ts) => ts.iter().for_each(|t| t.collect_vars(out)),
            Formula::Sup(v, body) | Formula::Inf(v, body) => {
                let mut inner = BTreeSet::new();
                body.collect_free(&mut inner);
                inner.retain(|w| w.name != v.name);
                out.extend(inner);
            }
            _ => self
                .children()
                .into_iter()
                .for_each(|c| c.collect_free(out)),
        }
    }

    pub fn is_quantifier_free(&self) -> bool {
        match self {
            Formula::Sup(..) | Formula::Inf(..) => false,
            _ => self.children().iter().all(|c| c.is_quantifier_free()),
        }
    }

    pub fn is_sentence(&self) -> bool {
        self.free_vars().is_empty()
    }

    /// Substitutes terms for free variables (bound occurrences untouched).
    pub fn substitute(&self, f: &dyn Fn(&Var) -> Option<Term>) -> Formula {
        let sub = |t: &Term| t.substitute(f);
        match self {
            Formula::Metric(a, b) => Formula::Metric(sub(a), sub(b)),
            Formula::Pred(p, ts) => Formula::Pred(p.clone(), ts.iter().map(sub).collect()),
            Formula::Const(q) => Formula::Const(q.clone()),
            Formula::Neg(a) => Formula::Neg(Box::new(a.substitute(f))),
            Formula::Sub(a, r) => Formula::Sub(Box::new(a.substitute(f)), r.clone()),
            Formula::Min(a, b) => Formula::min(a.substitute(f), b.substitute(f)),
            Formula::Max(a, b) => Formula::max(a.substitute(f), b.substitute(f)),
            Formula::AbsDiff(a, b) => Formula::absdiff(a.substitute(f), b.substitute(f)),
            Formula::CSum(a, b) => Formula::csum(a.substitute(f), b.substitute(f)),
            Formula::Scale(q, a) => Formula::Scale(q.clone(), Box::new(a.substitute(f))),
            Formula::AddC(q, a) => Formula::AddC(q.clone(), Box::new(a.substitute(f))),
            Formula::Sup(v, body) | Formula::Inf(v, body) => {
                let bound = v.name.clone();
                let inner = move |w: &Var| if w.name == bound { None } else { f(w) };
                let body = Box::new(body.substitute(&inner));
                match self {
                    Formula::Sup(..) => Formula::Sup(v.clone(), body),
                    _ => Formula::Inf(v.clone(), body),
                }
            }
        }
    }

    pub fn size(&self) -> usize {
        1 + self.children().iter().map(|c| c.size()).sum::<usize>()
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.sort == 0 {
            write!(f, "{}", self.name)
        } else {
            write!(f, "{}:{}", self.name, self.sort)
        }
    }
}

impl fmt::Display for FuncSym {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FuncSym::Affine { alpha, beta } => {
                write!(f, "f[{},{}]", format_qcomplex(alpha), format_qcomplex(beta))
            }
            FuncSym::Named(n) => write!(f, "{n}"),
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var(v) => write!(f, "{v}"),
            Term::Const(c) => write!(f, "{c}"),
            Term::Apply(g, args) => {
                write!(f, "{g}(")?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{a}")?;
                }
                write!(f, ")")
            }
        }
    }
}

fn write_args(f: &mut fmt::Formatter<'_>, ts: &[Term]) -> fmt::Result {
    for (i, t) in ts.iter().enumerate() {
        if i > 0 {
            write!(f, ",")?;
        }
        write!(f, "{t}")?;
    }
    Ok(())
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formula::Metric(a, b) => write!(f, "d({a},{b})"),
            Formula::Pred(p, ts) => {
                write!(f, "{p}(")?;
                write_args(f, ts)?;
                write!(f, ")")
            }
            Formula::Const(q) => write!(f, "{}", format_rational(q)),
            Formula::Neg(a) => write!(f, "neg({a})"),
            Formula::Sub(a, r) => write!(f, "sub({a},{})", format_rational(r)),
            Formula::Min(a, b) => write!(f, "min({a},{b})"),
            Formula::Max(a, b) => write!(f, "max({a},{b})"),
            Formula::AbsDiff(a, b) => write!(f, "absdiff({a},{b})"),
            Formula::CSum(a, b) => write!(f, "csum({a},{b})"),
            Formula::Scale(q, a) => write!(f, "scale({},{a})", format_rational(q)),
            Formula::AddC(q, a) => write!(f, "addc({},{a})", format_rational(q)),
            Formula::Sup(v, a) => write!(f, "sup {v} . {a}"),
            Formula::Inf(v, a) => write!(f, "inf {v} . {a}"),
        }
    }
}
