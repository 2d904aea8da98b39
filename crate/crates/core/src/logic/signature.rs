use std::collections::BTreeMap;

use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use super::interval::Interval;
use crate::scalar::{affine_pair_admissible, format_qcomplex, QComplex, Rational};

pub type SortId = usize;

/// Scalar field of a Hilbert-type sort.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Field {
    Real,
    Complex,
}

impl Field {
    /// Real dimension contributed by one coordinate.
    pub fn real_factor(self) -> usize {
        match self {
            Field::Real => 1,
            Field::Complex => 2,
        }
    }
}

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum SignatureError {
    #[error("sort `{0}` must have a positive metric bound")]
    NonPositiveBound(String),
    #[error("predicate `{0}` has an empty value interval")]
    BadInterval(String),
    #[error("symbol `{0}` has a negative or non-finite Lipschitz constant")]
    BadLipschitz(String),
    #[error("symbol `{0}` declares {1} Lipschitz constants for {2} arguments")]
    LipschitzArity(String, usize, usize),
    #[error("symbol `{0}` is declared twice")]
    Duplicate(String),
    #[error("unknown sort index {0}")]
    UnknownSort(SortId),
    #[error("affine symbol f[{0},{1}] violates |a|+|b| <= 1")]
    Inadmissible(String, String),
    #[error("complex coefficient {0} in a real signature")]
    ComplexCoefficient(String),
    #[error("signature has no affine function family")]
    NoAffineFamily,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SortDecl {
    pub name: String,
    pub metric_bound: Rational,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FuncDecl {
    pub name: String,
    pub inputs: Vec<SortId>,
    pub output: SortId,
    pub lipschitz: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PredDecl {
    pub name: String,
    pub inputs: Vec<SortId>,
    pub interval: Interval<Rational>,
    pub lipschitz: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConstDecl {
    pub name: String,
    pub sort: SortId,
}

/// The parameterised family `f[a,b](x, y) = a x + b y` on one sort.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineFamily {
    pub sort: SortId,
    pub field: Field,
}

/// A function symbol occurring in a term.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum FuncSym {
    Affine { alpha: QComplex, beta: QComplex },
    Named(String),
}

impl FuncSym {
    fn key(&self) -> (u8, [&Rational; 4], &str) {
        match self {
            FuncSym::Affine { alpha, beta } => (0, [&alpha.re, &alpha.im, &beta.re, &beta.im], ""),
            FuncSym::Named(n) => (1, [&ZERO, &ZERO, &ZERO, &ZERO], n),
        }
    }

    pub fn named(name: impl Into<String>) -> Self {
        FuncSym::Named(name.into())
    }

    pub fn arity(&self, sig: &Signature) -> Option<usize> {
        match self {
            FuncSym::Affine { .. } => Some(2),
            FuncSym::Named(n) => sig.function(n).map(|d| d.inputs.len()),
        }
    }
}

static ZERO: std::sync::LazyLock<Rational> = std::sync::LazyLock::new(Rational::default);

impl PartialOrd for FuncSym {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for FuncSym {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.key().cmp(&other.key())
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Signature {
    sorts: Vec<SortDecl>,
    functions: BTreeMap<String, FuncDecl>,
    predicates: BTreeMap<String, PredDecl>,
    constants: BTreeMap<String, ConstDecl>,
    aliases: BTreeMap<String, String>,
    affine: Option<AffineFamily>,
}

impl Signature {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_sort(
        &mut self,
        name: &str,
        metric_bound: Rational,
    ) -> Result<SortId, SignatureError> {
        if !metric_bound.is_positive() {
            return Err(SignatureError::NonPositiveBound(name.to_string()));
        }
        if self.sorts.iter().any(|s| s.name == name) {
            return Err(SignatureError::Duplicate(name.to_string()));
        }
        self.sorts.push(SortDecl {
            name: name.to_string(),
            metric_bound,
        });
        Ok(self.sorts.len() - 1)
    }

    fn check_sorts(&self, sorts: &[SortId]) -> Result<(), SignatureError> {
        match sorts.iter().find(|&&s| s >= self.sorts.len()) {
            Some(&s) => Err(SignatureError::UnknownSort(s)),
            None => Ok(()),
        }
    }

    fn check_fresh(&self, name: &str) -> Result<(), SignatureError> {
        if self.functions.contains_key(name)
            || self.predicates.contains_key(name)
            || self.constants.contains_key(name)
        {
            return Err(SignatureError::Duplicate(name.to_string()));
        }
        Ok(())
    }

    fn check_lipschitz(name: &str, lip: &[f64], arity: usize) -> Result<(), SignatureError> {
        if lip.len() != arity {
            return Err(SignatureError::LipschitzArity(
                name.to_string(),
                lip.len(),
                arity,
            ));
        }
        if lip.iter().any(|l| !l.is_finite() || *l < 0.0) {
            return Err(SignatureError::BadLipschitz(name.to_string()));
        }
        Ok(())
    }

    pub fn add_function(
        &mut self,
        name: &str,
        inputs: Vec<SortId>,
        output: SortId,
        lipschitz: Vec<f64>,
    ) -> Result<(), SignatureError> {
        self.check_fresh(name)?;
        self.check_sorts(&inputs)?;
        self.check_sorts(&[output])?;
        Self::check_lipschitz(name, &lipschitz, inputs.len())?;
        self.functions.insert(
            name.to_string(),
            FuncDecl {
                name: name.to_string(),
                inputs,
                output,
                lipschitz,
            },
        );
        Ok(())
    }

    pub fn add_predicate(
        &mut self,
        name: &str,
        inputs: Vec<SortId>,
        interval: Interval<Rational>,
        lipschitz: Vec<f64>,
    ) -> Result<(), SignatureError> {
        self.check_fresh(name)?;
        self.check_sorts(&inputs)?;
        Self::check_lipschitz(name, &lipschitz, inputs.len())?;
        if interval.lo() > interval.hi() {
            return Err(SignatureError::BadInterval(name.to_string()));
        }
        self.predicates.insert(
            name.to_string(),
            PredDecl {
                name: name.to_string(),
                inputs,
                interval,
                lipschitz,
            },
        );
        Ok(())
    }

    pub fn add_constant(&mut self, name: &str, sort: SortId) -> Result<(), SignatureError> {
        self.check_fresh(name)?;
        self.check_sorts(&[sort])?;
        self.constants.insert(
            name.to_string(),
            ConstDecl {
                name: name.to_string(),
                sort,
            },
        );
        Ok(())
    }

    /// Registers `alias` as another spelling of predicate `target`.
    pub fn add_predicate_alias(&mut self, alias: &str, target: &str) {
        self.aliases.insert(alias.to_string(), target.to_string());
    }

    pub fn set_affine_family(&mut self, sort: SortId, field: Field) -> Result<(), SignatureError> {
        self.check_sorts(&[sort])?;
        self.affine = Some(AffineFamily { sort, field });
        Ok(())
    }

    pub fn affine_family(&self) -> Option<&AffineFamily> {
        self.affine.as_ref()
    }

    /// Builds `f[alpha,beta]`, rejecting pairs with `|alpha|+|beta| > 1` and
    /// complex coefficients over a real field.
    pub fn affine_symbol(
        &self,
        alpha: QComplex,
        beta: QComplex,
    ) -> Result<FuncSym, SignatureError> {
        let fam = self.affine.as_ref().ok_or(SignatureError::NoAffineFamily)?;
        if fam.field == Field::Real {
            for c in [&alpha, &beta] {
                if !c.im.is_zero() {
                    return Err(SignatureError::ComplexCoefficient(format_qcomplex(c)));
                }
            }
        }
        if !affine_pair_admissible(&alpha, &beta) {
            return Err(SignatureError::Inadmissible(
                format_qcomplex(&alpha),
                format_qcomplex(&beta),
            ));
        }
        Ok(FuncSym::Affine { alpha, beta })
    }

    pub fn sorts(&self) -> &[SortDecl] {
        &self.sorts
    }

    pub fn sort(&self, id: SortId) -> Option<&SortDecl> {
        self.sorts.get(id)
    }

    pub fn sort_by_name(&self, name: &str) -> Option<SortId> {
        self.sorts.iter().position(|s| s.name == name)
    }

    pub fn function(&self, name: &str) -> Option<&FuncDecl> {
        self.functions.get(name)
    }

    pub fn functions(&self) -> impl Iterator<Item = &FuncDecl> {
        self.functions.values()
    }

    pub fn predicate(&self, name: &str) -> Option<&PredDecl> {
        let key = self.aliases.get(name).map(String::as_str).unwrap_or(name);
        self.predicates.get(key)
    }

    /// Canonical spelling of a predicate name (resolving aliases).
    pub fn canonical_predicate<'a>(&'a self, name: &'a str) -> &'a str {
        self.aliases.get(name).map(String::as_str).unwrap_or(name)
    }

    pub fn predicates(&self) -> impl Iterator<Item = &PredDecl> {
        self.predicates.values()
    }

    pub fn constant(&self, name: &str) -> Option<&ConstDecl> {
        self.constants.get(name)
    }

    pub fn constants(&self) -> impl Iterator<Item = &ConstDecl> {
        self.constants.values()
    }

    /// Input sorts, output sort and per-argument Lipschitz constants of a symbol.
    pub fn profile(&self, f: &FuncSym) -> Option<(Vec<SortId>, SortId, Vec<f64>)> {
        match f {
            FuncSym::Affine { alpha, beta } => {
                let fam = self.affine.as_ref()?;
                let lip = vec![
                    crate::scalar::qcomplex_to_c64(alpha).norm(),
                    crate::scalar::qcomplex_to_c64(beta).norm(),
                ];
                Some((vec![fam.sort, fam.sort], fam.sort, lip))
            }
            FuncSym::Named(n) => {
                let d = self.functions.get(n)?;
                Some((d.inputs.clone(), d.output, d.lipschitz.clone()))
            }
        }
    }

    /// True when every symbol of `other` also occurs in `self` with the same shape.
    pub fn extends(&self, other: &Signature) -> bool {
        other
            .functions
            .iter()
            .all(|(k, v)| self.functions.get(k) == Some(v))
            && other
                .predicates
                .iter()
                .all(|(k, v)| self.predicates.get(k) == Some(v))
            && other
                .constants
                .iter()
                .all(|(k, v)| self.constants.get(k) == Some(v))
            && (other.affine.is_none() || self.affine == other.affine)
    }
}
