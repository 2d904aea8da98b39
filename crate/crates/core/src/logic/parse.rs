//! Recursive-descent parser for the text grammar.
//!
//! ```text
//! term    := "0" | "f[" coeff "," coeff "](" term "," term ")"
//!          | NAME "(" term {"," term} ")" | NAME [":" SORT]
//! formula := "sup" VAR "." formula | "inf" VAR "." formula | NUMBER
//!          | "d(" term "," term ")" | PRED "(" term {"," term} ")"
//!          | "neg(" formula ")" | "sub(" formula "," NUMBER ")"
//!          | ("min"|"max"|"absdiff"|"csum") "(" formula "," formula ")"
//!          | ("scale"|"addc") "(" NUMBER "," formula ")"
//! ```

use std::collections::HashMap;

use super::signature::{FuncSym, Signature, SignatureError, SortId};
use super::syntax::{Formula, Term, Var};
use crate::scalar::{parse_qcomplex, parse_rational, Rational};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ParseErrorKind {
    #[error("syntax error: {0}")]
    Syntax(String),
    #[error("unknown symbol `{0}`")]
    UnknownSymbol(String),
    #[error("`{0}` is not a connective of the basis")]
    NotInBasis(String),
    #[error("sort mismatch: expected `{expected}`, found `{found}`")]
    SortMismatch { expected: String, found: String },
    #[error("`{symbol}` takes {expected} arguments, got {found}")]
    Arity {
        symbol: String,
        expected: usize,
        found: usize,
    },
    #[error(transparent)]
    Signature(#[from] SignatureError),
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("at byte {position}: {kind}")]
pub struct ParseError {
    pub position: usize,
    pub kind: ParseErrorKind,
}

const KEYWORDS: &[&str] = &[
    "d", "neg", "sub", "min", "max", "absdiff", "csum", "scale", "addc", "sup", "inf",
];

pub fn parse_term(text: &str, sig: &Signature) -> Result<Term, ParseError> {
    let mut p = Parser::new(text, sig);
    let t = p.term(None)?;
    p.finish()?;
    Ok(t)
}

pub fn parse_formula(text: &str, sig: &Signature) -> Result<Formula, ParseError> {
    let mut p = Parser::new(text, sig);
    let f = p.formula()?;
    p.finish()?;
    Ok(f)
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
    sig: &'a Signature,
    scope: Vec<(String, SortId)>,
    free: HashMap<String, SortId>,
}

impl<'a> Parser<'a> {
    fn new(src: &'a str, sig: &'a Signature) -> Self {
        Parser {
            src,
            pos: 0,
            sig,
            scope: Vec::new(),
            free: HashMap::new(),
        }
    }

    fn err<T>(&self, at: usize, kind: ParseErrorKind) -> Result<T, ParseError> {
        Err(ParseError { position: at, kind })
    }

    fn syntax<T>(&self, msg: impl Into<String>) -> Result<T, ParseError> {
        self.err(self.pos, ParseErrorKind::Syntax(msg.into()))
    }

    fn rest(&self) -> &'a str {
        &self.src[self.pos..]
    }

    fn skip_ws(&mut self) {
        let trimmed = self.rest().trim_start();
        self.pos = self.src.len() - trimmed.len();
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.rest().chars().next()
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(c) {
            self.pos += c.len_utf8();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: char) -> Result<(), ParseError> {
        if self.eat(c) {
            Ok(())
        } else {
            match self.peek() {
                Some(found) => self.syntax(format!("expected `{c}`, found `{found}`")),
                None => self.syntax(format!("expected `{c}`, found end of input")),
            }
        }
    }

    fn finish(&mut self) -> Result<(), ParseError> {
        match self.peek() {
            None => Ok(()),
            Some(c) => self.syntax(format!("unexpected trailing `{c}`")),
        }
    }

    fn ident(&mut self) -> Option<(usize, &'a str)> {
        self.skip_ws();
        let start = self.pos;
        let rest = self.rest();
        let mut end = 0;
        for (i, c) in rest.char_indices() {
            let ok = if i == 0 {
                c.is_ascii_alphabetic() || c == '_'
            } else {
                c.is_ascii_alphanumeric() || c == '_'
            };
            if !ok {
                break;
            }
            end = i + c.len_utf8();
        }
        if end == 0 {
            return None;
        }
        self.pos += end;
        Some((start, &self.src[start..start + end]))
    }

    fn number_text(&mut self) -> Option<(usize, &'a str)> {
        self.skip_ws();
        let start = self.pos;
        let bytes = self.rest().as_bytes();
        let mut i = 0;
        if i < bytes.len() && (bytes[i] == b'-' || bytes[i] == b'+') {
            i += 1;
        }
        let digits_start = i;
        while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
            i += 1;
        }
        if i == digits_start {
            return None;
        }
        if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
            let mut j = i + 1;
            if j < bytes.len() && (bytes[j] == b'-' || bytes[j] == b'+') {
                j += 1;
            }
            if j < bytes.len() && bytes[j].is_ascii_digit() {
                while j < bytes.len() && bytes[j].is_ascii_digit() {
                    j += 1;
                }
                i = j;
            }
        }
        if i < bytes.len() && bytes[i] == b'/' {
            let mut j = i + 1;
            while j < bytes.len() && bytes[j].is_ascii_digit() {
                j += 1;
            }
            if j > i + 1 {
                i = j;
            }
        }
        self.pos += i;
        Some((start, &self.src[start..start + i]))
    }

    fn rational(&mut self) -> Result<Rational, ParseError> {
        match self.number_text() {
            Some((at, text)) => match parse_rational(text) {
                Some(q) => Ok(q),
                None => self.err(at, ParseErrorKind::Syntax(format!("bad number `{text}`"))),
            },
            None => self.syntax("expected a number"),
        }
    }

    fn sort_name(&self, s: SortId) -> String {
        self.sig
            .sort(s)
            .map(|d| d.name.clone())
            .unwrap_or_else(|| s.to_string())
    }

    fn check_sort(
        &self,
        at: usize,
        expected: Option<SortId>,
        found: SortId,
    ) -> Result<(), ParseError> {
        match expected {
            Some(e) if e != found => self.err(
                at,
                ParseErrorKind::SortMismatch {
                    expected: self.sort_name(e),
                    found: self.sort_name(found),
                },
            ),
            _ => Ok(()),
        }
    }

    fn sort_annotation(&mut self) -> Result<Option<SortId>, ParseError> {
        if !self.eat(':') {
            return Ok(None);
        }
        self.skip_ws();
        let at = self.pos;
        if let Some((_, digits)) = self.number_text() {
            return match digits.parse::<usize>() {
                Ok(k) if self.sig.sort(k).is_some() => Ok(Some(k)),
                _ => self.err(at, ParseErrorKind::UnknownSymbol(digits.to_string())),
            };
        }
        match self.ident() {
            Some((at, name)) => match self.sig.sort_by_name(name) {
                Some(k) => Ok(Some(k)),
                None => self.err(at, ParseErrorKind::UnknownSymbol(name.to_string())),
            },
            None => self.syntax("expected a sort after `:`"),
        }
    }

    /// Parses a term; returns it with its sort.
    fn term(&mut self, expected: Option<SortId>) -> Result<Term, ParseError> {
        self.term_sorted(expected).map(|(t, _)| t)
    }

    fn term_sorted(&mut self, expected: Option<SortId>) -> Result<(Term, SortId), ParseError> {
        self.skip_ws();
        let at = self.pos;
        if self.rest().starts_with('0') {
            let (_, text) = self.number_text().expect("digit present");
            if text != "0" {
                return self.err(
                    at,
                    ParseErrorKind::Syntax(format!("`{text}` is not a term")),
                );
            }
            let decl = match self.sig.constant("0") {
                Some(d) => d,
                None => return self.err(at, ParseErrorKind::UnknownSymbol("0".into())),
            };
            self.check_sort(at, expected, decl.sort)?;
            return Ok((Term::Const("0".into()), decl.sort));
        }
        let (at, name) = match self.ident() {
            Some(x) => x,
            None => return self.syntax("expected a term"),
        };
        if name == "f" && self.peek() == Some('[') {
            return self.affine(at, expected);
        }
        if self.peek() == Some('(') {
            let decl = match self.sig.function(name) {
                Some(d) => d.clone(),
                None => return self.err(at, ParseErrorKind::UnknownSymbol(name.to_string())),
            };
            self.expect('(')?;
            let mut args = Vec::new();
            for (i, s) in decl.inputs.iter().enumerate() {
                if i > 0 {
                    if self.peek() == Some(')') {
                        return self.err(
                            at,
                            ParseErrorKind::Arity {
                                symbol: name.into(),
                                expected: decl.inputs.len(),
                                found: i,
                            },
                        );
                    }
                    self.expect(',')?;
                }
                args.push(self.term(Some(*s))?);
            }
            if self.peek() == Some(',') {
                let mut extra = decl.inputs.len();
                while self.eat(',') {
                    self.term(None)?;
                    extra += 1;
                }
                return self.err(
                    at,
                    ParseErrorKind::Arity {
                        symbol: name.into(),
                        expected: decl.inputs.len(),
                        found: extra,
                    },
                );
            }
            self.expect(')')?;
            self.check_sort(at, expected, decl.output)?;
            return Ok((
                Term::Apply(FuncSym::Named(name.to_string()), args),
                decl.output,
            ));
        }
        if let Some(c) = self.sig.constant(name) {
            self.check_sort(at, expected, c.sort)?;
            return Ok((Term::Const(name.to_string()), c.sort));
        }
        if KEYWORDS.contains(&name) {
            return self.err(at, ParseErrorKind::Syntax(format!("`{name}` is reserved")));
        }
        let annotated = self.sort_annotation()?;
        let bound = self
            .scope
            .iter()
            .rev()
            .find(|(n, _)| n == name)
            .map(|(_, s)| *s);
        let sort = match (bound, annotated) {
            (Some(b), Some(a)) if a != b => {
                return self.err(
                    at,
                    ParseErrorKind::SortMismatch {
                        expected: self.sort_name(b),
                        found: self.sort_name(a),
                    },
                )
            }
            (Some(b), _) => b,
            (None, Some(a)) => a,
            (None, None) => match self.free.get(name) {
                Some(s) => *s,
                None => expected.unwrap_or(0),
            },
        };
        self.check_sort(at, expected, sort)?;
        if bound.is_none() {
            self.free.insert(name.to_string(), sort);
        }
        Ok((Term::Var(Var::with_sort(name, sort)), sort))
    }

    fn coefficient(&mut self) -> Result<crate::scalar::QComplex, ParseError> {
        self.skip_ws();
        let at = self.pos;
        let end = self.rest().find([',', ']']).map(|i| self.pos + i);
        let end = match end {
            Some(e) => e,
            None => return self.syntax("unterminated coefficient list"),
        };
        let raw: String = self.src[self.pos..end]
            .chars()
            .filter(|c| !c.is_whitespace())
            .collect();
        self.pos = end;
        match parse_qcomplex(&raw) {
            Some(z) => Ok(z),
            None => self.err(
                at,
                ParseErrorKind::Syntax(format!("bad coefficient `{raw}`")),
            ),
        }
    }

    fn affine(
        &mut self,
        at: usize,
        expected: Option<SortId>,
    ) -> Result<(Term, SortId), ParseError> {
        self.expect('[')?;
        let alpha = self.coefficient()?;
        self.expect(',')?;
        let beta = self.coefficient()?;
        self.expect(']')?;
        let sym = self
            .sig
            .affine_symbol(alpha, beta)
            .map_err(|e| ParseError {
                position: at,
                kind: e.into(),
            })?;
        let sort = self.sig.affine_family().map(|f| f.sort).unwrap_or(0);
        self.check_sort(at, expected, sort)?;
        self.expect('(')?;
        let a = self.term(Some(sort))?;
        self.expect(',')?;
        let b = self.term(Some(sort))?;
        self.expect(')')?;
        Ok((Term::Apply(sym, vec![a, b]), sort))
    }

    fn formula(&mut self) -> Result<Formula, ParseError> {
        match self.peek() {
            Some(c) if c.is_ascii_digit() || c == '-' || c == '+' || c == '.' => {
                return Ok(Formula::Const(self.rational()?));
            }
            _ => {}
        }
        let (at, name) = match self.ident() {
            Some(x) => x,
            None => return self.syntax("expected a formula"),
        };
        match name {
            "sup" | "inf" => {
                let (vat, vname) = match self.ident() {
                    Some(x) => x,
                    None => return self.syntax("expected a variable after quantifier"),
                };
                if KEYWORDS.contains(&vname) || self.sig.constant(vname).is_some() {
                    return self.err(
                        vat,
                        ParseErrorKind::Syntax(format!("`{vname}` cannot be bound")),
                    );
                }
                let sort = self.sort_annotation()?.unwrap_or(0);
                self.expect('.')?;
                self.scope.push((vname.to_string(), sort));
                let body = self.formula();
                self.scope.pop();
                let v = Var::with_sort(vname, sort);
                let body = Box::new(body?);
                return Ok(if name == "sup" {
                    Formula::Sup(v, body)
                } else {
                    Formula::Inf(v, body)
                });
            }
            _ => {}
        }
        if self.peek() != Some('(') {
            return self.err(
                at,
                ParseErrorKind::Syntax(format!("expected `(` after `{name}`")),
            );
        }
        self.expect('(')?;
        let out = match name {
            "d" => {
                let (a, s) = self.term_sorted(None)?;
                self.expect(',')?;
                let b = self.term(Some(s))?;
                Formula::Metric(a, b)
            }
            "neg" => Formula::Neg(Box::new(self.formula()?)),
            "sub" => {
                let a = self.formula()?;
                self.expect(',')?;
                Formula::Sub(Box::new(a), self.rational()?)
            }
            "min" | "max" | "absdiff" | "csum" => {
                let a = Box::new(self.formula()?);
                self.expect(',')?;
                let b = Box::new(self.formula()?);
                match name {
                    "min" => Formula::Min(a, b),
                    "max" => Formula::Max(a, b),
                    "absdiff" => Formula::AbsDiff(a, b),
                    _ => Formula::CSum(a, b),
                }
            }
            "scale" | "addc" => {
                let q = self.rational()?;
                self.expect(',')?;
                let a = Box::new(self.formula()?);
                if name == "scale" {
                    Formula::Scale(q, a)
                } else {
                    Formula::AddC(q, a)
                }
            }
            _ => {
                let decl = match self.sig.predicate(name) {
                    Some(d) => d.clone(),
                    None if self.sig.function(name).is_some() => {
                        return self.err(
                            at,
                            ParseErrorKind::Syntax(format!("`{name}` is a term, not a formula")),
                        )
                    }
                    None => return self.err(at, ParseErrorKind::NotInBasis(name.to_string())),
                };
                let mut args = Vec::new();
                for (i, s) in decl.inputs.iter().enumerate() {
                    if i > 0 {
                        if self.peek() == Some(')') {
                            return self.err(
                                at,
                                ParseErrorKind::Arity {
                                    symbol: name.into(),
                                    expected: decl.inputs.len(),
                                    found: i,
                                },
                            );
                        }
                        self.expect(',')?;
                    }
                    args.push(self.term(Some(*s))?);
                }
                if self.peek() == Some(',') {
                    return self.err(
                        at,
                        ParseErrorKind::Arity {
                            symbol: name.into(),
                            expected: decl.inputs.len(),
                            found: decl.inputs.len() + 1,
                        },
                    );
                }
                Formula::Pred(decl.name.clone(), args)
            }
        };
        self.expect(')')?;
        Ok(out)
    }
}

/// True if `name` can be used as a variable in `sig`.
pub fn is_variable_name(name: &str, sig: &Signature) -> bool {
    let mut chars = name.chars();
    let first_ok = chars
        .next()
        .is_some_and(|c| c.is_ascii_alphabetic() || c == '_');
    first_ok
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
        && !KEYWORDS.contains(&name)
        && sig.constant(name).is_none()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::interval::Interval;
    use crate::logic::signature::Field;
    use crate::scalar::rat;

    fn hilbert_sig() -> Signature {
        let mut sig = Signature::new();
        let b = sig.add_sort("B", rat(2, 1)).unwrap();
        sig.set_affine_family(b, Field::Real).unwrap();
        sig.add_constant("0", b).unwrap();
        sig.add_constant("v0", b).unwrap();
        sig.add_function("U", vec![b], b, vec![1.0]).unwrap();
        let iv = Interval::new(rat(-1, 1), rat(1, 1)).unwrap();
        sig.add_predicate("ip", vec![b, b], iv, vec![1.0, 1.0])
            .unwrap();
        sig
    }

    #[test]
    fn parses_examples() {
        let sig = hilbert_sig();
        let t = parse_term("f[0.5,0.5](x, v0)", &sig).unwrap();
        assert_eq!(t.to_string(), "f[0.5,0.5](x,v0)");
        assert_eq!(parse_term("x", &sig).unwrap(), Term::var("x"));
        let u = parse_term("U(U(x))", &sig).unwrap();
        assert_eq!(
            u,
            Term::apply("U", vec![Term::apply("U", vec![Term::var("x")])])
        );
        let f = parse_formula("min(d(x,y), sub(ip(x,y), 0.25))", &sig).unwrap();
        assert_eq!(f.to_string(), "min(d(x,y),sub(ip(x,y),0.25))");
        let q = parse_formula("sup x . ip(x,x)", &sig).unwrap();
        assert!(matches!(q, Formula::Sup(..)));
        assert_eq!(parse_formula(&q.to_string(), &sig).unwrap(), q);
    }

    #[test]
    fn reports_errors() {
        let sig = hilbert_sig();
        let e = parse_term("f[0.6,0.5](x,0)", &sig).unwrap_err();
        assert!(matches!(
            e.kind,
            ParseErrorKind::Signature(SignatureError::Inadmissible(..))
        ));
        let e = parse_formula("sqrt(d(x,0))", &sig).unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::NotInBasis("sqrt".into()));
        let e = parse_term("W(x)", &sig).unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::UnknownSymbol("W".into()));
        let e = parse_formula("d(x,", &sig).unwrap_err();
        assert_eq!(e.position, 4);
        assert!(parse_formula("ip(x)", &sig).is_err());
        assert!(parse_formula("d(x,0) junk", &sig).is_err());
    }

    #[test]
    fn sort_checks() {
        let mut sig = hilbert_sig();
        let s = sig.add_sort("S", rat(1, 1)).unwrap();
        sig.add_constant("c", s).unwrap();
        let e = parse_formula("d(x,c)", &sig).unwrap_err();
        assert!(matches!(e.kind, ParseErrorKind::SortMismatch { .. }));
        let f = parse_formula("sup y:S . d(y,c)", &sig).unwrap();
        assert_eq!(f.to_string(), "sup y:1 . d(y:1,c)");
        assert_eq!(parse_formula(&f.to_string(), &sig).unwrap(), f);
    }
}
