//! Compositional Lipschitz moduli.

use std::collections::BTreeMap;

use super::signature::Signature;
use super::syntax::{Formula, Term};
use crate::scalar::rational_to_f64;

/// Per-variable Lipschitz constants; a missing variable has constant 0.
/// The modulus of uniform continuity is `eps -> eps / L`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Modulus {
    constants: BTreeMap<String, f64>,
}

impl Modulus {
    pub fn get(&self, var: &str) -> f64 {
        self.constants.get(var).copied().unwrap_or(0.0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.constants.iter().map(|(k, v)| (k.as_str(), *v))
    }

    /// `Δ(eps)`, or `None` when the formula does not depend on `var`.
    pub fn delta(&self, var: &str, eps: f64) -> Option<f64> {
        let l = self.get(var);
        (l > 0.0).then(|| eps / l)
    }

    /// Bound on `|φ(a) - φ(b)|` given per-variable distances.
    pub fn bound(&self, dist: &dyn Fn(&str) -> f64) -> f64 {
        self.constants.iter().map(|(v, l)| l * dist(v)).sum()
    }

    fn single(var: &str) -> Self {
        let mut m = Modulus::default();
        m.constants.insert(var.to_string(), 1.0);
        m
    }

    fn add_scaled(&mut self, other: &Modulus, c: f64) {
        if c == 0.0 {
            return;
        }
        for (v, l) in &other.constants {
            *self.constants.entry(v.clone()).or_insert(0.0) += c * l;
        }
        self.trim();
    }

    fn sum(a: &Modulus, b: &Modulus) -> Modulus {
        let mut out = a.clone();
        out.add_scaled(b, 1.0);
        out
    }

    fn pointwise_max(a: &Modulus, b: &Modulus) -> Modulus {
        let mut out = a.clone();
        for (v, l) in &b.constants {
            let e = out.constants.entry(v.clone()).or_insert(0.0);
            *e = e.max(*l);
        }
        out
    }

    fn scaled(&self, c: f64) -> Modulus {
        let mut out = Modulus::default();
        out.add_scaled(self, c);
        out
    }

    fn remove(&mut self, var: &str) {
        self.constants.remove(var);
    }

    fn trim(&mut self) {
        self.constants.retain(|_, l| *l != 0.0);
    }
}

/// Lipschitz constants of a term (as a map into its sort) per variable.
pub fn term_lipschitz(t: &Term, sig: &Signature) -> Modulus {
    match t {
        Term::Var(v) => Modulus::single(&v.name),
        Term::Const(_) => Modulus::default(),
        Term::Apply(f, args) => {
            let lips = sig
                .profile(f)
                .map(|p| p.2)
                .unwrap_or_else(|| vec![1.0; args.len()]);
            let mut out = Modulus::default();
            for (a, l) in args.iter().zip(lips) {
                out.add_scaled(&term_lipschitz(a, sig), l);
            }
            out
        }
    }
}

/// Sound per-variable Lipschitz constants of a formula:
/// `|φ(a) - φ(b)| <= Σ_v L_v d(a_v, b_v)`.
pub fn lipschitz_of(phi: &Formula, sig: &Signature) -> Modulus {
    match phi {
        Formula::Metric(a, b) => {
            if a == b {
                Modulus::default()
            } else {
                Modulus::sum(&term_lipschitz(a, sig), &term_lipschitz(b, sig))
            }
        }
        Formula::Pred(p, args) => {
            let lips = sig
                .predicate(p)
                .map(|d| d.lipschitz.clone())
                .unwrap_or_else(|| vec![1.0; args.len()]);
            let mut out = Modulus::default();
            for (a, l) in args.iter().zip(lips) {
                out.add_scaled(&term_lipschitz(a, sig), l);
            }
            out
        }
        Formula::Const(_) => Modulus::default(),
        Formula::Neg(a) | Formula::Sub(a, _) | Formula::AddC(_, a) => lipschitz_of(a, sig),
        Formula::Scale(q, a) => lipschitz_of(a, sig).scaled(rational_to_f64(q).abs()),
        Formula::Min(a, b) | Formula::Max(a, b) => {
            Modulus::pointwise_max(&lipschitz_of(a, sig), &lipschitz_of(b, sig))
        }
        Formula::AbsDiff(a, b) => {
            if a == b {
                Modulus::default()
            } else {
                Modulus::sum(&lipschitz_of(a, sig), &lipschitz_of(b, sig))
            }
        }
        Formula::CSum(a, b) => Modulus::sum(&lipschitz_of(a, sig), &lipschitz_of(b, sig)),
        Formula::Sup(v, body) | Formula::Inf(v, body) => {
            let mut m = lipschitz_of(body, sig);
            m.remove(&v.name);
            m
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::interval::Interval;
    use crate::logic::parse::parse_formula;
    use crate::logic::signature::Field;
    use crate::scalar::rat;

    fn sig() -> Signature {
        let mut sig = Signature::new();
        let b = sig.add_sort("B", rat(2, 1)).unwrap();
        sig.set_affine_family(b, Field::Real).unwrap();
        sig.add_constant("0", b).unwrap();
        let iv = Interval::new(rat(-1, 1), rat(1, 1)).unwrap();
        sig.add_predicate("ip", vec![b, b], iv, vec![1.0, 1.0])
            .unwrap();
        sig
    }

    #[test]
    fn examples() {
        let s = sig();
        let m = lipschitz_of(&parse_formula("d(x,y)", &s).unwrap(), &s);
        assert_eq!((m.get("x"), m.get("y")), (1.0, 1.0));
        let m = lipschitz_of(
            &parse_formula("addc(0.5, scale(0.5, ip(x,y)))", &s).unwrap(),
            &s,
        );
        assert_eq!((m.get("x"), m.get("y")), (0.5, 0.5));
        let m = lipschitz_of(&parse_formula("ip(x,x)", &s).unwrap(), &s);
        assert_eq!(m.get("x"), 2.0);
        let m = lipschitz_of(&parse_formula("sup x . d(x,x)", &s).unwrap(), &s);
        assert_eq!(m.get("x"), 0.0);
        let m = lipschitz_of(&parse_formula("d(f[0.5,-0.25](x,y), 0)", &s).unwrap(), &s);
        assert_eq!((m.get("x"), m.get("y")), (0.5, 0.25));
        assert_eq!(m.delta("x", 0.1), Some(0.2));
    }
}
