//! Affine rescaling of formulas onto `[0, 1]`.

use num_traits::{One, Signed, Zero};

use super::interval::{interval_of, Interval};
use super::signature::{Signature, SignatureError};
use super::syntax::{Formula, Term};
use crate::scalar::{qreal, Rational};

#[derive(Debug, Clone, PartialEq)]
pub struct Rescaled {
    pub formula: Formula,
    /// Set when the source interval is a single point; the formula is then `0`.
    pub degenerate: bool,
}

/// Returns `ψ = u_I ∘ φ` with `u_I(x) = (x - a) / (b - a)` for `I = [a, b]`,
/// built as `addc(-a/(b-a), scale(1/(b-a), φ))` so that `interval_of(ψ) = [0, 1]`.
pub fn rescale_to_unit(phi: &Formula, sig: &Signature) -> Rescaled {
    let iv = interval_of(phi, sig);
    let (a, b) = (iv.lo().clone(), iv.hi().clone());
    if a == b {
        return Rescaled {
            formula: Formula::Const(Rational::zero()),
            degenerate: true,
        };
    }
    if a.is_zero() && b.is_one() {
        return Rescaled {
            formula: phi.clone(),
            degenerate: false,
        };
    }
    let w = &b - &a;
    let scale = Rational::one() / &w;
    let shift = -&a / &w;
    let mut f = phi.clone();
    if !scale.is_one() {
        f = Formula::scale(scale, f);
    }
    if !shift.is_zero() {
        f = Formula::addc(shift, f);
    }
    Rescaled {
        formula: f,
        degenerate: false,
    }
}

/// `u_I(x)` for an exact interval, in floating point.
pub fn unit_map(iv: &Interval<Rational>, x: f64) -> f64 {
    let f = iv.to_f64();
    (x - f.lo()) / (f.hi() - f.lo())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AtomKind {
    Distance,
    InnerProduct,
}

/// An atomic formula of the many-sorted presentation: `t1 = l1 x + m1 y`,
/// `t2 = l2 x + m2 y` with all `|coefficients| <= n`, so both terms live in
/// `B_{2n}`. The atom is `d(t1, t2)` (interval `[0, 4n]`) or `<t1, t2>`
/// (interval `[-4n², 4n²]`).
#[derive(Debug, Clone, PartialEq)]
pub struct ManySortedAtom {
    pub kind: AtomKind,
    pub n: u32,
    pub t1: (Rational, Rational),
    pub t2: (Rational, Rational),
}

impl ManySortedAtom {
    pub fn interval(&self) -> Interval<Rational> {
        let n = Rational::from_integer(self.n.into());
        let four = Rational::from_integer(4.into());
        match self.kind {
            AtomKind::Distance => Interval::new(Rational::zero(), &four * &n).unwrap(),
            AtomKind::InnerProduct => {
                let m = &four * &n * &n;
                Interval::new(-m.clone(), m).unwrap()
            }
        }
    }

    pub fn is_bounded(&self) -> bool {
        let n = Rational::from_integer(self.n.into());
        [&self.t1.0, &self.t1.1, &self.t2.0, &self.t2.1]
            .iter()
            .all(|c| c.abs() <= n)
    }

    /// Direct value on real vectors `x, y`.
    pub fn value(&self, x: &[f64], y: &[f64]) -> f64 {
        let c = |q: &Rational| crate::scalar::rational_to_f64(q);
        let t = |p: &(Rational, Rational)| -> Vec<f64> {
            x.iter()
                .zip(y)
                .map(|(a, b)| c(&p.0) * a + c(&p.1) * b)
                .collect()
        };
        let (u, v) = (t(&self.t1), t(&self.t2));
        match self.kind {
            AtomKind::Distance => u
                .iter()
                .zip(&v)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt(),
            AtomKind::InnerProduct => u.iter().zip(&v).map(|(a, b)| a * b).sum(),
        }
    }

    /// The one-sorted formula `ψ(x, y)` with `interval_of(ψ) = [0, 1]` and
    /// `ψ = u_I ∘ atom`:
    /// distances become `min(d(f[(l1-l2)/4n, (m1-m2)/4n](x,y), 0), 1)` and inner
    /// products `½ <f[l1/2n, m1/2n](x,y), f[l2/2n, m2/2n](x,y)> + ½`.
    pub fn to_unit_formula(
        &self,
        sig: &Signature,
        x: &str,
        y: &str,
    ) -> Result<Formula, SignatureError> {
        let n = Rational::from_integer(self.n.into());
        let (xv, yv) = (Term::var(x), Term::var(y));
        let two = Rational::from_integer(2.into());
        let half = Rational::new(1.into(), 2.into());
        match self.kind {
            AtomKind::Distance => {
                let den = Rational::from_integer(4.into()) * &n;
                let f = sig.affine_symbol(
                    qreal((&self.t1.0 - &self.t2.0) / &den),
                    qreal((&self.t1.1 - &self.t2.1) / &den),
                )?;
                let d = Formula::Metric(Term::Apply(f, vec![xv, yv]), Term::zero());
                Ok(Formula::min(d, Formula::Const(Rational::one())))
            }
            AtomKind::InnerProduct => {
                let den = &two * &n;
                let f1 = sig.affine_symbol(qreal(&self.t1.0 / &den), qreal(&self.t1.1 / &den))?;
                let f2 = sig.affine_symbol(qreal(&self.t2.0 / &den), qreal(&self.t2.1 / &den))?;
                let ip = Formula::pred(
                    "ip",
                    vec![
                        Term::Apply(f1, vec![xv.clone(), yv.clone()]),
                        Term::Apply(f2, vec![xv, yv]),
                    ],
                );
                Ok(Formula::addc(half.clone(), Formula::scale(half, ip)))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
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
    fn inner_product_rescales_to_half_plus_half() {
        let s = sig();
        let r = rescale_to_unit(&parse_formula("ip(x,y)", &s).unwrap(), &s);
        assert_eq!(r.formula.to_string(), "addc(0.5,scale(0.5,ip(x,y)))");
        assert_eq!(interval_of(&r.formula, &s), Interval::unit());
    }

    #[test]
    fn identity_and_degenerate() {
        let s = sig();
        let phi = parse_formula("min(d(x,y),1)", &s).unwrap();
        assert_eq!(rescale_to_unit(&phi, &s).formula, phi);
        let c = parse_formula("0.3", &s).unwrap();
        let r = rescale_to_unit(&c, &s);
        assert!(r.degenerate);
        assert_eq!(r.formula, Formula::Const(Rational::zero()));
    }

    #[test]
    fn many_sorted_distance() {
        let s = sig();
        let atom = ManySortedAtom {
            kind: AtomKind::Distance,
            n: 2,
            t1: (rat(2, 1), rat(-1, 1)),
            t2: (rat(-2, 1), rat(3, 2)),
        };
        let f = atom.to_unit_formula(&s, "x", "y").unwrap();
        assert_eq!(interval_of(&f, &s), Interval::unit());
        assert_eq!(f.to_string(), "min(d(f[0.5,-0.3125](x,y),0),1)");
    }
}
