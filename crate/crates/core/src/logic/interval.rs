//! Closed bounded intervals and the value-interval rules for formulas.

use std::fmt;

use num_traits::{Num, One, Zero};

use super::signature::Signature;
use super::syntax::{Formula, Term};
use crate::scalar::{format_rational, rational_to_f64, Rational};

/// A closed interval `[lo, hi]` with `lo <= hi`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Interval<T> {
    lo: T,
    hi: T,
}

impl<T: Clone + PartialOrd + Num> Interval<T> {
    pub fn new(lo: T, hi: T) -> Option<Self> {
        (lo <= hi).then_some(Interval { lo, hi })
    }

    pub fn point(x: T) -> Self {
        Interval {
            lo: x.clone(),
            hi: x,
        }
    }

    pub fn unit() -> Self {
        Interval {
            lo: T::zero(),
            hi: T::one(),
        }
    }

    pub fn lo(&self) -> &T {
        &self.lo
    }

    pub fn hi(&self) -> &T {
        &self.hi
    }

    pub fn width(&self) -> T {
        self.hi.clone() - self.lo.clone()
    }

    pub fn is_degenerate(&self) -> bool {
        self.lo == self.hi
    }

    pub fn contains(&self, x: &T) -> bool {
        &self.lo <= x && x <= &self.hi
    }

    pub fn hull(&self, other: &Self) -> Self {
        Interval {
            lo: pmin(&self.lo, &other.lo),
            hi: pmax(&self.hi, &other.hi),
        }
    }

    /// Image under `x -> q x`.
    pub fn scale(&self, q: &T) -> Self {
        let a = q.clone() * self.lo.clone();
        let b = q.clone() * self.hi.clone();
        if a <= b {
            Interval { lo: a, hi: b }
        } else {
            Interval { lo: b, hi: a }
        }
    }

    pub fn shift(&self, q: &T) -> Self {
        Interval {
            lo: self.lo.clone() + q.clone(),
            hi: self.hi.clone() + q.clone(),
        }
    }

    /// Image under `x -> max(x - r, 0)`.
    pub fn dotminus(&self, r: &T) -> Self {
        let z = T::zero();
        Interval {
            lo: pmax(&(self.lo.clone() - r.clone()), &z),
            hi: pmax(&(self.hi.clone() - r.clone()), &z),
        }
    }

    /// Image under `x -> max(I) - x + min(I)`, which is `self` again.
    pub fn negate_fitted(&self) -> Self {
        self.clone()
    }

    pub fn min_with(&self, o: &Self) -> Self {
        Interval {
            lo: pmin(&self.lo, &o.lo),
            hi: pmin(&self.hi, &o.hi),
        }
    }

    pub fn max_with(&self, o: &Self) -> Self {
        Interval {
            lo: pmax(&self.lo, &o.lo),
            hi: pmax(&self.hi, &o.hi),
        }
    }

    /// Image of `|x - y|` over `self x o`.
    pub fn absdiff(&self, o: &Self) -> Self {
        let z = T::zero();
        let lo = pmax(
            &pmax(
                &(self.lo.clone() - o.hi.clone()),
                &(o.lo.clone() - self.hi.clone()),
            ),
            &z,
        );
        let hi = pmax(
            &(self.hi.clone() - o.lo.clone()),
            &(o.hi.clone() - self.lo.clone()),
        );
        Interval { lo, hi }
    }

    /// Image of `min(x + y, 1)` over `self x o`.
    pub fn clamped_sum(&self, o: &Self) -> Self {
        let one = T::one();
        Interval {
            lo: pmin(&(self.lo.clone() + o.lo.clone()), &one),
            hi: pmin(&(self.hi.clone() + o.hi.clone()), &one),
        }
    }
}

impl Interval<Rational> {
    pub fn to_f64(&self) -> Interval<f64> {
        Interval {
            lo: rational_to_f64(&self.lo),
            hi: rational_to_f64(&self.hi),
        }
    }
}

impl fmt::Display for Interval<Rational> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[{}, {}]",
            format_rational(&self.lo),
            format_rational(&self.hi)
        )
    }
}

fn pmin<T: Clone + PartialOrd>(a: &T, b: &T) -> T {
    if a <= b {
        a.clone()
    } else {
        b.clone()
    }
}

fn pmax<T: Clone + PartialOrd>(a: &T, b: &T) -> T {
    if a >= b {
        a.clone()
    } else {
        b.clone()
    }
}

/// Sort of a term, or `None` if it mentions an undeclared symbol.
pub fn term_sort(t: &Term, sig: &Signature) -> Option<usize> {
    match t {
        Term::Var(v) => Some(v.sort),
        Term::Const(c) => sig.constant(c).map(|d| d.sort),
        Term::Apply(f, _) => sig.profile(f).map(|p| p.1),
    }
}

/// The value interval of a formula: `[0, N]` for metric atoms, the declared
/// interval for predicate atoms, the exact image of the connective on the
/// product of child intervals, and the body interval for quantifiers.
///
/// Undeclared symbols fall back to the unit interval; parsed formulas never
/// contain them.
pub fn interval_of(phi: &Formula, sig: &Signature) -> Interval<Rational> {
    match phi {
        Formula::Metric(t, _) => {
            let n = term_sort(t, sig)
                .and_then(|s| sig.sort(s))
                .map(|s| s.metric_bound.clone())
                .unwrap_or_else(Rational::one);
            Interval {
                lo: Rational::zero(),
                hi: n,
            }
        }
        Formula::Pred(p, _) => sig
            .predicate(p)
            .map(|d| d.interval.clone())
            .unwrap_or_else(Interval::unit),
        Formula::Const(q) => Interval::point(q.clone()),
        Formula::Neg(a) => interval_of(a, sig).negate_fitted(),
        Formula::Sub(a, r) => interval_of(a, sig).dotminus(r),
        Formula::Min(a, b) => interval_of(a, sig).min_with(&interval_of(b, sig)),
        Formula::Max(a, b) => interval_of(a, sig).max_with(&interval_of(b, sig)),
        Formula::AbsDiff(a, b) => interval_of(a, sig).absdiff(&interval_of(b, sig)),
        Formula::Scale(q, a) => interval_of(a, sig).scale(q),
        Formula::AddC(q, a) => interval_of(a, sig).shift(q),
        Formula::CSum(a, b) => interval_of(a, sig).clamped_sum(&interval_of(b, sig)),
        Formula::Sup(_, a) | Formula::Inf(_, a) => interval_of(a, sig),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::rat;

    fn iv(a: i64, b: i64) -> Interval<Rational> {
        Interval::new(rat(a, 1), rat(b, 1)).unwrap()
    }

    #[test]
    fn connective_images() {
        assert_eq!(iv(0, 2).dotminus(&rat(1, 1)), iv(0, 1));
        assert_eq!(iv(0, 1).min_with(&iv(0, 2)), iv(0, 1));
        assert_eq!(iv(0, 1).max_with(&iv(0, 2)), iv(0, 2));
        assert_eq!(iv(-1, 1).absdiff(&iv(0, 2)), iv(0, 3));
        assert_eq!(iv(3, 4).absdiff(&iv(0, 1)), iv(2, 4));
        assert_eq!(iv(-1, 1).scale(&rat(-2, 1)), iv(-2, 2));
        assert_eq!(iv(0, 1).clamped_sum(&iv(0, 1)), iv(0, 1));
        assert!(Interval::new(rat(1, 1), rat(0, 1)).is_none());
    }

    #[test]
    fn generic_over_floats() {
        let a = Interval::new(0.0f64, 2.0).unwrap();
        assert_eq!(a.dotminus(&1.0), Interval::new(0.0, 1.0).unwrap());
        let b = Interval::new(0.0f32, 1.0).unwrap();
        assert!(b.contains(&0.5));
    }
}
