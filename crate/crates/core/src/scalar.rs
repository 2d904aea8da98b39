//! Scalar types shared by intervals, normal forms and the text format.
//!
//! Syntax carries exact complex rationals ([`QComplex`]); evaluation happens in
//! `f64`/[`Complex64`]. The [`Scalar`] trait lets normal forms and intervals be
//! computed in either world.

use std::fmt::Debug;
use std::ops::Neg;

use num_bigint::BigInt;
use num_complex::Complex;
use num_rational::BigRational;
use num_traits::{FromPrimitive, Num, One, Signed, ToPrimitive, Zero};

pub type Rational = BigRational;
pub type QComplex = Complex<Rational>;
pub use num_complex::Complex64;

/// A coefficient field usable in normal forms.
pub trait Scalar:
    Clone + Debug + PartialEq + Num + Neg<Output = Self> + Send + Sync + 'static
{
    /// Converts an exact coefficient. Returns `None` when the value has a
    /// nonzero imaginary part and `Self` is a real type.
    fn from_exact(q: &QComplex) -> Option<Self>;

    fn to_complex64(&self) -> Complex64;

    fn modulus(&self) -> f64 {
        self.to_complex64().norm()
    }
}

impl Scalar for f64 {
    fn from_exact(q: &QComplex) -> Option<Self> {
        q.im.is_zero().then(|| rational_to_f64(&q.re))
    }
    fn to_complex64(&self) -> Complex64 {
        Complex64::new(*self, 0.0)
    }
}

impl Scalar for f32 {
    fn from_exact(q: &QComplex) -> Option<Self> {
        q.im.is_zero().then(|| rational_to_f64(&q.re) as f32)
    }
    fn to_complex64(&self) -> Complex64 {
        Complex64::new(f64::from(*self), 0.0)
    }
}

impl Scalar for Rational {
    fn from_exact(q: &QComplex) -> Option<Self> {
        q.im.is_zero().then(|| q.re.clone())
    }
    fn to_complex64(&self) -> Complex64 {
        Complex64::new(rational_to_f64(self), 0.0)
    }
}

impl Scalar for Complex64 {
    fn from_exact(q: &QComplex) -> Option<Self> {
        Some(qcomplex_to_c64(q))
    }
    fn to_complex64(&self) -> Complex64 {
        *self
    }
}

impl Scalar for Complex<f32> {
    fn from_exact(q: &QComplex) -> Option<Self> {
        let c = qcomplex_to_c64(q);
        Some(Complex::new(c.re as f32, c.im as f32))
    }
    fn to_complex64(&self) -> Complex64 {
        Complex64::new(f64::from(self.re), f64::from(self.im))
    }
}

impl Scalar for QComplex {
    fn from_exact(q: &QComplex) -> Option<Self> {
        Some(q.clone())
    }
    fn to_complex64(&self) -> Complex64 {
        qcomplex_to_c64(self)
    }
}

pub fn rational_to_f64(q: &Rational) -> f64 {
    q.to_f64().unwrap_or_else(|| {
        if q.is_negative() {
            f64::NEG_INFINITY
        } else {
            f64::INFINITY
        }
    })
}

pub fn qcomplex_to_c64(q: &QComplex) -> Complex64 {
    Complex64::new(rational_to_f64(&q.re), rational_to_f64(&q.im))
}

/// Exact binary value of a finite float.
pub fn rational_from_f64(x: f64) -> Option<Rational> {
    Rational::from_f64(x)
}

pub fn qreal(q: Rational) -> QComplex {
    Complex::new(q, Rational::zero())
}

pub fn rat(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

/// `|z|^2`, exactly.
pub fn norm_sqr_exact(z: &QComplex) -> Rational {
    &z.re * &z.re + &z.im * &z.im
}

pub fn in_unit_disk(z: &QComplex) -> bool {
    norm_sqr_exact(z) <= Rational::one()
}

/// Exact test of `|a| + |b| <= 1` for complex rationals.
///
/// With `p = |a|^2`, `q = |b|^2` the condition is `q <= 1`, `c = 1 + q - p >= 0`
/// and `4q <= c^2`.
pub fn affine_pair_admissible(a: &QComplex, b: &QComplex) -> bool {
    let p = norm_sqr_exact(a);
    let q = norm_sqr_exact(b);
    let one = Rational::one();
    if q > one {
        return false;
    }
    let c = &one + &q - &p;
    if c.is_negative() {
        return false;
    }
    Rational::from_integer(BigInt::from(4)) * &q <= &c * &c
}

/// Parses `-1.25`, `3`, `.5`, `2.5e-3` or `p/q`.
pub fn parse_rational(text: &str) -> Option<Rational> {
    let s = text.trim();
    if s.is_empty() {
        return None;
    }
    if let Some((n, d)) = s.split_once('/') {
        let n: BigInt = n.trim().parse().ok()?;
        let d: BigInt = d.trim().parse().ok()?;
        if d.is_zero() {
            return None;
        }
        return Some(Rational::new(n, d));
    }
    let (mantissa, exponent) = match s.find(['e', 'E']) {
        Some(pos) => (&s[..pos], s[pos + 1..].parse::<i32>().ok()?),
        None => (s, 0),
    };
    let (negative, body) = match mantissa.as_bytes().first() {
        Some(b'-') => (true, &mantissa[1..]),
        Some(b'+') => (false, &mantissa[1..]),
        _ => (false, mantissa),
    };
    let (int_part, frac_part) = body.split_once('.').unwrap_or((body, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part
        .bytes()
        .chain(frac_part.bytes())
        .all(|b| b.is_ascii_digit())
    {
        return None;
    }
    let digits = format!("{int_part}{frac_part}");
    let numer: BigInt = if digits.is_empty() {
        BigInt::zero()
    } else {
        digits.parse().ok()?
    };
    let scale = exponent - frac_part.len() as i32;
    let ten = BigInt::from(10);
    let mut q = Rational::from_integer(numer);
    if scale >= 0 {
        q *= Rational::from_integer(num_traits::pow(ten, scale as usize));
    } else {
        q /= Rational::from_integer(num_traits::pow(ten, (-scale) as usize));
    }
    Some(if negative { -q } else { q })
}

/// Prints a terminating decimal when the denominator is `2^a 5^b`, else `p/q`.
pub fn format_rational(q: &Rational) -> String {
    let mut den = q.denom().clone();
    let two = BigInt::from(2);
    let five = BigInt::from(5);
    let (mut twos, mut fives) = (0usize, 0usize);
    while (&den % &two).is_zero() {
        den /= &two;
        twos += 1;
    }
    while (&den % &five).is_zero() {
        den /= &five;
        fives += 1;
    }
    if !den.is_one() {
        return format!("{}/{}", q.numer(), q.denom());
    }
    let places = twos.max(fives);
    if places == 0 {
        return q.numer().to_string();
    }
    let scaled = q * Rational::from_integer(num_traits::pow(BigInt::from(10), places));
    let digits = scaled.to_integer().abs().to_string();
    let digits = format!("{digits:0>width$}", width = places + 1);
    let (int_part, frac_part) = digits.split_at(digits.len() - places);
    let frac_part = frac_part.trim_end_matches('0');
    let sign = if q.is_negative() { "-" } else { "" };
    if frac_part.is_empty() {
        format!("{sign}{int_part}")
    } else {
        format!("{sign}{int_part}.{frac_part}")
    }
}

/// Parses `a`, `bi`, `a+bi`, `a-bi`, `i`, `-i`.
pub fn parse_qcomplex(text: &str) -> Option<QComplex> {
    let s: String = text.chars().filter(|c| !c.is_whitespace()).collect();
    if s.is_empty() {
        return None;
    }
    let Some(body) = s.strip_suffix('i') else {
        return parse_rational(&s).map(qreal);
    };
    // split at the last sign that is not the leading one and not part of an exponent
    let bytes = body.as_bytes();
    let mut split = None;
    for i in (1..bytes.len()).rev() {
        if (bytes[i] == b'+' || bytes[i] == b'-') && !matches!(bytes[i - 1], b'e' | b'E') {
            split = Some(i);
            break;
        }
    }
    let imag = |t: &str| -> Option<Rational> {
        match t {
            "" | "+" => Some(Rational::one()),
            "-" => Some(-Rational::one()),
            _ => parse_rational(t),
        }
    };
    match split {
        Some(i) => Some(Complex::new(parse_rational(&body[..i])?, imag(&body[i..])?)),
        None => Some(Complex::new(Rational::zero(), imag(body)?)),
    }
}

pub fn format_qcomplex(z: &QComplex) -> String {
    if z.im.is_zero() {
        return format_rational(&z.re);
    }
    let im = if z.im.is_one() {
        String::new()
    } else if (-z.im.clone()).is_one() {
        "-".to_string()
    } else {
        format_rational(&z.im)
    };
    if z.re.is_zero() {
        format!("{im}i")
    } else if z.im.is_negative() {
        format!("{}{im}i", format_rational(&z.re))
    } else {
        format!("{}+{im}i", format_rational(&z.re))
    }
}

/// Shortest round-trip decimal for a float (never uses exponent notation).
pub fn format_f64(x: f64) -> String {
    format!("{x}")
}

pub fn parse_f64(text: &str) -> Option<f64> {
    text.trim().parse::<f64>().ok()
}

pub fn format_c64(z: Complex64) -> String {
    if z.im == 0.0 {
        format_f64(z.re)
    } else if z.im < 0.0 || (z.im == 0.0 && z.im.is_sign_negative()) {
        format!("{}{}i", format_f64(z.re), format_f64(z.im))
    } else {
        format!("{}+{}i", format_f64(z.re), format_f64(z.im))
    }
}

pub fn parse_c64(text: &str) -> Option<Complex64> {
    let s: String = text.chars().filter(|c| !c.is_whitespace()).collect();
    let Some(body) = s.strip_suffix('i') else {
        return parse_f64(&s).map(|x| Complex64::new(x, 0.0));
    };
    let bytes = body.as_bytes();
    for i in (1..bytes.len()).rev() {
        if (bytes[i] == b'+' || bytes[i] == b'-') && !matches!(bytes[i - 1], b'e' | b'E') {
            let im = match &body[i..] {
                "+" => 1.0,
                "-" => -1.0,
                t => parse_f64(t)?,
            };
            return Some(Complex64::new(parse_f64(&body[..i])?, im));
        }
    }
    let im = match body {
        "" | "+" => 1.0,
        "-" => -1.0,
        t => parse_f64(t)?,
    };
    Some(Complex64::new(0.0, im))
}

/// An exact rational point on the unit circle close to `e^{i theta}`.
///
/// Uses the rational parametrisation `((1-t^2) + 2t i)/(1+t^2)` with
/// `t = tan(theta/2)` rounded to a dyadic rational, so `|z| = 1` holds exactly
/// and `|z - e^{i theta}|` is at the level of float rounding.
pub fn rational_unit_circle_point(theta: f64) -> QComplex {
    let two_pi = std::f64::consts::TAU;
    let mut th = theta.rem_euclid(two_pi);
    if th > std::f64::consts::PI {
        th -= two_pi;
    }
    if th.abs() > std::f64::consts::FRAC_PI_2 {
        let shifted = if th > 0.0 {
            th - std::f64::consts::PI
        } else {
            th + std::f64::consts::PI
        };
        return -rational_unit_circle_point(shifted);
    }
    let t = (th / 2.0).tan();
    // keep denominators modest: round t to 2^-40
    let t = (t * 2f64.powi(40)).round() / 2f64.powi(40);
    let t = rational_from_f64(t).unwrap_or_else(Rational::zero);
    let one = Rational::one();
    let denom = &one + &t * &t;
    let re = (&one - &t * &t) / &denom;
    let im = (Rational::from_integer(BigInt::from(2)) * &t) / denom;
    Complex::new(re, im)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decimal_round_trip() {
        for s in ["0", "1", "-1", "0.5", "-0.25", "12.0625", "1/3", "-2/7"] {
            let q = parse_rational(s).unwrap();
            assert_eq!(parse_rational(&format_rational(&q)).unwrap(), q, "{s}");
        }
        assert_eq!(format_rational(&rat(1, 2)), "0.5");
        assert_eq!(format_rational(&rat(-3, 4)), "-0.75");
        assert_eq!(format_rational(&rat(1, 3)), "1/3");
        assert_eq!(format_rational(&rat(1, 1000)), "0.001");
        assert_eq!(parse_rational("2.5e-1").unwrap(), rat(1, 4));
        assert_eq!(parse_rational(".5").unwrap(), rat(1, 2));
        assert!(parse_rational("abc").is_none());
        assert!(parse_rational("1/0").is_none());
    }

    #[test]
    fn complex_literals() {
        let z = parse_qcomplex("0.3+0.4i").unwrap();
        assert_eq!(z, Complex::new(rat(3, 10), rat(2, 5)));
        assert_eq!(
            parse_qcomplex("-i").unwrap(),
            Complex::new(rat(0, 1), rat(-1, 1))
        );
        assert_eq!(parse_qcomplex("0.5").unwrap(), qreal(rat(1, 2)));
        for s in ["0.3+0.4i", "-0.5i", "i", "-1-i", "2"] {
            let z = parse_qcomplex(s).unwrap();
            assert_eq!(parse_qcomplex(&format_qcomplex(&z)).unwrap(), z, "{s}");
        }
        let c = parse_c64("0.25-0.5i").unwrap();
        assert_eq!(c, Complex64::new(0.25, -0.5));
        assert_eq!(parse_c64(&format_c64(c)).unwrap(), c);
    }

    #[test]
    fn admissible_pairs() {
        let h = qreal(rat(1, 2));
        assert!(affine_pair_admissible(&h, &h));
        assert!(!affine_pair_admissible(&qreal(rat(3, 5)), &h));
        let z = parse_qcomplex("0.6+0.8i").unwrap();
        assert!(affine_pair_admissible(&z, &qreal(rat(0, 1))));
        assert!(!affine_pair_admissible(&z, &qreal(rat(1, 100))));
        // |0.3+0.4i| = 0.5 exactly
        let w = parse_qcomplex("0.3+0.4i").unwrap();
        assert!(affine_pair_admissible(&w, &h));
        assert!(!affine_pair_admissible(&w, &qreal(rat(51, 100))));
    }

    #[test]
    fn circle_points_are_unimodular() {
        for k in 0..64 {
            let th = std::f64::consts::TAU * f64::from(k) / 64.0;
            let z = rational_unit_circle_point(th);
            assert!(norm_sqr_exact(&z).is_one());
            let c = qcomplex_to_c64(&z);
            assert!((c - Complex64::from_polar(1.0, th)).norm() < 1e-11, "{k}");
        }
    }
}

/// Serde adapter writing an `f64` as a decimal string; numbers are also
/// accepted when reading.
pub mod decimal {
    use serde::{Deserialize, Deserializer, Serializer};

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Text(String),
        Number(f64),
    }

    pub fn serialize<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&super::format_f64(*x))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Number(x) => Ok(x),
            Repr::Text(t) => super::parse_f64(&t)
                .ok_or_else(|| serde::de::Error::custom(format!("bad number `{t}`"))),
        }
    }
}
