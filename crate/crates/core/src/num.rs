//! Exact rationals and the mixed exact/binary64 scalar used throughout the crate.

use std::cmp::Ordering;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

pub type Rational = num_rational::BigRational;

/// `n/d` as a big rational. Panics on `d == 0`.
pub fn rat(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

/// Parses `"p/q"`, `"p"`, or a plain decimal such as `"0.25"` / `"-1.5e-3"`
/// into an exact rational.
pub fn parse_rational(s: &str) -> Result<Rational> {
    let t = s.trim();
    if t.is_empty() {
        return Err(Error::InvalidArgument("empty rational".into()));
    }
    if t.contains('/') || !t.contains(['.', 'e', 'E']) {
        let r = Rational::from_str(t)
            .map_err(|_| Error::InvalidArgument(format!("not a rational: {s:?}")))?;
        return Ok(r);
    }
    let (mantissa, exp) = match t.find(['e', 'E']) {
        Some(i) => {
            let e: i64 = t[i + 1..]
                .parse()
                .map_err(|_| Error::InvalidArgument(format!("bad exponent in {s:?}")))?;
            (&t[..i], e)
        }
        None => (t, 0),
    };
    let (neg, body) = match mantissa.strip_prefix('-') {
        Some(b) => (true, b),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (ip, fp) = match body.split_once('.') {
        Some((a, b)) => (a, b),
        None => (body, ""),
    };
    if ip.is_empty() && fp.is_empty()
        || !ip.chars().chain(fp.chars()).all(|c| c.is_ascii_digit())
    {
        return Err(Error::InvalidArgument(format!("not a decimal: {s:?}")));
    }
    let digits: BigInt = format!("{ip}{fp}")
        .parse()
        .map_err(|_| Error::InvalidArgument(format!("not a decimal: {s:?}")))?;
    let scale = exp - fp.len() as i64;
    if scale.unsigned_abs() > 4096 {
        return Err(Error::InvalidArgument(format!("exponent out of range in {s:?}")));
    }
    let ten = BigInt::from(10);
    let mut r = if scale >= 0 {
        Rational::from_integer(digits * num_traits::pow(ten, scale as usize))
    } else {
        Rational::new(digits, num_traits::pow(ten, (-scale) as usize))
    };
    if neg {
        r = -r;
    }
    Ok(r)
}

pub fn format_rational(r: &Rational) -> String {
    r.to_string()
}

pub fn rational_to_f64(r: &Rational) -> f64 {
    r.to_f64().unwrap_or_else(|| {
        // numerator/denominator both overflow f64; scale down by bit length
        let shift = r.numer().bits().max(r.denom().bits()).saturating_sub(1000);
        let n = (r.numer() >> shift).to_f64().unwrap_or(f64::NAN);
        let d = (r.denom() >> shift).to_f64().unwrap_or(f64::NAN);
        n / d
    })
}

/// Least common multiple of the denominators.
pub fn common_denominator<'a>(values: impl IntoIterator<Item = &'a Rational>) -> BigInt {
    values
        .into_iter()
        .fold(BigInt::one(), |acc, r| acc.lcm(r.denom()))
}

/// Floats printed with 17 significant digits, '.' decimal separator.
pub fn format_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// A real value that is either an exact rational or a binary64 approximation.
///
/// Arithmetic between two exact values stays exact; anything touching a float
/// degrades to float.
#[derive(Clone, Debug)]
pub enum Num {
    Exact(Rational),
    Float(f64),
}

impl Num {
    pub fn zero() -> Num {
        Num::Exact(Rational::zero())
    }

    pub fn one() -> Num {
        Num::Exact(Rational::one())
    }

    pub fn exact(n: i64, d: i64) -> Num {
        Num::Exact(rat(n, d))
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, Num::Exact(_))
    }

    pub fn as_exact(&self) -> Option<&Rational> {
        match self {
            Num::Exact(r) => Some(r),
            Num::Float(_) => None,
        }
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            Num::Exact(r) => rational_to_f64(r),
            Num::Float(x) => *x,
        }
    }

    pub fn to_float(&self) -> Num {
        Num::Float(self.to_f64())
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Num::Exact(r) => r.is_zero(),
            Num::Float(x) => *x == 0.0,
        }
    }

    pub fn abs(&self) -> Num {
        match self {
            Num::Exact(r) => Num::Exact(r.abs()),
            Num::Float(x) => Num::Float(x.abs()),
        }
    }

    pub fn add(&self, o: &Num) -> Num {
        match (self, o) {
            (Num::Exact(a), Num::Exact(b)) => Num::Exact(a + b),
            _ => Num::Float(self.to_f64() + o.to_f64()),
        }
    }

    pub fn sub(&self, o: &Num) -> Num {
        match (self, o) {
            (Num::Exact(a), Num::Exact(b)) => Num::Exact(a - b),
            _ => Num::Float(self.to_f64() - o.to_f64()),
        }
    }

    pub fn mul(&self, o: &Num) -> Num {
        match (self, o) {
            (Num::Exact(a), Num::Exact(b)) => Num::Exact(a * b),
            _ => Num::Float(self.to_f64() * o.to_f64()),
        }
    }

    pub fn div_int(&self, n: usize) -> Num {
        match self {
            Num::Exact(a) => Num::Exact(a / Rational::from_integer(BigInt::from(n))),
            Num::Float(x) => Num::Float(x / n as f64),
        }
    }

    /// Numeric comparison; exact when both sides are exact.
    pub fn cmp_value(&self, o: &Num) -> Ordering {
        match (self, o) {
            (Num::Exact(a), Num::Exact(b)) => a.cmp(b),
            _ => self
                .to_f64()
                .partial_cmp(&o.to_f64())
                .unwrap_or(Ordering::Equal),
        }
    }

    pub fn lt_rational(&self, r: &Rational) -> bool {
        match self {
            Num::Exact(a) => a < r,
            Num::Float(x) => *x < rational_to_f64(r),
        }
    }

    pub fn le_rational(&self, r: &Rational) -> bool {
        match self {
            Num::Exact(a) => a <= r,
            Num::Float(x) => *x <= rational_to_f64(r),
        }
    }

    pub fn max_value(self, o: Num) -> Num {
        if o.cmp_value(&self) == Ordering::Greater {
            o
        } else {
            self
        }
    }

    /// Canonical text form: `p/q` for exact values, 17 significant digits otherwise.
    pub fn to_text(&self) -> String {
        match self {
            Num::Exact(r) => format_rational(r),
            Num::Float(x) => format_f64(*x),
        }
    }
}

impl From<Rational> for Num {
    fn from(r: Rational) -> Num {
        Num::Exact(r)
    }
}

impl From<f64> for Num {
    fn from(x: f64) -> Num {
        Num::Float(x)
    }
}

impl fmt::Display for Num {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

// Structural equality: an exact 1/2 and a float 0.5 are different representations.
impl PartialEq for Num {
    fn eq(&self, o: &Num) -> bool {
        match (self, o) {
            (Num::Exact(a), Num::Exact(b)) => a == b,
            (Num::Float(a), Num::Float(b)) => a == b,
            _ => false,
        }
    }
}

impl Eq for Num {}

impl Hash for Num {
    fn hash<H: Hasher>(&self, state: &mut H) {
        match self {
            Num::Exact(r) => {
                0u8.hash(state);
                r.hash(state);
            }
            Num::Float(x) => {
                1u8.hash(state);
                // -0.0 == 0.0 must hash alike
                let x = if *x == 0.0 { 0.0 } else { *x };
                x.to_bits().hash(state);
            }
        }
    }
}

impl Serialize for Num {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Num::Exact(r) => s.serialize_str(&format_rational(r)),
            Num::Float(x) => s.serialize_f64(*x),
        }
    }
}

impl<'de> Deserialize<'de> for Num {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Num, D::Error> {
        struct NumVisitor;
        impl Visitor<'_> for NumVisitor {
            type Value = Num;
            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a rational string \"p/q\" or a number")
            }
            fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<Num, E> {
                parse_rational(v).map(Num::Exact).map_err(E::custom)
            }
            fn visit_f64<E: de::Error>(self, v: f64) -> std::result::Result<Num, E> {
                Ok(Num::Float(v))
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<Num, E> {
                Ok(Num::Exact(int(v)))
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<Num, E> {
                Ok(Num::Exact(Rational::from_integer(BigInt::from(v))))
            }
        }
        d.deserialize_any(NumVisitor)
    }
}

/// Serde adapter for exact rationals written as `"p/q"` strings.
pub mod rational_str {
    use super::*;

    pub fn serialize<S: Serializer>(r: &Rational, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&format_rational(r))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Rational, D::Error> {
        match Num::deserialize(d)? {
            Num::Exact(r) => Ok(r),
            Num::Float(x) => Rational::from_float(x)
                .ok_or_else(|| de::Error::custom(format!("non-finite rational {x}"))),
        }
    }
}

/// Serde adapter for vectors of `"p/q"` strings.
pub mod rational_vec {
    use super::*;
    use serde::ser::SerializeSeq;

    pub fn serialize<S: Serializer>(v: &[Rational], s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(v.len()))?;
        for r in v {
            seq.serialize_element(&format_rational(r))?;
        }
        seq.end()
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        d: D,
    ) -> std::result::Result<Vec<Rational>, D::Error> {
        let raw: Vec<Num> = Vec::deserialize(d)?;
        raw.into_iter()
            .map(|n| match n {
                Num::Exact(r) => Ok(r),
                Num::Float(x) => Rational::from_float(x)
                    .ok_or_else(|| de::Error::custom(format!("non-finite rational {x}"))),
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_fractions_and_decimals() {
        assert_eq!(parse_rational("2/5").unwrap(), rat(2, 5));
        assert_eq!(parse_rational("-3").unwrap(), int(-3));
        assert_eq!(parse_rational("0.25").unwrap(), rat(1, 4));
        assert_eq!(parse_rational("-1.5e-3").unwrap(), rat(-3, 2000));
        assert_eq!(parse_rational("2e2").unwrap(), int(200));
        assert!(parse_rational("x/2").is_err());
        assert!(parse_rational("").is_err());
        assert!(parse_rational("1/0").is_err());
    }

    #[test]
    fn mixed_arithmetic_degrades_to_float() {
        let a = Num::exact(1, 2);
        assert_eq!(a.add(&Num::exact(1, 3)), Num::exact(5, 6));
        assert_eq!(a.add(&Num::Float(0.25)), Num::Float(0.75));
        assert_eq!(Num::Float(0.5).cmp_value(&a), Ordering::Equal);
        assert_ne!(Num::Float(0.5), a);
    }

    #[test]
    fn serde_round_trip() {
        let v: Vec<Num> = serde_json::from_str(r#"["1/5", 0.5, 3]"#).unwrap();
        assert_eq!(v, vec![Num::exact(1, 5), Num::Float(0.5), Num::exact(3, 1)]);
        assert_eq!(serde_json::to_string(&v).unwrap(), r#"["1/5",0.5,"3"]"#);
    }

    #[test]
    fn huge_rationals_convert_to_f64() {
        let big = num_traits::pow(BigInt::from(2), 3000);
        let r = Rational::new(big.clone() + 1, big * 3);
        assert!((rational_to_f64(&r) - 1.0 / 3.0).abs() < 1e-15);
    }
}
