use std::fmt;

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{One, Zero};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::num::{Num, Rational};

/// Largest `preperiod + lcm(periods)` window for which shift distances are
/// computed as exact rationals.
pub const EXACT_SHIFT_WINDOW: usize = 4096;

/// A state of one of the supported systems.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "PointDoc", into = "PointDoc")]
pub enum Point {
    /// A value in `[0, 1]`.
    Interval(Num),
    /// An angle in `[0, 1)`, read mod 1.
    Circle(Num),
    /// An eventually periodic symbol sequence.
    Shift(ShiftPoint),
}

impl Point {
    pub fn interval(v: Rational) -> Point {
        Point::Interval(Num::Exact(v))
    }

    pub fn interval_f64(v: f64) -> Point {
        Point::Interval(Num::Float(v))
    }

    pub fn circle(a: Rational) -> Point {
        Point::Circle(Num::Exact(a))
    }

    pub fn circle_f64(a: f64) -> Point {
        Point::Circle(Num::Float(a))
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            Point::Interval(_) => "interval",
            Point::Circle(_) => "circle",
            Point::Shift(_) => "shift",
        }
    }

    /// The coordinate of an interval or circle point.
    pub fn coordinate(&self) -> Option<&Num> {
        match self {
            Point::Interval(v) | Point::Circle(v) => Some(v),
            Point::Shift(_) => None,
        }
    }

    pub fn as_shift(&self) -> Option<&ShiftPoint> {
        match self {
            Point::Shift(s) => Some(s),
            _ => None,
        }
    }

    /// True when every coordinate is an exact rational (shift points always are).
    pub fn is_exact(&self) -> bool {
        match self {
            Point::Interval(v) | Point::Circle(v) => v.is_exact(),
            Point::Shift(_) => true,
        }
    }

    /// Same point with interval/circle coordinates converted to binary64.
    pub fn to_float(&self) -> Point {
        match self {
            Point::Interval(v) => Point::Interval(v.to_float()),
            Point::Circle(v) => Point::Circle(v.to_float()),
            Point::Shift(s) => Point::Shift(s.clone()),
        }
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Point::Interval(v) => write!(f, "{v}"),
            Point::Circle(v) => write!(f, "{v} (mod 1)"),
            Point::Shift(s) => write!(f, "{s}"),
        }
    }
}

/// An eventually periodic sequence `pre · period^∞` over `{0, …, alphabet-1}`.
///
/// Stored canonically: the period word is primitive and the preperiod is as
/// short as possible, so two values are equal iff the sequences are equal.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ShiftPoint {
    alphabet: u8,
    pre: Vec<u8>,
    period: Vec<u8>,
}

impl ShiftPoint {
    pub fn new(alphabet: u8, pre: Vec<u8>, period: Vec<u8>) -> Result<ShiftPoint> {
        if alphabet < 2 {
            return Err(Error::InvalidPoint(format!(
                "alphabet size must be at least 2, got {alphabet}"
            )));
        }
        if period.is_empty() {
            return Err(Error::InvalidPoint("shift period word must be nonempty".into()));
        }
        if let Some(&s) = pre.iter().chain(period.iter()).find(|&&s| s >= alphabet) {
            return Err(Error::InvalidPoint(format!(
                "symbol {s} outside alphabet of size {alphabet}"
            )));
        }
        let mut p = ShiftPoint {
            alphabet,
            pre,
            period,
        };
        p.canonicalize();
        Ok(p)
    }

    /// Parses words written with one digit (base 36) per symbol.
    pub fn parse(alphabet: u8, pre: &str, period: &str) -> Result<ShiftPoint> {
        ShiftPoint::new(alphabet, parse_word(pre)?, parse_word(period)?)
    }

    /// The periodic point `word^∞`.
    pub fn periodic(alphabet: u8, word: Vec<u8>) -> Result<ShiftPoint> {
        ShiftPoint::new(alphabet, Vec::new(), word)
    }

    /// A pseudorandom word of length `len` followed by the fixed tail `tail^∞`.
    pub fn random_prefix<R: Rng + ?Sized>(
        alphabet: u8,
        len: usize,
        tail: Vec<u8>,
        rng: &mut R,
    ) -> Result<ShiftPoint> {
        let pre = (0..len).map(|_| rng.gen_range(0..alphabet)).collect();
        ShiftPoint::new(alphabet, pre, tail)
    }

    fn canonicalize(&mut self) {
        let l = self.period.len();
        let prim = (1..=l)
            .find(|&d| l.is_multiple_of(d) && (d..l).all(|i| self.period[i] == self.period[i - d]))
            .unwrap_or(l);
        self.period.truncate(prim);
        while let (Some(&a), Some(&b)) = (self.pre.last(), self.period.last()) {
            if a != b {
                break;
            }
            self.pre.pop();
            self.period.rotate_right(1);
        }
    }

    pub fn alphabet(&self) -> u8 {
        self.alphabet
    }

    pub fn pre(&self) -> &[u8] {
        &self.pre
    }

    pub fn period(&self) -> &[u8] {
        &self.period
    }

    pub fn is_periodic(&self) -> bool {
        self.pre.is_empty()
    }

    pub fn symbol(&self, i: usize) -> u8 {
        if i < self.pre.len() {
            self.pre[i]
        } else {
            self.period[(i - self.pre.len()) % self.period.len()]
        }
    }

    /// First `n` symbols.
    pub fn prefix(&self, n: usize) -> Vec<u8> {
        (0..n).map(|i| self.symbol(i)).collect()
    }

    /// The left shift: drops the first symbol.
    pub fn shifted(&self) -> ShiftPoint {
        let mut out = self.clone();
        if out.pre.is_empty() {
            out.period.rotate_left(1);
        } else {
            out.pre.remove(0);
        }
        out
    }

    /// `(w_0 … w_{n-1})^∞` for the first `n` symbols of `self`.
    pub fn truncation(&self, n: usize) -> Result<ShiftPoint> {
        if n == 0 {
            return Err(Error::InvalidArgument("truncation length must be positive".into()));
        }
        ShiftPoint::periodic(self.alphabet(), self.prefix(n))
    }

    /// `d(a,b) = Σ_{i≥0} 2^{-(i+1)} [a_i ≠ b_i]`, exact.
    pub fn dist_exact(&self, o: &ShiftPoint) -> Result<Rational> {
        let p = self.pre.len().max(o.pre.len());
        let l = self.period.len().lcm(&o.period.len());
        if p + l > EXACT_SHIFT_WINDOW {
            return Err(Error::NotExact(format!(
                "shift window {} exceeds {EXACT_SHIFT_WINDOW}",
                p + l
            )));
        }
        let head = bits_to_uint((0..p).map(|i| self.symbol(i) != o.symbol(i)));
        let tail = bits_to_uint((p..p + l).map(|i| self.symbol(i) != o.symbol(i)));
        let one = BigUint::one();
        let cycle = (&one << l) - &one;
        let num = head * &cycle + tail;
        let den = (&one << p) * cycle;
        Ok(Rational::new(num.into(), den.into()))
    }

    /// Same metric in binary64; positions beyond 64 contribute below 2^-64.
    pub fn dist_f64(&self, o: &ShiftPoint) -> f64 {
        let mut acc = 0.0;
        let mut w = 0.5;
        for i in 0..64 {
            if self.symbol(i) != o.symbol(i) {
                acc += w;
            }
            w *= 0.5;
        }
        acc
    }
}

/// Big-endian bit sequence as an unsigned integer.
fn bits_to_uint(bits: impl Iterator<Item = bool>) -> BigUint {
    let bits: Vec<bool> = bits.collect();
    if bits.is_empty() {
        return BigUint::zero();
    }
    let mut digits = vec![0u32; bits.len().div_ceil(32)];
    for (k, &b) in bits.iter().rev().enumerate() {
        if b {
            digits[k / 32] |= 1 << (k % 32);
        }
    }
    BigUint::from_slice(&digits)
}

pub(crate) fn parse_word(s: &str) -> Result<Vec<u8>> {
    s.chars()
        .map(|c| {
            c.to_digit(36)
                .map(|d| d as u8)
                .ok_or_else(|| Error::InvalidPoint(format!("bad symbol {c:?} in word {s:?}")))
        })
        .collect()
}

pub(crate) fn format_word(w: &[u8]) -> String {
    w.iter()
        .map(|&s| std::char::from_digit(s as u32, 36).unwrap_or('?'))
        .collect()
}

impl fmt::Display for ShiftPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({})^inf", format_word(&self.pre), format_word(&self.period))
    }
}

/// JSON form of a point.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PointDoc {
    Interval {
        value: Num,
    },
    Circle {
        angle: Num,
    },
    Shift {
        #[serde(default)]
        pre: String,
        period: String,
        #[serde(default = "default_alphabet")]
        alphabet: u8,
    },
}

fn default_alphabet() -> u8 {
    2
}

impl TryFrom<PointDoc> for Point {
    type Error = Error;

    fn try_from(doc: PointDoc) -> Result<Point> {
        match doc {
            PointDoc::Interval { value } => {
                let f = value.to_f64();
                if !(0.0..=1.0).contains(&f) || f.is_nan() {
                    return Err(Error::InvalidPoint(format!("interval value {value} outside [0,1]")));
                }
                Ok(Point::Interval(value))
            }
            PointDoc::Circle { angle } => Ok(Point::Circle(reduce_mod1(&angle))),
            PointDoc::Shift {
                pre,
                period,
                alphabet,
            } => Ok(Point::Shift(ShiftPoint::parse(alphabet, &pre, &period)?)),
        }
    }
}

impl From<Point> for PointDoc {
    fn from(p: Point) -> PointDoc {
        match p {
            Point::Interval(value) => PointDoc::Interval { value },
            Point::Circle(angle) => PointDoc::Circle { angle },
            Point::Shift(s) => PointDoc::Shift {
                pre: format_word(&s.pre),
                period: format_word(&s.period),
                alphabet: s.alphabet,
            },
        }
    }
}

/// Reduces an angle into `[0, 1)`.
pub fn reduce_mod1(a: &Num) -> Num {
    match a {
        Num::Exact(r) => Num::Exact(r - r.floor()),
        Num::Float(x) => {
            let y = x.rem_euclid(1.0);
            Num::Float(if y >= 1.0 { 0.0 } else { y })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::num::rat;

    #[test]
    fn canonical_form_merges_equal_sequences() {
        let a = ShiftPoint::parse(2, "0101", "01").unwrap();
        let b = ShiftPoint::parse(2, "", "0101").unwrap();
        assert_eq!(a, b);
        assert!(a.is_periodic());
        assert_eq!(a.period(), &[0, 1]);
        let c = ShiftPoint::parse(2, "1", "01").unwrap();
        assert_eq!(c, ShiftPoint::parse(2, "", "10").unwrap());
    }

    #[test]
    fn shift_drops_head() {
        let a = ShiftPoint::parse(2, "0", "1").unwrap();
        assert_eq!(a.shifted(), ShiftPoint::parse(2, "", "1").unwrap());
        let b = ShiftPoint::parse(2, "", "011").unwrap();
        assert_eq!(b.shifted().period(), &[1, 1, 0]);
    }

    #[test]
    fn exact_distance_closed_form() {
        let zeros = ShiftPoint::parse(2, "", "0").unwrap();
        let ones = ShiftPoint::parse(2, "", "1").unwrap();
        assert_eq!(zeros.dist_exact(&ones).unwrap(), rat(1, 1));
        // 0^∞ vs (01)^∞ differ at odd positions: 1/4 + 1/16 + … = 1/3
        let alt = ShiftPoint::parse(2, "", "01").unwrap();
        assert_eq!(zeros.dist_exact(&alt).unwrap(), rat(1, 3));
        // differ only at position 2
        let x = ShiftPoint::parse(2, "001", "0").unwrap();
        assert_eq!(zeros.dist_exact(&x).unwrap(), rat(1, 8));
        assert!((zeros.dist_f64(&alt) - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_symbols() {
        assert!(ShiftPoint::parse(2, "2", "0").is_err());
        assert!(ShiftPoint::parse(2, "", "").is_err());
        assert!(ShiftPoint::parse(1, "", "0").is_err());
    }

    #[test]
    fn point_json_forms() {
        let p: Point = serde_json::from_str(r#"{"kind":"interval","value":"2/5"}"#).unwrap();
        assert_eq!(p, Point::interval(rat(2, 5)));
        let s: Point =
            serde_json::from_str(r#"{"kind":"shift","pre":"01","period":"01","alphabet":2}"#)
                .unwrap();
        // 01(01)^∞ = (01)^∞
        assert_eq!(s, Point::Shift(ShiftPoint::parse(2, "", "01").unwrap()));
        let back = serde_json::to_string(&s).unwrap();
        assert_eq!(back, r#"{"kind":"shift","pre":"","period":"01","alphabet":2}"#);
        assert!(serde_json::from_str::<Point>(r#"{"kind":"interval","value":"3/2"}"#).is_err());
    }
}
