use std::fmt;
use std::sync::Arc;

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use super::point::{reduce_mod1, Point};
use crate::error::{Error, Result};
use crate::num::{rat, rational_to_f64, rational_vec, Num, Rational};

/// `x ↦ slope·x + intercept`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Affine {
    #[serde(with = "crate::num::rational_str")]
    pub slope: Rational,
    #[serde(with = "crate::num::rational_str")]
    pub intercept: Rational,
}

impl Affine {
    pub fn new(slope: Rational, intercept: Rational) -> Affine {
        Affine { slope, intercept }
    }

    pub fn eval(&self, x: &Rational) -> Rational {
        &self.slope * x + &self.intercept
    }

    /// `self ∘ inner`.
    pub fn compose(&self, inner: &Affine) -> Affine {
        Affine {
            slope: &self.slope * &inner.slope,
            intercept: &self.slope * &inner.intercept + &self.intercept,
        }
    }
}

/// A continuous piecewise-affine self-map of `[0,1]` with rational data.
#[derive(Clone, Debug, PartialEq)]
pub struct PiecewiseLinear {
    breakpoints: Vec<Rational>,
    pieces: Vec<Affine>,
    float_pieces: Vec<(f64, f64)>,
    float_breaks: Vec<f64>,
}

impl PiecewiseLinear {
    /// Checks `0 = b₀ < … < b_k = 1`, continuity at interior breakpoints and
    /// that every piece maps into `[0,1]`.
    pub fn new(breakpoints: Vec<Rational>, pieces: Vec<Affine>) -> Result<PiecewiseLinear> {
        if breakpoints.len() < 2 || pieces.len() + 1 != breakpoints.len() {
            return Err(Error::InvalidSystem(format!(
                "{} breakpoints need {} pieces, got {}",
                breakpoints.len(),
                breakpoints.len().saturating_sub(1),
                pieces.len()
            )));
        }
        if !breakpoints[0].is_zero() || !breakpoints[breakpoints.len() - 1].is_one() {
            return Err(Error::InvalidSystem("breakpoints must start at 0 and end at 1".into()));
        }
        if breakpoints.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidSystem("breakpoints must be strictly increasing".into()));
        }
        for (k, piece) in pieces.iter().enumerate() {
            for b in [&breakpoints[k], &breakpoints[k + 1]] {
                let y = piece.eval(b);
                if y.is_negative() || y > Rational::one() {
                    return Err(Error::InvalidSystem(format!(
                        "piece {k} maps {b} to {y}, outside [0,1]"
                    )));
                }
            }
            if k > 0 {
                let b = &breakpoints[k];
                let left = pieces[k - 1].eval(b);
                let right = piece.eval(b);
                if left != right {
                    return Err(Error::InvalidSystem(format!(
                        "discontinuous at {b}: {left} from the left, {right} from the right"
                    )));
                }
            }
        }
        let float_pieces = pieces
            .iter()
            .map(|p| (rational_to_f64(&p.slope), rational_to_f64(&p.intercept)))
            .collect();
        let float_breaks = breakpoints.iter().map(rational_to_f64).collect();
        Ok(PiecewiseLinear {
            breakpoints,
            pieces,
            float_pieces,
            float_breaks,
        })
    }

    /// Builds a map by linear interpolation of `(x, f(x))` nodes.
    pub fn from_nodes(nodes: &[(Rational, Rational)]) -> Result<PiecewiseLinear> {
        if nodes.len() < 2 {
            return Err(Error::InvalidSystem("need at least two nodes".into()));
        }
        let mut pieces = Vec::with_capacity(nodes.len() - 1);
        for w in nodes.windows(2) {
            let (x0, y0) = &w[0];
            let (x1, y1) = &w[1];
            if x1 <= x0 {
                return Err(Error::InvalidSystem("node abscissae must increase".into()));
            }
            let slope = (y1 - y0) / (x1 - x0);
            let intercept = y0 - &slope * x0;
            pieces.push(Affine::new(slope, intercept));
        }
        PiecewiseLinear::new(nodes.iter().map(|(x, _)| x.clone()).collect(), pieces)
    }

    /// Tent map `2x` on `[0,1/2]`, `2-2x` on `[1/2,1]`.
    pub fn tent() -> PiecewiseLinear {
        PiecewiseLinear::from_nodes(&[
            (rat(0, 1), rat(0, 1)),
            (rat(1, 2), rat(1, 1)),
            (rat(1, 1), rat(0, 1)),
        ])
        .expect("tent map is valid")
    }

    /// Transitive, non-mixing map swapping `[0,1/2]` and `[1/2,1]`:
    /// `1-x` on `[0,1/2]`, `|4x-3|/2` on `[1/2,1]`.
    pub fn swap() -> PiecewiseLinear {
        PiecewiseLinear::from_nodes(&[
            (rat(0, 1), rat(1, 1)),
            (rat(1, 2), rat(1, 2)),
            (rat(3, 4), rat(0, 1)),
            (rat(1, 1), rat(1, 2)),
        ])
        .expect("swap map is valid")
    }

    /// Map exchanging the disjoint bands `[0,1/3]` and `[2/3,1]`; its square is
    /// a tent map on each band.
    pub fn two_band() -> PiecewiseLinear {
        PiecewiseLinear::from_nodes(&[
            (rat(0, 1), rat(2, 3)),
            (rat(1, 3), rat(1, 1)),
            (rat(2, 3), rat(0, 1)),
            (rat(5, 6), rat(1, 3)),
            (rat(1, 1), rat(0, 1)),
        ])
        .expect("two-band map is valid")
    }

    pub fn breakpoints(&self) -> &[Rational] {
        &self.breakpoints
    }

    pub fn pieces(&self) -> &[Affine] {
        &self.pieces
    }

    /// Index of a piece whose closed domain contains `x`.
    pub fn piece_index(&self, x: &Rational) -> usize {
        let k = self.breakpoints.partition_point(|b| b <= x);
        k.saturating_sub(1).min(self.pieces.len() - 1)
    }

    pub fn eval_exact(&self, x: &Rational) -> Rational {
        self.pieces[self.piece_index(x)].eval(x)
    }

    pub fn eval_f64(&self, x: f64) -> f64 {
        let k = self
            .float_breaks
            .partition_point(|&b| b <= x)
            .saturating_sub(1)
            .min(self.pieces.len() - 1);
        let (a, b) = self.float_pieces[k];
        (a * x + b).clamp(0.0, 1.0)
    }

    /// Exact image `f([lo, hi])` (an interval, by continuity).
    pub fn image(&self, lo: &Rational, hi: &Rational) -> (Rational, Rational) {
        let mut vals = vec![self.eval_exact(lo), self.eval_exact(hi)];
        vals.extend(
            self.breakpoints
                .iter()
                .filter(|b| *b > lo && *b < hi)
                .map(|b| self.eval_exact(b)),
        );
        let min = vals.iter().min().cloned().expect("nonempty");
        let max = vals.iter().max().cloned().expect("nonempty");
        (min, max)
    }
}

/// A binary64 map of `[0,1]` given by a formula or a closure.
#[derive(Clone)]
pub struct GeneralInterval {
    name: String,
    formula: Formula,
}

#[derive(Clone)]
enum Formula {
    Logistic { r: f64 },
    Custom(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl GeneralInterval {
    pub fn logistic(r: f64) -> Result<GeneralInterval> {
        if !(0.0..=4.0).contains(&r) {
            return Err(Error::InvalidSystem(format!("logistic parameter {r} outside [0,4]")));
        }
        Ok(GeneralInterval {
            name: format!("logistic(r={r})"),
            formula: Formula::Logistic { r },
        })
    }

    /// Wraps an arbitrary map; outputs are clamped into `[0,1]`.
    pub fn custom(name: impl Into<String>, f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        GeneralInterval {
            name: name.into(),
            formula: Formula::Custom(Arc::new(f)),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn eval(&self, x: f64) -> f64 {
        let y = match &self.formula {
            Formula::Logistic { r } => r * x * (1.0 - x),
            Formula::Custom(f) => f(x),
        };
        y.clamp(0.0, 1.0)
    }
}

impl fmt::Debug for GeneralInterval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GeneralInterval").field("name", &self.name).finish()
    }
}

/// A map together with its diameter-1 metric.
#[derive(Clone, Debug)]
pub enum System {
    PiecewiseLinear(PiecewiseLinear),
    GeneralInterval(GeneralInterval),
    /// `θ ↦ θ + alpha (mod 1)`, metric `2 ×` shortest arc.
    CircleRotation { alpha: Num },
    /// Left shift on `{0,…,alphabet-1}^ℕ`, metric `Σ 2^{-(i+1)} [a_i ≠ b_i]`.
    FullShift { alphabet: u8 },
}

impl System {
    pub fn tent() -> System {
        System::PiecewiseLinear(PiecewiseLinear::tent())
    }

    pub fn swap() -> System {
        System::PiecewiseLinear(PiecewiseLinear::swap())
    }

    pub fn two_band() -> System {
        System::PiecewiseLinear(PiecewiseLinear::two_band())
    }

    pub fn rotation(alpha: Num) -> System {
        System::CircleRotation {
            alpha: reduce_mod1(&alpha),
        }
    }

    pub fn full_shift(alphabet: u8) -> Result<System> {
        if alphabet < 2 {
            return Err(Error::InvalidSystem(format!(
                "alphabet size must be at least 2, got {alphabet}"
            )));
        }
        Ok(System::FullShift { alphabet })
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            System::PiecewiseLinear(_) => "piecewise_linear",
            System::GeneralInterval(_) => "general_interval",
            System::CircleRotation { .. } => "circle_rotation",
            System::FullShift { .. } => "full_shift",
        }
    }

    pub fn as_piecewise(&self) -> Option<&PiecewiseLinear> {
        match self {
            System::PiecewiseLinear(p) => Some(p),
            _ => None,
        }
    }

    pub fn is_interval(&self) -> bool {
        matches!(self, System::PiecewiseLinear(_) | System::GeneralInterval(_))
    }

    /// Rejects points of another space.
    pub fn check_point(&self, p: &Point) -> Result<()> {
        let ok = match (self, p) {
            (System::PiecewiseLinear(_) | System::GeneralInterval(_), Point::Interval(_)) => true,
            (System::CircleRotation { .. }, Point::Circle(_)) => true,
            (System::FullShift { alphabet }, Point::Shift(s)) => {
                if s.alphabet() != *alphabet {
                    return Err(Error::InvalidPoint(format!(
                        "shift point over {} symbols in a {alphabet}-symbol shift",
                        s.alphabet()
                    )));
                }
                true
            }
            _ => false,
        };
        if ok {
            Ok(())
        } else {
            Err(self.mismatch(p))
        }
    }

    fn mismatch(&self, p: &Point) -> Error {
        Error::VariantMismatch {
            point: p.kind_name(),
            system: self.kind_name(),
        }
    }

    /// `T(p)`; exact for rational points of piecewise-linear maps and rotations.
    pub fn apply(&self, p: &Point) -> Result<Point> {
        self.check_point(p)?;
        Ok(match (self, p) {
            (System::PiecewiseLinear(f), Point::Interval(v)) => Point::Interval(match v {
                Num::Exact(r) => Num::Exact(f.eval_exact(r)),
                Num::Float(x) => Num::Float(f.eval_f64(*x)),
            }),
            (System::GeneralInterval(g), Point::Interval(v)) => {
                Point::Interval(Num::Float(g.eval(v.to_f64())))
            }
            (System::CircleRotation { alpha }, Point::Circle(a)) => {
                Point::Circle(reduce_mod1(&a.add(alpha)))
            }
            (System::FullShift { .. }, Point::Shift(s)) => Point::Shift(s.shifted()),
            _ => unreachable!("checked above"),
        })
    }

    /// `T^k(p)`.
    pub fn iterate(&self, p: &Point, k: usize) -> Result<Point> {
        let mut x = p.clone();
        self.check_point(&x)?;
        for _ in 0..k {
            x = self.apply(&x)?;
        }
        Ok(x)
    }

    /// `[x, Tx, …, T^{n-1}x]`.
    pub fn orbit(&self, x: &Point, n: usize) -> Result<Vec<Point>> {
        if n == 0 {
            return Err(Error::InvalidArgument("orbit length must be positive".into()));
        }
        self.check_point(x)?;
        let mut out = Vec::with_capacity(n);
        out.push(x.clone());
        while out.len() < n {
            let next = self.apply(out.last().expect("nonempty"))?;
            out.push(next);
        }
        Ok(out)
    }

    /// Distance, exact whenever both points allow it.
    pub fn dist(&self, a: &Point, b: &Point) -> Result<Num> {
        match self.dist_exact(a, b) {
            Ok(r) => Ok(Num::Exact(r)),
            Err(Error::NotExact(_)) => self.dist_f64(a, b).map(Num::Float),
            Err(e) => Err(e),
        }
    }

    /// Exact rational distance, or `NotExact` when a coordinate is a float,
    /// the map is a float map, or a shift window is too long.
    pub fn dist_exact(&self, a: &Point, b: &Point) -> Result<Rational> {
        self.check_point(a)?;
        self.check_point(b)?;
        match (self, a, b) {
            (System::GeneralInterval(_), _, _) => {
                Err(Error::NotExact("general interval maps use binary64".into()))
            }
            (_, Point::Interval(x), Point::Interval(y)) => match (x, y) {
                (Num::Exact(x), Num::Exact(y)) => Ok((x - y).abs()),
                _ => Err(Error::NotExact("float interval coordinate".into())),
            },
            (_, Point::Circle(x), Point::Circle(y)) => match (x, y) {
                (Num::Exact(x), Num::Exact(y)) => {
                    let d = (x - y).abs();
                    let d = &d - d.floor();
                    let other = Rational::one() - &d;
                    Ok(Rational::from_integer(2.into()) * d.min(other))
                }
                _ => Err(Error::NotExact("float circle coordinate".into())),
            },
            (_, Point::Shift(x), Point::Shift(y)) => x.dist_exact(y),
            _ => unreachable!("checked above"),
        }
    }

    pub fn dist_f64(&self, a: &Point, b: &Point) -> Result<f64> {
        self.check_point(a)?;
        self.check_point(b)?;
        Ok(match (a, b) {
            (Point::Interval(x), Point::Interval(y)) => (x.to_f64() - y.to_f64()).abs(),
            (Point::Circle(x), Point::Circle(y)) => circle_dist_f64(x.to_f64(), y.to_f64()),
            (Point::Shift(x), Point::Shift(y)) => x.dist_f64(y),
            _ => unreachable!("checked above"),
        })
    }

    /// Whether exact distances are possible at all (shift distances also need
    /// short windows, see [`super::EXACT_SHIFT_WINDOW`]).
    pub fn exact_capable(&self) -> bool {
        !matches!(self, System::GeneralInterval(_))
            && !matches!(self, System::CircleRotation { alpha: Num::Float(_) })
    }
}

pub(crate) fn circle_dist_f64(x: f64, y: f64) -> f64 {
    let d = (x - y).abs().rem_euclid(1.0);
    2.0 * d.min(1.0 - d)
}

/// JSON form of a system.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SystemDoc {
    PiecewiseLinear {
        #[serde(with = "rational_vec")]
        breakpoints: Vec<Rational>,
        pieces: Vec<Affine>,
    },
    Tent,
    Swap,
    TwoBand,
    Logistic {
        r: f64,
    },
    Rotation {
        alpha: Num,
    },
    FullShift {
        #[serde(default = "two")]
        alphabet: u8,
    },
}

fn two() -> u8 {
    2
}

impl TryFrom<SystemDoc> for System {
    type Error = Error;

    fn try_from(doc: SystemDoc) -> Result<System> {
        Ok(match doc {
            SystemDoc::PiecewiseLinear {
                breakpoints,
                pieces,
            } => System::PiecewiseLinear(PiecewiseLinear::new(breakpoints, pieces)?),
            SystemDoc::Tent => System::tent(),
            SystemDoc::Swap => System::swap(),
            SystemDoc::TwoBand => System::two_band(),
            SystemDoc::Logistic { r } => System::GeneralInterval(GeneralInterval::logistic(r)?),
            SystemDoc::Rotation { alpha } => System::rotation(alpha),
            SystemDoc::FullShift { alphabet } => System::full_shift(alphabet)?,
        })
    }
}

impl TryFrom<&System> for SystemDoc {
    type Error = Error;

    fn try_from(s: &System) -> Result<SystemDoc> {
        Ok(match s {
            System::PiecewiseLinear(p) => SystemDoc::PiecewiseLinear {
                breakpoints: p.breakpoints.clone(),
                pieces: p.pieces.clone(),
            },
            System::GeneralInterval(g) => match g.formula {
                Formula::Logistic { r } => SystemDoc::Logistic { r },
                Formula::Custom(_) => {
                    return Err(Error::InvalidSystem(format!(
                        "custom map {:?} has no JSON form",
                        g.name
                    )))
                }
            },
            System::CircleRotation { alpha } => SystemDoc::Rotation {
                alpha: alpha.clone(),
            },
            System::FullShift { alphabet } => SystemDoc::FullShift {
                alphabet: *alphabet,
            },
        })
    }
}

impl Serialize for System {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        SystemDoc::try_from(self)
            .map_err(serde::ser::Error::custom)?
            .serialize(s)
    }
}

impl<'de> Deserialize<'de> for System {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<System, D::Error> {
        let doc = SystemDoc::deserialize(d)?;
        System::try_from(doc).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::num::rat;
    use crate::dynsys::ShiftPoint;

    #[test]
    fn tent_evaluation_is_exact() {
        let t = System::tent();
        let p = Point::interval(rat(2, 5));
        assert_eq!(t.apply(&p).unwrap(), Point::interval(rat(4, 5)));
        let orbit = t.orbit(&Point::interval(rat(1, 3)), 3).unwrap();
        assert_eq!(
            orbit,
            vec![
                Point::interval(rat(1, 3)),
                Point::interval(rat(2, 3)),
                Point::interval(rat(2, 3))
            ]
        );
    }

    #[test]
    fn rejects_discontinuous_maps() {
        // x + 1/2 on [0,1/2] jumps at 1/2
        let err = PiecewiseLinear::new(
            vec![rat(0, 1), rat(1, 2), rat(1, 1)],
            vec![
                Affine::new(rat(1, 1), rat(1, 2)),
                Affine::new(rat(2, 1), rat(-1, 1)),
            ],
        );
        assert!(matches!(err, Err(Error::InvalidSystem(_))));
        let out_of_range = PiecewiseLinear::new(
            vec![rat(0, 1), rat(1, 1)],
            vec![Affine::new(rat(2, 1), rat(0, 1))],
        );
        assert!(out_of_range.is_err());
    }

    #[test]
    fn rotation_adds_mod_one() {
        let r = System::rotation(Num::exact(3, 10));
        let p = Point::circle(rat(9, 10));
        assert_eq!(r.apply(&p).unwrap(), Point::circle(rat(1, 5)));
        let q = System::rotation(Num::exact(1, 4));
        let orbit = q.orbit(&Point::circle(rat(0, 1)), 4).unwrap();
        assert_eq!(orbit[3], Point::circle(rat(3, 4)));
    }

    #[test]
    fn distances_per_variant() {
        let t = System::tent();
        let d = t
            .dist(&Point::interval(rat(1, 5)), &Point::interval(rat(7, 10)))
            .unwrap();
        assert_eq!(d, Num::exact(1, 2));
        let c = System::rotation(Num::exact(1, 3));
        let d = c
            .dist(&Point::circle(rat(19, 20)), &Point::circle(rat(1, 20)))
            .unwrap();
        assert_eq!(d, Num::exact(1, 5));
        let s = System::full_shift(2).unwrap();
        let z = Point::Shift(ShiftPoint::parse(2, "", "0").unwrap());
        let o = Point::Shift(ShiftPoint::parse(2, "", "1").unwrap());
        assert_eq!(s.dist(&z, &o).unwrap(), Num::one());
        assert!(matches!(
            s.dist(&z, &Point::interval(rat(0, 1))),
            Err(Error::VariantMismatch { .. })
        ));
    }

    #[test]
    fn float_points_give_float_distances() {
        let t = System::tent();
        let d = t
            .dist(&Point::interval_f64(0.25), &Point::interval(rat(3, 4)))
            .unwrap();
        assert_eq!(d, Num::Float(0.5));
    }

    #[test]
    fn builtin_maps_hit_expected_values() {
        let g = PiecewiseLinear::swap();
        assert_eq!(g.eval_exact(&rat(1, 2)), rat(1, 2));
        assert_eq!(g.eval_exact(&rat(0, 1)), rat(1, 1));
        assert_eq!(g.image(&rat(1, 2), &rat(1, 1)), (rat(0, 1), rat(1, 2)));
        let b = PiecewiseLinear::two_band();
        assert_eq!(b.image(&rat(0, 1), &rat(1, 3)), (rat(2, 3), rat(1, 1)));
        assert_eq!(b.image(&rat(2, 3), &rat(1, 1)), (rat(0, 1), rat(1, 3)));
    }

    #[test]
    fn system_json() {
        let s: System = serde_json::from_str(
            r#"{"kind":"piecewise_linear","breakpoints":["0","1/2","1"],
                "pieces":[{"slope":"2","intercept":"0"},{"slope":"-2","intercept":"2"}]}"#,
        )
        .unwrap();
        assert_eq!(s.as_piecewise().unwrap(), &PiecewiseLinear::tent());
        let text = serde_json::to_string(&s).unwrap();
        let back: System = serde_json::from_str(&text).unwrap();
        assert_eq!(back.as_piecewise().unwrap(), &PiecewiseLinear::tent());
        let custom = System::GeneralInterval(GeneralInterval::custom("id", |x| x));
        assert!(serde_json::to_string(&custom).is_err());
    }
}
