//! Finite-horizon estimators for the mean orbital pseudo-metric, the
//! Besicovitch pseudo-metric and the set of limit measures of an orbit.

use num_traits::ToPrimitive;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynsys::{DiscreteMeasure, Point, ShiftPoint, System};
use crate::error::{Error, Result};
use crate::num::{Num, Rational};
use crate::transport::{matching_cost, w1_discrete};

/// Default number of trailing horizons whose maximum estimates the limsup.
pub const DEFAULT_TAIL_WINDOW: usize = 3;
/// Default bin count for interval and circle snapshots.
pub const DEFAULT_BINS: usize = 64;
/// Default cylinder length for shift snapshots.
pub const DEFAULT_CYLINDER: usize = 6;

/// How a measure is pushed onto finitely many representative points.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "size", rename_all = "snake_case")]
pub enum Coarsening {
    /// `b` equal bins of `[0,1]`, represented by their midpoints.
    IntervalBins(usize),
    /// `b` equal arcs of the circle, represented by their midpoints.
    CircleBins(usize),
    /// Cylinders of length `L`, represented by `w_0…w_{L-1} 0^∞`.
    Cylinders(usize),
}

impl Coarsening {
    pub fn default_for(system: &System) -> Coarsening {
        match system {
            System::PiecewiseLinear(_) | System::GeneralInterval(_) => {
                Coarsening::IntervalBins(DEFAULT_BINS)
            }
            System::CircleRotation { .. } => Coarsening::CircleBins(DEFAULT_BINS),
            System::FullShift { .. } => Coarsening::Cylinders(DEFAULT_CYLINDER),
        }
    }

    /// Same kind as the system's default with a different resolution.
    pub fn with_size(system: &System, size: usize) -> Coarsening {
        match Coarsening::default_for(system) {
            Coarsening::IntervalBins(_) => Coarsening::IntervalBins(size),
            Coarsening::CircleBins(_) => Coarsening::CircleBins(size),
            Coarsening::Cylinders(_) => Coarsening::Cylinders(size),
        }
    }

    fn representative(&self, p: &Point) -> Result<Point> {
        let bin = |v: &Num, b: usize| -> Result<Point> {
            if b == 0 {
                return Err(Error::InvalidArgument("coarsening needs at least one bin".into()));
            }
            let k = match v {
                Num::Exact(r) => (r * Rational::from_integer(b.into()))
                    .floor()
                    .to_integer()
                    .to_usize()
                    .unwrap_or(0),
                Num::Float(x) => (x * b as f64).floor().max(0.0) as usize,
            }
            .min(b - 1);
            Ok(Num::Exact(Rational::new((2 * k + 1).into(), (2 * b).into())).into_point_like(p))
        };
        match (self, p) {
            (Coarsening::IntervalBins(b), Point::Interval(v)) => bin(v, *b),
            (Coarsening::CircleBins(b), Point::Circle(v)) => bin(&crate::dynsys::reduce_mod1(v), *b),
            (Coarsening::Cylinders(l), Point::Shift(s)) => {
                Ok(Point::Shift(ShiftPoint::new(s.alphabet(), s.prefix(*l), vec![0])?))
            }
            _ => Err(Error::InvalidArgument(format!(
                "coarsening {self:?} does not apply to a {} point",
                p.kind_name()
            ))),
        }
    }
}

trait IntoPointLike {
    fn into_point_like(self, like: &Point) -> Point;
}

impl IntoPointLike for Num {
    fn into_point_like(self, like: &Point) -> Point {
        match like {
            Point::Circle(_) => Point::Circle(self),
            _ => Point::Interval(self),
        }
    }
}

/// A coarsened measure with an upper bound on `γ(original, coarsened)`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Coarsened {
    pub measure: DiscreteMeasure,
    /// Cost of the coupling that moves each atom to its representative.
    pub error_bound: Num,
}

/// Pushes `mu` onto the representatives of `c`.
pub fn coarsen(system: &System, mu: &DiscreteMeasure, c: &Coarsening) -> Result<Coarsened> {
    let mut support = Vec::with_capacity(mu.len());
    let mut weights = Vec::with_capacity(mu.len());
    let mut error = Num::zero();
    for (p, w) in mu.iter() {
        let r = c.representative(p)?;
        error = error.add(&system.dist(p, &r)?.mul(&Num::Exact(w.clone())));
        support.push(r);
        weights.push(w.clone());
    }
    Ok(Coarsened {
        measure: DiscreteMeasure::new(support, weights)?,
        error_bound: error,
    })
}

/// `γ(m_T(x,n), m_T(y,n)) = min_σ (1/n) Σ d(T^i x, T^σ(i) y)`.
pub fn ebar_finite(system: &System, x: &Point, y: &Point, n: usize) -> Result<Num> {
    if n == 0 {
        return Err(Error::InvalidArgument("horizon must be positive".into()));
    }
    matching_cost(system, &system.orbit(x, n)?, &system.orbit(y, n)?)
}

/// `(1/n) Σ d(T^i x, T^i y)`.
pub fn besicovitch_finite(system: &System, x: &Point, y: &Point, n: usize) -> Result<Num> {
    if n == 0 {
        return Err(Error::InvalidArgument("horizon must be positive".into()));
    }
    let a = system.orbit(x, n)?;
    let b = system.orbit(y, n)?;
    let mut total = Num::zero();
    for (p, q) in a.iter().zip(&b) {
        total = total.add(&system.dist(p, q)?);
    }
    Ok(total.div_int(n))
}

/// Per-horizon values of [`ebar_finite`] and a tail-window limsup estimate.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EbarEstimate {
    pub horizons: Vec<usize>,
    pub values: Vec<Num>,
    pub limsup_estimate: Num,
    pub tail_window: usize,
}

impl EbarEstimate {
    /// `horizon,value` rows with a header line.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("horizon,value\n");
        for (h, v) in self.horizons.iter().zip(&self.values) {
            out.push_str(&format!("{h},{}\n", crate::num::format_f64(v.to_f64())));
        }
        out
    }
}

fn check_horizons(horizons: &[usize]) -> Result<()> {
    if horizons.is_empty() {
        return Err(Error::InvalidArgument("no horizons".into()));
    }
    if horizons[0] == 0 || horizons.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidArgument("horizons must be positive and increasing".into()));
    }
    Ok(())
}

/// [`ebar_finite`] at each horizon (computed in parallel); the limsup is
/// estimated by the maximum over the last `tail_window` horizons.
pub fn ebar_estimate(
    system: &System,
    x: &Point,
    y: &Point,
    horizons: &[usize],
    tail_window: usize,
) -> Result<EbarEstimate> {
    check_horizons(horizons)?;
    if tail_window == 0 || tail_window > horizons.len() {
        return Err(Error::InvalidArgument(format!(
            "tail window {tail_window} must be in 1..={}",
            horizons.len()
        )));
    }
    let max = *horizons.last().expect("nonempty");
    let a = system.orbit(x, max)?;
    let b = system.orbit(y, max)?;
    let values = horizons
        .par_iter()
        .map(|&h| matching_cost(system, &a[..h], &b[..h]))
        .collect::<Result<Vec<_>>>()?;
    let limsup_estimate = values[values.len() - tail_window..]
        .iter()
        .cloned()
        .fold(Num::zero(), Num::max_value);
    Ok(EbarEstimate {
        horizons: horizons.to_vec(),
        values,
        limsup_estimate,
        tail_window,
    })
}

/// Coarsened empirical snapshots at checkpoints and their pairwise γ.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MeasureLimitSetEstimate {
    pub checkpoints: Vec<usize>,
    pub coarsening: Coarsening,
    pub snapshots: Vec<DiscreteMeasure>,
    /// `γ(m(seq, n), snapshot)` upper bounds, one per checkpoint.
    pub coarsening_errors: Vec<Num>,
    pub pairwise_gamma: Vec<Vec<Num>>,
}

/// Limit-set snapshots of the orbit of `x`.
pub fn vset_estimate(
    system: &System,
    x: &Point,
    checkpoints: &[usize],
    coarsening: &Coarsening,
) -> Result<MeasureLimitSetEstimate> {
    check_horizons(checkpoints)?;
    let orbit = system.orbit(x, *checkpoints.last().expect("nonempty"))?;
    vset_estimate_seq(system, &orbit, checkpoints, coarsening)
}

/// Limit-set snapshots of an arbitrary sequence of points.
pub fn vset_estimate_seq(
    system: &System,
    seq: &[Point],
    checkpoints: &[usize],
    coarsening: &Coarsening,
) -> Result<MeasureLimitSetEstimate> {
    check_horizons(checkpoints)?;
    let max = *checkpoints.last().expect("nonempty");
    if max > seq.len() {
        return Err(Error::SizeMismatch(format!(
            "checkpoint {max} beyond sequence of length {}",
            seq.len()
        )));
    }
    let coarse = checkpoints
        .par_iter()
        .map(|&n| {
            let raw = DiscreteMeasure::uniform(&seq[..n])?;
            coarsen(system, &raw, coarsening)
        })
        .collect::<Result<Vec<_>>>()?;
    let k = coarse.len();
    let pairs: Vec<(usize, usize)> = (0..k).flat_map(|i| (i + 1..k).map(move |j| (i, j))).collect();
    let vals = pairs
        .par_iter()
        .map(|&(i, j)| Ok(w1_discrete(&coarse[i].measure, &coarse[j].measure, system)?.0))
        .collect::<Result<Vec<Num>>>()?;
    let mut pairwise_gamma = vec![vec![Num::zero(); k]; k];
    for (&(i, j), v) in pairs.iter().zip(vals) {
        pairwise_gamma[i][j] = v.clone();
        pairwise_gamma[j][i] = v;
    }
    let (snapshots, coarsening_errors) = coarse.into_iter().map(|c| (c.measure, c.error_bound)).unzip();
    Ok(MeasureLimitSetEstimate {
        checkpoints: checkpoints.to_vec(),
        coarsening: *coarsening,
        snapshots,
        coarsening_errors,
        pairwise_gamma,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::num::rat;
    use crate::transport::gamma;

    fn ip(n: i64, d: i64) -> Point {
        Point::interval(rat(n, d))
    }

    fn sp(pre: &str, period: &str) -> Point {
        Point::Shift(ShiftPoint::parse(2, pre, period).unwrap())
    }

    #[test]
    fn ebar_examples() {
        let t = System::tent();
        assert!(ebar_finite(&t, &ip(1, 7), &ip(1, 7), 9).unwrap().is_zero());
        let s = System::full_shift(2).unwrap();
        assert_eq!(ebar_finite(&s, &sp("", "0"), &sp("", "1"), 5).unwrap(), Num::one());
        assert_eq!(ebar_finite(&t, &ip(2, 5), &ip(2, 3), 4).unwrap(), Num::exact(1, 5));
    }

    #[test]
    fn besicovitch_dominates_ebar() {
        let t = System::tent();
        let s = System::full_shift(2).unwrap();
        assert!(besicovitch_finite(&t, &ip(1, 3), &ip(1, 3), 6).unwrap().is_zero());
        assert_eq!(besicovitch_finite(&s, &sp("", "0"), &sp("", "1"), 3).unwrap(), Num::one());
        for (x, y) in [(ip(2, 5), ip(4, 5)), (ip(1, 9), ip(2, 7))] {
            let e = ebar_finite(&t, &x, &y, 8).unwrap();
            let b = besicovitch_finite(&t, &x, &y, 8).unwrap();
            assert!(e.cmp_value(&b).is_le());
        }
        // same orbit, out of phase: Besicovitch sees it, E-bar does not
        assert_eq!(besicovitch_finite(&t, &ip(2, 5), &ip(4, 5), 2).unwrap(), Num::exact(2, 5));
        assert!(ebar_finite(&t, &ip(2, 5), &ip(4, 5), 2).unwrap().is_zero());
    }

    #[test]
    fn estimate_on_same_periodic_orbit() {
        let t = System::tent();
        let e = ebar_estimate(&t, &ip(2, 5), &ip(4, 5), &[2, 4, 8, 16], 3).unwrap();
        assert!(e.values.iter().all(Num::is_zero));
        assert!(e.limsup_estimate.is_zero());
        assert!(e.to_csv().starts_with("horizon,value\n2,"));
        assert!(ebar_estimate(&t, &ip(2, 5), &ip(4, 5), &[2, 4], 3).is_err());
    }

    #[test]
    fn shift_periodic_pair_converges_to_w1() {
        let s = System::full_shift(2).unwrap();
        let x = sp("", "01");
        let y = sp("", "0011");
        let mx = DiscreteMeasure::uniform(&s.orbit(&x, 2).unwrap()).unwrap();
        let my = DiscreteMeasure::uniform(&s.orbit(&y, 4).unwrap()).unwrap();
        let target = w1_discrete(&mx, &my, &s).unwrap().0;
        let e = ebar_estimate(&s, &x, &y, &[4, 8, 16, 32], 3).unwrap();
        assert!(e.values.iter().all(|v| *v == target));
    }

    #[test]
    fn coarsening_bounds() {
        let t = System::tent();
        let mu = DiscreteMeasure::uniform(&[ip(1, 10), ip(1, 3), ip(9, 10)]).unwrap();
        let c = coarsen(&t, &mu, &Coarsening::IntervalBins(4)).unwrap();
        assert_eq!(c.measure.support(), &[ip(1, 8), ip(3, 8), ip(7, 8)]);
        let g = gamma(&t, &mu, &c.measure).unwrap();
        assert!(g.cmp_value(&c.error_bound).is_le());
        assert!(c.error_bound.cmp_value(&Num::exact(1, 8)).is_le());
        let s = System::full_shift(2).unwrap();
        let m = DiscreteMeasure::dirac(sp("", "01"));
        let c = coarsen(&s, &m, &Coarsening::Cylinders(3)).unwrap();
        assert_eq!(c.measure.support(), &[sp("010", "0")]);
        assert!(c.error_bound.cmp_value(&Num::exact(1, 8)).is_le());
        assert!(coarsen(&s, &m, &Coarsening::IntervalBins(3)).is_err());
    }

    #[test]
    fn vset_of_fixed_point() {
        let t = System::tent();
        let v = vset_estimate(&t, &ip(2, 3), &[4, 8, 16], &Coarsening::IntervalBins(64)).unwrap();
        assert_eq!(v.snapshots.len(), 3);
        for row in &v.pairwise_gamma {
            assert!(row.iter().all(Num::is_zero));
        }
        let first = &v.snapshots[0];
        assert_eq!(first.len(), 1);
    }
}
