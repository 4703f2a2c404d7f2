use std::collections::HashMap;

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use super::point::Point;
use super::system::System;
use crate::error::{Error, Result};
use crate::num::{rational_vec, Num, Rational};

/// `(1/n) Σ δ_{atoms[i]}`; atom order is kept because it records an orbit segment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalMeasure {
    atoms: Vec<Point>,
}

impl EmpiricalMeasure {
    pub fn new(atoms: Vec<Point>) -> Result<EmpiricalMeasure> {
        if atoms.is_empty() {
            return Err(Error::InvalidMeasure("empirical measure needs at least one atom".into()));
        }
        Ok(EmpiricalMeasure { atoms })
    }

    pub fn atoms(&self) -> &[Point] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn to_discrete(&self) -> DiscreteMeasure {
        DiscreteMeasure::uniform(&self.atoms).expect("nonempty atoms")
    }
}

/// `m_T(x, n)`: the uniform measure on the first `n` orbit points of `x`.
pub fn empirical(system: &System, x: &Point, n: usize) -> Result<EmpiricalMeasure> {
    EmpiricalMeasure::new(system.orbit(x, n)?)
}

/// Finite-support probability measure with exact rational weights.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MeasureDoc", into = "MeasureDoc")]
pub struct DiscreteMeasure {
    support: Vec<Point>,
    weights: Vec<Rational>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MeasureDoc {
    pub support: Vec<Point>,
    #[serde(with = "rational_vec")]
    pub weights: Vec<Rational>,
}

impl TryFrom<MeasureDoc> for DiscreteMeasure {
    type Error = Error;
    fn try_from(d: MeasureDoc) -> Result<DiscreteMeasure> {
        DiscreteMeasure::new(d.support, d.weights)
    }
}

impl From<DiscreteMeasure> for MeasureDoc {
    fn from(m: DiscreteMeasure) -> MeasureDoc {
        MeasureDoc {
            support: m.support,
            weights: m.weights,
        }
    }
}

impl DiscreteMeasure {
    /// Validates weights (nonnegative, summing exactly to 1) and merges
    /// coincident support points. Zero-weight atoms are dropped.
    pub fn new(support: Vec<Point>, weights: Vec<Rational>) -> Result<DiscreteMeasure> {
        if support.len() != weights.len() {
            return Err(Error::InvalidMeasure(format!(
                "{} support points but {} weights",
                support.len(),
                weights.len()
            )));
        }
        if let Some(w) = weights.iter().find(|w| w.is_negative()) {
            return Err(Error::InvalidMeasure(format!("negative weight {w}")));
        }
        let total: Rational = weights.iter().sum();
        if !total.is_one() {
            return Err(Error::WeightSum(total.to_string()));
        }
        let mut index: HashMap<Point, usize> = HashMap::new();
        let mut out_s = Vec::new();
        let mut out_w: Vec<Rational> = Vec::new();
        for (p, w) in support.into_iter().zip(weights) {
            if w.is_zero() {
                continue;
            }
            match index.get(&p) {
                Some(&k) => out_w[k] += w,
                None => {
                    index.insert(p.clone(), out_s.len());
                    out_s.push(p);
                    out_w.push(w);
                }
            }
        }
        Ok(DiscreteMeasure {
            support: out_s,
            weights: out_w,
        })
    }

    pub fn dirac(p: Point) -> DiscreteMeasure {
        DiscreteMeasure {
            support: vec![p],
            weights: vec![Rational::one()],
        }
    }

    /// Uniform weight `1/n` on each listed point (repeats accumulate).
    pub fn uniform(points: &[Point]) -> Result<DiscreteMeasure> {
        if points.is_empty() {
            return Err(Error::InvalidMeasure("uniform measure on no points".into()));
        }
        let w = Rational::new(1.into(), points.len().into());
        DiscreteMeasure::new(points.to_vec(), vec![w; points.len()])
    }

    pub fn support(&self) -> &[Point] {
        &self.support
    }

    pub fn weights(&self) -> &[Rational] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Point, &Rational)> {
        self.support.iter().zip(self.weights.iter())
    }

    /// `∫ f dμ`.
    pub fn integrate(&self, f: impl Fn(&Point) -> Num) -> Num {
        self.iter()
            .fold(Num::zero(), |acc, (p, w)| acc.add(&f(p).mul(&Num::Exact(w.clone()))))
    }
}

/// `Σ λ_k μ_k` with exact rational weights; coincident atoms are merged.
pub fn convex_combination(parts: &[(Rational, DiscreteMeasure)]) -> Result<DiscreteMeasure> {
    if parts.is_empty() {
        return Err(Error::InvalidMeasure("empty convex combination".into()));
    }
    if let Some((w, _)) = parts.iter().find(|(w, _)| w.is_negative()) {
        return Err(Error::InvalidMeasure(format!("negative coefficient {w}")));
    }
    let total: Rational = parts.iter().map(|(w, _)| w).sum();
    if !total.is_one() {
        return Err(Error::WeightSum(total.to_string()));
    }
    let mut support = Vec::new();
    let mut weights = Vec::new();
    for (lambda, mu) in parts {
        for (p, w) in mu.iter() {
            support.push(p.clone());
            weights.push(lambda * w);
        }
    }
    DiscreteMeasure::new(support, weights)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynsys::ShiftPoint;
    use crate::num::rat;

    fn ip(n: i64, d: i64) -> Point {
        Point::interval(rat(n, d))
    }

    #[test]
    fn empirical_of_periodic_and_fixed_points() {
        let t = System::tent();
        let m = empirical(&t, &ip(2, 3), 5).unwrap();
        assert!(m.atoms().iter().all(|p| *p == ip(2, 3)));
        let m = empirical(&t, &ip(2, 5), 4).unwrap();
        assert_eq!(m.atoms(), &[ip(2, 5), ip(4, 5), ip(2, 5), ip(4, 5)]);
        let d = m.to_discrete();
        assert_eq!(d.support(), &[ip(2, 5), ip(4, 5)]);
        assert_eq!(d.weights(), &[rat(1, 2), rat(1, 2)]);
    }

    #[test]
    fn shift_empirical_alternates() {
        let s = System::full_shift(2).unwrap();
        let x = Point::Shift(ShiftPoint::parse(2, "", "01").unwrap());
        let y = Point::Shift(ShiftPoint::parse(2, "", "10").unwrap());
        let m = empirical(&s, &x, 6).unwrap();
        for (i, a) in m.atoms().iter().enumerate() {
            assert_eq!(a, if i % 2 == 0 { &x } else { &y });
        }
        assert_eq!(m.to_discrete().len(), 2);
    }

    #[test]
    fn convex_combinations() {
        let mu = DiscreteMeasure::uniform(&[ip(1, 5), ip(3, 5)]).unwrap();
        assert_eq!(convex_combination(&[(rat(1, 1), mu.clone())]).unwrap(), mu);
        let a = DiscreteMeasure::dirac(ip(1, 2));
        let merged =
            convex_combination(&[(rat(1, 2), a.clone()), (rat(1, 2), a.clone())]).unwrap();
        assert_eq!(merged, a);
        let c = convex_combination(&[
            (rat(1, 3), DiscreteMeasure::dirac(ip(0, 1))),
            (rat(2, 3), DiscreteMeasure::dirac(ip(1, 1))),
        ])
        .unwrap();
        assert_eq!(c.support(), &[ip(0, 1), ip(1, 1)]);
        assert_eq!(c.weights(), &[rat(1, 3), rat(2, 3)]);
        assert!(matches!(
            convex_combination(&[(rat(1, 2), a)]),
            Err(Error::WeightSum(_))
        ));
    }

    #[test]
    fn rejects_bad_weights() {
        assert!(DiscreteMeasure::new(vec![ip(0, 1)], vec![rat(1, 2)]).is_err());
        assert!(DiscreteMeasure::new(vec![ip(0, 1), ip(1, 1)], vec![rat(3, 2), rat(-1, 2)]).is_err());
    }

    #[test]
    fn measure_json() {
        let m: DiscreteMeasure = serde_json::from_str(
            r#"{"support":[{"kind":"interval","value":"0"},{"kind":"interval","value":"1"}],
                "weights":["1/3","2/3"]}"#,
        )
        .unwrap();
        assert_eq!(m.weights(), &[rat(1, 3), rat(2, 3)]);
    }
}
