use std::collections::BTreeSet;

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::dynsys::{Affine, DiscreteMeasure, PiecewiseLinear, Point, ShiftPoint, System};
use crate::error::{cap_check, Error, Result};
use crate::num::Rational;

/// Default cap on `m^p` words for shift enumeration.
pub const DEFAULT_WORD_CAP: usize = 1 << 20;
/// Default cap on the number of monotone branches of `f^p`.
pub const DEFAULT_BRANCH_CAP: usize = 1 << 16;

/// A periodic point with its least period, orbit and orbit measure.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PeriodicOrbit {
    pub base: Point,
    pub period: usize,
    pub orbit: Vec<Point>,
    pub measure: DiscreteMeasure,
}

impl PeriodicOrbit {
    /// Least period of `x`, searched up to `max_period`.
    pub fn of_point(system: &System, x: &Point, max_period: usize) -> Result<PeriodicOrbit> {
        let mut orbit = vec![x.clone()];
        let mut cur = system.apply(x)?;
        while cur != *x {
            if orbit.len() >= max_period {
                return Err(Error::NotPeriodic(format!("{x} has no period up to {max_period}")));
            }
            orbit.push(cur.clone());
            cur = system.apply(&cur)?;
        }
        let measure = DiscreteMeasure::uniform(&orbit)?;
        Ok(PeriodicOrbit {
            base: x.clone(),
            period: orbit.len(),
            orbit,
            measure,
        })
    }

    /// Checks `T^p x = x` and computes the least period, which divides `p`.
    pub fn with_period(system: &System, x: &Point, p: usize) -> Result<PeriodicOrbit> {
        if p == 0 {
            return Err(Error::InvalidArgument("period must be positive".into()));
        }
        if system.iterate(x, p)? != *x {
            return Err(Error::NotPeriodic(format!("T^{p} x != x for x = {x}")));
        }
        PeriodicOrbit::of_point(system, x, p)
    }

    /// The orbit rotated so that it starts at `T^k base`.
    pub fn rotated(&self, k: usize) -> PeriodicOrbit {
        let mut orbit = self.orbit.clone();
        orbit.rotate_left(k % self.period);
        PeriodicOrbit {
            base: orbit[0].clone(),
            period: self.period,
            orbit,
            measure: self.measure.clone(),
        }
    }

    /// `T^i base` for any `i`.
    pub fn point(&self, i: usize) -> &Point {
        &self.orbit[i % self.period]
    }

    /// First `n` orbit points, wrapping around.
    pub fn prefix(&self, n: usize) -> Vec<Point> {
        (0..n).map(|i| self.point(i).clone()).collect()
    }
}

/// Lyndon words of length exactly `n` over `m` symbols, in lexicographic order.
pub fn lyndon_words(m: u8, n: usize) -> Vec<Vec<u8>> {
    let mut out = Vec::new();
    if n == 0 || m == 0 {
        return out;
    }
    // Fredricksen–Kessler–Maiorana / Duval generation
    let mut w: Vec<u8> = vec![0];
    loop {
        if w.len() == n {
            out.push(w.clone());
        }
        // extend periodically to length n
        let l = w.len();
        while w.len() < n {
            w.push(w[w.len() - l]);
        }
        while let Some(&last) = w.last() {
            if last == m - 1 {
                w.pop();
            } else {
                break;
            }
        }
        match w.last_mut() {
            Some(s) => *s += 1,
            None => break,
        }
    }
    out
}

/// One orbit per necklace of words whose length divides `p`, with least
/// periods recorded; ordered by least period, then word.
pub fn enumerate_shift_periodic(m: u8, p: usize, word_cap: usize) -> Result<Vec<PeriodicOrbit>> {
    if p == 0 {
        return Err(Error::InvalidArgument("period must be positive".into()));
    }
    let system = System::full_shift(m)?;
    let words = (m as f64).powi(p as i32);
    if words > word_cap as f64 {
        return Err(Error::CapExceeded {
            what: "shift words m^p",
            value: words.min(u128::MAX as f64) as u128,
            cap: word_cap as u128,
        });
    }
    let mut out = Vec::new();
    for d in (1..=p).filter(|d| p.is_multiple_of(*d)) {
        out.extend(shift_orbits_of_least_period(&system, m, d)?);
    }
    Ok(out)
}

/// Orbits of least period exactly `d` (one per Lyndon word).
pub fn shift_orbits_of_least_period(system: &System, m: u8, d: usize) -> Result<Vec<PeriodicOrbit>> {
    lyndon_words(m, d)
        .into_iter()
        .map(|w| {
            let x = Point::Shift(ShiftPoint::periodic(m, w)?);
            PeriodicOrbit::with_period(system, &x, d)
        })
        .collect()
}

/// A maximal interval on which `f^p` is a single affine map.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Branch {
    #[serde(with = "crate::num::rational_str")]
    pub lo: Rational,
    #[serde(with = "crate::num::rational_str")]
    pub hi: Rational,
    pub map: Affine,
    /// Piece index visited at each step.
    pub itinerary: Vec<usize>,
}

/// Monotone branches of `f^p` restricted to `[lo, hi]`, left to right.
pub fn power_branches(
    f: &PiecewiseLinear,
    lo: &Rational,
    hi: &Rational,
    p: usize,
    cap: usize,
) -> Result<Vec<Branch>> {
    if lo > hi {
        return Err(Error::InvalidArgument(format!("empty interval [{lo}, {hi}]")));
    }
    let mut branches = vec![Branch {
        lo: lo.clone(),
        hi: hi.clone(),
        map: Affine::new(Rational::one(), Rational::zero()),
        itinerary: Vec::new(),
    }];
    for _ in 0..p {
        let mut next = Vec::new();
        for b in &branches {
            split_branch(f, b, &mut next);
            cap_check("branches of f^p", next.len(), cap)?;
        }
        branches = next;
    }
    Ok(branches)
}

fn split_branch(f: &PiecewiseLinear, b: &Branch, out: &mut Vec<Branch>) {
    let ya = b.map.eval(&b.lo);
    let yb = b.map.eval(&b.hi);
    let (a, c) = if ya <= yb { (ya, yb) } else { (yb, ya) };
    let bp = f.breakpoints();
    let push = |out: &mut Vec<Branch>, k: usize, lo: Rational, hi: Rational| {
        let mut itinerary = b.itinerary.clone();
        itinerary.push(k);
        out.push(Branch {
            lo,
            hi,
            map: f.pieces()[k].compose(&b.map),
            itinerary,
        });
    };
    if a == c {
        push(out, f.piece_index(&a), b.lo.clone(), b.hi.clone());
        return;
    }
    let inv = |y: &Rational| (y - &b.map.intercept) / &b.map.slope;
    let mut parts = Vec::new();
    for k in 0..f.pieces().len() {
        let s = (&bp[k]).max(&a).clone();
        let e = (&bp[k + 1]).min(&c).clone();
        if s < e {
            let (u, v) = (inv(&s), inv(&e));
            let (u, v) = if u <= v { (u, v) } else { (v, u) };
            parts.push((k, u, v));
        }
    }
    parts.sort_by(|x, y| x.1.cmp(&y.1));
    for (k, u, v) in parts {
        push(out, k, u, v);
    }
}

/// All solutions of `f^p(x) = x`, sorted and deduplicated.
pub fn power_fixed_points(f: &PiecewiseLinear, p: usize, cap: usize) -> Result<Vec<Rational>> {
    let branches = power_branches(f, &Rational::zero(), &Rational::one(), p, cap)?;
    let mut out = BTreeSet::new();
    for b in &branches {
        out.extend(branch_fixed_points(b)?);
    }
    Ok(out.into_iter().collect())
}

/// Solutions of `map(x) = x` on `[lo, hi]`; errors when the branch is the identity.
pub(crate) fn branch_fixed_points(b: &Branch) -> Result<Vec<Rational>> {
    let one = Rational::one();
    if b.map.slope == one {
        if b.map.intercept.is_zero() {
            if b.lo == b.hi {
                return Ok(vec![b.lo.clone()]);
            }
            return Err(Error::InvalidArgument(format!(
                "f^p is the identity on [{}, {}]",
                b.lo, b.hi
            )));
        }
        return Ok(Vec::new());
    }
    let x = &b.map.intercept / (&one - &b.map.slope);
    Ok(if x >= b.lo && x <= b.hi { vec![x] } else { Vec::new() })
}

/// Periodic orbits of least period dividing `p`, each solved exactly on the
/// monotone branches of `f^p`. Ordered by least period, then smallest point.
pub fn interval_periodic_points(system: &System, p: usize, cap: usize) -> Result<Vec<PeriodicOrbit>> {
    let f = system
        .as_piecewise()
        .ok_or_else(|| Error::InvalidArgument("periodic points need a piecewise-linear map".into()))?;
    if p == 0 {
        return Err(Error::InvalidArgument("period must be positive".into()));
    }
    let sols = power_fixed_points(f, p, cap)?;
    let mut seen: BTreeSet<Rational> = BTreeSet::new();
    let mut out = Vec::new();
    for x in sols {
        if seen.contains(&x) {
            continue;
        }
        let orbit = PeriodicOrbit::with_period(system, &Point::interval(x), p)?;
        for q in &orbit.orbit {
            if let Point::Interval(v) = q {
                seen.insert(v.as_exact().expect("exact orbit").clone());
            }
        }
        out.push(orbit);
    }
    out.sort_by_key(|a| a.period);
    Ok(out)
}

/// Orbits of least period exactly `p` of a piecewise-linear map.
pub fn interval_orbits_of_least_period(system: &System, p: usize, cap: usize) -> Result<Vec<PeriodicOrbit>> {
    Ok(interval_periodic_points(system, p, cap)?
        .into_iter()
        .filter(|o| o.period == p)
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::num::rat;

    #[test]
    fn lyndon_counts() {
        let counts: Vec<usize> = (1..=8).map(|n| lyndon_words(2, n).len()).collect();
        assert_eq!(counts, vec![2, 1, 2, 3, 6, 9, 18, 30]);
        assert_eq!(lyndon_words(2, 4), vec![vec![0, 0, 0, 1], vec![0, 0, 1, 1], vec![0, 1, 1, 1]]);
        assert_eq!(lyndon_words(3, 2).len(), 3);
    }

    #[test]
    fn shift_enumeration() {
        let p1 = enumerate_shift_periodic(2, 1, DEFAULT_WORD_CAP).unwrap();
        assert_eq!(p1.len(), 2);
        let p2 = enumerate_shift_periodic(2, 2, DEFAULT_WORD_CAP).unwrap();
        assert_eq!(p2.len(), 3);
        assert_eq!(p2[2].period, 2);
        let p4 = enumerate_shift_periodic(2, 4, DEFAULT_WORD_CAP).unwrap();
        assert_eq!(p4.iter().filter(|o| o.period == 4).count(), 3);
        assert!(enumerate_shift_periodic(2, 30, DEFAULT_WORD_CAP).is_err());
    }

    #[test]
    fn tent_periodic_points() {
        let t = System::tent();
        let fixed = interval_periodic_points(&t, 1, DEFAULT_BRANCH_CAP).unwrap();
        let pts: Vec<_> = fixed.iter().map(|o| o.base.clone()).collect();
        assert_eq!(pts, vec![Point::interval(rat(0, 1)), Point::interval(rat(2, 3))]);
        let two = interval_periodic_points(&t, 2, DEFAULT_BRANCH_CAP).unwrap();
        assert_eq!(two.len(), 3);
        assert_eq!(
            two[2].orbit,
            vec![Point::interval(rat(2, 5)), Point::interval(rat(4, 5))]
        );
        let three = interval_periodic_points(&t, 3, DEFAULT_BRANCH_CAP).unwrap();
        let periods: Vec<usize> = three.iter().map(|o| o.period).collect();
        assert_eq!(periods, vec![1, 1, 3, 3]);
        for p in 1..=8 {
            let f = t.as_piecewise().unwrap();
            assert_eq!(power_fixed_points(f, p, DEFAULT_BRANCH_CAP).unwrap().len(), 1 << p);
        }
    }

    #[test]
    fn branches_partition_the_domain() {
        let f = PiecewiseLinear::two_band();
        let b = power_branches(&f, &rat(0, 1), &rat(1, 1), 3, DEFAULT_BRANCH_CAP).unwrap();
        assert_eq!(b.first().unwrap().lo, rat(0, 1));
        assert_eq!(b.last().unwrap().hi, rat(1, 1));
        for w in b.windows(2) {
            assert_eq!(w[0].hi, w[1].lo);
        }
        for br in &b {
            let mid = (&br.lo + &br.hi) / rat(2, 1);
            let mut x = mid.clone();
            for _ in 0..3 {
                x = f.eval_exact(&x);
            }
            assert_eq!(br.map.eval(&mid), x);
        }
    }

    #[test]
    fn periodic_orbit_checks() {
        let t = System::tent();
        let o = PeriodicOrbit::with_period(&t, &Point::interval(rat(2, 5)), 4).unwrap();
        assert_eq!(o.period, 2);
        assert!(PeriodicOrbit::with_period(&t, &Point::interval(rat(1, 5)), 2).is_err());
    }
}
