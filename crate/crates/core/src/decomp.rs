//! Periodic decompositions `{D_0, …, D_{k-1}}` of `[0,1]` with
//! `T(D_i) ⊆ D_{i+1 mod k}`, and lifting of `T^k`-level witnesses to `T`.

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::dynsys::{PiecewiseLinear, Point, System};
use crate::error::{cap_check, Error, Result};
use crate::num::{rational_to_f64, Num, Rational};
use crate::periodic::{power_branches, ClosedInterval, DEFAULT_BRANCH_CAP};
use crate::transport::matching_cost_capped;

/// Samples per interval when a map can only be evaluated in binary64.
pub const DEFAULT_SAMPLES: usize = 4096;
/// Slack on sampled containment checks.
pub const SAMPLE_TOL: f64 = 1e-12;

/// Closed sets `D_0, …, D_{k-1}`, each a finite union of rational intervals.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PeriodicDecomposition {
    pub k: usize,
    pub sets: Vec<Vec<ClosedInterval>>,
}

impl PeriodicDecomposition {
    pub fn new(sets: Vec<Vec<ClosedInterval>>) -> Result<PeriodicDecomposition> {
        let d = PeriodicDecomposition { k: sets.len(), sets };
        d.check()?;
        Ok(d)
    }

    /// `{[0,c], [c,1]}`.
    pub fn split_at(c: Rational) -> Result<PeriodicDecomposition> {
        PeriodicDecomposition::new(vec![
            vec![ClosedInterval::new(Rational::zero(), c.clone())?],
            vec![ClosedInterval::new(c, Rational::one())?],
        ])
    }

    pub fn trivial() -> PeriodicDecomposition {
        PeriodicDecomposition {
            k: 1,
            sets: vec![vec![ClosedInterval {
                lo: Rational::zero(),
                hi: Rational::one(),
            }]],
        }
    }

    pub fn check(&self) -> Result<()> {
        if self.k == 0 || self.k != self.sets.len() {
            return Err(Error::InvalidDecomposition(format!(
                "k = {} but {} sets given",
                self.k,
                self.sets.len()
            )));
        }
        for (i, s) in self.sets.iter().enumerate() {
            if s.is_empty() {
                return Err(Error::InvalidDecomposition(format!("D_{i} is empty")));
            }
            for iv in s {
                ClosedInterval::new(iv.lo.clone(), iv.hi.clone())?;
            }
        }
        Ok(())
    }

    /// Whether the interval point `x` lies in `D_i`.
    pub fn contains(&self, i: usize, x: &Num) -> bool {
        self.sets[i].iter().any(|iv| match x {
            Num::Exact(r) => iv.contains(r),
            Num::Float(f) => *f >= rational_to_f64(&iv.lo) - SAMPLE_TOL && *f <= rational_to_f64(&iv.hi) + SAMPLE_TOL,
        })
    }
}

/// Sorted, merged copy of a union of intervals.
pub fn merge(intervals: &[ClosedInterval]) -> Vec<ClosedInterval> {
    let mut v = intervals.to_vec();
    v.sort_by(|a, b| a.lo.cmp(&b.lo));
    let mut out: Vec<ClosedInterval> = Vec::new();
    for iv in v {
        match out.last_mut() {
            Some(last) if iv.lo <= last.hi => {
                if iv.hi > last.hi {
                    last.hi = iv.hi;
                }
            }
            _ => out.push(iv),
        }
    }
    out
}

/// The closures of the parts of `[lo, hi]` outside the merged union `cover`.
fn uncovered(lo: &Rational, hi: &Rational, cover: &[ClosedInterval]) -> Vec<ClosedInterval> {
    if lo == hi {
        if cover.iter().any(|iv| iv.contains(lo)) {
            return Vec::new();
        }
        return vec![ClosedInterval {
            lo: lo.clone(),
            hi: hi.clone(),
        }];
    }
    let mut out = Vec::new();
    let mut cur = lo.clone();
    for iv in cover {
        if iv.hi <= cur {
            continue;
        }
        if iv.lo >= *hi {
            break;
        }
        if iv.lo > cur {
            out.push(ClosedInterval {
                lo: cur.clone(),
                hi: iv.lo.clone(),
            });
        }
        cur = iv.hi.clone();
        if cur >= *hi {
            return out;
        }
    }
    out.push(ClosedInterval {
        lo: cur,
        hi: hi.clone(),
    });
    out
}

/// A monotone piece of `D_i` whose image leaves `D_{i+1}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub set: usize,
    pub piece: ClosedInterval,
    pub image: ClosedInterval,
    /// Parts of the image outside `D_{i+1}`.
    pub outside: Vec<ClosedInterval>,
    /// Subintervals of `piece` mapped outside `D_{i+1}`.
    pub preimage: Vec<ClosedInterval>,
}

/// Outcome of [`verify_decomposition`].
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DecompositionReport {
    pub k: usize,
    /// `false` when containment was only sampled.
    pub exact: bool,
    /// Parts of `[0,1]` not covered by the sets.
    pub cover_gaps: Vec<ClosedInterval>,
    pub violations: Vec<Violation>,
    /// Sampled points of `D_i` mapped outside `D_{i+1}` (binary64 maps only).
    pub sampled_failures: Vec<(usize, f64)>,
    pub valid: bool,
}

/// Checks the cover and each `T(D_i) ⊆ D_{i+1 mod k}`; exact for
/// piecewise-linear maps, sampled for binary64 maps.
pub fn verify_decomposition(system: &System, d: &PeriodicDecomposition) -> Result<DecompositionReport> {
    d.check()?;
    let all: Vec<ClosedInterval> = d.sets.iter().flatten().cloned().collect();
    let cover_gaps = uncovered(&Rational::zero(), &Rational::one(), &merge(&all));
    let mut violations = Vec::new();
    let mut sampled_failures = Vec::new();
    let exact = match system {
        System::PiecewiseLinear(f) => {
            for i in 0..d.k {
                let target = merge(&d.sets[(i + 1) % d.k]);
                for iv in &d.sets[i] {
                    violations.extend(piece_violations(f, i, iv, &target));
                }
            }
            true
        }
        System::GeneralInterval(g) => {
            for i in 0..d.k {
                for iv in &d.sets[i] {
                    let (a, b) = (rational_to_f64(&iv.lo), rational_to_f64(&iv.hi));
                    for s in 0..=DEFAULT_SAMPLES {
                        let x = a + (b - a) * s as f64 / DEFAULT_SAMPLES as f64;
                        if !d.contains((i + 1) % d.k, &Num::Float(g.eval(x))) {
                            sampled_failures.push((i, x));
                        }
                    }
                }
            }
            false
        }
        _ => {
            return Err(Error::InvalidSystem(format!(
                "periodic decompositions need an interval map, got {}",
                system.kind_name()
            )))
        }
    };
    Ok(DecompositionReport {
        k: d.k,
        exact,
        valid: cover_gaps.is_empty() && violations.is_empty() && sampled_failures.is_empty(),
        cover_gaps,
        violations,
        sampled_failures,
    })
}

fn piece_violations(f: &PiecewiseLinear, set: usize, iv: &ClosedInterval, target: &[ClosedInterval]) -> Vec<Violation> {
    let bp = f.breakpoints();
    let mut cuts = vec![iv.lo.clone()];
    cuts.extend(bp.iter().filter(|b| **b > iv.lo && **b < iv.hi).cloned());
    cuts.push(iv.hi.clone());
    let mut out = Vec::new();
    for w in cuts.windows(2) {
        let (lo, hi) = (&w[0], &w[1]);
        let (ya, yb) = (f.eval_exact(lo), f.eval_exact(hi));
        let (a, b) = if ya <= yb { (ya.clone(), yb.clone()) } else { (yb.clone(), ya.clone()) };
        let outside = uncovered(&a, &b, target);
        if outside.is_empty() {
            continue;
        }
        let preimage = outside
            .iter()
            .map(|o| {
                if ya == yb {
                    return ClosedInterval {
                        lo: lo.clone(),
                        hi: hi.clone(),
                    };
                }
                let inv = |y: &Rational| lo + (y - &ya) * (hi - lo) / (&yb - &ya);
                let (u, v) = (inv(&o.lo), inv(&o.hi));
                let (u, v) = if u <= v { (u, v) } else { (v, u) };
                ClosedInterval { lo: u, hi: v }
            })
            .collect();
        out.push(Violation {
            set,
            piece: ClosedInterval {
                lo: lo.clone(),
                hi: hi.clone(),
            },
            image: ClosedInterval { lo: a, hi: b },
            outside,
            preimage,
        });
    }
    out
}

/// Costs of a `T^k`-level witness and its lift to `T`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LiftReport {
    pub k: usize,
    pub n: usize,
    /// `min_σ (1/n) Σ_{i<n} d(T^{ki} x, T^{kσ(i)} y)`.
    pub level_cost: Num,
    /// `min_σ (1/kn) Σ_{i<kn} d(T^i x, T^{σ(i)} y)`.
    pub lifted_cost: Num,
    /// `(1/k) Σ_{r<k} L^r` with `L` the largest slope, for piecewise-linear maps.
    pub amplification: Option<Num>,
}

/// Lifts a `T^k`-level comparison of `x, y ∈ D_0` over `n` steps to `T` over
/// `kn` steps; requires `T^{kn} x = x`.
pub fn lift_witness(
    system: &System,
    d: &PeriodicDecomposition,
    x: &Point,
    y: &Point,
    n: usize,
    k: usize,
    cap: usize,
) -> Result<LiftReport> {
    d.check()?;
    if k != d.k {
        return Err(Error::InvalidArgument(format!("k = {k} but the decomposition has {} sets", d.k)));
    }
    if n == 0 {
        return Err(Error::InvalidArgument("n must be positive".into()));
    }
    let kn = k.checked_mul(n).ok_or_else(|| Error::InvalidArgument("k·n overflows".into()))?;
    cap_check("lifted horizon", kn, cap)?;
    for (name, p) in [("x", x), ("y", y)] {
        match p {
            Point::Interval(v) if d.contains(0, v) => {}
            _ => return Err(Error::InvalidPoint(format!("{name} must be an interval point in D_0"))),
        }
    }
    let ox = system.orbit(x, kn + 1)?;
    let returns = match (&ox[kn], x) {
        (Point::Interval(Num::Exact(a)), Point::Interval(Num::Exact(b))) => a == b,
        (a, b) => system.dist_f64(a, b)? <= SAMPLE_TOL,
    };
    if !returns {
        return Err(Error::NotPeriodic(format!("T^{kn} x != x")));
    }
    let oy = system.orbit(y, kn)?;
    let ox = &ox[..kn];
    let level_x: Vec<Point> = ox.iter().step_by(k).cloned().collect();
    let level_y: Vec<Point> = oy.iter().step_by(k).cloned().collect();
    let level_cost = matching_cost_capped(system, &level_x, &level_y, cap)?;
    let lifted_cost = matching_cost_capped(system, ox, &oy, cap)?;
    let amplification = system.as_piecewise().map(|f| {
        let l = f.pieces().iter().map(|p| p.slope.abs()).max().unwrap_or_else(Rational::one);
        let mut pow = Rational::one();
        let mut sum = Rational::zero();
        for _ in 0..k {
            sum += &pow;
            pow *= &l;
        }
        Num::Exact(sum / Rational::from_integer(k.into()))
    });
    Ok(LiftReport {
        k,
        n,
        level_cost,
        lifted_cost,
        amplification,
    })
}

/// `T^k` on an interval `D_0 = [a, b]`, conjugated to `[0,1]` by
/// `t ↦ a + (b - a) t`.
#[derive(Clone, Debug)]
pub struct RestrictedPower {
    pub lo: Rational,
    pub hi: Rational,
    pub map: PiecewiseLinear,
}

impl RestrictedPower {
    /// `a + (b - a) t`.
    pub fn lift(&self, t: &Rational) -> Rational {
        &self.lo + (&self.hi - &self.lo) * t
    }

    /// `(x - a) / (b - a)`.
    pub fn rescale(&self, x: &Rational) -> Rational {
        (x - &self.lo) / (&self.hi - &self.lo)
    }
}

/// The rescaled first-return map `T^k|_{D_0}` of a valid decomposition whose
/// `D_0` is a single nondegenerate interval.
pub fn restricted_power(system: &System, d: &PeriodicDecomposition) -> Result<RestrictedPower> {
    let f = system
        .as_piecewise()
        .ok_or_else(|| Error::InvalidSystem("restricted powers need a piecewise-linear map".into()))?;
    let report = verify_decomposition(system, d)?;
    if !report.valid {
        return Err(Error::InvalidDecomposition("T(D_i) ⊄ D_{i+1} or the sets do not cover".into()));
    }
    let [d0] = d.sets[0].as_slice() else {
        return Err(Error::InvalidDecomposition("D_0 must be a single interval".into()));
    };
    if d0.lo >= d0.hi {
        return Err(Error::InvalidDecomposition("D_0 is degenerate".into()));
    }
    let (a, b) = (d0.lo.clone(), d0.hi.clone());
    let width = &b - &a;
    let branches = power_branches(f, &a, &b, d.k, DEFAULT_BRANCH_CAP)?;
    let mut nodes: Vec<(Rational, Rational)> = Vec::new();
    for br in &branches {
        for x in [&br.lo, &br.hi] {
            let t = (x - &a) / &width;
            if nodes.last().is_some_and(|(s, _)| *s == t) {
                continue;
            }
            nodes.push((t, (br.map.eval(x) - &a) / &width));
        }
    }
    Ok(RestrictedPower {
        lo: a,
        hi: b,
        map: PiecewiseLinear::from_nodes(&nodes)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::num::rat;
    use crate::periodic::{interval_orbits_of_least_period, PeriodicOrbit};
    use crate::pseudometric::ebar_finite;
    use crate::transport::DEFAULT_ASSIGNMENT_CAP;

    fn half() -> PeriodicDecomposition {
        PeriodicDecomposition::split_at(rat(1, 2)).unwrap()
    }

    #[test]
    fn trivial_decomposition_is_valid() {
        for s in [System::tent(), System::swap(), System::two_band()] {
            assert!(verify_decomposition(&s, &PeriodicDecomposition::trivial()).unwrap().valid);
        }
    }

    #[test]
    fn swap_is_two_periodic() {
        let r = verify_decomposition(&System::swap(), &half()).unwrap();
        assert!(r.valid && r.exact, "{r:?}");
    }

    #[test]
    fn tent_is_rejected() {
        let r = verify_decomposition(&System::tent(), &half()).unwrap();
        assert!(!r.valid);
        let v = &r.violations[0];
        assert_eq!(v.set, 0);
        assert_eq!(v.image, ClosedInterval::new(rat(0, 1), rat(1, 1)).unwrap());
        assert_eq!(v.outside, vec![ClosedInterval::new(rat(0, 1), rat(1, 2)).unwrap()]);
        assert_eq!(v.preimage, vec![ClosedInterval::new(rat(0, 1), rat(1, 4)).unwrap()]);
    }

    #[test]
    fn cover_gaps_are_reported() {
        let d = PeriodicDecomposition::new(vec![
            vec![ClosedInterval::new(rat(0, 1), rat(1, 3)).unwrap()],
            vec![ClosedInterval::new(rat(2, 3), rat(1, 1)).unwrap()],
        ])
        .unwrap();
        let r = verify_decomposition(&System::two_band(), &d).unwrap();
        assert!(r.violations.is_empty());
        assert_eq!(r.cover_gaps, vec![ClosedInterval::new(rat(1, 3), rat(2, 3)).unwrap()]);
        assert!(!r.valid);
    }

    #[test]
    fn sampled_verification_is_flagged() {
        let g = crate::dynsys::GeneralInterval::custom("flip", |x| 1.0 - x);
        let r = verify_decomposition(&System::GeneralInterval(g), &half()).unwrap();
        assert!(r.valid && !r.exact);
    }

    #[test]
    fn lift_with_k1_is_ebar() {
        let t = System::tent();
        let d = PeriodicDecomposition::trivial();
        let x = Point::interval(rat(2, 5));
        let y = Point::interval(rat(1, 7));
        let r = lift_witness(&t, &d, &x, &y, 2, 1, DEFAULT_ASSIGNMENT_CAP).unwrap();
        assert_eq!(r.lifted_cost, ebar_finite(&t, &x, &y, 2).unwrap());
        assert_eq!(r.level_cost, r.lifted_cost);
    }

    #[test]
    fn lift_of_self_is_zero() {
        let g = System::swap();
        let orbits = interval_orbits_of_least_period(&g, 2, DEFAULT_BRANCH_CAP).unwrap();
        let o = orbits
            .iter()
            .find(|o| half().contains(0, o.base.coordinate().unwrap()))
            .unwrap();
        let r = lift_witness(&g, &half(), &o.base, &o.base, 1, 2, 64).unwrap();
        assert!(r.level_cost.is_zero() && r.lifted_cost.is_zero());
    }

    #[test]
    fn lift_requires_periodicity_and_cap() {
        let g = System::swap();
        let x = Point::interval(rat(1, 7));
        assert!(matches!(
            lift_witness(&g, &half(), &x, &x, 3, 2, 64),
            Err(Error::NotPeriodic(_))
        ));
        assert!(matches!(
            lift_witness(&g, &half(), &x, &x, 40, 2, 64),
            Err(Error::CapExceeded { .. })
        ));
    }

    #[test]
    fn swap_square_on_d0() {
        let g = System::swap();
        let rp = restricted_power(&g, &half()).unwrap();
        let h = &rp.map;
        for (t, v) in [(rat(0, 1), rat(1, 1)), (rat(1, 2), rat(0, 1)), (rat(1, 4), rat(1, 2)), (rat(1, 1), rat(1, 1))] {
            assert_eq!(h.eval_exact(&t), v);
        }
        let hs = System::PiecewiseLinear(h.clone());
        for p in 1..=6 {
            for o in interval_orbits_of_least_period(&hs, p, DEFAULT_BRANCH_CAP).unwrap() {
                let t = o.base.coordinate().unwrap().as_exact().unwrap().clone();
                if o.orbit.iter().any(|q| *q.coordinate().unwrap() == Num::Exact(Rational::one())) {
                    continue;
                }
                let x = Point::interval(rp.lift(&t));
                assert_eq!(PeriodicOrbit::of_point(&g, &x, 2 * p).unwrap().period, 2 * p);
            }
        }
    }

    #[test]
    fn lifted_cost_within_amplification() {
        let g = System::swap();
        let rp = restricted_power(&g, &half()).unwrap();
        let hs = System::PiecewiseLinear(rp.map.clone());
        let orbits = interval_orbits_of_least_period(&hs, 6, DEFAULT_BRANCH_CAP).unwrap();
        let y = Point::interval(rat(1, 7) / rat(2, 1));
        for o in orbits.iter().take(4) {
            let t = o.base.coordinate().unwrap().as_exact().unwrap().clone();
            let x = Point::interval(rp.lift(&t));
            let r = lift_witness(&g, &half(), &x, &y, 12, 2, 64).unwrap();
            let bound = r.amplification.clone().unwrap();
            assert!(r.lifted_cost.to_f64() <= bound.to_f64() * r.level_cost.to_f64() + 1e-12, "{r:?}");
        }
    }
}
