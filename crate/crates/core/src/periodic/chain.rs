use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use super::orbit::{branch_fixed_points, power_branches, PeriodicOrbit, DEFAULT_BRANCH_CAP};
use crate::dynsys::{PiecewiseLinear, Point, System};
use crate::error::{Error, Result};
use crate::num::{rational_to_f64, Num, Rational};

/// Outward padding of sampled float-mode endpoints.
pub const FLOAT_PADDING: f64 = 1e-9;

/// A closed interval `[lo, hi]` with rational endpoints.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClosedInterval {
    #[serde(with = "crate::num::rational_str")]
    pub lo: Rational,
    #[serde(with = "crate::num::rational_str")]
    pub hi: Rational,
}

impl ClosedInterval {
    pub fn new(lo: Rational, hi: Rational) -> Result<ClosedInterval> {
        if lo > hi || lo < Rational::zero() || hi > Rational::one() {
            return Err(Error::InvalidArgument(format!("[{lo}, {hi}] is not a subinterval of [0,1]")));
        }
        Ok(ClosedInterval { lo, hi })
    }

    pub fn contains(&self, x: &Rational) -> bool {
        *x >= self.lo && *x <= self.hi
    }

    pub fn contains_interval(&self, o: &ClosedInterval) -> bool {
        self.lo <= o.lo && o.hi <= self.hi
    }

    pub fn diameter(&self) -> Rational {
        &self.hi - &self.lo
    }

    pub fn is_disjoint(&self, o: &ClosedInterval) -> bool {
        self.hi < o.lo || o.hi < self.lo
    }
}

/// A cyclic list of intervals with `f(I_i) ⊇ I_{i+1 mod m}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoveringChain {
    pub intervals: Vec<ClosedInterval>,
}

impl CoveringChain {
    pub fn new(intervals: Vec<ClosedInterval>) -> Result<CoveringChain> {
        if intervals.is_empty() {
            return Err(Error::InvalidArgument("empty covering chain".into()));
        }
        Ok(CoveringChain { intervals })
    }

    pub fn len(&self) -> usize {
        self.intervals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    /// Indices `i` for which `f(I_i)` misses part of `I_{i+1}`.
    pub fn violations(&self, f: &PiecewiseLinear) -> Vec<usize> {
        let m = self.len();
        (0..m)
            .filter(|&i| {
                let cur = &self.intervals[i];
                let (lo, hi) = f.image(&cur.lo, &cur.hi);
                let img = ClosedInterval { lo, hi };
                !img.contains_interval(&self.intervals[(i + 1) % m])
            })
            .collect()
    }

    pub fn verify(&self, f: &PiecewiseLinear) -> Result<()> {
        let v = self.violations(f);
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::CoveringViolated(format!("f(I_i) misses I_(i+1) at i in {v:?}")))
        }
    }
}

fn piecewise(system: &System) -> Result<&PiecewiseLinear> {
    system
        .as_piecewise()
        .ok_or_else(|| Error::InvalidArgument("covering chains need a piecewise-linear map".into()))
}

/// All `x ∈ [lo, hi]` with `f(x) = y`; errors if `f ≡ y` on a subinterval.
fn preimages_in(f: &PiecewiseLinear, lo: &Rational, hi: &Rational, y: &Rational) -> Vec<Rational> {
    let bp = f.breakpoints();
    let mut out: Vec<Rational> = Vec::new();
    for (k, piece) in f.pieces().iter().enumerate() {
        let s = (&bp[k]).max(lo);
        let e = (&bp[k + 1]).min(hi);
        if s > e {
            continue;
        }
        if piece.slope.is_zero() {
            if piece.intercept == *y {
                out.push(s.clone());
                out.push(e.clone());
            }
            continue;
        }
        let x = (y - &piece.intercept) / &piece.slope;
        if x >= *s && x <= *e {
            out.push(x);
        }
    }
    out.sort();
    out.dedup();
    out
}

/// A subinterval `J ⊆ I` with `f(J) = K`, given `f(I) ⊇ K`.
fn pull_back(f: &PiecewiseLinear, i: &ClosedInterval, k: &ClosedInterval) -> Result<ClosedInterval> {
    let lows = preimages_in(f, &i.lo, &i.hi, &k.lo);
    let highs = preimages_in(f, &i.lo, &i.hi, &k.hi);
    if lows.is_empty() || highs.is_empty() {
        return Err(Error::CoveringViolated(format!(
            "f([{}, {}]) does not cover [{}, {}]",
            i.lo, i.hi, k.lo, k.hi
        )));
    }
    if k.lo == k.hi {
        let x = lows[0].clone();
        return Ok(ClosedInterval { lo: x.clone(), hi: x });
    }
    // closest pair (a, b) of a low preimage and a high preimage; between them f stays inside K
    let mut best: Option<(Rational, Rational, Rational)> = None;
    for a in &lows {
        let right = highs.iter().find(|b| *b > a);
        let left = highs.iter().rev().find(|b| *b < a);
        for b in right.into_iter().chain(left) {
            let gap = if b > a { b - a } else { a - b };
            if best.as_ref().is_none_or(|(g, _, _)| gap < *g) {
                best = Some((gap, a.clone(), b.clone()));
            }
        }
    }
    let (_, a, b) = best.expect("nonempty preimage sets");
    let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
    Ok(ClosedInterval { lo, hi })
}

/// A periodic point following the chain: `f^i(x) ∈ I_i` and `f^m(x) = x`.
///
/// Pulls `I_0` back along the chain to `K_0 ⊆ I_0` with `f^m(K_0) = I_0`,
/// then solves `f^m(x) = x` exactly on the branches of `f^m` over `K_0`.
pub fn loop_periodic_point(system: &System, chain: &CoveringChain) -> Result<PeriodicOrbit> {
    let f = piecewise(system)?;
    chain.verify(f)?;
    let m = chain.len();
    let mut target = chain.intervals[0].clone();
    for i in (0..m).rev() {
        target = pull_back(f, &chain.intervals[i], &target)?;
    }
    let branches = power_branches(f, &target.lo, &target.hi, m, DEFAULT_BRANCH_CAP)?;
    let mut x = None;
    for b in &branches {
        if let Some(s) = branch_fixed_points(b)?.into_iter().next() {
            x = Some(s);
            break;
        }
    }
    let x = x.ok_or_else(|| Error::CoveringViolated("no fixed point of f^m in the pulled-back interval".into()))?;
    let mut cur = x.clone();
    for (i, iv) in chain.intervals.iter().enumerate() {
        if !iv.contains(&cur) {
            return Err(Error::CoveringViolated(format!("f^{i}(x) = {cur} left I_{i}")));
        }
        cur = f.eval_exact(&cur);
    }
    PeriodicOrbit::with_period(system, &Point::interval(x), m)
}

/// Sampled ω-limit intervals `I_n^i` of `f^{2^n}` along the orbit of `y`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OmegaLimitReport {
    pub level: usize,
    pub chain: CoveringChain,
    /// Outward padding applied to each endpoint (zero in exact mode).
    pub padding: f64,
    pub covering_verified: bool,
    pub violations: Vec<usize>,
    /// Interval diameters in chain order.
    pub diameters: Vec<Num>,
    pub pairwise_disjoint: bool,
}

impl OmegaLimitReport {
    /// The chain, or an error if the covering check failed.
    pub fn verified_chain(&self) -> Result<&CoveringChain> {
        if self.covering_verified {
            Ok(&self.chain)
        } else {
            Err(Error::CoveringViolated(format!("violations at {:?}", self.violations)))
        }
    }

    /// Number of intervals with diameter above `1/n`, for `n = 1..=max_n`.
    pub fn diameter_profile(&self, max_n: usize) -> Vec<(usize, usize)> {
        (1..=max_n)
            .map(|n| {
                let t = 1.0 / n as f64;
                (n, self.diameters.iter().filter(|d| d.to_f64() > t).count())
            })
            .collect()
    }
}

/// `I_n^i = [min, max]` of `samples` iterates of `f^{2^n}` started at
/// `f^{i + burn_in·2^n}(y)`; exact for rational `y`, otherwise binary64 with
/// endpoints padded outward by [`FLOAT_PADDING`]. The covering property is
/// then checked exactly and reported.
pub fn omega_limit_intervals(
    system: &System,
    y: &Point,
    level: usize,
    burn_in: usize,
    samples: usize,
) -> Result<OmegaLimitReport> {
    let f = piecewise(system)?;
    if samples == 0 {
        return Err(Error::InvalidArgument("need at least one sample".into()));
    }
    if level > 20 {
        return Err(Error::CapExceeded {
            what: "omega-limit level",
            value: level as u128,
            cap: 20,
        });
    }
    let k = 1usize << level;
    let start = burn_in * k;
    let total = start + samples * k;
    let (intervals, padding) = match y {
        Point::Interval(Num::Exact(y0)) => {
            let mut lo: Vec<Option<Rational>> = vec![None; k];
            let mut hi: Vec<Option<Rational>> = vec![None; k];
            let mut cur = y0.clone();
            for t in 0..total {
                if t >= start {
                    let i = t % k;
                    if lo[i].as_ref().is_none_or(|l| cur < *l) {
                        lo[i] = Some(cur.clone());
                    }
                    if hi[i].as_ref().is_none_or(|h| cur > *h) {
                        hi[i] = Some(cur.clone());
                    }
                }
                cur = f.eval_exact(&cur);
            }
            let iv = lo
                .into_iter()
                .zip(hi)
                .map(|(l, h)| ClosedInterval {
                    lo: l.expect("sampled"),
                    hi: h.expect("sampled"),
                })
                .collect::<Vec<_>>();
            (iv, 0.0)
        }
        Point::Interval(Num::Float(y0)) => {
            let mut lo = vec![f64::INFINITY; k];
            let mut hi = vec![f64::NEG_INFINITY; k];
            let mut cur = *y0;
            for t in 0..total {
                if t >= start {
                    let i = t % k;
                    lo[i] = lo[i].min(cur);
                    hi[i] = hi[i].max(cur);
                }
                cur = f.eval_f64(cur);
            }
            let to_rat = |v: f64| BigRational::from_float(v.clamp(0.0, 1.0)).expect("finite");
            let iv = lo
                .into_iter()
                .zip(hi)
                .map(|(l, h)| ClosedInterval {
                    lo: to_rat(l - FLOAT_PADDING),
                    hi: to_rat(h + FLOAT_PADDING),
                })
                .collect::<Vec<_>>();
            (iv, FLOAT_PADDING)
        }
        other => {
            return Err(Error::VariantMismatch {
                point: other.kind_name(),
                system: system.kind_name(),
            })
        }
    };
    let chain = CoveringChain::new(intervals)?;
    let violations = chain.violations(f);
    let diameters = chain
        .intervals
        .iter()
        .map(|iv| {
            if padding > 0.0 {
                Num::Float(rational_to_f64(&iv.diameter()))
            } else {
                Num::Exact(iv.diameter())
            }
        })
        .collect();
    let pairwise_disjoint = (0..k).all(|i| (i + 1..k).all(|j| chain.intervals[i].is_disjoint(&chain.intervals[j])));
    Ok(OmegaLimitReport {
        level,
        covering_verified: violations.is_empty(),
        violations,
        chain,
        padding,
        diameters,
        pairwise_disjoint,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::num::rat;

    fn iv(a: i64, b: i64, c: i64, d: i64) -> ClosedInterval {
        ClosedInterval::new(rat(a, b), rat(c, d)).unwrap()
    }

    #[test]
    fn tent_chains() {
        let t = System::tent();
        let two = CoveringChain::new(vec![iv(0, 1, 1, 2), iv(1, 2, 1, 1)]).unwrap();
        let o = loop_periodic_point(&t, &two).unwrap();
        assert_eq!(o.base, Point::interval(rat(2, 5)));
        let one = CoveringChain::new(vec![iv(1, 2, 1, 1)]).unwrap();
        assert_eq!(loop_periodic_point(&t, &one).unwrap().base, Point::interval(rat(2, 3)));
        let zero = CoveringChain::new(vec![iv(0, 1, 0, 1)]).unwrap();
        assert_eq!(loop_periodic_point(&t, &zero).unwrap().base, Point::interval(rat(0, 1)));
    }

    #[test]
    fn rejects_non_covering_chain() {
        let t = System::tent();
        let bad = CoveringChain::new(vec![iv(0, 1, 1, 8), iv(1, 2, 1, 1)]).unwrap();
        assert!(matches!(loop_periodic_point(&t, &bad), Err(Error::CoveringViolated(_))));
    }

    #[test]
    fn omega_limits_of_periodic_points() {
        let t = System::tent();
        let r = omega_limit_intervals(&t, &Point::interval(rat(2, 3)), 2, 0, 5).unwrap();
        assert!(r.chain.intervals.iter().all(|i| i.lo == rat(2, 3) && i.hi == rat(2, 3)));
        assert!(r.covering_verified);
        let r = omega_limit_intervals(&t, &Point::interval(rat(2, 5)), 1, 3, 4).unwrap();
        assert_eq!(r.chain.intervals, vec![iv(2, 5, 2, 5), iv(4, 5, 4, 5)]);
        assert!(r.covering_verified && r.pairwise_disjoint);
    }

    #[test]
    fn two_band_level_one() {
        let s = System::two_band();
        // denominator 3·10007 keeps the exact orbit on a long cycle inside the bands
        let y = Point::interval(rat(1234, 3 * 10007));
        let r = omega_limit_intervals(&s, &y, 1, 200, 20000).unwrap();
        assert!(r.covering_verified, "violations {:?}", r.violations);
        assert!(r.pairwise_disjoint);
        let band0 = iv(0, 1, 1, 3);
        let band1 = iv(2, 3, 1, 1);
        let (a, b) = (&r.chain.intervals[0], &r.chain.intervals[1]);
        assert!(band0.contains_interval(a) || band1.contains_interval(a));
        assert!(band0.contains_interval(b) || band1.contains_interval(b));
    }
}
