use num_traits::{One, Signed};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::orbit::{
    interval_orbits_of_least_period, shift_orbits_of_least_period, PeriodicOrbit, DEFAULT_BRANCH_CAP,
};
use crate::dynsys::{Point, System};
use crate::error::{Error, Result};
use crate::num::{Num, Rational};
use crate::transport::{matching_cost_capped, DEFAULT_ASSIGNMENT_CAP};

/// Bounds on every periodic-orbit search.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SearchCaps {
    /// Largest candidate period.
    pub max_period: usize,
    /// Largest horizon `n` (or stitched length) examined.
    pub max_horizon: usize,
    /// Largest assignment used to certify a cost.
    pub assignment: usize,
    /// Horizons tried per candidate: the first this many admissible multiples.
    pub multiples: usize,
}

impl Default for SearchCaps {
    fn default() -> Self {
        SearchCaps {
            max_period: 12,
            max_horizon: 4096,
            assignment: DEFAULT_ASSIGNMENT_CAP,
            multiples: 2,
        }
    }
}

/// Where candidate periodic points come from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OrbitSource {
    /// A fixed list of periodic points.
    Explicit { points: Vec<Point> },
    /// Every periodic orbit of the full shift (one per Lyndon word).
    ShiftNecklaces,
    /// Every periodic orbit of a piecewise-linear map (exact branch solving).
    IntervalBranches,
    /// The periodic points `(w_0 … w_{p-1})^∞` built from a shift point.
    ShiftTruncations { of: Point },
}

/// A candidate periodic point and the cycle length `c` with `T^c x = x` that
/// horizons are multiples of.
#[derive(Clone, Debug)]
pub struct Candidate {
    pub orbit: PeriodicOrbit,
    pub cycle: usize,
}

impl OrbitSource {
    /// Candidates attached to cycle length `p`, in a fixed order.
    pub fn candidates(&self, system: &System, p: usize) -> Result<Vec<Candidate>> {
        let wrap = |v: Vec<PeriodicOrbit>| {
            v.into_iter()
                .map(|orbit| Candidate { orbit, cycle: p })
                .collect::<Vec<_>>()
        };
        match self {
            OrbitSource::Explicit { points } => {
                let mut out = Vec::new();
                for x in points {
                    match PeriodicOrbit::of_point(system, x, p) {
                        Ok(o) if o.period == p => out.push(Candidate { orbit: o, cycle: p }),
                        Ok(_) | Err(Error::NotPeriodic(_)) => {}
                        Err(e) => return Err(e),
                    }
                }
                Ok(out)
            }
            OrbitSource::ShiftNecklaces => match system {
                System::FullShift { alphabet } => {
                    Ok(wrap(shift_orbits_of_least_period(system, *alphabet, p)?))
                }
                _ => Err(Error::InvalidArgument("necklaces need a full shift".into())),
            },
            OrbitSource::IntervalBranches => {
                Ok(wrap(interval_orbits_of_least_period(system, p, DEFAULT_BRANCH_CAP)?))
            }
            OrbitSource::ShiftTruncations { of } => {
                let s = of
                    .as_shift()
                    .ok_or_else(|| Error::InvalidArgument("truncations need a shift point".into()))?;
                let x = Point::Shift(s.truncation(p)?);
                let orbit = PeriodicOrbit::with_period(system, &x, p)?;
                Ok(vec![Candidate { orbit, cycle: p }])
            }
        }
    }

    /// Whether the source's periodic points may be listed from `points`.
    fn validate(&self, system: &System) -> Result<()> {
        if let OrbitSource::Explicit { points } = self {
            for p in points {
                system.check_point(p)?;
            }
        }
        Ok(())
    }
}

/// The sequence a candidate orbit is compared with.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Target {
    /// The orbit of a point under the system.
    Point { point: Point },
    /// A precomputed orbit segment (for example a float orbit sampled
    /// through a conjugacy).
    Sequence { points: Vec<Point> },
}

impl Target {
    pub fn point(p: Point) -> Target {
        Target::Point { point: p }
    }

    /// First `n` points of the target sequence.
    pub fn prefix(&self, system: &System, n: usize) -> Result<Vec<Point>> {
        match self {
            Target::Point { point } => system.orbit(point, n),
            Target::Sequence { points } => {
                if points.len() < n {
                    return Err(Error::SizeMismatch(format!(
                        "target sequence has {} points, {n} needed",
                        points.len()
                    )));
                }
                Ok(points[..n].to_vec())
            }
        }
    }

    fn available(&self) -> usize {
        match self {
            Target::Point { .. } => usize::MAX,
            Target::Sequence { points } => points.len(),
        }
    }
}

/// A periodic `x` and horizon `n` with `T^n x = x` whose matching cost
/// against the target is certified.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityWitness {
    pub point: Point,
    pub period: usize,
    pub n: usize,
    pub cost: Num,
    pub target: String,
}

/// Outcome of a bounded search: the first success, otherwise the best candidate seen.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SearchOutcome<W> {
    pub found: Option<W>,
    pub best: Option<W>,
    pub candidates_examined: usize,
    pub caps: SearchCaps,
}

impl<W> SearchOutcome<W> {
    pub fn is_success(&self) -> bool {
        self.found.is_some()
    }
}

fn horizons_for(cycle: usize, unit: usize, min_n: usize, max_n: usize, count: usize) -> Vec<usize> {
    // n with n·unit a multiple of cycle, n ≥ min_n, n·unit ≤ max_n
    let step = cycle / gcd(cycle, unit);
    let first = min_n.div_ceil(step).max(1) * step;
    (0..count)
        .map(|k| first + k * step)
        .take_while(|n| n * unit <= max_n)
        .collect()
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Bounded search for a periodic `x` and `n ≥ min_n` with `T^n x = x` and
/// `min_σ (1/n) Σ d(T^i x, T^σ(i) y) < eps`.
pub fn check_density_ergodic(
    system: &System,
    source: &OrbitSource,
    y: &Target,
    eps: f64,
    min_n: usize,
    caps: &SearchCaps,
) -> Result<SearchOutcome<DensityWitness>> {
    check_density_convex(system, source, std::slice::from_ref(y), eps, min_n, caps)
}

/// The stitched sequence `z_{i+(j-1)n} = T^i y_j`, `i < n`, `j = 1..k`.
pub fn stitched_targets(system: &System, ys: &[Target], n: usize) -> Result<Vec<Point>> {
    let mut z = Vec::with_capacity(ys.len() * n);
    for y in ys {
        z.extend(y.prefix(system, n)?);
    }
    Ok(z)
}

/// Bounded search for a periodic `x` with `T^{kn} x = x` whose `kn` orbit
/// points match the stitched targets with cost below `eps`.
pub fn check_density_convex(
    system: &System,
    source: &OrbitSource,
    ys: &[Target],
    eps: f64,
    min_n: usize,
    caps: &SearchCaps,
) -> Result<SearchOutcome<DensityWitness>> {
    if ys.is_empty() {
        return Err(Error::InvalidArgument("need at least one target".into()));
    }
    if eps.is_nan() || eps <= 0.0 || min_n == 0 {
        return Err(Error::InvalidArgument("need eps > 0 and N >= 1".into()));
    }
    source.validate(system)?;
    let k = ys.len();
    let limit = caps.max_horizon.min(caps.assignment);
    if min_n * k > limit {
        return Err(Error::CapExceeded {
            what: "stitched length k·N",
            value: (min_n * k) as u128,
            cap: limit as u128,
        });
    }
    let max_target = ys.iter().map(Target::available).min().unwrap_or(0);
    let n_limit = (limit / k).min(max_target);
    let z_full = stitched_parts(system, ys, n_limit)?;
    let label = if k == 1 { "ergodic".to_string() } else { format!("stitched k={k}") };
    let mut best: Option<DensityWitness> = None;
    let mut examined = 0;
    for p in 1..=caps.max_period {
        let cands = source.candidates(system, p)?;
        let jobs: Vec<(usize, usize)> = cands
            .iter()
            .enumerate()
            .flat_map(|(ci, c)| {
                horizons_for(c.cycle, k, min_n, k * n_limit, caps.multiples)
                    .into_iter()
                    .map(move |n| (ci, n))
            })
            .collect();
        examined += jobs.len();
        let costs = jobs
            .par_iter()
            .map(|&(ci, n)| {
                let x = cands[ci].orbit.prefix(k * n);
                let z: Vec<Point> = z_full.iter().flat_map(|part| part[..n].iter().cloned()).collect();
                matching_cost_capped(system, &x, &z, caps.assignment)
            })
            .collect::<Result<Vec<_>>>()?;
        for (&(ci, n), cost) in jobs.iter().zip(costs) {
            let w = DensityWitness {
                point: cands[ci].orbit.base.clone(),
                period: cands[ci].orbit.period,
                n,
                cost,
                target: label.clone(),
            };
            if w.cost.to_f64() < eps {
                return Ok(SearchOutcome {
                    found: Some(w.clone()),
                    best: Some(w),
                    candidates_examined: examined,
                    caps: caps.clone(),
                });
            }
            if best.as_ref().is_none_or(|b| w.cost.cmp_value(&b.cost).is_lt()) {
                best = Some(w);
            }
        }
    }
    Ok(SearchOutcome {
        found: None,
        best,
        candidates_examined: examined,
        caps: caps.clone(),
    })
}

fn stitched_parts(system: &System, ys: &[Target], n: usize) -> Result<Vec<Vec<Point>>> {
    ys.iter().map(|y| y.prefix(system, n)).collect()
}

/// `(p, q, y)` with `N ≤ p ≤ q ≤ (1+eps)p`, `T^q y = y` and
/// `d(T^i y, T^i x) < eps` for `i < p`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClosableWitness {
    pub p: usize,
    pub q: usize,
    pub y: Point,
    /// `max_{i<p} d(T^i y, T^i x)`.
    pub sup_distance: Num,
}

/// Bounded search for a closability witness of `x` among the periodic
/// points of `source`. For each `q`, `p` is the longest prefix on which the
/// orbits stay `eps`-close (capped at `q`).
pub fn check_closable(
    system: &System,
    source: &OrbitSource,
    x: &Point,
    eps: f64,
    min_n: usize,
    caps: &SearchCaps,
) -> Result<SearchOutcome<ClosableWitness>> {
    if eps.is_nan() || eps <= 0.0 || min_n == 0 {
        return Err(Error::InvalidArgument("need eps > 0 and N >= 1".into()));
    }
    source.validate(system)?;
    let xs = system.orbit(x, caps.max_horizon)?;
    let mut best: Option<ClosableWitness> = None;
    let mut examined = 0;
    for period in 1..=caps.max_period {
        let cands = source.candidates(system, period)?;
        let jobs: Vec<(usize, usize)> = cands
            .iter()
            .enumerate()
            .flat_map(|(ci, c)| {
                horizons_for(c.cycle, 1, min_n, caps.max_horizon, caps.multiples)
                    .into_iter()
                    .map(move |q| (ci, q))
            })
            .collect();
        examined += jobs.len();
        let results = jobs
            .par_iter()
            .map(|&(ci, q)| closable_at(system, &cands[ci].orbit, &xs, q, eps, min_n))
            .collect::<Result<Vec<_>>>()?;
        for (w, ok) in results {
            if ok {
                return Ok(SearchOutcome {
                    found: Some(w.clone()),
                    best: Some(w),
                    candidates_examined: examined,
                    caps: caps.clone(),
                });
            }
            if best.as_ref().is_none_or(|b| w.sup_distance.cmp_value(&b.sup_distance).is_lt()) {
                best = Some(w);
            }
        }
    }
    Ok(SearchOutcome {
        found: None,
        best,
        candidates_examined: examined,
        caps: caps.clone(),
    })
}

fn closable_at(
    system: &System,
    y: &PeriodicOrbit,
    xs: &[Point],
    q: usize,
    eps: f64,
    min_n: usize,
) -> Result<(ClosableWitness, bool)> {
    // smallest p allowed by q ≤ (1+eps)p
    let p_min = ((q as f64) / (1.0 + eps)).ceil().max(min_n as f64) as usize;
    let mut sup = Num::zero();
    let mut p_ok = 0;
    for (i, x) in xs.iter().enumerate().take(q) {
        let d = system.dist(y.point(i), x)?;
        if d.to_f64() >= eps {
            if i < p_min {
                sup = sup.max_value(d);
            }
            break;
        }
        sup = sup.max_value(d);
        p_ok = i + 1;
    }
    let ok = p_ok >= p_min && p_min <= q;
    let p = if ok { p_ok } else { p_min.min(q) };
    if !ok {
        // report the sup over the shortest admissible prefix
        sup = Num::zero();
        for (i, x) in xs.iter().enumerate().take(p) {
            sup = sup.max_value(system.dist(y.point(i), x)?);
        }
    }
    Ok((
        ClosableWitness {
            p,
            q,
            y: y.base.clone(),
            sup_distance: sup,
        },
        ok,
    ))
}

/// `(1/q) Σ_{i<q} d(T^i x, T^i y)` for a `q`-periodic `y`.
pub fn closable_mean_bound(system: &System, x: &Point, y: &Point, q: usize) -> Result<Num> {
    if q == 0 {
        return Err(Error::InvalidArgument("q must be positive".into()));
    }
    if system.iterate(y, q)? != *y {
        return Err(Error::NotPeriodic(format!("T^{q} y != y")));
    }
    identity_cost(system, &system.orbit(x, q)?, &system.orbit(y, q)?)
}

/// `(1/n) Σ d(a_i, b_i)`: the cost of the identity matching.
pub fn identity_cost(system: &System, a: &[Point], b: &[Point]) -> Result<Num> {
    if a.len() != b.len() || a.is_empty() {
        return Err(Error::SizeMismatch(format!("{} vs {} points", a.len(), b.len())));
    }
    let mut total = Num::zero();
    for (p, q) in a.iter().zip(b) {
        total = total.add(&system.dist(p, q)?);
    }
    Ok(total.div_int(a.len()))
}

/// `x_i = T^i y_1` for `i < q_1`, then `T^{i-q_1} y_2` up to `q_2`.
pub fn stitched_pair(y1: &PeriodicOrbit, y2: &PeriodicOrbit, q1: usize, q2: usize) -> Result<Vec<Point>> {
    if q1 > q2 {
        return Err(Error::InvalidArgument("q1 must not exceed q2".into()));
    }
    let mut x = y1.prefix(q1);
    x.extend(y2.prefix(q2 - q1));
    Ok(x)
}

/// Integers `(p1, p2, q1, q2)`, a periodic `z` with `T^{q2} z = z`, and the
/// certified stitched matching cost.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinkWitness {
    pub p1: usize,
    pub p2: usize,
    pub q1: usize,
    pub q2: usize,
    pub z: Point,
    pub cost: Num,
}

/// Bounded search for the two conditions linking `y1` and `y2` in proportion
/// `lambda`: `p1`, `p2` multiples of the base periods with
/// `|p1/(p1+p2) - lambda| ≤ eps`, and a `z` from `source` whose `q2` orbit
/// points match the stitched sequence with cost below `eps`. Uses
/// `q1 = p1`, `q2 = p1 + p2`, ordered by increasing `q2`.
pub fn check_linkable_pair(
    system: &System,
    y1: &PeriodicOrbit,
    y2: &PeriodicOrbit,
    lambda: &Rational,
    eps: f64,
    source: &OrbitSource,
    caps: &SearchCaps,
) -> Result<SearchOutcome<LinkWitness>> {
    if lambda.is_negative() || *lambda > Rational::one() {
        return Err(Error::InvalidArgument(format!("lambda {lambda} outside [0,1]")));
    }
    if eps.is_nan() || eps <= 0.0 {
        return Err(Error::InvalidArgument("need eps > 0".into()));
    }
    source.validate(system)?;
    let limit = caps.max_horizon.min(caps.assignment);
    let (r1, r2) = (y1.period, y2.period);
    if r1 + r2 > limit {
        return Err(Error::CapExceeded {
            what: "stitched length q2",
            value: (r1 + r2) as u128,
            cap: limit as u128,
        });
    }
    let lam = crate::num::rational_to_f64(lambda);
    let mut splits: Vec<(usize, usize)> = Vec::new();
    for a in 1..=limit / r1 {
        for b in 1..=(limit - a * r1) / r2 {
            let (p1, p2) = (a * r1, b * r2);
            let frac = p1 as f64 / (p1 + p2) as f64;
            if (frac - lam).abs() <= eps {
                splits.push((p1, p2));
            }
        }
    }
    splits.sort_by_key(|&(p1, p2)| (p1 + p2, p1));
    let mut best: Option<LinkWitness> = None;
    let mut examined = 0;
    let mut cache: Vec<Option<Vec<Candidate>>> = vec![None; caps.max_period + 1];
    for (p1, p2) in splits {
        let q2 = p1 + p2;
        let x = stitched_pair(y1, y2, p1, q2)?;
        for period in (1..=caps.max_period).filter(|d| q2 % d == 0) {
            if cache[period].is_none() {
                cache[period] = Some(source.candidates(system, period)?);
            }
            let cands = cache[period].as_ref().expect("filled");
            examined += cands.len();
            let costs = cands
                .par_iter()
                .map(|c| matching_cost_capped(system, &x, &c.orbit.prefix(q2), caps.assignment))
                .collect::<Result<Vec<_>>>()?;
            for (c, cost) in cands.iter().zip(costs) {
                let w = LinkWitness {
                    p1,
                    p2,
                    q1: p1,
                    q2,
                    z: c.orbit.base.clone(),
                    cost,
                };
                if w.cost.to_f64() < eps {
                    return Ok(SearchOutcome {
                        found: Some(w.clone()),
                        best: Some(w),
                        candidates_examined: examined,
                        caps: caps.clone(),
                    });
                }
                if best.as_ref().is_none_or(|b| w.cost.cmp_value(&b.cost).is_lt()) {
                    best = Some(w);
                }
            }
        }
    }
    Ok(SearchOutcome {
        found: None,
        best,
        candidates_examined: examined,
        caps: caps.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynsys::ShiftPoint;
    use crate::num::rat;

    fn ip(n: i64, d: i64) -> Point {
        Point::interval(rat(n, d))
    }

    fn sp(pre: &str, period: &str) -> Point {
        Point::Shift(ShiftPoint::parse(2, pre, period).unwrap())
    }

    #[test]
    fn horizon_multiples() {
        assert_eq!(horizons_for(3, 1, 8, 100, 2), vec![9, 12]);
        assert_eq!(horizons_for(4, 2, 3, 100, 3), vec![4, 6, 8]);
        assert_eq!(horizons_for(5, 1, 1, 7, 3), vec![5]);
    }

    #[test]
    fn periodic_target_is_its_own_witness() {
        let t = System::tent();
        let out = check_density_ergodic(
            &t,
            &OrbitSource::IntervalBranches,
            &Target::point(ip(2, 5)),
            1e-9,
            5,
            &SearchCaps::default(),
        )
        .unwrap();
        let w = out.found.unwrap();
        assert_eq!(w.point, ip(2, 5));
        assert_eq!(w.n, 6);
        assert!(w.cost.is_zero());
    }

    #[test]
    fn convex_with_repeated_target() {
        let t = System::tent();
        let y = Target::point(ip(2, 5));
        let out = check_density_convex(
            &t,
            &OrbitSource::Explicit { points: vec![ip(2, 5)] },
            &[y.clone(), y],
            1e-9,
            1,
            &SearchCaps::default(),
        )
        .unwrap();
        assert!(out.found.unwrap().cost.is_zero());
    }

    #[test]
    fn closable_examples() {
        let t = System::tent();
        let caps = SearchCaps::default();
        let src = OrbitSource::Explicit { points: vec![ip(2, 5)] };
        let out = check_closable(&t, &src, &ip(2, 5), 0.1, 5, &caps).unwrap();
        let w = out.found.unwrap();
        assert_eq!((w.p, w.q), (6, 6));
        assert!(w.sup_distance.is_zero());
        let src = OrbitSource::Explicit { points: vec![ip(0, 1)] };
        let out = check_closable(&t, &src, &ip(2, 3), 0.1, 1, &caps).unwrap();
        assert!(out.found.is_none());
        assert_eq!(out.best.unwrap().sup_distance, Num::exact(2, 3));
    }

    #[test]
    fn shift_closability_by_truncation() {
        let s = System::full_shift(2).unwrap();
        let x = sp("1101001110", "01");
        let caps = SearchCaps {
            max_period: 80,
            ..SearchCaps::default()
        };
        let out = check_closable(&s, &OrbitSource::ShiftTruncations { of: x.clone() }, &x, 0.1, 10, &caps)
            .unwrap();
        let w = out.found.unwrap();
        assert!(w.p >= 10 && w.p <= w.q && (w.q as f64) <= 1.1 * w.p as f64);
        let mean = closable_mean_bound(&s, &x, &w.y, w.q).unwrap();
        assert!(mean.to_f64() < 0.2);
    }

    #[test]
    fn mean_bound_examples() {
        let s = System::full_shift(2).unwrap();
        assert_eq!(closable_mean_bound(&s, &sp("", "0"), &sp("", "1"), 4).unwrap(), Num::one());
        let t = System::tent();
        assert!(closable_mean_bound(&t, &ip(2, 5), &ip(2, 5), 2).unwrap().is_zero());
        assert!(closable_mean_bound(&t, &ip(2, 5), &ip(1, 5), 2).is_err());
    }

    #[test]
    fn linkable_examples() {
        let s = System::full_shift(2).unwrap();
        let zero = PeriodicOrbit::of_point(&s, &sp("", "0"), 1).unwrap();
        let one = PeriodicOrbit::of_point(&s, &sp("", "1"), 1).unwrap();
        let caps = SearchCaps::default();
        let out = check_linkable_pair(&s, &zero, &one, &rat(1, 2), 0.2, &OrbitSource::ShiftNecklaces, &caps)
            .unwrap();
        let w = out.found.expect("witness");
        assert!(w.cost.to_f64() < 0.2);
        assert!((w.p1 as f64 / w.q2 as f64 - 0.5).abs() <= 0.2);
        let same = check_linkable_pair(&s, &zero, &zero, &rat(1, 3), 0.1, &OrbitSource::ShiftNecklaces, &caps)
            .unwrap();
        assert!(same.found.unwrap().cost.is_zero());
    }
}
