//! Exact W1 (= γ) between finite discrete measures: Hungarian assignment for
//! equal-size empirical measures, min-cost flow for rational weights, and
//! 1-D closed forms for interval and circle supports.

mod flow;
mod hungarian;
mod line;
mod scalar;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::dynsys::{reduce_mod1, DiscreteMeasure, EmpiricalMeasure, Point, System};
use crate::error::{cap_check, Error, Result};
use crate::num::{rational_str, Num, Rational};
use line::Events;
use scalar::{headroom, integerize, Scaled};

pub use scalar::FLOAT_TIGHT;

/// Largest assignment instance accepted (cubic cost).
pub const ASSIGNMENT_HARD_CAP: usize = 4096;
/// Default assignment size for witness certification and tracing.
pub const DEFAULT_ASSIGNMENT_CAP: usize = 1024;
/// Largest common denominator of flow weights.
pub const WEIGHT_LCM_CAP: u64 = 1 << 31;
/// Support size above which callers coarsen before running the flow solver.
pub const SUPPORT_CAP: usize = 256;
/// Absolute tolerance for float-mode comparisons.
pub const FLOAT_TOL: f64 = 1e-9;

/// Row-major matrix of nonnegative costs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CostMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<Num>,
}

impl CostMatrix {
    pub fn new(rows: usize, cols: usize, entries: Vec<Num>) -> Result<CostMatrix> {
        if entries.len() != rows * cols {
            return Err(Error::SizeMismatch(format!(
                "{} entries for a {rows}x{cols} matrix",
                entries.len()
            )));
        }
        if let Some(e) = entries.iter().find(|e| e.cmp_value(&Num::zero()).is_lt()) {
            return Err(Error::InvalidArgument(format!("negative cost {e}")));
        }
        Ok(CostMatrix {
            rows,
            cols,
            entries,
        })
    }

    pub fn from_rows(rows: Vec<Vec<Num>>) -> Result<CostMatrix> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::SizeMismatch("ragged cost matrix".into()));
        }
        CostMatrix::new(r, c, rows.into_iter().flatten().collect())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &Num {
        &self.entries[i * self.cols + j]
    }

    pub fn entries(&self) -> &[Num] {
        &self.entries
    }

    pub fn is_exact(&self) -> bool {
        self.entries.iter().all(Num::is_exact)
    }

    /// `(1/n) Σ c[i][σ(i)]`.
    pub fn permutation_cost(&self, sigma: &[usize]) -> Result<Num> {
        if self.rows != self.cols || sigma.len() != self.rows || self.rows == 0 {
            return Err(Error::SizeMismatch("permutation does not fit the matrix".into()));
        }
        let total = sigma
            .iter()
            .enumerate()
            .fold(Num::zero(), |acc, (i, &j)| acc.add(self.get(i, j)));
        Ok(total.div_int(self.rows))
    }
}

/// `c[i][j] = d(a_i, b_j)`, exact whenever the distance is.
pub fn cost_matrix(system: &System, a: &[Point], b: &[Point]) -> Result<CostMatrix> {
    let mut entries = Vec::with_capacity(a.len() * b.len());
    for x in a {
        for y in b {
            entries.push(system.dist(x, y)?);
        }
    }
    Ok(CostMatrix {
        rows: a.len(),
        cols: b.len(),
        entries,
    })
}

/// An optimal permutation and its average cost.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Assignment {
    pub cost: Num,
    pub permutation: Vec<usize>,
}

/// `min_σ (1/n) Σ c[i][σ(i)]` with the lexicographically smallest optimal σ.
pub fn assignment_cost(c: &CostMatrix) -> Result<Assignment> {
    if c.rows != c.cols {
        return Err(Error::NonSquare {
            rows: c.rows,
            cols: c.cols,
        });
    }
    let n = c.rows;
    if n == 0 {
        return Err(Error::InvalidArgument("empty cost matrix".into()));
    }
    cap_check("assignment size", n, ASSIGNMENT_HARD_CAP)?;
    let permutation = if c.is_exact() {
        let vals: Vec<Rational> = c.entries.iter().map(|e| e.as_exact().expect("exact").clone()).collect();
        match integerize(&vals, headroom(2 * n)).1 {
            Scaled::Small(v) => hungarian::solve(n, &v),
            Scaled::Big(v) => hungarian::solve(n, &v),
        }
    } else {
        let vals: Vec<f64> = c.entries.iter().map(Num::to_f64).collect();
        hungarian::solve(n, &vals)
    };
    let cost = c.permutation_cost(&permutation)?;
    Ok(Assignment { cost, permutation })
}

/// One arc of a transport plan.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlanArc {
    pub from: usize,
    pub to: usize,
    #[serde(with = "rational_str")]
    pub mass: Rational,
}

/// A coupling as a list of positive-mass arcs between support indices.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransportPlan {
    pub cost: Num,
    pub arcs: Vec<PlanArc>,
}

impl TransportPlan {
    /// Row and column sums of the plan.
    pub fn marginals(&self, rows: usize, cols: usize) -> (Vec<Rational>, Vec<Rational>) {
        let mut r = vec![Rational::zero(); rows];
        let mut c = vec![Rational::zero(); cols];
        for a in &self.arcs {
            r[a.from] += &a.mass;
            c[a.to] += &a.mass;
        }
        (r, c)
    }
}

/// Exact optimal transport between two rational-weight measures by min-cost
/// flow on the instance scaled to a common denominator.
pub fn w1_discrete(
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    system: &System,
) -> Result<(Num, TransportPlan)> {
    for m in [mu, nu] {
        let total: Rational = m.weights().iter().sum();
        if total != Rational::from_integer(1.into()) {
            return Err(Error::WeightSum(total.to_string()));
        }
    }
    let mut lcm = BigInt::from(1);
    for w in mu.weights().iter().chain(nu.weights()) {
        lcm = lcm.lcm(w.denom());
    }
    let scale = lcm
        .to_u64()
        .filter(|&l| l <= WEIGHT_LCM_CAP)
        .ok_or_else(|| Error::CapExceeded {
            what: "weight common denominator",
            value: lcm.to_u128().unwrap_or(u128::MAX),
            cap: WEIGHT_LCM_CAP as u128,
        })?;
    let units = |m: &DiscreteMeasure| -> Vec<u64> {
        m.weights()
            .iter()
            .map(|w| (w.numer() * (&lcm / w.denom())).to_u64().expect("bounded by scale"))
            .collect()
    };
    let supply = units(mu);
    let demand = units(nu);
    let c = cost_matrix(system, mu.support(), nu.support())?;
    let n_nodes = mu.len() + nu.len() + 2;
    let arcs = if c.is_exact() {
        let vals: Vec<Rational> = c.entries.iter().map(|e| e.as_exact().expect("exact").clone()).collect();
        match integerize(&vals, headroom(4 * n_nodes)).1 {
            Scaled::Small(v) => flow::transport(&supply, &demand, &v),
            Scaled::Big(v) => flow::transport(&supply, &demand, &v),
        }
    } else {
        let vals: Vec<f64> = c.entries.iter().map(Num::to_f64).collect();
        flow::transport(&supply, &demand, &vals)
    };
    let scale_r = Rational::from_integer(scale.into());
    let mut cost = Num::zero();
    let arcs: Vec<PlanArc> = arcs
        .into_iter()
        .map(|(i, j, u)| {
            let mass = Rational::from_integer(u.into()) / &scale_r;
            cost = cost.add(&c.get(i, j).mul(&Num::Exact(mass.clone())));
            PlanArc { from: i, to: j, mass }
        })
        .collect();
    Ok((
        cost.clone(),
        TransportPlan { cost, arcs },
    ))
}

fn interval_coord(p: &Point) -> Result<Num> {
    match p {
        Point::Interval(v) => Ok(v.clone()),
        other => Err(Error::VariantMismatch {
            point: other.kind_name(),
            system: "interval",
        }),
    }
}

/// Sorted matching `(1/n) Σ |x_(i) - y_(i)|` for equal-size interval measures.
pub fn w1_sorted_interval(mu: &EmpiricalMeasure, nu: &EmpiricalMeasure) -> Result<Num> {
    if mu.len() != nu.len() {
        return Err(Error::SizeMismatch(format!(
            "empirical measures of sizes {} and {}",
            mu.len(),
            nu.len()
        )));
    }
    let sorted = |m: &EmpiricalMeasure| -> Result<Vec<Num>> {
        let mut v = m.atoms().iter().map(interval_coord).collect::<Result<Vec<_>>>()?;
        v.sort_by(|a, b| a.cmp_value(b));
        Ok(v)
    };
    let (a, b) = (sorted(mu)?, sorted(nu)?);
    let total = a
        .iter()
        .zip(&b)
        .fold(Num::zero(), |acc, (x, y)| acc.add(&x.sub(y).abs()));
    Ok(total.div_int(a.len()))
}

/// Closed-form W1 for two interval-supported measures.
pub fn w1_line(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Result<Num> {
    Ok(events(mu, nu, interval_coord)?.line())
}

/// Closed-form W1 for two circle-supported measures under the doubled arc metric.
pub fn w1_circle(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Result<Num> {
    Ok(events(mu, nu, circle_coord)?.circle())
}

fn circle_coord(p: &Point) -> Result<Num> {
    match p {
        Point::Circle(v) => Ok(reduce_mod1(v)),
        other => Err(Error::VariantMismatch {
            point: other.kind_name(),
            system: "circle",
        }),
    }
}

fn events(
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    coord: fn(&Point) -> Result<Num>,
) -> Result<Events> {
    let mut items = Vec::with_capacity(mu.len() + nu.len());
    for (p, w) in mu.iter() {
        items.push((coord(p)?, w.clone()));
    }
    for (p, w) in nu.iter() {
        items.push((coord(p)?, -w.clone()));
    }
    Ok(Events::new(items))
}

fn uniform_events(a: &[Point], b: &[Point], coord: fn(&Point) -> Result<Num>) -> Result<Events> {
    let w = Rational::new(1.into(), a.len().into());
    let mut items = Vec::with_capacity(2 * a.len());
    for p in a {
        items.push((coord(p)?, w.clone()));
    }
    for p in b {
        items.push((coord(p)?, -w.clone()));
    }
    Ok(Events::new(items))
}

/// `min_σ (1/n) Σ d(a_i, b_σ(i))`, i.e. γ between the two empirical measures.
///
/// Interval and circle systems use the 1-D closed form, which has the same
/// value as the assignment; shift systems solve the assignment, subject to
/// `cap`.
pub fn matching_cost_capped(system: &System, a: &[Point], b: &[Point], cap: usize) -> Result<Num> {
    if a.len() != b.len() {
        return Err(Error::SizeMismatch(format!("{} vs {} points", a.len(), b.len())));
    }
    if a.is_empty() {
        return Err(Error::InvalidArgument("empty point lists".into()));
    }
    for p in a.iter().chain(b) {
        system.check_point(p)?;
    }
    match system {
        System::PiecewiseLinear(_) | System::GeneralInterval(_) => {
            Ok(uniform_events(a, b, interval_coord)?.line())
        }
        System::CircleRotation { .. } => Ok(uniform_events(a, b, circle_coord)?.circle()),
        System::FullShift { .. } => {
            cap_check("assignment size", a.len(), cap)?;
            Ok(assignment_cost(&cost_matrix(system, a, b)?)?.cost)
        }
    }
}

/// [`matching_cost_capped`] with the hard assignment cap.
pub fn matching_cost(system: &System, a: &[Point], b: &[Point]) -> Result<Num> {
    matching_cost_capped(system, a, b, ASSIGNMENT_HARD_CAP)
}

/// γ(μ, ν) for rational-weight measures: closed form on interval and circle,
/// min-cost flow on shifts.
pub fn gamma(system: &System, mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Result<Num> {
    for p in mu.support().iter().chain(nu.support()) {
        system.check_point(p)?;
    }
    match system {
        System::PiecewiseLinear(_) | System::GeneralInterval(_) => w1_line(mu, nu),
        System::CircleRotation { .. } => w1_circle(mu, nu),
        System::FullShift { .. } => Ok(w1_discrete(mu, nu, system)?.0),
    }
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
    fn cost_matrix_examples() {
        let t = System::tent();
        let c = cost_matrix(&t, &[ip(0, 1)], &[ip(1, 1)]).unwrap();
        assert_eq!(c.entries(), &[Num::one()]);
        let c = cost_matrix(&t, &[ip(2, 5), ip(4, 5)], &[ip(2, 3)]).unwrap();
        assert_eq!(c.entries(), &[Num::exact(4, 15), Num::exact(2, 15)]);
        let pts = [ip(1, 7), ip(3, 7)];
        let c = cost_matrix(&t, &pts, &pts).unwrap();
        assert!(c.get(0, 0).is_zero() && c.get(1, 1).is_zero());
    }

    #[test]
    fn assignment_examples() {
        let c = CostMatrix::from_rows(vec![vec![Num::Float(0.5)]]).unwrap();
        let a = assignment_cost(&c).unwrap();
        assert_eq!(a.cost, Num::Float(0.5));
        assert_eq!(a.permutation, vec![0]);
        let one = Num::one;
        let z = Num::zero;
        let c = CostMatrix::from_rows(vec![
            vec![one(), z(), one()],
            vec![one(), one(), z()],
            vec![z(), one(), one()],
        ])
        .unwrap();
        let a = assignment_cost(&c).unwrap();
        assert!(a.cost.is_zero());
        assert_eq!(a.permutation, vec![1, 2, 0]);
        let bad = CostMatrix::from_rows(vec![vec![z(), z()]]).unwrap();
        assert!(matches!(assignment_cost(&bad), Err(Error::NonSquare { .. })));
    }

    #[test]
    fn w1_examples() {
        let t = System::tent();
        let (c, plan) =
            w1_discrete(&DiscreteMeasure::dirac(ip(1, 5)), &DiscreteMeasure::dirac(ip(7, 10)), &t)
                .unwrap();
        assert_eq!(c, Num::exact(1, 2));
        assert_eq!(plan.arcs.len(), 1);
        assert_eq!(plan.arcs[0].mass, rat(1, 1));
        let mu = DiscreteMeasure::uniform(&[ip(0, 1), ip(1, 1)]).unwrap();
        let nu = DiscreteMeasure::dirac(ip(1, 2));
        assert_eq!(w1_discrete(&mu, &nu, &t).unwrap().0, Num::exact(1, 2));
        let mu = DiscreteMeasure::uniform(&[ip(2, 5), ip(4, 5)]).unwrap();
        let nu = DiscreteMeasure::dirac(ip(2, 3));
        let (c, plan) = w1_discrete(&mu, &nu, &t).unwrap();
        assert_eq!(c, Num::exact(1, 5));
        assert_eq!(w1_line(&mu, &nu).unwrap(), Num::exact(1, 5));
        let (r, col) = plan.marginals(2, 1);
        assert_eq!(r, mu.weights());
        assert_eq!(col, nu.weights());
    }

    #[test]
    fn plan_json() {
        let t = System::tent();
        let mu = DiscreteMeasure::uniform(&[ip(2, 5), ip(4, 5)]).unwrap();
        let nu = DiscreteMeasure::dirac(ip(2, 3));
        let plan = w1_discrete(&mu, &nu, &t).unwrap().1;
        let s = serde_json::to_string(&plan).unwrap();
        assert_eq!(
            s,
            r#"{"cost":"1/5","arcs":[{"from":0,"to":0,"mass":"1/2"},{"from":1,"to":0,"mass":"1/2"}]}"#
        );
    }

    #[test]
    fn sorted_interval_examples() {
        let a = EmpiricalMeasure::new(vec![ip(0, 1), ip(1, 1)]).unwrap();
        let b = EmpiricalMeasure::new(vec![ip(1, 2), ip(1, 2)]).unwrap();
        assert_eq!(w1_sorted_interval(&a, &b).unwrap(), Num::exact(1, 2));
        assert!(w1_sorted_interval(&a, &a).unwrap().is_zero());
        let c = EmpiricalMeasure::new(vec![ip(0, 1)]).unwrap();
        assert!(w1_sorted_interval(&a, &c).is_err());
    }

    #[test]
    fn shift_matching() {
        let s = System::full_shift(2).unwrap();
        let zero = Point::Shift(ShiftPoint::parse(2, "", "0").unwrap());
        let one = Point::Shift(ShiftPoint::parse(2, "", "1").unwrap());
        let c = matching_cost(&s, &[zero.clone(), one.clone()], &[one, zero]).unwrap();
        assert!(c.is_zero());
    }

    #[test]
    fn large_lcm_is_rejected() {
        let t = System::tent();
        let p = 2147483659i64; // prime above 2^31
        let mu = DiscreteMeasure::new(vec![ip(0, 1), ip(1, 1)], vec![rat(1, p), rat(p - 1, p)])
            .unwrap();
        let nu = DiscreteMeasure::dirac(ip(1, 2));
        assert!(matches!(w1_discrete(&mu, &nu, &t), Err(Error::CapExceeded { .. })));
    }
}
