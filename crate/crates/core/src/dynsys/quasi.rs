use serde::Serialize;

use super::measure::EmpiricalMeasure;
use super::point::Point;
use super::system::System;
use crate::error::{Error, Result};
use crate::num::Num;
use crate::pseudometric::{coarsen, Coarsening};
use crate::transport::{gamma, SUPPORT_CAP};

/// Result of the finite-horizon Cauchy test for `m_T(x, n)`.
#[derive(Clone, Debug, Serialize)]
pub struct QuasiRegularReport {
    pub horizons: Vec<usize>,
    /// `γ(m_T(x, h_k), m_T(x, h_{k+1}))` for consecutive horizons, or an upper
    /// bound for it when `coarsened` is set.
    pub gaps: Vec<Num>,
    pub max_gap: Num,
    pub tol: f64,
    pub coarsened: bool,
    pub quasi_regular: bool,
}

/// `[start, 2·start, 4·start, …]` up to and including `max`.
pub fn doubling_horizons(start: usize, max: usize) -> Vec<usize> {
    let mut out = Vec::new();
    let mut h = start.max(1);
    while h <= max {
        out.push(h);
        h *= 2;
    }
    out
}

/// True iff every consecutive-horizon gap is below `tol`.
///
/// Shift measures whose support exceeds the transport cap are first coarsened
/// to cylinders; the gaps then include both coarsening errors and remain upper
/// bounds.
pub fn is_quasi_regular(
    system: &System,
    x: &Point,
    horizons: &[usize],
    tol: f64,
) -> Result<QuasiRegularReport> {
    if horizons.len() < 2 {
        return Err(Error::InvalidArgument("need at least two horizons".into()));
    }
    if horizons[0] == 0 || horizons.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidArgument("horizons must be positive and increasing".into()));
    }
    let orbit = system.orbit(x, *horizons.last().expect("nonempty"))?;
    let raw: Vec<_> = horizons
        .iter()
        .map(|&h| EmpiricalMeasure::new(orbit[..h].to_vec()).map(|m| m.to_discrete()))
        .collect::<Result<_>>()?;
    let needs_coarsening = matches!(system, System::FullShift { .. })
        && raw.iter().any(|m| m.len() > SUPPORT_CAP);
    let (measures, errors): (Vec<_>, Vec<Num>) = if needs_coarsening {
        let c = Coarsening::default_for(system);
        raw.iter()
            .map(|m| coarsen(system, m, &c))
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .map(|c| (c.measure, c.error_bound))
            .unzip()
    } else {
        let n = raw.len();
        (raw, vec![Num::zero(); n])
    };
    let mut gaps = Vec::with_capacity(horizons.len() - 1);
    for k in 0..horizons.len() - 1 {
        let g = gamma(system, &measures[k], &measures[k + 1])?;
        gaps.push(g.add(&errors[k]).add(&errors[k + 1]));
    }
    let max_gap = gaps
        .iter()
        .cloned()
        .fold(Num::zero(), |a, b| a.max_value(b));
    Ok(QuasiRegularReport {
        horizons: horizons.to_vec(),
        quasi_regular: max_gap.to_f64() < tol,
        max_gap,
        gaps,
        tol,
        coarsened: needs_coarsening,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::num::rat;

    #[test]
    fn fixed_and_periodic_points_have_zero_gaps() {
        let t = System::tent();
        let r = is_quasi_regular(&t, &Point::interval(rat(2, 3)), &[3, 7, 100], 1e-9).unwrap();
        assert!(r.quasi_regular);
        assert!(r.gaps.iter().all(Num::is_zero));
        let r = is_quasi_regular(&t, &Point::interval(rat(2, 5)), &[2, 4, 8, 64], 1e-9).unwrap();
        assert!(r.gaps.iter().all(Num::is_zero));
    }

    #[test]
    fn irrational_rotation_is_quasi_regular() {
        let alpha = (5f64.sqrt() - 1.0) / 2.0;
        let r = System::rotation(Num::Float(alpha));
        let rep = is_quasi_regular(&r, &Point::circle_f64(0.0), &doubling_horizons(512, 4096), 0.05)
            .unwrap();
        assert!(rep.quasi_regular, "gaps {:?}", rep.gaps);
        assert!(!rep.coarsened);
    }

    #[test]
    fn odd_horizon_of_period_two_orbit_has_a_gap() {
        let t = System::tent();
        let r = is_quasi_regular(&t, &Point::interval(rat(2, 5)), &[1, 2], 1e-9).unwrap();
        // δ_{2/5} vs (δ_{2/5}+δ_{4/5})/2 : half the mass moves 2/5
        assert_eq!(r.gaps[0], Num::exact(1, 5));
        assert!(!r.quasi_regular);
    }

    #[test]
    fn rejects_short_horizon_lists() {
        let t = System::tent();
        assert!(is_quasi_regular(&t, &Point::interval(rat(0, 1)), &[4], 0.1).is_err());
        assert!(is_quasi_regular(&t, &Point::interval(rat(0, 1)), &[4, 2], 0.1).is_err());
    }
}
