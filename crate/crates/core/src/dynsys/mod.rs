//! State spaces, maps, the diameter-1 metrics, orbits and empirical measures.

mod measure;
mod point;
mod quasi;
mod system;

pub use measure::{convex_combination, empirical, DiscreteMeasure, EmpiricalMeasure, MeasureDoc};
pub use point::{reduce_mod1, Point, PointDoc, ShiftPoint, EXACT_SHIFT_WINDOW};
pub use quasi::{doubling_horizons, is_quasi_regular, QuasiRegularReport};
pub use system::{Affine, GeneralInterval, PiecewiseLinear, System, SystemDoc};

/// A system and a point, as read from a single JSON document.
#[derive(Clone, Debug, serde::Serialize, serde::Deserialize)]
pub struct SystemPointDoc {
    pub system: System,
    pub point: Point,
}

/// Float-mode orbit of the tent map computed through its conjugacy with the
/// logistic map `z ↦ 4z(1-z)`, `x = (2/π)·asin(√z)`.
///
/// Direct binary64 iteration of the tent map collapses to 0 after about 53
/// steps; the logistic iteration does not, so this gives typical float orbits.
pub fn tent_orbit_via_logistic(x0: f64, n: usize) -> Vec<Point> {
    let mut z = (std::f64::consts::FRAC_PI_2 * x0.clamp(0.0, 1.0)).sin().powi(2);
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        let x = (2.0 / std::f64::consts::PI) * z.sqrt().asin();
        out.push(Point::interval_f64(x.clamp(0.0, 1.0)));
        z = 4.0 * z * (1.0 - z);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn logistic_conjugate_tracks_tent() {
        let t = System::tent();
        let orbit = tent_orbit_via_logistic(0.123, 20);
        for w in orbit.windows(2) {
            let next = t.apply(&w[0]).unwrap();
            let err = t.dist_f64(&next, &w[1]).unwrap();
            assert!(err < 1e-6, "conjugate orbit drifted by {err}");
        }
    }

    #[test]
    fn combined_document() {
        let doc: SystemPointDoc = serde_json::from_str(
            r#"{"system": {"kind": "piecewise_linear", "breakpoints": ["0","1/2","1"],
                "pieces": [{"slope":"2","intercept":"0"},{"slope":"-2","intercept":"2"}]},
                "point": {"kind":"interval","value":"2/5"}}"#,
        )
        .unwrap();
        let next = doc.system.apply(&doc.point).unwrap();
        assert_eq!(next, Point::interval(crate::num::rat(4, 5)));
    }
}
