use morbit::dynsys::{DiscreteMeasure, Point, ShiftPoint, System};
use morbit::num::{rat, Num};
use morbit::pseudometric::{besicovitch_finite, ebar_finite};
use morbit::transport::{gamma, matching_cost};
use proptest::prelude::*;

fn interval_points(max: usize) -> impl Strategy<Value = Vec<Point>> {
    prop::collection::vec(0i64..=60, 1..=max)
        .prop_map(|ks| ks.into_iter().map(|k| Point::interval(rat(k, 60))).collect())
}

fn measure(max: usize) -> impl Strategy<Value = DiscreteMeasure> {
    interval_points(max).prop_map(|pts| DiscreteMeasure::uniform(&pts).unwrap())
}

fn shift_point() -> impl Strategy<Value = Point> {
    (prop::collection::vec(0u8..2, 0..4), prop::collection::vec(0u8..2, 1..5))
        .prop_map(|(pre, per)| Point::Shift(ShiftPoint::new(2, pre, per).unwrap()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn gamma_is_a_metric(a in measure(6), b in measure(6), c in measure(6)) {
        let t = System::tent();
        let ab = gamma(&t, &a, &b).unwrap();
        let ba = gamma(&t, &b, &a).unwrap();
        let bc = gamma(&t, &b, &c).unwrap();
        let ac = gamma(&t, &a, &c).unwrap();
        prop_assert_eq!(&ab, &ba);
        prop_assert_eq!(gamma(&t, &a, &a).unwrap(), Num::exact(0, 1));
        prop_assert!(ac.cmp_value(&ab.add(&bc)).is_le());
    }

    #[test]
    fn matching_is_invariant_under_reordering(mut a in interval_points(7), b in interval_points(7)) {
        let t = System::tent();
        let n = a.len().min(b.len());
        a.truncate(n);
        let b = &b[..n];
        let before = matching_cost(&t, &a, b).unwrap();
        a.reverse();
        prop_assert_eq!(before, matching_cost(&t, &a, b).unwrap());
    }

    #[test]
    fn ebar_is_symmetric_and_below_besicovitch(x in shift_point(), y in shift_point(), n in 1usize..24) {
        let s = System::full_shift(2).unwrap();
        let xy = ebar_finite(&s, &x, &y, n).unwrap();
        prop_assert_eq!(&xy, &ebar_finite(&s, &y, &x, n).unwrap());
        prop_assert!(xy.cmp_value(&besicovitch_finite(&s, &x, &y, n).unwrap()).is_le());
    }

    #[test]
    fn ebar_of_a_point_with_itself_vanishes(k in 0i64..=97, n in 1usize..32) {
        let t = System::tent();
        let x = Point::interval(rat(k, 97));
        prop_assert_eq!(ebar_finite(&t, &x, &x, n).unwrap(), Num::exact(0, 1));
    }
}
