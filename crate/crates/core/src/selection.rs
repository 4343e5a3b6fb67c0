//! The natural selection rule and its order-statistic summary.

use serde::{Deserialize, Serialize};

use crate::types::{MeanVectorPair, ObservationPair};

/// Which population the rule picked and the statistics every estimator uses.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SelectionSummary {
    /// 1 or 2
    pub selected: u8,
    pub x_max: f64,
    pub x_min: f64,
    /// concomitant of `x_max`
    pub y_sel: f64,
    /// concomitant of `x_min`
    pub y_other: f64,
    /// `x_min - x_max`, never positive
    pub t1: f64,
    /// `y_other - y_sel`
    pub t2: f64,
}

/// The Y-mean of the selected population.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SelectedParameter {
    pub value: f64,
}

/// Picks population 1 iff `x1 > x2`; a tie goes to population 2.
#[inline]
pub fn select(obs: &ObservationPair) -> SelectionSummary {
    let (z1, z2) = (obs.z1, obs.z2);
    let (selected, hi, lo) = if z1.x > z2.x { (1, z1, z2) } else { (2, z2, z1) };
    SelectionSummary {
        selected,
        x_max: hi.x,
        x_min: lo.x,
        y_sel: hi.y,
        y_other: lo.y,
        t1: lo.x - hi.x,
        t2: lo.y - hi.y,
    }
}

#[inline]
pub fn realized_parameter(obs: &ObservationPair, means: &MeanVectorPair) -> SelectedParameter {
    let value = if obs.z1.x > obs.z2.x {
        means.theta1.y
    } else {
        means.theta2.y
    };
    SelectedParameter { value }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::Pair;
    use proptest::prelude::*;

    fn obs(x1: f64, y1: f64, x2: f64, y2: f64) -> ObservationPair {
        ObservationPair::new(Pair::new(x1, y1), Pair::new(x2, y2)).unwrap()
    }

    #[test]
    fn poultry_means() {
        let s = select(&obs(59.0997, 131.4569, 58.3516, 195.7275));
        assert_eq!(s.selected, 1);
        assert_eq!(s.y_sel, 131.4569);
        assert!((s.t1 + 0.7481).abs() < 1e-12);
        assert!((s.t2 - 64.2706).abs() < 1e-12);
    }

    #[test]
    fn tie_goes_to_second() {
        let o = obs(1.0, 5.0, 1.0, 6.0);
        let s = select(&o);
        assert_eq!(s.selected, 2);
        assert_eq!(s.y_sel, 6.0);
        assert_eq!(s.t1, 0.0);
    }

    #[test]
    fn realized_branches() {
        let m = MeanVectorPair::new(Pair::new(0.0, 7.0), Pair::new(0.0, -3.0)).unwrap();
        assert_eq!(realized_parameter(&obs(1.0, 0.0, 0.0, 0.0), &m).value, 7.0);
        assert_eq!(realized_parameter(&obs(0.0, 0.0, 0.0, 0.0), &m).value, -3.0);
    }

    proptest! {
        #[test]
        fn summary_invariants(x1 in -50.0..50.0f64, y1 in -50.0..50.0f64, x2 in -50.0..50.0f64, y2 in -50.0..50.0f64) {
            let s = select(&obs(x1, y1, x2, y2));
            prop_assert!(s.t1 <= 0.0);
            prop_assert_eq!(s.selected == 1, x1 > x2);
            let mut a = [s.y_sel, s.y_other];
            let mut b = [y1, y2];
            a.sort_by(f64::total_cmp);
            b.sort_by(f64::total_cmp);
            prop_assert_eq!(a, b);
        }

        #[test]
        fn permutation_equivariant(x1 in -50.0..50.0f64, y1 in -50.0..50.0f64, x2 in -50.0..50.0f64, y2 in -50.0..50.0f64) {
            prop_assume!(x1 != x2);
            let o = obs(x1, y1, x2, y2);
            let (s, r) = (select(&o), select(&o.swapped()));
            prop_assert_ne!(s.selected, r.selected);
            prop_assert_eq!((s.x_max, s.x_min, s.y_sel, s.y_other, s.t1, s.t2),
                            (r.x_max, r.x_min, r.y_sel, r.y_other, r.t1, r.t2));
        }

        #[test]
        fn location_equivariant(x1 in -50.0..50.0f64, y1 in -50.0..50.0f64, x2 in -50.0..50.0f64, y2 in -50.0..50.0f64,
                                c1 in -10.0..10.0f64, c2 in -10.0..10.0f64) {
            let o = obs(x1, y1, x2, y2);
            let (s, r) = (select(&o), select(&o.shifted(Pair::new(c1, c2))));
            // shifting may reorder an x-tie that rounding breaks
            prop_assume!(s.selected == r.selected);
            prop_assert!((r.x_max - s.x_max - c1).abs() < 1e-12);
            prop_assert!((r.y_sel - s.y_sel - c2).abs() < 1e-12);
            prop_assert!((r.y_other - s.y_other - c2).abs() < 1e-12);
            prop_assert!((r.t1 - s.t1).abs() < 1e-11);
            prop_assert!((r.t2 - s.t2).abs() < 1e-11);
        }
    }
}
