use serde::{Deserialize, Serialize};

use crate::types::{DriverId, PeriodSplit, ViolationRecord};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Good,
    Bad,
}

impl Label {
    pub fn is_bad(self) -> bool {
        self == Label::Bad
    }
}

/// Bad when the driver has at least `min_count` violation records of any
/// kind inside the performance period.
pub fn label_driver(
    driver: DriverId,
    violations: &[ViolationRecord],
    split: &PeriodSplit,
    min_count: usize,
) -> Label {
    let n = violations
        .iter()
        .filter(|v| v.driver == driver && split.performance.contains(v.day))
        .count();
    if n >= min_count.max(1) {
        Label::Bad
    } else {
        Label::Good
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::{DayRange, ViolationKind};

    fn rec(driver: u32, day: u32, kind: ViolationKind) -> ViolationRecord {
        ViolationRecord {
            driver: DriverId(driver),
            day,
            t: 0.0,
            kind,
            lng: 0.0,
            lat: 0.0,
        }
    }

    #[test]
    fn only_performance_records_count() {
        let split = PeriodSplit::new(DayRange::new(0, 4), DayRange::new(5, 9)).unwrap();
        let v = vec![
            rec(1, 2, ViolationKind::Speeding),
            rec(2, 7, ViolationKind::Collision),
            rec(3, 9, ViolationKind::LightViolation),
            rec(3, 5, ViolationKind::Speeding),
        ];
        assert_eq!(label_driver(DriverId(1), &v, &split, 1), Label::Good);
        assert_eq!(label_driver(DriverId(2), &v, &split, 1), Label::Bad);
        assert_eq!(label_driver(DriverId(3), &v, &split, 2), Label::Bad);
        assert_eq!(label_driver(DriverId(2), &v, &split, 2), Label::Good);
        assert_eq!(label_driver(DriverId(4), &v, &split, 1), Label::Good);
    }
}
