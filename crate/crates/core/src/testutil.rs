use std::collections::BTreeMap;

use crate::domain::{FactorId, Scale, StudentRecord};

/// Record whose every series is `value` (clamped into the Likert range
/// where needed).
pub fn constant_record(id: &str, weeks: usize, value: f64) -> StudentRecord {
    let series = FactorId::ALL
        .into_iter()
        .map(|f| {
            let v = if f.scale() == Scale::Likert {
                value.clamp(1.0, 5.0)
            } else {
                value
            };
            (f, vec![v; weeks])
        })
        .collect();
    StudentRecord::new(id, weeks, series, None).unwrap()
}

/// Constant record with one factor's series replaced.
pub fn record_with(factor: FactorId, values: &[f64]) -> StudentRecord {
    let base = constant_record("s", values.len(), 3.0);
    let mut series: BTreeMap<_, _> = base.series;
    series.insert(factor, values.to_vec());
    StudentRecord::new("s", values.len(), series, None).unwrap()
}
