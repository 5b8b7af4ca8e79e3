//! Fixed-length numeric encoding of a student record.
//!
//! Per factor (in code order) the derived block is `mean, slope, min, max,
//! last`, followed by the raw block `week_1 .. week_W`. Modes select one or
//! both blocks.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::domain::{FactorId, StudentRecord};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureMode {
    Raw,
    Derived,
    #[default]
    Both,
}

impl FeatureMode {
    fn derived(self) -> bool {
        matches!(self, FeatureMode::Derived | FeatureMode::Both)
    }

    fn raw(self) -> bool {
        matches!(self, FeatureMode::Raw | FeatureMode::Both)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureName {
    Mean,
    Slope,
    Min,
    Max,
    Last,
    /// 1-based week number.
    Week(usize),
}

impl fmt::Display for FeatureName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FeatureName::Mean => f.write_str("mean"),
            FeatureName::Slope => f.write_str("slope"),
            FeatureName::Min => f.write_str("min"),
            FeatureName::Max => f.write_str("max"),
            FeatureName::Last => f.write_str("last"),
            FeatureName::Week(w) => write!(f, "week_{w}"),
        }
    }
}

const DERIVED: [FeatureName; 5] = [
    FeatureName::Mean,
    FeatureName::Slope,
    FeatureName::Min,
    FeatureName::Max,
    FeatureName::Last,
];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeatureSchema {
    columns: Vec<(FactorId, FeatureName)>,
}

impl FeatureSchema {
    pub fn new(mode: FeatureMode, weeks: usize) -> Self {
        let mut columns = Vec::new();
        for factor in FactorId::ALL {
            if mode.derived() {
                columns.extend(DERIVED.iter().map(|&n| (factor, n)));
            }
            if mode.raw() {
                columns.extend((1..=weeks).map(|w| (factor, FeatureName::Week(w))));
            }
        }
        FeatureSchema { columns }
    }

    pub fn columns(&self) -> &[(FactorId, FeatureName)] {
        &self.columns
    }

    pub fn len(&self) -> usize {
        self.columns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.columns.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub schema: Arc<FeatureSchema>,
    pub values: Vec<f64>,
}

/// Summary statistics of one weekly series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesStats {
    pub mean: f64,
    /// Ordinary least squares slope against week index 1..W.
    pub slope: f64,
    pub min: f64,
    pub max: f64,
    pub first: f64,
    pub last: f64,
}

/// Panics on an empty series; records guarantee at least one week.
pub fn series_stats(values: &[f64]) -> SeriesStats {
    assert!(!values.is_empty(), "series must be non-empty");
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    SeriesStats {
        mean,
        slope: ols_slope(values, mean),
        min: values.iter().copied().fold(f64::INFINITY, f64::min),
        max: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        first: values[0],
        last: values[values.len() - 1],
    }
}

fn ols_slope(values: &[f64], mean: f64) -> f64 {
    let n = values.len();
    if n < 2 {
        return 0.0;
    }
    // x = 1..n, so x̄ = (n + 1) / 2
    let x_bar = (n as f64 + 1.0) / 2.0;
    let (sxy, sxx) = values
        .iter()
        .enumerate()
        .fold((0.0, 0.0), |(sxy, sxx), (i, &y)| {
            let dx = (i + 1) as f64 - x_bar;
            (sxy + dx * (y - mean), sxx + dx * dx)
        });
    sxy / sxx
}

/// Reusable extractor sharing one schema across records of equal length.
#[derive(Debug, Clone)]
pub struct FeatureExtractor {
    mode: FeatureMode,
    weeks: usize,
    schema: Arc<FeatureSchema>,
}

impl FeatureExtractor {
    pub fn new(mode: FeatureMode, weeks: usize) -> Self {
        FeatureExtractor {
            mode,
            weeks,
            schema: Arc::new(FeatureSchema::new(mode, weeks)),
        }
    }

    pub fn mode(&self) -> FeatureMode {
        self.mode
    }

    pub fn weeks(&self) -> usize {
        self.weeks
    }

    pub fn schema(&self) -> &Arc<FeatureSchema> {
        &self.schema
    }

    pub fn values(&self, record: &StudentRecord) -> Vec<f64> {
        debug_assert_eq!(record.weeks, self.weeks);
        let mut out = Vec::with_capacity(self.schema.len());
        for factor in FactorId::ALL {
            let series = record.series(factor);
            if self.mode.derived() {
                let s = series_stats(series);
                out.extend([s.mean, s.slope, s.min, s.max, s.last]);
            }
            if self.mode.raw() {
                out.extend_from_slice(series);
            }
        }
        out
    }

    pub fn extract(&self, record: &StudentRecord) -> FeatureVector {
        FeatureVector {
            schema: Arc::clone(&self.schema),
            values: self.values(record),
        }
    }
}

pub fn extract_features(record: &StudentRecord, mode: FeatureMode) -> FeatureVector {
    FeatureExtractor::new(mode, record.weeks).extract(record)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrendWord {
    Increased,
    Decreased,
    RemainedStable,
}

impl TrendWord {
    pub fn as_str(self) -> &'static str {
        match self {
            TrendWord::Increased => "increased",
            TrendWord::Decreased => "decreased",
            TrendWord::RemainedStable => "remained stable",
        }
    }
}

impl fmt::Display for TrendWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

pub const DEFAULT_TREND_TOLERANCE: f64 = 0.05;

pub fn trend_word(slope: f64, tolerance: f64) -> TrendWord {
    debug_assert!(tolerance >= 0.0);
    if slope.abs() <= tolerance {
        TrendWord::RemainedStable
    } else if slope > 0.0 {
        TrendWord::Increased
    } else {
        TrendWord::Decreased
    }
}
