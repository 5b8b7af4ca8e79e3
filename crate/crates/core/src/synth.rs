//! Synthetic student datasets.
//!
//! Each student gets one latent level per factor, drawn jointly from a
//! multivariate normal whose correlation matrix is built from the configured
//! pairs (all other pairs uncorrelated). A level unfolds into a weekly
//! series with a random linear trend and noise, which is then clipped and
//! rounded to the factor's scale. Labels come from a rule-based expert
//! policy with optional bit-flip noise.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::domain::{Dataset, FactorId, ReferenceType, Scale, StudentRecord, TemplateRegistry};
use crate::error::{Error, Result};
use crate::features::{series_stats, SeriesStats};

const DEFAULT_CONFIG: &str = include_str!("../data/default_synth.json");

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FactorParams {
    pub mean: f64,
    pub stddev: f64,
    /// Standard deviation of the per-student weekly slope.
    pub slope_stddev: f64,
    /// Week-to-week noise around the trend line.
    pub noise_stddev: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrelationPair {
    pub a: FactorId,
    pub b: FactorId,
    pub r: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FactorRule {
    /// |slope| at or above this → trend template.
    pub trend_slope: f64,
    /// mean at or above this → average template.
    pub high_mean: f64,
    /// mean at or below this → weeks template.
    pub low_mean: f64,
}

/// Deterministic per-factor rules choosing at most one reference type.
///
/// Rules are tried in order: trend, high mean (average), low mean (weeks);
/// otherwise the factor is not mentioned. A chosen reference type missing
/// from the registry falls back to the factor's `other` template, if any.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpertPolicy {
    pub rules: BTreeMap<FactorId, FactorRule>,
}

impl ExpertPolicy {
    pub fn decide(&self, factor: FactorId, stats: &SeriesStats) -> Option<ReferenceType> {
        let rule = self.rules.get(&factor)?;
        if stats.slope.abs() >= rule.trend_slope {
            Some(ReferenceType::Trend)
        } else if stats.mean >= rule.high_mean {
            Some(ReferenceType::Average)
        } else if stats.mean <= rule.low_mean {
            Some(ReferenceType::Weeks)
        } else {
            None
        }
    }

    /// Noise-free template choice for a record: at most one id per factor.
    pub fn label(&self, record: &StudentRecord, registry: &TemplateRegistry) -> BTreeSet<u32> {
        FactorId::ALL
            .into_iter()
            .filter_map(|factor| {
                let reference = self.decide(factor, &series_stats(record.series(factor)))?;
                registry
                    .find(factor, reference)
                    .or_else(|| registry.find(factor, ReferenceType::Other))
                    .map(|j| registry.templates()[j].id)
            })
            .collect()
    }
}

/// One annotator: the shared policy plus an independent noise stream.
pub struct Expert<'a> {
    policy: &'a ExpertPolicy,
    noise: f64,
    rng: ChaCha8Rng,
}

impl Expert<'_> {
    /// Applies the policy, then flips each template decision with
    /// probability `noise`.
    pub fn annotate(
        &mut self,
        record: &StudentRecord,
        registry: &TemplateRegistry,
    ) -> BTreeSet<u32> {
        let mut chosen = self.policy.label(record, registry);
        if self.noise > 0.0 {
            for t in registry.templates() {
                if self.rng.random::<f64>() < self.noise && !chosen.remove(&t.id) {
                    chosen.insert(t.id);
                }
            }
        }
        chosen
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub n_students: usize,
    pub weeks: usize,
    pub seed: u64,
    pub factors: BTreeMap<FactorId, FactorParams>,
    pub correlation_pairs: Vec<CorrelationPair>,
    pub expert_noise: f64,
    pub expert_count: usize,
    pub policy: ExpertPolicy,
}

impl Default for SynthConfig {
    fn default() -> Self {
        // no #[serde(default)] recursion: the shipped file is complete
        #[derive(Deserialize)]
        struct Full {
            n_students: usize,
            weeks: usize,
            seed: u64,
            factors: BTreeMap<FactorId, FactorParams>,
            correlation_pairs: Vec<CorrelationPair>,
            expert_noise: f64,
            expert_count: usize,
            policy: ExpertPolicy,
        }
        let f: Full = serde_json::from_str(DEFAULT_CONFIG).expect("shipped synth config parses");
        SynthConfig {
            n_students: f.n_students,
            weeks: f.weeks,
            seed: f.seed,
            factors: f.factors,
            correlation_pairs: f.correlation_pairs,
            expert_noise: f.expert_noise,
            expert_count: f.expert_count,
            policy: f.policy,
        }
    }
}

impl SynthConfig {
    /// Reads a JSON config; omitted fields take the shipped defaults.
    pub fn from_json_str(s: &str) -> Result<Self> {
        let cfg: SynthConfig = serde_json::from_str(s)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let s = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json_str(&s)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.n_students == 0 {
            return bad("n_students must be positive".into());
        }
        if self.weeks == 0 {
            return bad("weeks must be positive".into());
        }
        if self.expert_count == 0 {
            return bad("expert_count must be at least 1".into());
        }
        if !(0.0..1.0).contains(&self.expert_noise) {
            return bad(format!("expert_noise {} outside [0, 1)", self.expert_noise));
        }
        for f in FactorId::ALL {
            let Some(p) = self.factors.get(&f) else {
                return bad(format!("missing parameters for factor {f}"));
            };
            let finite = [p.mean, p.stddev, p.slope_stddev, p.noise_stddev]
                .iter()
                .all(|v| v.is_finite());
            if !finite || p.stddev < 0.0 || p.slope_stddev < 0.0 || p.noise_stddev < 0.0 {
                return bad(format!("invalid parameters for factor {f}"));
            }
        }
        self.cholesky().map(|_| ())
    }

    /// Correlation matrix implied by the configured pairs.
    pub fn correlation_matrix(&self) -> Result<DMatrix<f64>> {
        let n = FactorId::COUNT;
        let mut m = DMatrix::<f64>::identity(n, n);
        let mut seen = BTreeSet::new();
        for p in &self.correlation_pairs {
            if p.a == p.b {
                return Err(Error::InvalidConfig(format!(
                    "correlation pair ({}, {}) repeats a factor",
                    p.a, p.b
                )));
            }
            if !(p.r > -1.0 && p.r < 1.0) {
                return Err(Error::InvalidConfig(format!(
                    "correlation {} for ({}, {}) outside (-1, 1)",
                    p.r, p.a, p.b
                )));
            }
            if !seen.insert((p.a.min(p.b), p.a.max(p.b))) {
                return Err(Error::InvalidConfig(format!(
                    "correlation pair ({}, {}) given twice",
                    p.a, p.b
                )));
            }
            m[(p.a.index(), p.b.index())] = p.r;
            m[(p.b.index(), p.a.index())] = p.r;
        }
        Ok(m)
    }

    fn cholesky(&self) -> Result<DMatrix<f64>> {
        let m = self.correlation_matrix()?;
        match m.clone().cholesky() {
            Some(c) => Ok(c.l()),
            None => Err(Error::NotPositiveDefinite(format_matrix(&m))),
        }
    }

    pub fn expert(&self, index: usize) -> Expert<'_> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        // stream 0 drives the series; each expert has its own stream
        rng.set_stream(index as u64 + 1);
        Expert {
            policy: &self.policy,
            noise: self.expert_noise,
            rng,
        }
    }
}

fn format_matrix(m: &DMatrix<f64>) -> String {
    let mut out = String::new();
    out.push_str(&format!("{:>18}", ""));
    for f in FactorId::ALL {
        out.push_str(&format!(" {:>6.6}", f.name()));
    }
    out.push('\n');
    for (i, f) in FactorId::ALL.iter().enumerate() {
        out.push_str(&format!("{:>18}", f.name()));
        for j in 0..m.ncols() {
            out.push_str(&format!(" {:>6.2}", m[(i, j)]));
        }
        out.push('\n');
    }
    out
}

fn quantize(scale: Scale, v: f64) -> f64 {
    let (lo, hi) = scale.bounds();
    let rounded = match scale {
        Scale::Hours => (v * 2.0).round() / 2.0,
        Scale::Percent | Scale::Likert | Scale::Count => v.round(),
    };
    // `+ 0.0` turns a rounded -0.0 into 0.0
    rounded.clamp(lo, hi) + 0.0
}

/// Unlabeled records drawn from the configured generator.
pub fn generate_records(cfg: &SynthConfig) -> Result<Vec<StudentRecord>> {
    cfg.validate()?;
    let chol = cfg.cholesky()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let w = cfg.weeks;
    let centre = (w as f64 + 1.0) / 2.0;
    let mut records = Vec::with_capacity(cfg.n_students);
    for i in 0..cfg.n_students {
        let z: Vec<f64> = (0..FactorId::COUNT)
            .map(|_| rng.sample(StandardNormal))
            .collect();
        let z = &chol * nalgebra::DVector::from_vec(z);
        let mut series = BTreeMap::new();
        for f in FactorId::ALL {
            let p = cfg.factors[&f];
            let level = p.mean + p.stddev * z[f.index()];
            let slope = p.slope_stddev * rng.sample::<f64, _>(StandardNormal);
            let values = (1..=w)
                .map(|week| {
                    let noise = p.noise_stddev * rng.sample::<f64, _>(StandardNormal);
                    quantize(f.scale(), level + slope * (week as f64 - centre) + noise)
                })
                .collect();
            series.insert(f, values);
        }
        records.push(StudentRecord::new(
            format!("s{:04}", i + 1),
            w,
            series,
            None,
        )?);
    }
    Ok(records)
}

/// Generates and labels a dataset. Record `i` is annotated by expert
/// `i % expert_count`.
pub fn generate_dataset(cfg: &SynthConfig, registry: &TemplateRegistry) -> Result<Dataset> {
    let mut records = generate_records(cfg)?;
    let mut experts: Vec<Expert<'_>> = (0..cfg.expert_count).map(|e| cfg.expert(e)).collect();
    for (i, r) in records.iter_mut().enumerate() {
        r.expert_labels = Some(experts[i % cfg.expert_count].annotate(r, registry));
    }
    Dataset::new(registry.clone(), records)
}

/// Product-moment correlation.
pub fn pearson(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() {
        return Err(Error::LengthMismatch(format!(
            "{} vs {} values",
            xs.len(),
            ys.len()
        )));
    }
    if xs.len() < 2 {
        return Err(Error::TooFewScores(xs.len()));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 {
        return Err(Error::ZeroVariance("xs"));
    }
    if syy == 0.0 {
        return Err(Error::ZeroVariance("ys"));
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Sample correlation between two factors' per-student series means.
pub fn factor_correlation(records: &[StudentRecord], a: FactorId, b: FactorId) -> Result<f64> {
    let mean = |r: &StudentRecord, f| series_stats(r.series(f)).mean;
    let xs: Vec<f64> = records.iter().map(|r| mean(r, a)).collect();
    let ys: Vec<f64> = records.iter().map(|r| mean(r, b)).collect();
    pearson(&xs, &ys)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pearson_examples() {
        let xs = [1.0, 2.0, 3.0];
        assert!((pearson(&xs, &xs).unwrap() - 1.0).abs() < 1e-15);
        let neg: Vec<f64> = xs.iter().map(|v| -v).collect();
        assert!((pearson(&xs, &neg).unwrap() + 1.0).abs() < 1e-15);
        // sxy = 3, sxx = 2, syy = 14/3
        let expected = 3.0 / (2.0f64 * 14.0 / 3.0).sqrt();
        let r = pearson(&xs, &[1.0, 2.0, 4.0]).unwrap();
        assert!((r - expected).abs() < 1e-15);
        assert!((r - 0.9820).abs() < 5e-5);
        assert!(matches!(
            pearson(&xs, &[1.0, 1.0, 1.0]),
            Err(Error::ZeroVariance(_))
        ));
        assert!(pearson(&xs, &[1.0]).is_err());
    }

    #[test]
    fn default_config_is_valid() {
        let cfg = SynthConfig::default();
        cfg.validate().unwrap();
        assert_eq!(cfg.n_students, 37);
        assert_eq!(cfg.policy.rules.len(), 9);
    }

    #[test]
    fn partial_config_fills_defaults() {
        let cfg = SynthConfig::from_json_str(r#"{"n_students": 5, "seed": 1}"#).unwrap();
        assert_eq!(cfg.n_students, 5);
        assert_eq!(cfg.weeks, SynthConfig::default().weeks);
    }

    #[test]
    fn non_positive_definite_rejected() {
        let cfg = SynthConfig {
            correlation_pairs: vec![
                CorrelationPair {
                    a: FactorId::Marks,
                    b: FactorId::Revision,
                    r: 0.9,
                },
                CorrelationPair {
                    a: FactorId::Marks,
                    b: FactorId::HoursStudied,
                    r: 0.9,
                },
                CorrelationPair {
                    a: FactorId::Revision,
                    b: FactorId::HoursStudied,
                    r: -0.9,
                },
            ],
            ..SynthConfig::default()
        };
        match cfg.validate() {
            Err(Error::NotPositiveDefinite(diag)) => assert!(diag.contains("marks")),
            other => panic!("expected PD failure, got {other:?}"),
        }
    }

    #[test]
    fn bad_pairs_rejected() {
        let mut cfg = SynthConfig {
            correlation_pairs: vec![CorrelationPair {
                a: FactorId::Marks,
                b: FactorId::Marks,
                r: 0.2,
            }],
            ..SynthConfig::default()
        };
        assert!(cfg.validate().is_err());
        cfg.correlation_pairs = vec![CorrelationPair {
            a: FactorId::Marks,
            b: FactorId::Revision,
            r: 1.0,
        }];
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn quantize_never_yields_negative_zero() {
        assert!(quantize(Scale::Hours, -0.2).is_sign_positive());
        assert!(quantize(Scale::Count, -0.4).is_sign_positive());
    }

    #[test]
    fn quantize_respects_scales() {
        assert_eq!(quantize(Scale::Likert, 7.2), 5.0);
        assert_eq!(quantize(Scale::Likert, -1.0), 1.0);
        assert_eq!(quantize(Scale::Percent, 101.0), 100.0);
        assert_eq!(quantize(Scale::Hours, 2.3), 2.5);
        assert_eq!(quantize(Scale::Count, -0.4), 0.0);
    }

    #[test]
    fn noise_free_experts_agree_and_pick_one_per_factor() {
        let cfg = SynthConfig {
            expert_noise: 0.0,
            expert_count: 2,
            ..SynthConfig::default()
        };
        let reg = TemplateRegistry::default_registry();
        let records = generate_records(&cfg).unwrap();
        let (mut e0, mut e1) = (cfg.expert(0), cfg.expert(1));
        for r in &records {
            let a = e0.annotate(r, &reg);
            assert_eq!(a, e1.annotate(r, &reg));
            assert_eq!(a, cfg.policy.label(r, &reg));
            let factors: Vec<_> = a
                .iter()
                .map(|id| reg.templates()[reg.label_index(*id).unwrap()].factor)
                .collect();
            let distinct: BTreeSet<_> = factors.iter().collect();
            assert_eq!(distinct.len(), factors.len());
        }
    }

    #[test]
    fn generation_is_seeded() {
        let reg = TemplateRegistry::default_registry();
        let cfg = SynthConfig::default();
        let a = generate_dataset(&cfg, &reg).unwrap().to_jsonl();
        let b = generate_dataset(&cfg, &reg).unwrap().to_jsonl();
        assert_eq!(a, b);
        let other = SynthConfig {
            seed: cfg.seed + 1,
            ..cfg
        };
        assert_ne!(a, generate_dataset(&other, &reg).unwrap().to_jsonl());
    }
}
