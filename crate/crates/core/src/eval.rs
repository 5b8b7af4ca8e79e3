//! Cross-validation, multi-label metrics, paired t-tests and the comparison
//! report.
//!
//! Headline metrics are cell-level: every (instance, label) pair is one
//! binary decision. Accuracy is Hamming accuracy and precision, recall and F
//! are micro-averaged. Counts are pooled over folds before the ratios are
//! taken; per-fold accuracies are kept for the significance tests.

use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::ser::{SerializeMap, SerializeStruct};
use serde::{Deserialize, Serialize, Serializer};

use crate::domain::LabelVector;
use crate::error::{Error, Result};
use crate::mlc::{self, MlcStrategy, MultiLabelData};
use crate::par::Execution;
use crate::tree::TreeConfig;

/// Cell-level confusion counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: u64,
    pub fp: u64,
    pub fn_: u64,
    pub tn: u64,
}

impl Confusion {
    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.fn_ + self.tn
    }

    pub fn add_pair(&mut self, gold: &LabelVector, pred: &LabelVector) {
        for (&g, &p) in gold.bits().iter().zip(pred.bits()) {
            match (g, p) {
                (true, true) => self.tp += 1,
                (false, true) => self.fp += 1,
                (true, false) => self.fn_ += 1,
                (false, false) => self.tn += 1,
            }
        }
    }
}

impl std::ops::Add for Confusion {
    type Output = Confusion;

    fn add(self, o: Confusion) -> Confusion {
        Confusion {
            tp: self.tp + o.tp,
            fp: self.fp + o.fp,
            fn_: self.fn_ + o.fn_,
            tn: self.tn + o.tn,
        }
    }
}

impl std::iter::Sum for Confusion {
    fn sum<I: Iterator<Item = Confusion>>(iter: I) -> Confusion {
        iter.fold(Confusion::default(), |a, b| a + b)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricSet {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f_score: f64,
}

fn ratio_or_one(num: u64, den: u64) -> f64 {
    if den == 0 {
        1.0
    } else {
        num as f64 / den as f64
    }
}

/// Harmonic mean, 0 when either argument is 0.
pub fn f_measure(precision: f64, recall: f64) -> f64 {
    if precision <= 0.0 || recall <= 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

impl MetricSet {
    /// Empty denominators count as vacuously correct (1.0).
    pub fn from_confusion(c: &Confusion) -> Self {
        let precision = ratio_or_one(c.tp, c.tp + c.fp);
        let recall = ratio_or_one(c.tp, c.tp + c.fn_);
        MetricSet {
            accuracy: ratio_or_one(c.tp + c.tn, c.total()),
            precision,
            recall,
            f_score: f_measure(precision, recall),
        }
    }

    fn mean(sets: &[MetricSet]) -> MetricSet {
        let n = sets.len() as f64;
        let avg = |f: fn(&MetricSet) -> f64| sets.iter().map(f).sum::<f64>() / n;
        MetricSet {
            accuracy: avg(|m| m.accuracy),
            precision: avg(|m| m.precision),
            recall: avg(|m| m.recall),
            f_score: avg(|m| m.f_score),
        }
    }
}

pub fn confusion(gold: &[LabelVector], pred: &[LabelVector]) -> Result<Confusion> {
    if gold.is_empty() || gold.len() != pred.len() {
        return Err(Error::LengthMismatch(format!(
            "{} gold vs {} predicted vectors",
            gold.len(),
            pred.len()
        )));
    }
    let width = gold[0].len();
    let mut c = Confusion::default();
    for (g, p) in gold.iter().zip(pred) {
        if g.len() != width || p.len() != width {
            return Err(Error::LengthMismatch(format!(
                "label vector widths {} / {} differ from {width}",
                g.len(),
                p.len()
            )));
        }
        c.add_pair(g, p);
    }
    Ok(c)
}

pub fn compute_metrics(gold: &[LabelVector], pred: &[LabelVector]) -> Result<MetricSet> {
    confusion(gold, pred).map(|c| MetricSet::from_confusion(&c))
}

/// Seeded assignment of records to folds. Fold sizes differ by at most one.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub n_folds: usize,
    pub seed: u64,
    /// Record index → fold id.
    pub assignments: Vec<usize>,
}

impl FoldPlan {
    pub fn new(n_records: usize, n_folds: usize, seed: u64) -> Result<Self> {
        if n_folds < 2 {
            return Err(Error::InvalidConfig(
                "cross-validation needs at least 2 folds".into(),
            ));
        }
        if n_folds > n_records {
            return Err(Error::TooManyFolds {
                folds: n_folds,
                records: n_records,
            });
        }
        let mut perm: Vec<usize> = (0..n_records).collect();
        perm.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let mut assignments = vec![0; n_records];
        for (pos, &record) in perm.iter().enumerate() {
            assignments[record] = pos % n_folds;
        }
        Ok(FoldPlan {
            n_folds,
            seed,
            assignments,
        })
    }

    pub fn n_records(&self) -> usize {
        self.assignments.len()
    }

    /// Record indices of fold `f`, ascending.
    pub fn test_indices(&self, f: usize) -> Vec<usize> {
        (0..self.assignments.len())
            .filter(|&i| self.assignments[i] == f)
            .collect()
    }

    pub fn train_indices(&self, f: usize) -> Vec<usize> {
        (0..self.assignments.len())
            .filter(|&i| self.assignments[i] != f)
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Averaging {
    /// Ratios of counts pooled over all folds.
    #[default]
    Pooled,
    /// Mean of per-fold metrics.
    FoldMean,
}

#[derive(Debug, Clone)]
pub struct CvSettings {
    pub tree: TreeConfig,
    pub chain_order: Option<Vec<usize>>,
    pub averaging: Averaging,
    pub execution: Execution,
}

impl Default for CvSettings {
    fn default() -> Self {
        CvSettings {
            tree: TreeConfig::default(),
            chain_order: None,
            averaging: Averaging::Pooled,
            execution: Execution::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvResult {
    pub metrics: MetricSet,
    pub fold_confusions: Vec<Confusion>,
    pub fold_accuracies: Vec<f64>,
    /// Out-of-fold prediction for every record, in record order.
    pub predictions: Vec<LabelVector>,
}

impl CvResult {
    pub fn pooled(&self) -> Confusion {
        self.fold_confusions.iter().copied().sum()
    }
}

/// Trains on the out-of-fold records and predicts each fold. Real-history
/// chains receive the gold vector of the record being predicted.
pub fn cross_validate(
    data: &MultiLabelData,
    strategy: &MlcStrategy,
    plan: &FoldPlan,
    settings: &CvSettings,
) -> Result<CvResult> {
    if plan.n_records() != data.len() {
        return Err(Error::LengthMismatch(format!(
            "fold plan covers {} records, dataset has {}",
            plan.n_records(),
            data.len()
        )));
    }
    if plan.n_folds > data.len() {
        return Err(Error::TooManyFolds {
            folds: plan.n_folds,
            records: data.len(),
        });
    }
    let exec = settings.execution;
    let folds = exec.try_map(
        plan.n_folds,
        |f| -> Result<(Vec<usize>, Vec<LabelVector>)> {
            let train = data.subset(&plan.train_indices(f))?;
            let model = mlc::train(
                &train,
                strategy,
                &settings.tree,
                settings.chain_order.as_deref(),
                exec,
            )?;
            let test = plan.test_indices(f);
            let preds = test
                .iter()
                .map(|&i| {
                    let gold = strategy.needs_gold().then(|| &data.labels()[i]);
                    model.predict(&data.features()[i], gold)
                })
                .collect::<Result<Vec<_>>>()?;
            Ok((test, preds))
        },
    )?;

    let mut predictions = vec![LabelVector::zeros(0); data.len()];
    let mut fold_confusions = Vec::with_capacity(folds.len());
    for (test, preds) in folds {
        let mut c = Confusion::default();
        for (i, p) in test.into_iter().zip(preds) {
            c.add_pair(&data.labels()[i], &p);
            predictions[i] = p;
        }
        fold_confusions.push(c);
    }
    let per_fold: Vec<MetricSet> = fold_confusions
        .iter()
        .map(MetricSet::from_confusion)
        .collect();
    let fold_accuracies = per_fold.iter().map(|m| m.accuracy).collect();
    let metrics = match settings.averaging {
        Averaging::Pooled => {
            MetricSet::from_confusion(&fold_confusions.iter().copied().sum::<Confusion>())
        }
        Averaging::FoldMean => MetricSet::mean(&per_fold),
    };
    Ok(CvResult {
        metrics,
        fold_confusions,
        fold_accuracies,
        predictions,
    })
}

// ---------------------------------------------------------------------------
// Student t distribution

const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// ln Γ(x) for x > 0 (Lanczos, g = 7).
pub fn ln_gamma(x: f64) -> f64 {
    if x < 0.5 {
        // reflection
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let t = x + 7.5;
    let series = LANCZOS[1..]
        .iter()
        .enumerate()
        .fold(LANCZOS[0], |acc, (i, &c)| acc + c / (x + i as f64 + 1.0));
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + series.ln()
}

/// Continued fraction for the incomplete beta function (modified Lentz).
fn beta_cf(a: f64, b: f64, x: f64) -> f64 {
    const MAX_ITER: usize = 500;
    const EPS: f64 = 1e-16;
    const TINY: f64 = 1e-300;
    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=MAX_ITER {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < EPS {
            break;
        }
    }
    h
}

/// Regularized incomplete beta function I_x(a, b).
pub fn incomplete_beta(a: f64, b: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let ln_front = ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b) + a * x.ln() + b * (1.0 - x).ln();
    let front = ln_front.exp();
    // the continued fraction converges fastest below the mean
    if x < (a + 1.0) / (a + b + 2.0) {
        front * beta_cf(a, b, x) / a
    } else {
        1.0 - front * beta_cf(b, a, 1.0 - x) / b
    }
}

/// P(|T| >= |t|) for Student's t with `df` degrees of freedom.
pub fn student_t_two_tailed(t: f64, df: f64) -> f64 {
    if t.is_infinite() {
        return 0.0;
    }
    incomplete_beta(df / 2.0, 0.5, df / (df + t * t)).clamp(0.0, 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TTest {
    pub mean_difference: f64,
    pub sd_difference: f64,
    pub t: f64,
    pub df: usize,
    pub p_value: f64,
}

/// Two-tailed paired t-test on `a[i] - b[i]`.
pub fn paired_t_test(a: &[f64], b: &[f64]) -> Result<TTest> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch(format!(
            "{} vs {} paired scores",
            a.len(),
            b.len()
        )));
    }
    let n = a.len();
    if n < 2 {
        return Err(Error::TooFewScores(n));
    }
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let nf = n as f64;
    let mean = d.iter().sum::<f64>() / nf;
    let var = d.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (nf - 1.0);
    let sd = var.sqrt();
    let df = n - 1;
    let (t, p_value) = if sd == 0.0 {
        if mean == 0.0 {
            (0.0, 1.0)
        } else {
            (f64::INFINITY.copysign(mean), 0.0)
        }
    } else {
        let t = mean / (sd / nf.sqrt());
        (t, student_t_two_tailed(t, df as f64))
    };
    Ok(TTest {
        mean_difference: mean,
        sd_difference: sd,
        t,
        df,
        p_value,
    })
}

// ---------------------------------------------------------------------------
// Comparison report

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Mark {
    #[default]
    None,
    /// p < 0.05
    Significant,
    /// p < 0.01
    HighlySignificant,
}

impl Mark {
    pub fn from_p(p: f64) -> Self {
        if p < 0.01 {
            Mark::HighlySignificant
        } else if p < 0.05 {
            Mark::Significant
        } else {
            Mark::None
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Mark::None => "",
            Mark::Significant => "*",
            Mark::HighlySignificant => "**",
        }
    }
}

/// A method to evaluate: identifier, display name and strategy.
#[derive(Debug, Clone)]
pub struct Method {
    pub id: String,
    pub label: String,
    pub strategy: MlcStrategy,
}

impl Method {
    pub fn new(strategy: MlcStrategy) -> Self {
        Method {
            id: strategy.method_name().to_string(),
            label: display_label(&strategy).to_string(),
            strategy,
        }
    }
}

/// Table row names for the built-in strategies.
pub fn display_label(strategy: &MlcStrategy) -> &'static str {
    match strategy {
        MlcStrategy::BinaryRelevance => "DT (no history)",
        MlcStrategy::ChainPredictedHistory => "DT (with predicted history)",
        MlcStrategy::MajorityClass { .. } => "Majority-class",
        MlcStrategy::LabelPowerset => "MLC - LP (no history)",
        MlcStrategy::Rakel(_) => "MLC - RAkEL (no history)",
        MlcStrategy::ChainRealHistory => "DT (with real history)",
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub id: String,
    pub label: String,
    pub metrics: MetricSet,
    pub folds: Vec<f64>,
    /// `None` for the reference row.
    pub p_vs_reference: Option<f64>,
    pub mark: Mark,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub reference: String,
    pub rows: Vec<ReportRow>,
}

pub fn comparison_report(
    data: &MultiLabelData,
    methods: &[Method],
    plan: &FoldPlan,
    reference: &str,
    settings: &CvSettings,
) -> Result<EvalReport> {
    let ref_pos = methods
        .iter()
        .position(|m| m.id == reference)
        .ok_or_else(|| Error::UnknownMethod(reference.to_string()))?;
    let results = methods
        .iter()
        .map(|m| cross_validate(data, &m.strategy, plan, settings))
        .collect::<Result<Vec<_>>>()?;
    let ref_folds = &results[ref_pos].fold_accuracies;
    let rows = methods
        .iter()
        .zip(&results)
        .enumerate()
        .map(|(i, (m, r))| {
            let p = if i == ref_pos {
                None
            } else {
                Some(paired_t_test(&r.fold_accuracies, ref_folds)?.p_value)
            };
            Ok(ReportRow {
                id: m.id.clone(),
                label: m.label.clone(),
                metrics: r.metrics,
                folds: r.fold_accuracies.clone(),
                p_vs_reference: p,
                mark: p.map(Mark::from_p).unwrap_or_default(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(EvalReport {
        reference: reference.to_string(),
        rows,
    })
}

fn pct(v: f64) -> String {
    format!("{:.2}", v * 100.0)
}

impl ReportRow {
    fn cells(&self) -> [String; 5] {
        [
            self.label.clone(),
            format!("{}{}%", self.mark.as_str(), pct(self.metrics.accuracy)),
            pct(self.metrics.precision),
            pct(self.metrics.recall),
            pct(self.metrics.f_score),
        ]
    }

    /// `label & *75.95% & 67.56 & 75.96 & 67.87`
    pub fn latex_row(&self) -> String {
        self.cells().join(" & ")
    }
}

impl EvalReport {
    pub fn row(&self, id: &str) -> Option<&ReportRow> {
        self.rows.iter().find(|r| r.id == id)
    }

    /// Aligned text table. A p-value column is added when there is more
    /// than one method.
    pub fn render_text(&self) -> String {
        let with_p = self.rows.len() > 1;
        let mut header: Vec<String> = ["Classifier", "Accuracy", "Precision", "Recall", "F-score"]
            .map(String::from)
            .to_vec();
        if with_p {
            header.push(format!("p vs {}", self.reference));
        }
        let body: Vec<Vec<String>> = self
            .rows
            .iter()
            .map(|r| {
                let mut cells = r.cells().to_vec();
                if with_p {
                    cells.push(r.p_vs_reference.map_or("-".into(), |p| format!("{p:.4}")));
                }
                cells
            })
            .collect();
        let widths: Vec<usize> = (0..header.len())
            .map(|c| {
                body.iter()
                    .map(|row| row[c].chars().count())
                    .chain([header[c].len()])
                    .max()
                    .unwrap_or(0)
            })
            .collect();
        let line = |cells: &[String]| {
            let mut s = String::new();
            for (c, cell) in cells.iter().enumerate() {
                if c > 0 {
                    s.push_str(" | ");
                }
                if c == 0 {
                    let _ = write!(s, "{cell:<w$}", w = widths[c]);
                } else {
                    let _ = write!(s, "{cell:>w$}", w = widths[c]);
                }
            }
            s.trim_end().to_string()
        };
        let mut out = line(&header);
        out.push('\n');
        out.push_str(
            &widths
                .iter()
                .map(|&w| "-".repeat(w))
                .collect::<Vec<_>>()
                .join("-+-"),
        );
        out.push('\n');
        for row in &body {
            out.push_str(&line(row));
            out.push('\n');
        }
        if with_p {
            out.push_str("* p < 0.05, ** p < 0.01 (paired t-test on fold accuracies vs ");
            out.push_str(&self.reference);
            out.push_str(")\n");
        }
        out
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

struct RowJson<'a>(&'a ReportRow);

impl Serialize for RowJson<'_> {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let r = self.0;
        let mut st = s.serialize_struct("ReportRow", 8)?;
        st.serialize_field("label", &r.label)?;
        st.serialize_field("accuracy", &r.metrics.accuracy)?;
        st.serialize_field("precision", &r.metrics.precision)?;
        st.serialize_field("recall", &r.metrics.recall)?;
        st.serialize_field("f_score", &r.metrics.f_score)?;
        st.serialize_field("folds", &r.folds)?;
        st.serialize_field("p_vs_reference", &r.p_vs_reference)?;
        st.serialize_field("mark", r.mark.as_str())?;
        st.end()
    }
}

/// `{method: {accuracy, precision, recall, f_score, folds, p_vs_reference, mark}}`
/// in row order.
impl Serialize for EvalReport {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut map = s.serialize_map(Some(self.rows.len()))?;
        for row in &self.rows {
            map.serialize_entry(&row.id, &RowJson(row))?;
        }
        map.end()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lv(bits: &[u8]) -> LabelVector {
        LabelVector::from_bits(bits.iter().map(|&b| b == 1).collect())
    }

    #[test]
    fn identity_prediction_scores_one() {
        let g = vec![lv(&[1, 0, 1]), lv(&[0, 0, 1])];
        let m = compute_metrics(&g, &g).unwrap();
        assert_eq!(
            m,
            MetricSet {
                accuracy: 1.0,
                precision: 1.0,
                recall: 1.0,
                f_score: 1.0
            }
        );
    }

    #[test]
    fn worked_confusion_example() {
        // TP = 2, FP = 1, FN = 0
        let m = compute_metrics(&[lv(&[1, 0, 1])], &[lv(&[1, 1, 1])]).unwrap();
        assert_eq!(m.accuracy, 2.0 / 3.0);
        assert_eq!(m.precision, 2.0 / 3.0);
        assert_eq!(m.recall, 1.0);
        assert!((m.f_score - 0.8).abs() < 1e-15);
    }

    #[test]
    fn empty_denominators_are_one() {
        let z = vec![lv(&[0, 0, 0])];
        let m = compute_metrics(&z, &z).unwrap();
        assert_eq!((m.accuracy, m.precision, m.recall), (1.0, 1.0, 1.0));
    }

    #[test]
    fn f_zero_when_precision_zero() {
        let m = compute_metrics(&[lv(&[1, 0])], &[lv(&[0, 1])]).unwrap();
        assert_eq!((m.precision, m.recall, m.f_score), (0.0, 0.0, 0.0));
    }

    #[test]
    fn metric_shape_errors() {
        assert!(compute_metrics(&[], &[]).is_err());
        assert!(compute_metrics(&[lv(&[1])], &[lv(&[1]), lv(&[0])]).is_err());
        assert!(compute_metrics(&[lv(&[1, 0])], &[lv(&[1])]).is_err());
    }

    #[test]
    fn fold_plan_partitions() {
        let plan = FoldPlan::new(37, 10, 5).unwrap();
        let mut sizes = [0; 10];
        for &f in &plan.assignments {
            sizes[f] += 1;
        }
        assert_eq!(sizes.iter().sum::<usize>(), 37);
        assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
        assert!(matches!(
            FoldPlan::new(5, 10, 0),
            Err(Error::TooManyFolds { .. })
        ));
        assert!(FoldPlan::new(5, 1, 0).is_err());
        assert_eq!(plan, FoldPlan::new(37, 10, 5).unwrap());
    }

    #[test]
    fn t_test_degenerate_cases() {
        let a = [0.5, 0.6, 0.7];
        assert_eq!(paired_t_test(&a, &a).unwrap().p_value, 1.0);
        let b = [0.0; 5];
        let c = [1.0; 5];
        assert_eq!(paired_t_test(&c, &b).unwrap().p_value, 0.0);
        assert!(matches!(
            paired_t_test(&[1.0], &[2.0]),
            Err(Error::TooFewScores(1))
        ));
        assert!(paired_t_test(&[1.0, 2.0], &[2.0]).is_err());
    }

    #[test]
    fn t_test_hand_example() {
        // d = [1, 2, 3]: mean 2, sd 1, t = 2√3, df 2.
        // For df = 2 the two-tailed p is 1 - t / sqrt(2 + t²).
        let r = paired_t_test(&[1.0, 2.0, 3.0], &[0.0; 3]).unwrap();
        assert!((r.t - 2.0 * 3f64.sqrt()).abs() < 1e-12);
        assert_eq!(r.df, 2);
        let exact = 1.0 - r.t / (2.0 + r.t * r.t).sqrt();
        assert!((r.p_value - exact).abs() < 1e-12);
        assert!((r.p_value - 0.0742).abs() < 5e-5);
    }

    #[test]
    fn ln_gamma_known_values() {
        assert!(ln_gamma(1.0).abs() < 1e-14);
        assert!(ln_gamma(2.0).abs() < 1e-14);
        assert!((ln_gamma(5.0) - 24f64.ln()).abs() < 1e-13);
        assert!((ln_gamma(0.5) - std::f64::consts::PI.sqrt().ln()).abs() < 1e-13);
    }

    #[test]
    fn marks_follow_thresholds() {
        assert_eq!(Mark::from_p(0.009), Mark::HighlySignificant);
        assert_eq!(Mark::from_p(0.01), Mark::Significant);
        assert_eq!(Mark::from_p(0.049), Mark::Significant);
        assert_eq!(Mark::from_p(0.05), Mark::None);
    }

    #[test]
    fn latex_row_format() {
        let row = ReportRow {
            id: "br".into(),
            label: "DT (no history)".into(),
            metrics: MetricSet {
                accuracy: 0.7595,
                precision: 0.6756,
                recall: 0.7596,
                f_score: 0.6787,
            },
            folds: vec![],
            p_vs_reference: Some(0.03),
            mark: Mark::Significant,
        };
        assert_eq!(
            row.latex_row(),
            "DT (no history) & *75.95% & 67.56 & 75.96 & 67.87"
        );
    }
}
