//! Multi-label strategies over the template label space.
//!
//! * binary relevance: one independent tree per label
//! * classifier chains: one tree per label, each also seeing the bits of the
//!   labels before it in chain order. Training always uses gold bits as the
//!   history; at prediction time the history is either the chain's own
//!   outputs or the supplied gold vector
//! * majority class: a constant vector
//! * label powerset (LP): one multi-class tree over observed label sets
//! * RAkEL: an ensemble of LP models on random k-subsets of the labels,
//!   combined by per-label vote averaging

use std::collections::{HashMap, HashSet};

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::domain::{Dataset, LabelVector};
use crate::error::{Error, Result};
use crate::features::FeatureExtractor;
use crate::par::Execution;
use crate::tree::{train_tree, DecisionTree, TreeConfig};

/// Above this many k-subsets, sampling switches from enumeration to
/// rejection of duplicates.
const ENUMERATION_LIMIT: u128 = 200_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MajorityMode {
    /// Per label, set the bit iff it is set in more than half the records.
    #[default]
    PerLabel,
    /// Predict the most frequent complete label set.
    Labelset,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RakelConfig {
    pub k: usize,
    pub m: usize,
    pub threshold: f64,
    pub seed: u64,
}

impl Default for RakelConfig {
    fn default() -> Self {
        RakelConfig::for_labels(29)
    }
}

impl RakelConfig {
    /// k = 3, m = 2|L|, t = 0.5.
    pub fn for_labels(n_labels: usize) -> Self {
        RakelConfig {
            k: 3.min(n_labels.max(1)),
            m: 2 * n_labels.max(1),
            threshold: 0.5,
            seed: 0,
        }
    }

    pub fn validate(&self, n_labels: usize) -> Result<()> {
        if self.k == 0 {
            return Err(Error::InvalidConfig("RAkEL k must be at least 1".into()));
        }
        if self.k > n_labels {
            return Err(Error::LabelsetTooLarge {
                k: self.k,
                labels: n_labels,
            });
        }
        if self.m == 0 {
            return Err(Error::InvalidConfig("RAkEL m must be at least 1".into()));
        }
        check_threshold(self.threshold)
    }
}

fn check_threshold(t: f64) -> Result<()> {
    if (0.0..=1.0).contains(&t) {
        Ok(())
    } else {
        Err(Error::InvalidConfig(format!(
            "vote threshold {t} outside [0, 1]"
        )))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MlcStrategy {
    BinaryRelevance,
    ChainPredictedHistory,
    ChainRealHistory,
    MajorityClass { mode: MajorityMode },
    LabelPowerset,
    Rakel(RakelConfig),
}

impl MlcStrategy {
    /// The command-line name.
    pub fn method_name(&self) -> &'static str {
        match self {
            MlcStrategy::BinaryRelevance => "br",
            MlcStrategy::ChainPredictedHistory => "chain-predicted",
            MlcStrategy::ChainRealHistory => "chain-real",
            MlcStrategy::MajorityClass { .. } => "majority",
            MlcStrategy::LabelPowerset => "lp",
            MlcStrategy::Rakel(_) => "rakel",
        }
    }

    pub fn needs_gold(&self) -> bool {
        matches!(self, MlcStrategy::ChainRealHistory)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum History {
    Predicted,
    Real,
}

/// Feature matrix plus gold label vectors.
#[derive(Debug, Clone)]
pub struct MultiLabelData {
    features: Vec<Vec<f64>>,
    labels: Vec<LabelVector>,
    n_labels: usize,
}

impl MultiLabelData {
    pub fn new(features: Vec<Vec<f64>>, labels: Vec<LabelVector>) -> Result<Self> {
        if features.is_empty() {
            return Err(Error::EmptyDataset);
        }
        if features.len() != labels.len() {
            return Err(Error::LengthMismatch(format!(
                "{} feature vectors but {} label vectors",
                features.len(),
                labels.len()
            )));
        }
        let width = features[0].len();
        if let Some(f) = features.iter().find(|f| f.len() != width) {
            return Err(Error::FeatureLength {
                expected: width,
                found: f.len(),
            });
        }
        let n_labels = labels[0].len();
        if labels.iter().any(|l| l.len() != n_labels) {
            return Err(Error::LengthMismatch(
                "label vectors differ in width".into(),
            ));
        }
        Ok(MultiLabelData {
            features,
            labels,
            n_labels,
        })
    }

    pub fn from_dataset(ds: &Dataset, extractor: &FeatureExtractor) -> Result<Self> {
        let labels = ds.label_vectors()?;
        let features = ds.records().iter().map(|r| extractor.values(r)).collect();
        Self::new(features, labels)
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn n_labels(&self) -> usize {
        self.n_labels
    }

    pub fn n_features(&self) -> usize {
        self.features[0].len()
    }

    pub fn features(&self) -> &[Vec<f64>] {
        &self.features
    }

    pub fn labels(&self) -> &[LabelVector] {
        &self.labels
    }

    pub fn subset(&self, rows: &[usize]) -> Result<Self> {
        Self::new(
            rows.iter().map(|&i| self.features[i].clone()).collect(),
            rows.iter().map(|&i| self.labels[i].clone()).collect(),
        )
    }

    fn label_column(&self, j: usize) -> Vec<usize> {
        self.labels.iter().map(|l| l.get(j) as usize).collect()
    }
}

/// One LP classifier over a scope of labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LpModel {
    /// Global label indices this model decides, ascending.
    pub labels: Vec<usize>,
    /// Class id → label set over `labels`.
    pub classes: Vec<LabelVector>,
    pub tree: DecisionTree,
}

impl LpModel {
    pub fn n_classes(&self) -> usize {
        self.classes.len()
    }

    /// Prediction restricted to this model's scope.
    pub fn predict_scoped(&self, x: &[f64]) -> Result<&LabelVector> {
        Ok(&self.classes[self.tree.predict(x)?])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Payload {
    BinaryRelevance {
        trees: Vec<DecisionTree>,
    },
    Chain {
        order: Vec<usize>,
        trees: Vec<DecisionTree>,
    },
    Majority {
        bits: LabelVector,
    },
    LabelPowerset(LpModel),
    Rakel {
        members: Vec<LpModel>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub strategy: MlcStrategy,
    pub tree_config: TreeConfig,
    pub n_labels: usize,
    pub n_features: usize,
    pub payload: Payload,
}

/// Output bits plus a per-label strength in [0, 1]. Strategies without a
/// vote notion report 1.0 for set bits and 0.0 otherwise.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub labels: LabelVector,
    pub votes: Vec<f64>,
}

impl Prediction {
    fn from_bits(labels: LabelVector) -> Self {
        let votes = labels
            .bits()
            .iter()
            .map(|&b| if b { 1.0 } else { 0.0 })
            .collect();
        Prediction { labels, votes }
    }
}

impl TrainedModel {
    pub fn predict(&self, x: &[f64], gold: Option<&LabelVector>) -> Result<LabelVector> {
        self.predict_with_votes(x, gold).map(|p| p.labels)
    }

    pub fn predict_with_votes(&self, x: &[f64], gold: Option<&LabelVector>) -> Result<Prediction> {
        if x.len() != self.n_features {
            return Err(Error::FeatureLength {
                expected: self.n_features,
                found: x.len(),
            });
        }
        match &self.payload {
            Payload::BinaryRelevance { trees } => {
                let bits = trees
                    .iter()
                    .map(|t| Ok(t.predict(x)? == 1))
                    .collect::<Result<Vec<_>>>()?;
                Ok(Prediction::from_bits(LabelVector::from_bits(bits)))
            }
            Payload::Chain { .. } => {
                let history = match self.strategy {
                    MlcStrategy::ChainRealHistory => History::Real,
                    _ => History::Predicted,
                };
                self.predict_chain(x, history, gold)
                    .map(Prediction::from_bits)
            }
            Payload::Majority { bits } => Ok(Prediction::from_bits(bits.clone())),
            Payload::LabelPowerset(lp) => Ok(Prediction::from_bits(lp.predict_scoped(x)?.clone())),
            Payload::Rakel { .. } => {
                let t = match &self.strategy {
                    MlcStrategy::Rakel(cfg) => cfg.threshold,
                    _ => 0.5,
                };
                self.predict_rakel(x, t)
            }
        }
    }

    /// Runs a chain with an explicit history source, regardless of which
    /// chain strategy produced it.
    pub fn predict_chain(
        &self,
        x: &[f64],
        history: History,
        gold: Option<&LabelVector>,
    ) -> Result<LabelVector> {
        let Payload::Chain { order, trees } = &self.payload else {
            return Err(Error::InvalidConfig("not a chain model".into()));
        };
        let gold = match history {
            History::Real => {
                let g = gold.ok_or(Error::MissingGold)?;
                if g.len() != self.n_labels {
                    return Err(Error::LengthMismatch(format!(
                        "gold vector has {} bits, model has {} labels",
                        g.len(),
                        self.n_labels
                    )));
                }
                Some(g)
            }
            History::Predicted => None,
        };
        let mut input = Vec::with_capacity(x.len() + order.len());
        input.extend_from_slice(x);
        let mut out = LabelVector::zeros(self.n_labels);
        for (&label, tree) in order.iter().zip(trees) {
            let bit = tree.predict(&input)? == 1;
            out.set(label, bit);
            let hist = match gold {
                Some(g) => g.get(label),
                None => bit,
            };
            input.push(if hist { 1.0 } else { 0.0 });
        }
        Ok(out)
    }

    /// Per label j, the mean of the binary votes of members whose subset
    /// contains j; bit j is set iff that mean is strictly above `threshold`.
    /// Labels no member covers stay 0 with vote 0.
    pub fn predict_rakel(&self, x: &[f64], threshold: f64) -> Result<Prediction> {
        check_threshold(threshold)?;
        let Payload::Rakel { members } = &self.payload else {
            return Err(Error::InvalidConfig("not a RAkEL model".into()));
        };
        let mut sum = vec![0u32; self.n_labels];
        let mut count = vec![0u32; self.n_labels];
        for member in members {
            let partial = member.predict_scoped(x)?;
            for (pos, &j) in member.labels.iter().enumerate() {
                count[j] += 1;
                sum[j] += partial.get(pos) as u32;
            }
        }
        Ok(aggregate_votes(&sum, &count, threshold))
    }
}

/// Turns per-label vote sums and member counts into a thresholded prediction.
pub fn aggregate_votes(sum: &[u32], count: &[u32], threshold: f64) -> Prediction {
    let votes: Vec<f64> = sum
        .iter()
        .zip(count)
        .map(|(&s, &c)| if c == 0 { 0.0 } else { s as f64 / c as f64 })
        .collect();
    let bits = votes
        .iter()
        .zip(count)
        .map(|(&v, &c)| c > 0 && v > threshold)
        .collect();
    Prediction {
        labels: LabelVector::from_bits(bits),
        votes,
    }
}

pub fn train_binary_relevance(
    data: &MultiLabelData,
    cfg: &TreeConfig,
    exec: Execution,
) -> Result<TrainedModel> {
    let trees = exec.try_map(data.n_labels(), |j| {
        train_tree(data.features(), &data.label_column(j), &cfg.for_member(j))
    })?;
    Ok(TrainedModel {
        strategy: MlcStrategy::BinaryRelevance,
        tree_config: cfg.clone(),
        n_labels: data.n_labels(),
        n_features: data.n_features(),
        payload: Payload::BinaryRelevance { trees },
    })
}

fn check_permutation(order: &[usize], n: usize) -> Result<()> {
    if order.len() != n {
        return Err(Error::InvalidPermutation(format!(
            "has {} entries, expected {n}",
            order.len()
        )));
    }
    let mut seen = vec![false; n];
    for &j in order {
        if j >= n {
            return Err(Error::InvalidPermutation(format!(
                "label index {j} out of range 0..{n}"
            )));
        }
        if std::mem::replace(&mut seen[j], true) {
            return Err(Error::InvalidPermutation(format!(
                "label index {j} repeated"
            )));
        }
    }
    Ok(())
}

/// Trains a classifier chain. `order` defaults to label-index order; the
/// `history` flag only selects which strategy the model reports, since
/// training always uses gold history.
pub fn train_chain(
    data: &MultiLabelData,
    cfg: &TreeConfig,
    order: Option<&[usize]>,
    history: History,
    exec: Execution,
) -> Result<TrainedModel> {
    let n_labels = data.n_labels();
    let order: Vec<usize> = match order {
        Some(o) => {
            check_permutation(o, n_labels)?;
            o.to_vec()
        }
        None => (0..n_labels).collect(),
    };
    let trees = exec.try_map(n_labels, |p| {
        let inputs: Vec<Vec<f64>> = data
            .features()
            .iter()
            .zip(data.labels())
            .map(|(x, gold)| {
                let mut row = Vec::with_capacity(x.len() + p);
                row.extend_from_slice(x);
                row.extend(
                    order[..p]
                        .iter()
                        .map(|&j| if gold.get(j) { 1.0 } else { 0.0 }),
                );
                row
            })
            .collect();
        train_tree(&inputs, &data.label_column(order[p]), &cfg.for_member(p))
    })?;
    Ok(TrainedModel {
        strategy: match history {
            History::Predicted => MlcStrategy::ChainPredictedHistory,
            History::Real => MlcStrategy::ChainRealHistory,
        },
        tree_config: cfg.clone(),
        n_labels,
        n_features: data.n_features(),
        payload: Payload::Chain { order, trees },
    })
}

pub fn train_majority(data: &MultiLabelData, mode: MajorityMode) -> Result<TrainedModel> {
    let n = data.len();
    let bits = match mode {
        MajorityMode::PerLabel => LabelVector::from_bits(
            (0..data.n_labels())
                .map(|j| 2 * data.labels().iter().filter(|l| l.get(j)).count() > n)
                .collect(),
        ),
        MajorityMode::Labelset => {
            let (classes, table) = lp_transform(data.labels());
            let mut freq = vec![0usize; table.len()];
            for c in classes {
                freq[c] += 1;
            }
            // first-appearance order breaks ties
            let mut best = 0;
            for (c, &f) in freq.iter().enumerate() {
                if f > freq[best] {
                    best = c;
                }
            }
            table[best].clone()
        }
    };
    Ok(TrainedModel {
        strategy: MlcStrategy::MajorityClass { mode },
        tree_config: TreeConfig::default(),
        n_labels: data.n_labels(),
        n_features: data.n_features(),
        payload: Payload::Majority { bits },
    })
}

/// Maps each label vector to a class id. Distinct vectors are numbered in
/// order of first appearance; the returned table inverts the mapping.
pub fn lp_transform(labels: &[LabelVector]) -> (Vec<usize>, Vec<LabelVector>) {
    let mut ids: HashMap<&LabelVector, usize> = HashMap::new();
    let mut table = Vec::new();
    let classes = labels
        .iter()
        .map(|l| {
            *ids.entry(l).or_insert_with(|| {
                table.push(l.clone());
                table.len() - 1
            })
        })
        .collect();
    (classes, table)
}

fn train_lp_scoped(data: &MultiLabelData, scope: Vec<usize>, cfg: &TreeConfig) -> Result<LpModel> {
    let projected: Vec<LabelVector> = data.labels().iter().map(|l| l.project(&scope)).collect();
    let (y, classes) = lp_transform(&projected);
    let tree = train_tree(data.features(), &y, cfg)?;
    Ok(LpModel {
        labels: scope,
        classes,
        tree,
    })
}

pub fn train_lp(data: &MultiLabelData, cfg: &TreeConfig) -> Result<TrainedModel> {
    let lp = train_lp_scoped(data, (0..data.n_labels()).collect(), cfg)?;
    Ok(TrainedModel {
        strategy: MlcStrategy::LabelPowerset,
        tree_config: cfg.clone(),
        n_labels: data.n_labels(),
        n_features: data.n_features(),
        payload: Payload::LabelPowerset(lp),
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelsetSample {
    /// Each subset is sorted ascending; subsets are pairwise distinct.
    pub subsets: Vec<Vec<usize>>,
    /// `Some(requested)` when m exceeded C(L, k) and was reduced.
    pub clamped_from: Option<usize>,
    /// Labels that appear in no subset.
    pub uncovered: Vec<usize>,
}

fn binomial(n: usize, k: usize) -> u128 {
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| {
        acc.saturating_mul((n - i) as u128) / (i as u128 + 1)
    })
}

fn all_combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur: Vec<usize> = (0..k).collect();
    loop {
        out.push(cur.clone());
        // advance to the next combination in lexicographic order
        let Some(i) = (0..k).rev().find(|&i| cur[i] < n - k + i) else {
            return out;
        };
        cur[i] += 1;
        for j in i + 1..k {
            cur[j] = cur[j - 1] + 1;
        }
    }
}

/// Draws `m` distinct k-subsets of `0..n_labels` uniformly without
/// replacement. Deterministic in `seed`.
pub fn sample_labelsets(n_labels: usize, k: usize, m: usize, seed: u64) -> Result<LabelsetSample> {
    if k > n_labels {
        return Err(Error::LabelsetTooLarge {
            k,
            labels: n_labels,
        });
    }
    if k == 0 || m == 0 {
        return Err(Error::InvalidConfig("k and m must be at least 1".into()));
    }
    let total = binomial(n_labels, k);
    let (m_used, clamped_from) = if (m as u128) > total {
        log::warn!("RAkEL m = {m} exceeds C({n_labels}, {k}) = {total}; using {total}");
        (total as usize, Some(m))
    } else {
        (m, None)
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let subsets = if total <= ENUMERATION_LIMIT {
        let all = all_combinations(n_labels, k);
        index::sample(&mut rng, all.len(), m_used)
            .into_iter()
            .map(|i| all[i].clone())
            .collect()
    } else {
        let mut seen = HashSet::with_capacity(m_used);
        let mut out = Vec::with_capacity(m_used);
        while out.len() < m_used {
            let mut s = index::sample(&mut rng, n_labels, k).into_vec();
            s.sort_unstable();
            if seen.insert(s.clone()) {
                out.push(s);
            }
        }
        out
    };
    let mut covered = vec![false; n_labels];
    for s in &subsets {
        for &j in s {
            covered[j] = true;
        }
    }
    let uncovered: Vec<usize> = (0..n_labels).filter(|&j| !covered[j]).collect();
    if !uncovered.is_empty() {
        log::warn!("RAkEL labelsets leave labels {uncovered:?} uncovered; they will always be 0");
    }
    Ok(LabelsetSample {
        subsets,
        clamped_from,
        uncovered,
    })
}

pub fn train_rakel(
    data: &MultiLabelData,
    rcfg: &RakelConfig,
    tcfg: &TreeConfig,
    exec: Execution,
) -> Result<TrainedModel> {
    rcfg.validate(data.n_labels())?;
    let sample = sample_labelsets(data.n_labels(), rcfg.k, rcfg.m, rcfg.seed)?;
    let members = exec.try_map(sample.subsets.len(), |i| {
        train_lp_scoped(data, sample.subsets[i].clone(), &tcfg.for_member(i))
    })?;
    Ok(TrainedModel {
        strategy: MlcStrategy::Rakel(rcfg.clone()),
        tree_config: tcfg.clone(),
        n_labels: data.n_labels(),
        n_features: data.n_features(),
        payload: Payload::Rakel { members },
    })
}

/// Trains any strategy. `chain_order` applies to chain strategies only.
pub fn train(
    data: &MultiLabelData,
    strategy: &MlcStrategy,
    tree: &TreeConfig,
    chain_order: Option<&[usize]>,
    exec: Execution,
) -> Result<TrainedModel> {
    match strategy {
        MlcStrategy::BinaryRelevance => train_binary_relevance(data, tree, exec),
        MlcStrategy::ChainPredictedHistory => {
            train_chain(data, tree, chain_order, History::Predicted, exec)
        }
        MlcStrategy::ChainRealHistory => train_chain(data, tree, chain_order, History::Real, exec),
        MlcStrategy::MajorityClass { mode } => train_majority(data, *mode),
        MlcStrategy::LabelPowerset => train_lp(data, tree),
        MlcStrategy::Rakel(rcfg) => train_rakel(data, rcfg, tree, exec),
    }
}
