//! CART-style binary classification trees.
//!
//! Greedy top-down induction over numeric features. Candidate thresholds are
//! midpoints between consecutive distinct sorted values, `x <= threshold`
//! goes left. The split with the largest impurity decrease wins; equal
//! decreases go to the lowest feature index, then the lowest threshold.
//!
//! When a node is impure but no candidate strictly decreases impurity (the
//! XOR situation) the first admissible candidate in tie-break order is taken
//! anyway, so an unlimited-depth tree always fits consistent training data.
//!
//! [`TieBreak::Seeded`] instead picks uniformly among equal-gain splits with
//! a generator seeded from [`TreeConfig::seed`]. Ensembles give each member
//! its own seed via [`TreeConfig::for_member`].

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Gains at or below this are treated as zero.
const GAIN_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitCriterion {
    #[default]
    Gini,
    Entropy,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TieBreak {
    /// Lowest feature index, then lowest threshold.
    #[default]
    Lowest,
    /// Uniform among equal-gain splits, driven by the config seed.
    Seeded,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeConfig {
    /// `None` grows until leaves are pure or unsplittable.
    pub max_depth: Option<usize>,
    pub min_samples_leaf: usize,
    pub criterion: SplitCriterion,
    #[serde(default)]
    pub tie_break: TieBreak,
    /// Only read under [`TieBreak::Seeded`].
    pub seed: u64,
}

impl Default for TreeConfig {
    fn default() -> Self {
        TreeConfig {
            max_depth: None,
            min_samples_leaf: 1,
            criterion: SplitCriterion::Gini,
            tie_break: TieBreak::Lowest,
            seed: 0,
        }
    }
}

impl TreeConfig {
    /// The config for the `i`-th tree of a multi-tree model. Member 0 keeps
    /// the base seed, so a one-member ensemble matches a single tree.
    pub fn for_member(&self, i: usize) -> TreeConfig {
        TreeConfig {
            seed: self.seed.wrapping_add(i as u64),
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.min_samples_leaf == 0 {
            return Err(Error::InvalidConfig(
                "min_samples_leaf must be at least 1".into(),
            ));
        }
        if self.max_depth == Some(0) {
            return Err(Error::InvalidConfig("max_depth must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TreeNode {
    Leaf {
        label: usize,
        /// Training samples per class at this leaf.
        distribution: Vec<usize>,
    },
    Internal {
        feature: usize,
        threshold: f64,
        left: Box<TreeNode>,
        right: Box<TreeNode>,
    },
}

impl TreeNode {
    pub fn node_count(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 1,
            TreeNode::Internal { left, right, .. } => 1 + left.node_count() + right.node_count(),
        }
    }

    pub fn internal_count(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 0,
            TreeNode::Internal { left, right, .. } => {
                1 + left.internal_count() + right.internal_count()
            }
        }
    }

    /// Number of edges on the longest root-to-leaf path.
    pub fn depth(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 0,
            TreeNode::Internal { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    n_features: usize,
    n_classes: usize,
    root: TreeNode,
}

impl DecisionTree {
    pub fn root(&self) -> &TreeNode {
        &self.root
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn predict(&self, x: &[f64]) -> Result<usize> {
        if x.len() != self.n_features {
            return Err(Error::FeatureLength {
                expected: self.n_features,
                found: x.len(),
            });
        }
        let mut node = &self.root;
        loop {
            match node {
                TreeNode::Leaf { label, .. } => return Ok(*label),
                TreeNode::Internal {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    node = if x[*feature] <= *threshold {
                        left
                    } else {
                        right
                    };
                }
            }
        }
    }
}

pub fn impurity(counts: &[usize], criterion: SplitCriterion) -> f64 {
    let n: usize = counts.iter().sum();
    if n == 0 {
        return 0.0;
    }
    let n = n as f64;
    match criterion {
        SplitCriterion::Gini => {
            1.0 - counts
                .iter()
                .map(|&c| {
                    let p = c as f64 / n;
                    p * p
                })
                .sum::<f64>()
        }
        SplitCriterion::Entropy => -counts
            .iter()
            .filter(|&&c| c > 0)
            .map(|&c| {
                let p = c as f64 / n;
                p * p.log2()
            })
            .sum::<f64>(),
    }
}

/// Parent impurity minus the size-weighted child impurities.
pub fn impurity_decrease(left: &[usize], right: &[usize], criterion: SplitCriterion) -> f64 {
    let parent: Vec<usize> = left.iter().zip(right).map(|(a, b)| a + b).collect();
    let nl: usize = left.iter().sum();
    let nr: usize = right.iter().sum();
    let n = (nl + nr) as f64;
    impurity(&parent, criterion)
        - (nl as f64 / n) * impurity(left, criterion)
        - (nr as f64 / n) * impurity(right, criterion)
}

pub fn train_tree<R: AsRef<[f64]>>(x: &[R], y: &[usize], cfg: &TreeConfig) -> Result<DecisionTree> {
    cfg.validate()?;
    if x.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if x.len() != y.len() {
        return Err(Error::LengthMismatch(format!(
            "{} feature vectors but {} labels",
            x.len(),
            y.len()
        )));
    }
    let n_features = x[0].as_ref().len();
    if let Some(bad) = x.iter().find(|r| r.as_ref().len() != n_features) {
        return Err(Error::FeatureLength {
            expected: n_features,
            found: bad.as_ref().len(),
        });
    }
    let rows: Vec<&[f64]> = x.iter().map(|r| r.as_ref()).collect();
    let n_classes = y.iter().copied().max().unwrap_or(0) + 1;
    let mut grower = Grower {
        x: &rows,
        y,
        n_features,
        n_classes,
        cfg,
        rng: (cfg.tie_break == TieBreak::Seeded).then(|| ChaCha8Rng::seed_from_u64(cfg.seed)),
    };
    let mut idx: Vec<usize> = (0..x.len()).collect();
    let root = grower.grow(&mut idx, 0);
    Ok(DecisionTree {
        n_features,
        n_classes,
        root,
    })
}

struct Grower<'a> {
    x: &'a [&'a [f64]],
    y: &'a [usize],
    n_features: usize,
    n_classes: usize,
    cfg: &'a TreeConfig,
    rng: Option<ChaCha8Rng>,
}

struct Split {
    feature: usize,
    threshold: f64,
    gain: f64,
}

impl Grower<'_> {
    fn counts(&self, idx: &[usize]) -> Vec<usize> {
        let mut counts = vec![0; self.n_classes];
        for &i in idx {
            counts[self.y[i]] += 1;
        }
        counts
    }

    fn leaf(counts: Vec<usize>) -> TreeNode {
        // argmax, ties to the smallest class
        let mut label = 0;
        for (c, &n) in counts.iter().enumerate() {
            if n > counts[label] {
                label = c;
            }
        }
        TreeNode::Leaf {
            label,
            distribution: counts,
        }
    }

    fn grow(&mut self, idx: &mut [usize], depth: usize) -> TreeNode {
        let counts = self.counts(idx);
        let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;
        let depth_reached = self.cfg.max_depth.is_some_and(|d| depth >= d);
        if pure || depth_reached || idx.len() < 2 * self.cfg.min_samples_leaf {
            return Self::leaf(counts);
        }
        let Some(split) = self.best_split(idx, &counts) else {
            return Self::leaf(counts);
        };
        // stable partition keeps sibling order deterministic
        let (mut left, mut right): (Vec<usize>, Vec<usize>) = idx
            .iter()
            .partition(|&&i| self.x[i][split.feature] <= split.threshold);
        TreeNode::Internal {
            feature: split.feature,
            threshold: split.threshold,
            left: Box::new(self.grow(&mut left, depth + 1)),
            right: Box::new(self.grow(&mut right, depth + 1)),
        }
    }

    fn best_split(&mut self, idx: &[usize], parent: &[usize]) -> Option<Split> {
        let n = idx.len();
        let min_leaf = self.cfg.min_samples_leaf;
        let criterion = self.cfg.criterion;
        let parent_impurity = impurity(parent, criterion);
        let mut best: Option<Split> = None;
        let mut fallback: Option<Split> = None;
        // equal-gain candidates seen so far, for reservoir sampling
        let mut ties = 0u32;
        let mut order = idx.to_vec();
        let mut left = vec![0usize; self.n_classes];
        let mut right = vec![0usize; self.n_classes];

        for feature in 0..self.n_features {
            order.sort_by(|&a, &b| self.x[a][feature].total_cmp(&self.x[b][feature]));
            left.iter_mut().for_each(|c| *c = 0);
            right.copy_from_slice(parent);
            for p in 1..n {
                let moved = self.y[order[p - 1]];
                left[moved] += 1;
                right[moved] -= 1;
                let lo = self.x[order[p - 1]][feature];
                let hi = self.x[order[p]][feature];
                if lo >= hi || p < min_leaf || n - p < min_leaf {
                    continue;
                }
                let mut threshold = lo + (hi - lo) / 2.0;
                if threshold >= hi {
                    // adjacent floats: keep `hi` on the right
                    threshold = lo;
                }
                let nf = n as f64;
                let gain = parent_impurity
                    - (p as f64 / nf) * impurity(&left, criterion)
                    - ((n - p) as f64 / nf) * impurity(&right, criterion);
                if gain > GAIN_EPS {
                    let take = match (&best, &mut self.rng) {
                        (None, _) => {
                            ties = 1;
                            true
                        }
                        (Some(b), _) if gain > b.gain + GAIN_EPS => {
                            ties = 1;
                            true
                        }
                        (Some(b), Some(rng)) if gain >= b.gain - GAIN_EPS => {
                            ties += 1;
                            rng.random_range(0..ties) == 0
                        }
                        _ => false,
                    };
                    if take {
                        best = Some(Split {
                            feature,
                            threshold,
                            gain,
                        });
                    }
                }
                if fallback.is_none() {
                    fallback = Some(Split {
                        feature,
                        threshold,
                        gain,
                    });
                }
            }
        }
        best.or(fallback)
    }
}
