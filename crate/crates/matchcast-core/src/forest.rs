//! Random forest classifier with Gini splits.
//!
//! 100 shallow trees (depth ≤ 4), each fitted on a bootstrap resample of the
//! training rows. Nodes with fewer than 32 samples are never split and every
//! leaf stores the normalized class-frequency vector of its training samples;
//! a prediction averages the leaf vectors across trees, applies a small
//! probability floor and renormalizes so cross entropy stays finite. All
//! features are considered at every split (the feature space is tiny).

use alloc::boxed::Box;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::features::FeatureRow;
use crate::outcome::{ClassRange, OutcomeDistribution, Target};
use crate::rng::derive_seed;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ForestError {
    TooFewRows { have: usize, need: usize },
    FeatureDimensionMismatch { expected: usize, got: usize },
}

impl fmt::Display for ForestError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ForestError::TooFewRows { have, need } => {
                write!(f, "{have} training rows given but at least {need} are required")
            }
            ForestError::FeatureDimensionMismatch { expected, got } => {
                write!(f, "expected {expected} input features, got {got}")
            }
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for ForestError {}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RfConfig {
    pub n_trees: usize,
    pub max_depth: usize,
    pub min_samples_split: usize,
    pub prob_floor: f64,
    pub seed: u64,
}

impl Default for RfConfig {
    fn default() -> Self {
        RfConfig {
            n_trees: 100,
            max_depth: 4,
            min_samples_split: 32,
            prob_floor: 1e-6,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Node {
    Split {
        feature: usize,
        threshold: f64,
        n_samples: usize,
        left: Box<Node>,
        right: Box<Node>,
    },
    Leaf {
        n_samples: usize,
        /// Normalized class-frequency vector over the full class range.
        freqs: Vec<f64>,
    },
}

impl Node {
    pub fn leaf_for<'a>(&'a self, x: &[f64]) -> &'a [f64] {
        match self {
            Node::Leaf { freqs, .. } => freqs,
            Node::Split {
                feature,
                threshold,
                left,
                right,
                ..
            } => {
                if x[*feature] <= *threshold {
                    left.leaf_for(x)
                } else {
                    right.leaf_for(x)
                }
            }
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            Node::Leaf { .. } => 0,
            Node::Split { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub root: Node,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomForestModel {
    pub trees: Vec<Tree>,
    pub n_continuous: usize,
    pub uses_ids: bool,
    pub n_classes: usize,
    pub range: ClassRange,
    pub prob_floor: f64,
}

/// Maps a feature row onto the forest's input vector: the continuous features
/// plus, when identity features are in play, the three codes as numeric
/// columns.
pub fn encode(
    row: &FeatureRow,
    n_continuous: usize,
    uses_ids: bool,
) -> Result<Vec<f64>, ForestError> {
    if row.features.len() != n_continuous {
        return Err(ForestError::FeatureDimensionMismatch {
            expected: n_continuous,
            got: row.features.len(),
        });
    }
    let mut x = row.features.clone();
    if uses_ids {
        let ids = row.ids.ok_or(ForestError::FeatureDimensionMismatch {
            expected: n_continuous + 3,
            got: n_continuous,
        })?;
        x.push(ids.home as f64);
        x.push(ids.away as f64);
        x.push(ids.season as f64);
    }
    Ok(x)
}

pub fn train(
    rows: &[&FeatureRow],
    target: Target,
    n_continuous: usize,
    uses_ids: bool,
    config: &RfConfig,
) -> Result<RandomForestModel, ForestError> {
    if rows.len() < config.min_samples_split {
        return Err(ForestError::TooFewRows {
            have: rows.len(),
            need: config.min_samples_split,
        });
    }
    let range = target.class_range();
    let n_classes = range.len();
    let xs: Vec<Vec<f64>> = rows
        .iter()
        .map(|r| encode(r, n_continuous, uses_ids))
        .collect::<Result<_, _>>()?;
    let ys: Vec<usize> = rows
        .iter()
        .map(|r| {
            range
                .index(r.label(target))
                .expect("labels are clipped into the class range")
        })
        .collect();

    let n = xs.len();
    let trees = (0..config.n_trees)
        .map(|t| {
            let mut rng = ChaCha12Rng::seed_from_u64(derive_seed(config.seed, t as u64));
            let sample: Vec<usize> = (0..n).map(|_| rng.gen_range(0..n)).collect();
            Tree {
                root: build_node(&xs, &ys, sample, n_classes, 0, config),
            }
        })
        .collect();

    Ok(RandomForestModel {
        trees,
        n_continuous,
        uses_ids,
        n_classes,
        range,
        prob_floor: config.prob_floor,
    })
}

fn class_counts(ys: &[usize], indices: &[usize], n_classes: usize) -> Vec<usize> {
    let mut counts = vec![0usize; n_classes];
    for &i in indices {
        counts[ys[i]] += 1;
    }
    counts
}

fn leaf(counts: &[usize], n_samples: usize) -> Node {
    let freqs = counts
        .iter()
        .map(|&c| c as f64 / n_samples as f64)
        .collect();
    Node::Leaf { n_samples, freqs }
}

fn sum_sq(counts: &[usize]) -> f64 {
    counts.iter().map(|&c| (c * c) as f64).sum()
}

struct BestSplit {
    feature: usize,
    threshold: f64,
    score: f64,
}

fn build_node(
    xs: &[Vec<f64>],
    ys: &[usize],
    indices: Vec<usize>,
    n_classes: usize,
    depth: usize,
    config: &RfConfig,
) -> Node {
    let n = indices.len();
    let counts = class_counts(ys, &indices, n_classes);
    let pure = counts.iter().any(|&c| c == n);
    if depth >= config.max_depth || n < config.min_samples_split || pure {
        return leaf(&counts, n);
    }

    // Gini minimization is equivalent to maximizing
    // ssq_left/n_left + ssq_right/n_right, which updates in O(1) per sample.
    let parent_score = sum_sq(&counts) / n as f64;
    let n_features = xs[indices[0]].len();
    let mut best: Option<BestSplit> = None;

    let mut sorted = indices.clone();
    for feature in 0..n_features {
        sorted.sort_unstable_by(|&a, &b| {
            xs[a][feature]
                .partial_cmp(&xs[b][feature])
                .expect("feature values are finite")
        });
        let mut left_counts = vec![0usize; n_classes];
        let mut ssq_left = 0.0;
        let mut ssq_right = sum_sq(&counts);
        let mut right_counts = counts.clone();
        for k in 0..n - 1 {
            let class = ys[sorted[k]];
            ssq_left += (2 * left_counts[class] + 1) as f64;
            left_counts[class] += 1;
            ssq_right -= (2 * right_counts[class] - 1) as f64;
            right_counts[class] -= 1;

            let v = xs[sorted[k]][feature];
            let next = xs[sorted[k + 1]][feature];
            if next <= v {
                continue;
            }
            let n_left = (k + 1) as f64;
            let n_right = (n - k - 1) as f64;
            let score = ssq_left / n_left + ssq_right / n_right;
            if score > parent_score + 1e-12
                && best.as_ref().map_or(true, |b| score > b.score)
            {
                // The midpoint of two adjacent floats can round up onto the
                // right value, which would leave that side empty under the
                // `x <= threshold` routing; fall back to the left value.
                let mut threshold = (v + next) / 2.0;
                if threshold >= next {
                    threshold = v;
                }
                best = Some(BestSplit {
                    feature,
                    threshold,
                    score,
                });
            }
        }
    }

    let Some(split) = best else {
        return leaf(&counts, n);
    };

    let (left_idx, right_idx): (Vec<usize>, Vec<usize>) = indices
        .into_iter()
        .partition(|&i| xs[i][split.feature] <= split.threshold);
    Node::Split {
        feature: split.feature,
        threshold: split.threshold,
        n_samples: n,
        left: Box::new(build_node(xs, ys, left_idx, n_classes, depth + 1, config)),
        right: Box::new(build_node(xs, ys, right_idx, n_classes, depth + 1, config)),
    }
}

impl RandomForestModel {
    /// Averages the leaf frequency vectors of all trees, floors and
    /// renormalizes.
    pub fn predict(&self, row: &FeatureRow) -> Result<OutcomeDistribution, ForestError> {
        let x = encode(row, self.n_continuous, self.uses_ids)?;
        let mut probs = vec![0.0; self.n_classes];
        for tree in &self.trees {
            for (p, f) in probs.iter_mut().zip(tree.root.leaf_for(&x)) {
                *p += f;
            }
        }
        let n_trees = self.trees.len() as f64;
        for p in &mut probs {
            *p /= n_trees;
        }
        let mut dist = OutcomeDistribution {
            range: self.range,
            probs,
        };
        dist.floor_and_renormalize(self.prob_floor);
        Ok(dist)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::PairwiseFeatures;
    use alloc::string::ToString;
    use approx::assert_abs_diff_eq;

    fn row(features: Vec<f64>, label_diff: i32) -> FeatureRow {
        FeatureRow {
            league: "L".to_string(),
            season: "S".to_string(),
            round: 1,
            home_team: "A".to_string(),
            away_team: "B".to_string(),
            home_goals: 0,
            away_goals: 0,
            features,
            pairwise: PairwiseFeatures {
                x_dg_ab: 0.0,
                x_sg_ab: 0.0,
            },
            label_diff,
            label_total: 0,
            ids: None,
        }
    }

    /// Rows where the sign of the single feature determines the label.
    fn separable_rows(n: usize) -> Vec<FeatureRow> {
        let mut rng = ChaCha12Rng::seed_from_u64(99);
        (0..n)
            .map(|_| {
                let x = rng.gen::<f64>() * 2.0 - 1.0;
                row(vec![x], if x < 0.0 { -2 } else { 3 })
            })
            .collect()
    }

    fn noisy_rows(n: usize) -> Vec<FeatureRow> {
        let mut rng = ChaCha12Rng::seed_from_u64(4);
        (0..n)
            .map(|_| {
                let a = rng.gen::<f64>() * 2.0 - 1.0;
                let b = rng.gen::<f64>() * 2.0 - 1.0;
                let label = ((a + b) * 3.0) as i32 + rng.gen_range(-1..=1);
                row(vec![a, b], label.clamp(-10, 10))
            })
            .collect()
    }

    #[test]
    fn separable_data_is_learned_perfectly() {
        let rows = separable_rows(1000);
        let refs: Vec<&FeatureRow> = rows.iter().collect();
        let model = train(&refs, Target::GoalDiff, 1, false, &RfConfig::default()).unwrap();
        for r in &rows {
            let dist = model.predict(r).unwrap();
            assert_eq!(dist.argmax_class(), r.label_diff);
        }
    }

    #[test]
    fn pure_training_set_gives_pure_leaves() {
        let rows: Vec<FeatureRow> = (0..64)
            .map(|i| row(vec![i as f64], 4))
            .collect();
        let refs: Vec<&FeatureRow> = rows.iter().collect();
        let model = train(&refs, Target::GoalDiff, 1, false, &RfConfig::default()).unwrap();
        let dist = model.predict(&rows[10]).unwrap();
        assert_eq!(dist.argmax_class(), 4);
        assert!(dist.prob_of_class(4).unwrap() > 0.999);
    }

    #[test]
    fn node_below_min_samples_is_never_split() {
        let rows = separable_rows(31);
        let refs: Vec<&FeatureRow> = rows.iter().collect();
        assert!(matches!(
            train(&refs, Target::GoalDiff, 1, false, &RfConfig::default()),
            Err(ForestError::TooFewRows { .. })
        ));

        // 40 rows: root may split, but any child with < 32 samples must be a
        // leaf; with a perfect split at 0 both children are small.
        let rows = separable_rows(40);
        let refs: Vec<&FeatureRow> = rows.iter().collect();
        let model = train(&refs, Target::GoalDiff, 1, false, &RfConfig::default()).unwrap();
        for tree in &model.trees {
            if let Node::Split { left, right, .. } = &tree.root {
                assert!(matches!(**left, Node::Leaf { .. }));
                assert!(matches!(**right, Node::Leaf { .. }));
            }
        }
    }

    /// Independent structural walk used as an oracle for the invariants.
    fn check_structure(node: &Node, depth: usize, min_split: usize, max_depth: usize) {
        match node {
            Node::Leaf { n_samples, freqs } => {
                assert!(*n_samples > 0, "empty leaf");
                assert!(freqs.iter().all(|f| f.is_finite()));
            }
            Node::Split {
                n_samples,
                left,
                right,
                ..
            } => {
                assert!(*n_samples >= min_split, "split node with {n_samples} samples");
                assert!(depth < max_depth, "split below maximum depth");
                check_structure(left, depth + 1, min_split, max_depth);
                check_structure(right, depth + 1, min_split, max_depth);
            }
        }
    }

    #[test]
    fn adjacent_float_values_never_create_empty_children() {
        // Feature values one ulp apart: the naive midpoint equals the larger
        // value, which must not produce an empty right child.
        let lo = 0.42424242424242425f64;
        let hi = f64::from_bits(lo.to_bits() + 1);
        let mut rows = Vec::new();
        for i in 0..40 {
            rows.push(row(vec![if i % 2 == 0 { lo } else { hi }], if i % 2 == 0 { -1 } else { 1 }));
        }
        let refs: Vec<&FeatureRow> = rows.iter().collect();
        let model = train(&refs, Target::GoalDiff, 1, false, &RfConfig::default()).unwrap();
        for tree in &model.trees {
            check_structure(&tree.root, 0, 32, 4);
        }
        for r in rows.iter().take(4) {
            let dist = model.predict(r).unwrap();
            assert!(dist.probs.iter().all(|p| p.is_finite()));
        }
    }

    #[test]
    fn structural_invariants_hold_on_noisy_data() {
        let rows = noisy_rows(500);
        let refs: Vec<&FeatureRow> = rows.iter().collect();
        let config = RfConfig::default();
        let model = train(&refs, Target::GoalDiff, 2, false, &config).unwrap();
        assert_eq!(model.trees.len(), 100);
        for tree in &model.trees {
            check_structure(&tree.root, 0, config.min_samples_split, config.max_depth);
            assert!(tree.root.depth() <= config.max_depth);
        }
    }

    #[test]
    fn prediction_matches_independent_tree_walk() {
        let rows = noisy_rows(300);
        let refs: Vec<&FeatureRow> = rows.iter().collect();
        let model = train(&refs, Target::GoalDiff, 2, false, &RfConfig::default()).unwrap();

        // Re-walk all trees iteratively instead of recursively.
        let walk = |node: &Node, x: &[f64]| -> Vec<f64> {
            let mut current = node;
            loop {
                match current {
                    Node::Leaf { freqs, .. } => return freqs.clone(),
                    Node::Split {
                        feature,
                        threshold,
                        left,
                        right,
                        ..
                    } => {
                        current = if x[*feature] <= *threshold { left } else { right };
                    }
                }
            }
        };
        for r in rows.iter().take(25) {
            let x = encode(r, 2, false).unwrap();
            let mut mean = vec![0.0; 21];
            for tree in &model.trees {
                for (m, f) in mean.iter_mut().zip(walk(&tree.root, &x)) {
                    *m += f;
                }
            }
            for m in &mut mean {
                *m /= model.trees.len() as f64;
            }
            let mut expected = OutcomeDistribution {
                range: ClassRange::goal_diff(),
                probs: mean,
            };
            expected.floor_and_renormalize(model.prob_floor);
            let got = model.predict(r).unwrap();
            for (g, e) in got.probs.iter().zip(&expected.probs) {
                assert_abs_diff_eq!(g, e, epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn identical_trees_average_to_single_tree() {
        let rows = noisy_rows(200);
        let refs: Vec<&FeatureRow> = rows.iter().collect();
        let config = RfConfig {
            n_trees: 1,
            ..RfConfig::default()
        };
        let single = train(&refs, Target::GoalDiff, 2, false, &config).unwrap();
        let mut tripled = single.clone();
        tripled.trees = vec![
            single.trees[0].clone(),
            single.trees[0].clone(),
            single.trees[0].clone(),
        ];
        for r in rows.iter().take(10) {
            let a = single.predict(r).unwrap();
            let b = tripled.predict(r).unwrap();
            for (x, y) in a.probs.iter().zip(&b.probs) {
                assert_abs_diff_eq!(x, y, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn predictions_are_normalized_and_positive() {
        let rows = noisy_rows(400);
        let refs: Vec<&FeatureRow> = rows.iter().collect();
        let model = train(&refs, Target::GoalDiff, 2, false, &RfConfig::default()).unwrap();
        for r in rows.iter().take(40) {
            let dist = model.predict(r).unwrap();
            assert_abs_diff_eq!(dist.sum(), 1.0, epsilon = 1e-9);
            assert!(dist.probs.iter().all(|&p| p > 0.0));
        }
    }

    #[test]
    fn training_is_deterministic_given_seed() {
        let rows = noisy_rows(200);
        let refs: Vec<&FeatureRow> = rows.iter().collect();
        let a = train(&refs, Target::GoalDiff, 2, false, &RfConfig::default()).unwrap();
        let b = train(&refs, Target::GoalDiff, 2, false, &RfConfig::default()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn id_codes_become_numeric_columns() {
        let mut r = row(vec![0.5], 0);
        r.ids = Some(crate::features::IdFeatures {
            home: 3,
            away: 1,
            season: 0,
        });
        assert_eq!(encode(&r, 1, true).unwrap(), vec![0.5, 3.0, 1.0, 0.0]);
        assert!(encode(&row(vec![0.5], 0), 1, true).is_err());
    }
}
