//! Scoring rules for probabilistic class predictions.
//!
//! Cross entropy is the negative natural log of the probability assigned to
//! the realized class (nats). The ranked probability score compares the
//! cumulative predicted and true distributions over the ordered classes, so
//! mass near the true class scores better than the same mass far away.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use serde::{Deserialize, Serialize};

use crate::outcome::{ClassRange, OutcomeDistribution};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MetricError {
    ClassOutOfRange { class: i32 },
    ZeroProbability { class: i32 },
}

impl fmt::Display for MetricError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MetricError::ClassOutOfRange { class } => {
                write!(f, "class {class} is outside the prediction's range")
            }
            MetricError::ZeroProbability { class } => {
                write!(f, "prediction assigns zero probability to class {class}")
            }
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for MetricError {}

/// An aggregated metric with its sample count and standard error.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricValue {
    pub name: String,
    pub value: f64,
    pub n: usize,
    pub std_err: f64,
}

impl MetricValue {
    /// Mean and standard error of a set of per-fold means. With fewer than
    /// two folds the standard error is reported as zero.
    pub fn from_fold_means(name: &str, fold_means: &[f64]) -> Self {
        let n = fold_means.len();
        let mean = fold_means.iter().sum::<f64>() / n as f64;
        let std_err = if n > 1 {
            let var = fold_means
                .iter()
                .map(|m| (m - mean) * (m - mean))
                .sum::<f64>()
                / (n as f64 - 1.0);
            libm::sqrt(var / n as f64)
        } else {
            0.0
        };
        MetricValue {
            name: String::from(name),
            value: mean,
            n,
            std_err,
        }
    }
}

/// Negative natural log of the probability assigned to the true class.
pub fn cross_entropy(
    predicted: &OutcomeDistribution,
    true_class: i32,
) -> Result<f64, MetricError> {
    let q = predicted
        .prob_of_class(true_class)
        .ok_or(MetricError::ClassOutOfRange { class: true_class })?;
    if q <= 0.0 {
        return Err(MetricError::ZeroProbability { class: true_class });
    }
    Ok(-libm::log(q))
}

/// Ranked probability score against the one-hot true distribution, normalized
/// by the number of classes minus one.
pub fn rps(predicted: &OutcomeDistribution, true_class: i32) -> Result<f64, MetricError> {
    let true_index = predicted
        .range
        .index(true_class)
        .ok_or(MetricError::ClassOutOfRange { class: true_class })?;
    let n_classes = predicted.range.len();
    let mut cum_q = 0.0;
    let mut cum_p = 0.0;
    let mut total = 0.0;
    for (i, &q) in predicted.probs.iter().enumerate() {
        cum_q += q;
        if i >= true_index {
            cum_p = 1.0;
        }
        let d = cum_q - cum_p;
        total += d * d;
    }
    Ok(total / (n_classes as f64 - 1.0))
}

/// Counts of (predicted argmax class, true class) pairs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub range: ClassRange,
    /// Row-major: `counts[pred_index * n + true_index]`.
    pub counts: Vec<u64>,
}

impl ConfusionMatrix {
    pub fn new(range: ClassRange) -> Self {
        let n = range.len();
        ConfusionMatrix {
            range,
            counts: vec![0; n * n],
        }
    }

    pub fn record(&mut self, predicted: i32, truth: i32) -> Result<(), MetricError> {
        let p = self
            .range
            .index(predicted)
            .ok_or(MetricError::ClassOutOfRange { class: predicted })?;
        let t = self
            .range
            .index(truth)
            .ok_or(MetricError::ClassOutOfRange { class: truth })?;
        self.counts[p * self.range.len() + t] += 1;
        Ok(())
    }

    pub fn get(&self, predicted: i32, truth: i32) -> u64 {
        let n = self.range.len();
        self.counts[self.range.index(predicted).unwrap() * n
            + self.range.index(truth).unwrap()]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Classes that were predicted at least once.
    pub fn predicted_classes(&self) -> Vec<i32> {
        let n = self.range.len();
        (0..n)
            .filter(|&p| (0..n).any(|t| self.counts[p * n + t] > 0))
            .map(|p| self.range.class_at(p))
            .collect()
    }

    pub fn merge(&mut self, other: &ConfusionMatrix) {
        debug_assert_eq!(self.range, other.range);
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
    }
}

/// Tallies a list of (predicted, true) class pairs.
pub fn confusion_matrix(
    pairs: &[(i32, i32)],
    range: ClassRange,
) -> Result<ConfusionMatrix, MetricError> {
    let mut matrix = ConfusionMatrix::new(range);
    for &(pred, truth) in pairs {
        matrix.record(pred, truth)?;
    }
    Ok(matrix)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::outcome::Target;
    use approx::assert_abs_diff_eq;

    fn dist(range: ClassRange, pairs: &[(i32, f64)]) -> OutcomeDistribution {
        let mut probs = vec![0.0; range.len()];
        for &(class, p) in pairs {
            probs[range.index(class).unwrap()] = p;
        }
        OutcomeDistribution { range, probs }
    }

    #[test]
    fn cross_entropy_hand_values() {
        let r = Target::GoalDiff.class_range();
        let perfect = dist(r, &[(2, 1.0)]);
        assert_eq!(cross_entropy(&perfect, 2).unwrap(), 0.0);

        let uniform = OutcomeDistribution::uniform(r);
        assert_abs_diff_eq!(
            cross_entropy(&uniform, 0).unwrap(),
            21.0f64.ln(),
            epsilon = 1e-12
        );

        let quarter = dist(r, &[(1, 0.25), (0, 0.75)]);
        assert_abs_diff_eq!(
            cross_entropy(&quarter, 1).unwrap(),
            4.0f64.ln(),
            epsilon = 1e-12
        );
    }

    #[test]
    fn cross_entropy_error_cases() {
        let r = Target::GoalDiff.class_range();
        let d = dist(r, &[(0, 1.0)]);
        assert!(matches!(
            cross_entropy(&d, 11),
            Err(MetricError::ClassOutOfRange { class: 11 })
        ));
        assert!(matches!(
            cross_entropy(&d, 1),
            Err(MetricError::ZeroProbability { class: 1 })
        ));
    }

    #[test]
    fn rps_hand_example_three_classes() {
        // Three classes, q = (0.5, 0.3, 0.2), truth = first class:
        // ((0.5-1)^2 + (0.8-1)^2 + 0) / 2 = 0.145.
        let range = ClassRange { min: 0, max: 2 };
        let d = OutcomeDistribution {
            range,
            probs: vec![0.5, 0.3, 0.2],
        };
        assert_abs_diff_eq!(rps(&d, 0).unwrap(), 0.145, epsilon = 1e-12);
    }

    #[test]
    fn rps_rewards_mass_near_the_truth() {
        let range = ClassRange { min: 0, max: 2 };
        let adjacent = OutcomeDistribution {
            range,
            probs: vec![0.0, 1.0, 0.0],
        };
        let far = OutcomeDistribution {
            range,
            probs: vec![0.0, 0.0, 1.0],
        };
        // Adjacent mass: only the first cumulative term differs, (0-1)^2/2.
        let near_score = rps(&adjacent, 0).unwrap();
        let far_score = rps(&far, 0).unwrap();
        assert_abs_diff_eq!(near_score, 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(far_score, 1.0, epsilon = 1e-12);
        assert!(near_score < far_score);
    }

    #[test]
    fn rps_is_zero_only_for_one_hot_truth() {
        let r = Target::GoalDiff.class_range();
        let perfect = dist(r, &[(3, 1.0)]);
        assert_abs_diff_eq!(rps(&perfect, 3).unwrap(), 0.0, epsilon = 1e-15);
        let off = dist(r, &[(3, 0.9), (4, 0.1)]);
        assert!(rps(&off, 3).unwrap() > 0.0);
    }

    #[test]
    fn rps_final_cumulative_term_is_redundant() {
        // Both cumulative sums reach 1 at the last class, so including or
        // dropping the final term changes nothing.
        let r = Target::TotalGoals.class_range();
        let d = dist(r, &[(0, 0.2), (2, 0.5), (5, 0.3)]);
        let full = rps(&d, 2).unwrap();
        let mut cum_q = 0.0;
        let mut cum_p;
        let mut truncated = 0.0;
        let true_index = r.index(2).unwrap();
        for i in 0..r.len() - 1 {
            cum_q += d.probs[i];
            cum_p = if i >= true_index { 1.0 } else { 0.0 };
            truncated += (cum_q - cum_p) * (cum_q - cum_p);
        }
        truncated /= r.len() as f64 - 1.0;
        assert_abs_diff_eq!(full, truncated, epsilon = 1e-12);
    }

    #[test]
    fn confusion_matrix_counts_and_totals() {
        let r = Target::GoalDiff.class_range();
        let pairs = vec![(0, 0), (1, 1), (0, 1), (1, 0), (0, 0)];
        let m = confusion_matrix(&pairs, r).unwrap();
        assert_eq!(m.total(), 5);
        assert_eq!(m.get(0, 0), 2);
        assert_eq!(m.get(0, 1), 1);
        assert_eq!(m.get(1, 0), 1);
        assert_eq!(m.get(1, 1), 1);

        // Brute-force tally oracle.
        for p in r.classes() {
            for t in r.classes() {
                let want = pairs.iter().filter(|&&(a, b)| a == p && b == t).count() as u64;
                assert_eq!(m.get(p, t), want);
            }
        }
    }

    #[test]
    fn all_correct_predictions_are_diagonal() {
        let r = Target::TotalGoals.class_range();
        let pairs: Vec<(i32, i32)> = (0..=16).map(|c| (c, c)).collect();
        let m = confusion_matrix(&pairs, r).unwrap();
        for p in r.classes() {
            for t in r.classes() {
                assert_eq!(m.get(p, t), u64::from(p == t));
            }
        }
    }

    #[test]
    fn fold_mean_aggregation() {
        let v = MetricValue::from_fold_means("cross_entropy", &[2.0, 2.2, 1.8, 2.0]);
        assert_abs_diff_eq!(v.value, 2.0, epsilon = 1e-12);
        // Sample sd of the means is sqrt(0.08/3); se divides by sqrt(4).
        assert_abs_diff_eq!(
            v.std_err,
            (0.08f64 / 3.0).sqrt() / 2.0,
            epsilon = 1e-12
        );
        let single = MetricValue::from_fold_means("rps", &[0.5]);
        assert_eq!(single.std_err, 0.0);
    }
}
