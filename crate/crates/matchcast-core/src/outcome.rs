//! Outcome classes and probability distributions over them.
//!
//! Predictions are distributions over an ordered integer class range:
//! goal differences from −10 to +10 (21 classes, home perspective) or total
//! goals from 0 to 16 (17 classes). Out-of-range outcomes are clipped onto
//! the boundary classes so no probability mass is lost.

use alloc::vec;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

/// Prediction target: goal difference or total number of goals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Target {
    GoalDiff,
    TotalGoals,
}

impl Target {
    pub fn class_range(self) -> ClassRange {
        match self {
            Target::GoalDiff => ClassRange::goal_diff(),
            Target::TotalGoals => ClassRange::total_goals(),
        }
    }

    /// Clipped class label for a played match, home perspective.
    pub fn label(self, home_goals: u32, away_goals: u32) -> i32 {
        let raw = match self {
            Target::GoalDiff => home_goals as i64 - away_goals as i64,
            Target::TotalGoals => home_goals as i64 + away_goals as i64,
        };
        self.class_range().clip(raw)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Target::GoalDiff => "diff",
            Target::TotalGoals => "total",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "diff" => Some(Target::GoalDiff),
            "total" => Some(Target::TotalGoals),
            _ => None,
        }
    }
}

/// Inclusive, contiguous range of integer outcome classes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassRange {
    pub min: i32,
    pub max: i32,
}

impl ClassRange {
    pub fn goal_diff() -> Self {
        ClassRange { min: -10, max: 10 }
    }

    pub fn total_goals() -> Self {
        ClassRange { min: 0, max: 16 }
    }

    pub fn len(&self) -> usize {
        (self.max - self.min + 1) as usize
    }

    pub fn is_empty(&self) -> bool {
        self.max < self.min
    }

    /// Index of a class within the range, or `None` if it falls outside.
    pub fn index(&self, class: i32) -> Option<usize> {
        if class < self.min || class > self.max {
            None
        } else {
            Some((class - self.min) as usize)
        }
    }

    pub fn class_at(&self, index: usize) -> i32 {
        self.min + index as i32
    }

    /// Clips an out-of-range value onto the nearest boundary class.
    pub fn clip(&self, value: i64) -> i32 {
        value.clamp(self.min as i64, self.max as i64) as i32
    }

    pub fn classes(&self) -> impl Iterator<Item = i32> {
        self.min..=self.max
    }
}

/// Normalized probability vector over an ordered class range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutcomeDistribution {
    pub range: ClassRange,
    pub probs: Vec<f64>,
}

impl OutcomeDistribution {
    /// Builds a distribution from raw non-negative weights, normalizing them.
    /// Panics if the weight vector length does not match the range or the
    /// total weight is not positive.
    pub fn from_weights(range: ClassRange, weights: Vec<f64>) -> Self {
        assert_eq!(weights.len(), range.len(), "weight vector length mismatch");
        let total: f64 = weights.iter().sum();
        assert!(total > 0.0, "total weight must be positive");
        let probs = weights.iter().map(|w| w / total).collect();
        OutcomeDistribution { range, probs }
    }

    pub fn uniform(range: ClassRange) -> Self {
        let n = range.len();
        OutcomeDistribution {
            range,
            probs: vec![1.0 / n as f64; n],
        }
    }

    pub fn prob_of_class(&self, class: i32) -> Option<f64> {
        self.range.index(class).map(|i| self.probs[i])
    }

    /// Most probable class. Ties are broken toward the class with the
    /// smallest absolute value, negative before positive, so the choice is
    /// reproducible across runs.
    pub fn argmax_class(&self) -> i32 {
        let mut best = self.range.class_at(0);
        let mut best_p = self.probs[0];
        for (i, &p) in self.probs.iter().enumerate().skip(1) {
            let class = self.range.class_at(i);
            if p > best_p || (p == best_p && tie_rank(class) < tie_rank(best)) {
                best = class;
                best_p = p;
            }
        }
        best
    }

    /// Applies a probability floor and renormalizes; keeps cross entropy
    /// finite when a class was never observed.
    pub fn floor_and_renormalize(&mut self, floor: f64) {
        for p in &mut self.probs {
            if *p < floor {
                *p = floor;
            }
        }
        let total: f64 = self.probs.iter().sum();
        for p in &mut self.probs {
            *p /= total;
        }
    }

    pub fn sum(&self) -> f64 {
        self.probs.iter().sum()
    }
}

/// Tie-break key: smaller |class| wins, negative before positive on equal magnitude.
fn tie_rank(class: i32) -> (i32, i32) {
    (class.abs(), if class < 0 { 0 } else { 1 })
}
