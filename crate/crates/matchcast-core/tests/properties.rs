//! Property tests over the numeric invariants.

use matchcast_core::features::{combine, RateVector};
use matchcast_core::metrics::{cross_entropy, rps};
use matchcast_core::outcome::{ClassRange, OutcomeDistribution, Target};
use matchcast_core::poisson::{marginalize_diff, marginalize_total, poisson_pmf, score_grid};
use proptest::prelude::*;

fn arb_rates() -> impl Strategy<Value = RateVector> {
    (0.0..4.0f64, 0.0..4.0f64, 0.0..4.0f64, 0.0..4.0f64).prop_map(|(a, b, c, d)| RateVector {
        x_plus_a: a,
        x_minus_a: b,
        x_plus_b: c,
        x_minus_b: d,
    })
}

fn arb_distribution(range: ClassRange) -> impl Strategy<Value = OutcomeDistribution> {
    proptest::collection::vec(1e-9..1.0f64, range.len())
        .prop_map(move |w| OutcomeDistribution::from_weights(range, w))
}

proptest! {
    /// The rate combinations are exactly invertible: x± reconstruct from
    /// (x_sg ± x_dg)/2 up to one ulp of the intermediate sums.
    #[test]
    fn combine_is_exactly_invertible(rates in arb_rates(), mean_goals in 0.5..5.0f64) {
        let c = combine(&rates, mean_goals);
        let x_plus = (c.x_sg_a + c.x_dg_a) / 2.0;
        let x_minus = (c.x_sg_a - c.x_dg_a) / 2.0;
        // Two roundings (a+b and a-b), then an exact halving: the error is
        // bounded by one ulp at the magnitude of the sums.
        let ulp = c.x_sg_a.abs().max(c.x_dg_a.abs()) * f64::EPSILON;
        prop_assert!((x_plus - rates.x_plus_a).abs() <= ulp);
        prop_assert!((x_minus - rates.x_minus_a).abs() <= ulp);
        // Pairwise identities hold exactly as written.
        prop_assert_eq!(c.x_dg_ab, c.x_dg_a - c.x_dg_b);
        prop_assert_eq!(c.x_sg_ab, c.x_sg_a + c.x_sg_b - mean_goals);
    }

    /// Marginals of any truncated score grid are valid distributions.
    #[test]
    fn score_marginals_are_normalized(
        lambda_home in 0.05..5.0f64,
        lambda_away in 0.05..5.0f64,
        g_max in 10usize..30,
    ) {
        let sd = score_grid(lambda_home, lambda_away, g_max);
        let diff = marginalize_diff(&sd);
        let total = marginalize_total(&sd);
        prop_assert!((diff.sum() - 1.0).abs() < 1e-9);
        prop_assert!((total.sum() - 1.0).abs() < 1e-9);
        prop_assert!(diff.probs.iter().all(|&p| p >= 0.0));
        prop_assert!(total.probs.iter().all(|&p| p >= 0.0));
    }

    /// The pmf never exceeds 1 and sums to 1 over a generous support.
    #[test]
    fn pmf_is_a_distribution(lambda in 0.05..8.0f64) {
        let total: f64 = (0..=80).map(|g| poisson_pmf(lambda, g).unwrap()).sum();
        prop_assert!((total - 1.0).abs() < 1e-10);
    }

    /// RPS is bounded by [0, 1] and zero only for the one-hot truth.
    #[test]
    fn rps_is_bounded(dist in arb_distribution(ClassRange::goal_diff()), class in -10i32..=10) {
        let score = rps(&dist, class).unwrap();
        prop_assert!(score >= 0.0);
        prop_assert!(score <= 1.0 + 1e-12);
        // Random weight vectors are never exactly one-hot.
        prop_assert!(score > 0.0);
    }

    /// Cross entropy is non-negative and matches -ln q directly.
    #[test]
    fn cross_entropy_matches_definition(
        dist in arb_distribution(ClassRange::total_goals()),
        class in 0i32..=16,
    ) {
        let ce = cross_entropy(&dist, class).unwrap();
        prop_assert!(ce >= 0.0);
        let q = dist.prob_of_class(class).unwrap();
        prop_assert!((ce - (-q.ln())).abs() < 1e-12);
    }

    /// Labels always land inside the class ranges.
    #[test]
    fn labels_are_always_in_range(hg in 0u32..30, ag in 0u32..30) {
        let d = Target::GoalDiff.label(hg, ag);
        let t = Target::TotalGoals.label(hg, ag);
        prop_assert!(Target::GoalDiff.class_range().index(d).is_some());
        prop_assert!(Target::TotalGoals.class_range().index(t).is_some());
    }

    /// One-hot predictions score zero RPS exactly.
    #[test]
    fn one_hot_truth_has_zero_rps(class in -10i32..=10) {
        let range = ClassRange::goal_diff();
        let mut probs = vec![0.0; range.len()];
        probs[range.index(class).unwrap()] = 1.0;
        let dist = OutcomeDistribution { range, probs };
        prop_assert_eq!(rps(&dist, class).unwrap(), 0.0);
        prop_assert_eq!(cross_entropy(&dist, class).unwrap(), 0.0);
    }
}
