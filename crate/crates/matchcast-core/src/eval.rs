//! Matchday cross-validation.
//!
//! The evaluation matches are partitioned by scheduled round: each round acts
//! as the test set once while the model trains on everything else, so every
//! match is predicted exactly once. Metrics aggregate as the mean of fold
//! means with the standard error taken over folds. Optionally a seeded draw
//! first sets aside five (league, season) pairs as a hyperparameter holdout
//! that never enters the folds.
//!
//! By default a training match's features exclude only the match itself, so
//! results from the test round can enter training-feature averages — the
//! feature design is deliberately order-agnostic. Strict leakage mode
//! additionally removes the whole test round from every feature average.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::data::SeasonDataset;
use crate::features::{
    build_feature_table, build_feature_table_excluding, FeatureError, FeatureRow, FeatureSetSpec,
    FeatureTable,
};
use crate::metrics::{
    cross_entropy, rps, ConfusionMatrix, MetricError, MetricValue,
};
use crate::model::{
    standardize_rows, train_model, BaseModel, ModelConfig, ModelError,
};
use crate::outcome::{ClassRange, OutcomeDistribution, Target};
use crate::rng::derive_seed;

pub const HOLDOUT_SEASONS: usize = 5;

#[derive(Debug, Clone, PartialEq)]
pub enum EvalError {
    TooFewSeasons { have: usize, need: usize },
    NoFolds,
    Feature(FeatureError),
    Model(ModelError),
    Metric(MetricError),
    FoldFailed { round: u32, message: String },
}

impl fmt::Display for EvalError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EvalError::TooFewSeasons { have, need } => {
                write!(f, "{have} seasons available but {need} are required for a holdout")
            }
            EvalError::NoFolds => write!(f, "no matchday folds could be formed"),
            EvalError::Feature(e) => write!(f, "feature computation: {e}"),
            EvalError::Model(e) => write!(f, "{e}"),
            EvalError::Metric(e) => write!(f, "metric evaluation: {e}"),
            EvalError::FoldFailed { round, message } => {
                write!(f, "fold for round {round} failed: {message}")
            }
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for EvalError {}

impl From<FeatureError> for EvalError {
    fn from(e: FeatureError) -> Self {
        EvalError::Feature(e)
    }
}

impl From<ModelError> for EvalError {
    fn from(e: ModelError) -> Self {
        EvalError::Model(e)
    }
}

impl From<MetricError> for EvalError {
    fn from(e: MetricError) -> Self {
        EvalError::Metric(e)
    }
}

/// Harness options beyond the model and feature configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalOptions {
    /// Master seed; per-fold training seeds derive from it.
    pub seed: u64,
    /// When set, five seasons are drawn with this seed and kept out of the
    /// folds.
    pub holdout_seed: Option<u64>,
    /// Exclude the whole test round from all feature averages.
    pub strict_leakage: bool,
    /// Fit the base model per training fold instead of once on the
    /// evaluation dataset.
    pub per_fold_base: bool,
}

impl Default for EvalOptions {
    fn default() -> Self {
        EvalOptions {
            seed: 0,
            holdout_seed: None,
            strict_leakage: false,
            per_fold_base: false,
        }
    }
}

/// Fold layout: which seasons are evaluated and which rounds exist.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CvPlan {
    /// Indices into the caller's dataset slice.
    pub included: Vec<usize>,
    pub holdout: Vec<(String, String)>,
    /// Sorted distinct round numbers across the included seasons; leagues
    /// with fewer rounds simply stop contributing at their maximum.
    pub rounds: Vec<u32>,
}

/// Partitions the datasets into matchday folds, optionally drawing the
/// hyperparameter holdout first.
pub fn make_folds(
    datasets: &[&SeasonDataset],
    holdout_seed: Option<u64>,
) -> Result<CvPlan, EvalError> {
    let mut included: Vec<usize> = (0..datasets.len()).collect();
    let mut holdout = Vec::new();
    if let Some(seed) = holdout_seed {
        if datasets.len() < HOLDOUT_SEASONS + 1 {
            return Err(EvalError::TooFewSeasons {
                have: datasets.len(),
                need: HOLDOUT_SEASONS + 1,
            });
        }
        // Stable ordering before the seeded draw so the selection depends
        // only on the set of seasons, not on slice order.
        let mut order: Vec<usize> = (0..datasets.len()).collect();
        order.sort_by_key(|&i| datasets[i].key());
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        for i in 0..HOLDOUT_SEASONS {
            let j = rng.gen_range(i..order.len());
            order.swap(i, j);
        }
        let held: Vec<usize> = order[..HOLDOUT_SEASONS].to_vec();
        holdout = held.iter().map(|&i| datasets[i].key()).collect();
        holdout.sort();
        included.retain(|i| !held.contains(i));
    }

    let mut rounds: Vec<u32> = Vec::new();
    for &i in &included {
        for m in &datasets[i].matches {
            if let Err(pos) = rounds.binary_search(&m.round) {
                rounds.insert(pos, m.round);
            }
        }
    }
    if rounds.is_empty() {
        return Err(EvalError::NoFolds);
    }
    Ok(CvPlan {
        included,
        holdout,
        rounds,
    })
}

/// Result of evaluating one test round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldOutcome {
    pub round: u32,
    pub n_matches: usize,
    pub ce_sum: f64,
    pub rps_sum: f64,
    pub confusion: ConfusionMatrix,
    /// Sum of the predicted distributions over the fold's test matches.
    pub dist_sum: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldSummary {
    pub round: u32,
    pub n_matches: usize,
    pub cross_entropy: f64,
    pub rps: f64,
}

/// Everything that pins down a run; written next to the outputs so results
/// are attributable to an exact configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigFingerprint {
    pub model: String,
    pub features: String,
    pub target: String,
    pub seed: u64,
    pub holdout_seed: Option<u64>,
    pub home_adjust: bool,
    pub standardize: bool,
    pub strict_leakage: bool,
    pub per_fold_base: bool,
    pub fit_method: String,
    pub g_max: usize,
    pub lambda_floor: f64,
    pub prob_floor: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub model: String,
    pub features: String,
    pub target: String,
    /// Set when the report covers a single league.
    pub league: Option<String>,
    pub holdout_seasons: Vec<(String, String)>,
    pub n_matches: usize,
    pub cross_entropy: MetricValue,
    pub rps: MetricValue,
    pub folds: Vec<FoldSummary>,
    pub confusion: ConfusionMatrix,
    pub averaged_prediction: OutcomeDistribution,
    pub fingerprint: ConfigFingerprint,
}

/// A prepared cross-validation run. Folds are independent once this is
/// built: `run_fold` takes `&self`, so a caller may evaluate rounds in
/// parallel and pass the outcomes to [`CvRun::aggregate`]; the report is
/// identical to the sequential [`CvRun::run`].
pub struct CvRun<'a> {
    datasets: Vec<&'a SeasonDataset>,
    pub plan: CvPlan,
    table: FeatureTable,
    base: BaseModel,
    model_config: ModelConfig,
    feature_spec: FeatureSetSpec,
    target: Target,
    options: EvalOptions,
}

impl<'a> CvRun<'a> {
    pub fn new(
        datasets: &[&'a SeasonDataset],
        model_config: ModelConfig,
        feature_spec: FeatureSetSpec,
        target: Target,
        options: EvalOptions,
    ) -> Result<Self, EvalError> {
        let plan = make_folds(datasets, options.holdout_seed)?;
        let included: Vec<&SeasonDataset> =
            plan.included.iter().map(|&i| datasets[i]).collect();
        let table = build_feature_table(&included, &feature_spec)?;
        let refs: Vec<&FeatureRow> = table.rows.iter().collect();
        let base = BaseModel::fit(&refs, target, model_config.prob_floor);
        Ok(CvRun {
            datasets: included,
            plan,
            table,
            base,
            model_config,
            feature_spec,
            target,
            options,
        })
    }

    pub fn rounds(&self) -> &[u32] {
        &self.plan.rounds
    }

    pub fn table(&self) -> &FeatureTable {
        &self.table
    }

    pub fn base_model(&self) -> &BaseModel {
        &self.base
    }

    /// Trains on every other round and scores the test round.
    pub fn run_fold(&self, round: u32) -> Result<FoldOutcome, EvalError> {
        let strict_table;
        let rows: &[FeatureRow] = if self.options.strict_leakage {
            strict_table =
                build_feature_table_excluding(&self.datasets, &self.feature_spec, Some(round))?;
            &strict_table.rows
        } else {
            &self.table.rows
        };

        let mut train_idx = Vec::new();
        let mut test_idx = Vec::new();
        for (i, row) in rows.iter().enumerate() {
            if row.round == round {
                test_idx.push(i);
            } else {
                train_idx.push(i);
            }
        }
        if test_idx.is_empty() {
            return Err(EvalError::NoFolds);
        }

        let standardized;
        let rows: &[FeatureRow] = if self.feature_spec.standardize {
            standardized = standardize_rows(rows, &train_idx);
            &standardized
        } else {
            rows
        };

        let train_refs: Vec<&FeatureRow> = train_idx.iter().map(|&i| &rows[i]).collect();
        let fold_base = if self.options.per_fold_base {
            BaseModel::fit(&train_refs, self.target, self.model_config.prob_floor)
        } else {
            self.base.clone()
        };
        let fold_seed = derive_seed(self.options.seed, round as u64);
        let model = train_model(
            &self.model_config,
            &self.table,
            &train_refs,
            self.target,
            fold_seed,
            &fold_base,
        )?;

        let range = self.target.class_range();
        let mut outcome = FoldOutcome {
            round,
            n_matches: test_idx.len(),
            ce_sum: 0.0,
            rps_sum: 0.0,
            confusion: ConfusionMatrix::new(range),
            dist_sum: alloc::vec![0.0; range.len()],
        };
        for &i in &test_idx {
            let row = &rows[i];
            let dist = model.predict(row)?;
            let label = row.label(self.target);
            outcome.ce_sum += cross_entropy(&dist, label)?;
            outcome.rps_sum += rps(&dist, label)?;
            outcome.confusion.record(dist.argmax_class(), label)?;
            for (acc, p) in outcome.dist_sum.iter_mut().zip(&dist.probs) {
                *acc += p;
            }
        }
        Ok(outcome)
    }

    /// Combines fold outcomes into the report. Outcomes are sorted by round
    /// first, so the aggregation is identical however the folds were
    /// computed.
    pub fn aggregate(&self, mut outcomes: Vec<FoldOutcome>) -> CvReport {
        outcomes.sort_by_key(|o| o.round);
        let range = self.target.class_range();
        let ce_means: Vec<f64> = outcomes
            .iter()
            .map(|o| o.ce_sum / o.n_matches as f64)
            .collect();
        let rps_means: Vec<f64> = outcomes
            .iter()
            .map(|o| o.rps_sum / o.n_matches as f64)
            .collect();
        let folds: Vec<FoldSummary> = outcomes
            .iter()
            .zip(ce_means.iter().zip(&rps_means))
            .map(|(o, (&ce, &rp))| FoldSummary {
                round: o.round,
                n_matches: o.n_matches,
                cross_entropy: ce,
                rps: rp,
            })
            .collect();

        let mut confusion = ConfusionMatrix::new(range);
        for o in &outcomes {
            confusion.merge(&o.confusion);
        }
        let averaged_prediction = averaged_prediction(&outcomes, range);
        let n_matches = outcomes.iter().map(|o| o.n_matches).sum();

        CvReport {
            model: self.model_config.kind.as_str().to_string(),
            features: self.feature_spec.set.as_str().to_string(),
            target: self.target.as_str().to_string(),
            league: None,
            holdout_seasons: self.plan.holdout.clone(),
            n_matches,
            cross_entropy: MetricValue::from_fold_means("cross_entropy", &ce_means),
            rps: MetricValue::from_fold_means("rps", &rps_means),
            folds,
            confusion,
            averaged_prediction,
            fingerprint: ConfigFingerprint {
                model: self.model_config.kind.as_str().to_string(),
                features: self.feature_spec.set.as_str().to_string(),
                target: self.target.as_str().to_string(),
                seed: self.options.seed,
                holdout_seed: self.options.holdout_seed,
                home_adjust: self.feature_spec.home_adjust,
                standardize: self.feature_spec.standardize,
                strict_leakage: self.options.strict_leakage,
                per_fold_base: self.options.per_fold_base,
                fit_method: match self.model_config.poisson_method {
                    crate::poisson::FitMethod::LeastSquares => "least_squares".to_string(),
                    crate::poisson::FitMethod::PoissonMle => "poisson_mle".to_string(),
                },
                g_max: self.model_config.g_max,
                lambda_floor: self.model_config.lambda_floor,
                prob_floor: self.model_config.prob_floor,
            },
        }
    }

    /// Sequential full run.
    pub fn run(&self) -> Result<CvReport, EvalError> {
        let mut outcomes = Vec::with_capacity(self.plan.rounds.len());
        for &round in &self.plan.rounds {
            let outcome = self.run_fold(round).map_err(|e| EvalError::FoldFailed {
                round,
                message: format!("{e}"),
            })?;
            outcomes.push(outcome);
        }
        Ok(self.aggregate(outcomes))
    }
}

/// Mean predicted distribution over all test matches of the given folds.
pub fn averaged_prediction(outcomes: &[FoldOutcome], range: ClassRange) -> OutcomeDistribution {
    let n: usize = outcomes.iter().map(|o| o.n_matches).sum();
    let mut probs = alloc::vec![0.0; range.len()];
    for o in outcomes {
        for (acc, p) in probs.iter_mut().zip(&o.dist_sum) {
            *acc += p;
        }
    }
    for p in &mut probs {
        *p /= n as f64;
    }
    OutcomeDistribution { range, probs }
}

/// One whole-pipeline run.
pub fn run_cv(
    datasets: &[&SeasonDataset],
    model_config: ModelConfig,
    feature_spec: FeatureSetSpec,
    target: Target,
    options: EvalOptions,
) -> Result<CvReport, EvalError> {
    CvRun::new(datasets, model_config, feature_spec, target, options)?.run()
}

/// Independent cross-validation per league; each report carries its league
/// tag and its own base model.
pub fn per_league_cv(
    datasets: &[&SeasonDataset],
    model_config: ModelConfig,
    feature_spec: FeatureSetSpec,
    target: Target,
    options: EvalOptions,
) -> Result<Vec<CvReport>, EvalError> {
    let mut by_league: BTreeMap<&str, Vec<&SeasonDataset>> = BTreeMap::new();
    for ds in datasets {
        by_league.entry(ds.league.as_str()).or_default().push(ds);
    }
    let mut reports = Vec::with_capacity(by_league.len());
    for (league, group) in by_league {
        let mut report = run_cv(&group, model_config.clone(), feature_spec, target, options)?;
        report.league = Some(league.to_string());
        reports.push(report);
    }
    Ok(reports)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ModelKind;
    use crate::synth::{generate, GeneratorConfig};
    use approx::assert_abs_diff_eq;

    fn synth_datasets(n_teams: usize, n_seasons: usize, seed: u64) -> Vec<SeasonDataset> {
        let out = generate(&GeneratorConfig {
            n_teams,
            n_seasons,
            seed,
            ..GeneratorConfig::default()
        })
        .unwrap();
        crate::data::build_seasons(out.records).into_datasets()
    }

    #[test]
    fn single_season_folds_by_round() {
        let datasets = synth_datasets(18, 1, 1);
        let refs: Vec<&SeasonDataset> = datasets.iter().collect();
        let plan = make_folds(&refs, None).unwrap();
        assert_eq!(plan.rounds.len(), 34);
        assert!(plan.holdout.is_empty());
        assert_eq!(plan.included, alloc::vec![0]);
        // Each round holds n_teams/2 matches.
        for &round in &plan.rounds {
            let count = datasets[0]
                .matches
                .iter()
                .filter(|m| m.round == round)
                .count();
            assert_eq!(count, 9);
        }
    }

    #[test]
    fn holdout_selection_is_seeded_and_disjoint() {
        let datasets = synth_datasets(6, 8, 2);
        let refs: Vec<&SeasonDataset> = datasets.iter().collect();
        let a = make_folds(&refs, Some(9)).unwrap();
        let b = make_folds(&refs, Some(9)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.holdout.len(), 5);
        assert_eq!(a.included.len(), 3);
        for &i in &a.included {
            assert!(!a.holdout.contains(&datasets[i].key()));
        }
        let c = make_folds(&refs, Some(10)).unwrap();
        assert_ne!(a.holdout, c.holdout);
    }

    #[test]
    fn holdout_needs_six_seasons() {
        let datasets = synth_datasets(6, 5, 3);
        let refs: Vec<&SeasonDataset> = datasets.iter().collect();
        assert!(matches!(
            make_folds(&refs, Some(1)),
            Err(EvalError::TooFewSeasons { have: 5, need: 6 })
        ));
        assert!(make_folds(&refs, None).is_ok());
    }

    #[test]
    fn longer_league_owns_the_late_rounds() {
        let mut datasets = synth_datasets(18, 1, 4); // 34 rounds
        let big = generate(&GeneratorConfig {
            league: "BIG".to_string(),
            n_teams: 20, // 38 rounds
            seed: 5,
            ..GeneratorConfig::default()
        })
        .unwrap();
        datasets.extend(crate::data::build_seasons(big.records).into_datasets());
        let refs: Vec<&SeasonDataset> = datasets.iter().collect();
        let plan = make_folds(&refs, None).unwrap();
        assert_eq!(plan.rounds.len(), 38);

        let run = CvRun::new(
            &refs,
            ModelConfig::new(ModelKind::Base),
            FeatureSetSpec::new(crate::features::FeatureSet::PerTeamDiff),
            Target::GoalDiff,
            EvalOptions::default(),
        )
        .unwrap();
        let outcome = run.run_fold(38).unwrap();
        assert_eq!(outcome.n_matches, 10); // only the 20-team league plays round 38
    }

    #[test]
    fn base_model_cv_equals_whole_dataset_computation() {
        // Equal fold sizes make the fold-mean average equal to the direct
        // whole-dataset mean.
        let datasets = synth_datasets(10, 2, 6);
        let refs: Vec<&SeasonDataset> = datasets.iter().collect();
        let run = CvRun::new(
            &refs,
            ModelConfig::new(ModelKind::Base),
            FeatureSetSpec::new(crate::features::FeatureSet::PerTeamDiff),
            Target::GoalDiff,
            EvalOptions::default(),
        )
        .unwrap();
        let report = run.run().unwrap();

        let base_dist = run.base_model().predict();
        let mut direct = 0.0;
        for row in &run.table().rows {
            direct += cross_entropy(&base_dist, row.label_diff).unwrap();
        }
        direct /= run.table().rows.len() as f64;
        assert_abs_diff_eq!(report.cross_entropy.value, direct, epsilon = 1e-12);

        // Constant prediction: the averaged prediction is the base itself.
        for (a, b) in report.averaged_prediction.probs.iter().zip(&base_dist.probs) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-12);
        }
    }

    #[test]
    fn reports_are_deterministic() {
        let datasets = synth_datasets(8, 1, 7);
        let refs: Vec<&SeasonDataset> = datasets.iter().collect();
        let make = || {
            run_cv(
                &refs,
                ModelConfig::new(ModelKind::Poisson),
                FeatureSetSpec {
                    set: crate::features::FeatureSet::PairwiseDiff,
                    home_adjust: true,
                    standardize: false,
                },
                Target::GoalDiff,
                EvalOptions {
                    seed: 3,
                    ..EvalOptions::default()
                },
            )
            .unwrap()
        };
        assert_eq!(make(), make());
    }

    #[test]
    fn per_league_reports_are_tagged() {
        let mut datasets = synth_datasets(8, 1, 8);
        let other = generate(&GeneratorConfig {
            league: "OTHER".to_string(),
            n_teams: 8,
            seed: 9,
            ..GeneratorConfig::default()
        })
        .unwrap();
        datasets.extend(crate::data::build_seasons(other.records).into_datasets());
        let refs: Vec<&SeasonDataset> = datasets.iter().collect();
        let reports = per_league_cv(
            &refs,
            ModelConfig::new(ModelKind::Base),
            FeatureSetSpec::new(crate::features::FeatureSet::PerTeamDiff),
            Target::TotalGoals,
            EvalOptions::default(),
        )
        .unwrap();
        assert_eq!(reports.len(), 2);
        assert_eq!(reports[0].league.as_deref(), Some("OTHER"));
        assert_eq!(reports[1].league.as_deref(), Some("SYN"));
    }

    #[test]
    fn fold_partition_covers_every_match_once() {
        let datasets = synth_datasets(10, 1, 10);
        let refs: Vec<&SeasonDataset> = datasets.iter().collect();
        let run = CvRun::new(
            &refs,
            ModelConfig::new(ModelKind::Base),
            FeatureSetSpec::new(crate::features::FeatureSet::PerTeamDiff),
            Target::GoalDiff,
            EvalOptions::default(),
        )
        .unwrap();
        let report = run.run().unwrap();
        let total: usize = report.folds.iter().map(|f| f.n_matches).sum();
        assert_eq!(total, datasets[0].matches.len());
        assert_eq!(report.n_matches, total);
        assert_eq!(report.confusion.total() as usize, total);
    }

    #[test]
    fn strict_mode_changes_training_features_but_still_runs() {
        let datasets = synth_datasets(8, 1, 11);
        let refs: Vec<&SeasonDataset> = datasets.iter().collect();
        let strict = run_cv(
            &refs,
            ModelConfig::new(ModelKind::Poisson),
            FeatureSetSpec::new(crate::features::FeatureSet::PerTeamDiff),
            Target::GoalDiff,
            EvalOptions {
                strict_leakage: true,
                ..EvalOptions::default()
            },
        )
        .unwrap();
        let default = run_cv(
            &refs,
            ModelConfig::new(ModelKind::Poisson),
            FeatureSetSpec::new(crate::features::FeatureSet::PerTeamDiff),
            Target::GoalDiff,
            EvalOptions::default(),
        )
        .unwrap();
        assert!(strict.cross_entropy.value.is_finite());
        assert_ne!(
            strict.cross_entropy.value, default.cross_entropy.value,
            "strict mode should alter the training features"
        );
    }
}
