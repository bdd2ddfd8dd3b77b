//! Common training and prediction contract across the model families.
//!
//! Every trained model maps a feature row to a normalized distribution over
//! the outcome classes; the evaluation harness only talks to this surface.


use alloc::vec::Vec;
use core::fmt;
use serde::{Deserialize, Serialize};

use crate::features::{FeatureRow, FeatureSet, FeatureTable};
use crate::forest::{self, ForestError, RandomForestModel, RfConfig};
use crate::nn::{self, IdBlockSizes, InputEncoder, NeuralNetModel, NnConfig, NnError};
use crate::outcome::{OutcomeDistribution, Target};
use crate::poisson::{FitMethod, PoissonError, PoissonModel, DEFAULT_G_MAX, DEFAULT_LAMBDA_FLOOR};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Poisson,
    NeuralNet,
    RandomForest,
    Base,
}

impl ModelKind {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "poisson" => Some(ModelKind::Poisson),
            "nn" => Some(ModelKind::NeuralNet),
            "rf" => Some(ModelKind::RandomForest),
            "base" => Some(ModelKind::Base),
            _ => None,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            ModelKind::Poisson => "poisson",
            ModelKind::NeuralNet => "nn",
            ModelKind::RandomForest => "rf",
            ModelKind::Base => "base",
        }
    }

    pub const ALL_NAMES: &'static [&'static str] = &["poisson", "nn", "rf", "base"];
}

/// Everything needed to train any of the model families.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub kind: ModelKind,
    pub nn: NnConfig,
    pub rf: RfConfig,
    pub poisson_method: FitMethod,
    pub g_max: usize,
    pub lambda_floor: f64,
    /// Probability floor for frequency-based predictions (base model and
    /// forest leaves).
    pub prob_floor: f64,
}

impl ModelConfig {
    pub fn new(kind: ModelKind) -> Self {
        ModelConfig {
            kind,
            nn: NnConfig::default(),
            rf: RfConfig::default(),
            poisson_method: FitMethod::LeastSquares,
            g_max: DEFAULT_G_MAX,
            lambda_floor: DEFAULT_LAMBDA_FLOOR,
            prob_floor: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ModelError {
    Poisson(PoissonError),
    NeuralNet(NnError),
    Forest(ForestError),
}

impl fmt::Display for ModelError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelError::Poisson(e) => write!(f, "poisson model: {e}"),
            ModelError::NeuralNet(e) => write!(f, "neural net: {e}"),
            ModelError::Forest(e) => write!(f, "random forest: {e}"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for ModelError {}

impl From<PoissonError> for ModelError {
    fn from(e: PoissonError) -> Self {
        ModelError::Poisson(e)
    }
}

impl From<NnError> for ModelError {
    fn from(e: NnError) -> Self {
        ModelError::NeuralNet(e)
    }
}

impl From<ForestError> for ModelError {
    fn from(e: ForestError) -> Self {
        ModelError::Forest(e)
    }
}

/// The base model: one fixed distribution — the normalized class frequencies
/// of the evaluation dataset — predicted for every match.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaseModel {
    pub target: Target,
    pub dist: OutcomeDistribution,
}

impl BaseModel {
    pub fn fit(rows: &[&FeatureRow], target: Target, prob_floor: f64) -> BaseModel {
        let range = target.class_range();
        let mut weights = alloc::vec![0.0; range.len()];
        for row in rows {
            let idx = range
                .index(row.label(target))
                .expect("labels are clipped into the class range");
            weights[idx] += 1.0;
        }
        let mut dist = if rows.is_empty() {
            OutcomeDistribution::uniform(range)
        } else {
            OutcomeDistribution::from_weights(range, weights)
        };
        dist.floor_and_renormalize(prob_floor);
        BaseModel { target, dist }
    }

    pub fn predict(&self) -> OutcomeDistribution {
        self.dist.clone()
    }
}

/// A trained model of any family, exposing one prediction contract.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TrainedModel {
    Poisson(PoissonModel),
    NeuralNet(NeuralNetModel),
    RandomForest(RandomForestModel),
    Base(BaseModel),
}

impl TrainedModel {
    pub fn kind(&self) -> ModelKind {
        match self {
            TrainedModel::Poisson(_) => ModelKind::Poisson,
            TrainedModel::NeuralNet(_) => ModelKind::NeuralNet,
            TrainedModel::RandomForest(_) => ModelKind::RandomForest,
            TrainedModel::Base(_) => ModelKind::Base,
        }
    }

    /// Predicts the outcome-class distribution for one match. Deterministic
    /// given the trained state.
    pub fn predict(&self, row: &FeatureRow) -> Result<OutcomeDistribution, ModelError> {
        match self {
            TrainedModel::Poisson(m) => Ok(m.predict(row)),
            TrainedModel::NeuralNet(m) => Ok(m.predict(row)?),
            TrainedModel::RandomForest(m) => Ok(m.predict(row)?),
            TrainedModel::Base(m) => Ok(m.predict()),
        }
    }
}

/// Trains the configured model family on the given rows.
///
/// `seed` replaces the seeds in the nn/rf sub-configs (the harness derives a
/// distinct one per fold). `base` supplies the prediction when the configured
/// kind is the base model, since that one is fitted on the evaluation dataset
/// rather than on the fold.
pub fn train_model(
    config: &ModelConfig,
    table: &FeatureTable,
    train_rows: &[&FeatureRow],
    target: Target,
    seed: u64,
    base: &BaseModel,
) -> Result<TrainedModel, ModelError> {
    match config.kind {
        ModelKind::Base => Ok(TrainedModel::Base(base.clone())),
        ModelKind::Poisson => {
            // With the single pairwise-difference feature set the total-goals
            // term is dropped from the superposition.
            let use_sum_term = table.spec.set != FeatureSet::PairwiseDiff;
            let mut model =
                PoissonModel::fit(train_rows, target, use_sum_term, config.poisson_method)?;
            model.g_max = config.g_max;
            model.lambda_floor = config.lambda_floor;
            Ok(TrainedModel::Poisson(model))
        }
        ModelKind::NeuralNet => {
            let encoder = input_encoder(table);
            let nn_config = NnConfig {
                seed,
                ..config.nn
            };
            Ok(TrainedModel::NeuralNet(nn::train(
                train_rows, target, encoder, &nn_config,
            )?))
        }
        ModelKind::RandomForest => {
            let rf_config = RfConfig {
                seed,
                ..config.rf
            };
            Ok(TrainedModel::RandomForest(forest::train(
                train_rows,
                target,
                table.feature_names.len(),
                table.spec.set.uses_ids(),
                &rf_config,
            )?))
        }
    }
}

/// Input layout for the neural network given a feature table.
pub fn input_encoder(table: &FeatureTable) -> InputEncoder {
    InputEncoder {
        n_continuous: table.feature_names.len(),
        id_blocks: table.id_vocab.as_ref().map(|v| IdBlockSizes {
            n_teams: v.n_teams(),
            n_seasons: v.n_seasons(),
        }),
    }
}

/// Per-feature mean and standard deviation over a training subset of rows.
/// Constant features keep a unit scale.
pub fn feature_stats(rows: &[FeatureRow], train_indices: &[usize]) -> (Vec<f64>, Vec<f64>) {
    let n_features = rows.first().map_or(0, |r| r.features.len());
    let mut mean = alloc::vec![0.0; n_features];
    let mut sd = alloc::vec![1.0; n_features];
    for j in 0..n_features {
        let m = train_indices
            .iter()
            .map(|&i| rows[i].features[j])
            .sum::<f64>()
            / train_indices.len() as f64;
        let var = train_indices
            .iter()
            .map(|&i| {
                let d = rows[i].features[j] - m;
                d * d
            })
            .sum::<f64>()
            / train_indices.len() as f64;
        mean[j] = m;
        if var > 0.0 {
            sd[j] = libm::sqrt(var);
        }
    }
    (mean, sd)
}

/// z-scores one row's features with the given statistics.
pub fn apply_feature_stats(row: &FeatureRow, mean: &[f64], sd: &[f64]) -> FeatureRow {
    let mut out = row.clone();
    for (j, v) in out.features.iter_mut().enumerate() {
        *v = (*v - mean[j]) / sd[j];
    }
    out
}

/// Applies per-feature z-scoring to a set of rows using statistics computed
/// from the training subset only. Returns transformed copies of all rows.
pub fn standardize_rows(rows: &[FeatureRow], train_indices: &[usize]) -> Vec<FeatureRow> {
    if rows.is_empty() || rows[0].features.is_empty() {
        return rows.to_vec();
    }
    let (mean, sd) = feature_stats(rows, train_indices);
    rows.iter()
        .map(|row| apply_feature_stats(row, &mean, &sd))
        .collect()
}
