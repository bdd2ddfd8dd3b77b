//! Versioned model persistence.
//!
//! Trained models serialize to JSON together with the feature configuration
//! and target they were built for, so a loaded model cannot silently be
//! applied to differently-shaped inputs.

use std::path::Path;

use anyhow::{bail, Context, Result};
use matchcast_core::features::FeatureSetSpec;
use matchcast_core::model::TrainedModel;
use matchcast_core::outcome::Target;
use serde::{Deserialize, Serialize};

pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub format_version: u32,
    pub features: FeatureSetSpec,
    pub target: Target,
    pub model: TrainedModel,
}

impl ModelFile {
    pub fn new(features: FeatureSetSpec, target: Target, model: TrainedModel) -> Self {
        ModelFile {
            format_version: MODEL_FORMAT_VERSION,
            features,
            target,
            model,
        }
    }
}

pub fn save_model(path: &Path, file: &ModelFile) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(file)?;
    bytes.push(b'\n');
    std::fs::write(path, bytes).with_context(|| format!("writing model to {}", path.display()))
}

pub fn load_model(path: &Path) -> Result<ModelFile> {
    let bytes =
        std::fs::read(path).with_context(|| format!("reading model from {}", path.display()))?;
    let file: ModelFile = serde_json::from_slice(&bytes)
        .with_context(|| format!("parsing model file {}", path.display()))?;
    if file.format_version != MODEL_FORMAT_VERSION {
        bail!(
            "model file {} has format version {}, expected {}",
            path.display(),
            file.format_version,
            MODEL_FORMAT_VERSION
        );
    }
    Ok(file)
}

#[cfg(test)]
mod tests {
    use super::*;
    use matchcast_core::features::FeatureSet;
    use matchcast_core::model::{BaseModel, TrainedModel};
    use matchcast_core::outcome::{OutcomeDistribution, Target};

    fn sample() -> ModelFile {
        ModelFile::new(
            FeatureSetSpec::new(FeatureSet::PerTeamDiff),
            Target::GoalDiff,
            TrainedModel::Base(BaseModel {
                target: Target::GoalDiff,
                dist: OutcomeDistribution::uniform(Target::GoalDiff.class_range()),
            }),
        )
    }

    #[test]
    fn model_files_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.json");
        let file = sample();
        save_model(&path, &file).unwrap();
        let loaded = load_model(&path).unwrap();
        assert_eq!(loaded, file);
    }

    #[test]
    fn version_mismatch_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.json");
        let mut file = sample();
        file.format_version = 99;
        save_model(&path, &file).unwrap();
        assert!(load_model(&path).is_err());
    }
}
