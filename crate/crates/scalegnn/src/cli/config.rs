//! Experiment configuration files.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::CmdError;
use crate::tasks::DatasetSpec;
use crate::train::{ModelSpec, TrainConfig};

/// JSON schema shipped with the repository describing this file format.
pub const CONFIG_SCHEMA: &str = include_str!("../../../../schemas/experiment.schema.json");

/// Declarative experiment: datasets, model, training, evaluation grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub dataset: DatasetSpec,
    /// Validation/test sample counts (train count lives in `dataset`).
    pub val_count: usize,
    pub test_count: usize,
    pub model: ModelSpec,
    pub train: TrainConfig,
    /// Sizes evaluated after training (node count per dataset).
    pub eval_sizes: Vec<usize>,
    pub output_dir: PathBuf,
}

impl ExperimentConfig {
    /// Parse and validate before any work starts; unknown fields, bad
    /// ranges, and empty grids are all rejected here.
    pub fn load(path: &Path) -> Result<Self, CmdError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CmdError::data(format!("read {}: {e}", path.display())))?;
        let cfg: ExperimentConfig = serde_json::from_str(&text)
            .map_err(|e| CmdError::usage(format!("config {}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CmdError> {
        self.dataset
            .validate()
            .map_err(|e| CmdError::usage(format!("dataset: {e}")))?;
        self.train
            .validate()
            .map_err(|e| CmdError::usage(format!("train: {e}")))?;
        if self.val_count == 0 || self.test_count == 0 {
            return Err(CmdError::usage("val_count and test_count must be >= 1"));
        }
        if self.model.task != self.dataset.task {
            return Err(CmdError::usage(format!(
                "model task {:?} does not match dataset task {:?}",
                self.model.task, self.dataset.task
            )));
        }
        if self.eval_sizes.is_empty() {
            return Err(CmdError::usage("eval_sizes must not be empty"));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::GeneratorKind;
    use crate::nn::GnKind;
    use crate::tasks::TaskKind;
    use crate::train::ControllerKind;

    fn sample_config() -> ExperimentConfig {
        ExperimentConfig {
            dataset: DatasetSpec {
                task: TaskKind::ShortestPath,
                generator: GeneratorKind::default_lobster(),
                n_min: 4,
                n_max: 34,
                weighted: false,
                weight_min: 0.5,
                weight_max: 1.5,
                count: 100,
                master_seed: 1,
            },
            val_count: 25,
            test_count: 25,
            model: ModelSpec::for_task(
                TaskKind::ShortestPath,
                GnKind::MpnnMax,
                ControllerKind::Iter,
            ),
            train: TrainConfig::desk(TaskKind::ShortestPath, 10, 0),
            eval_sizes: vec![20, 100],
            output_dir: "runs/test".into(),
        }
    }

    #[test]
    fn config_round_trips_and_validates() {
        let cfg = sample_config();
        cfg.validate().unwrap();
        let text = serde_json::to_string_pretty(&cfg).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cfg.json");
        std::fs::write(&path, &text).unwrap();
        let back = ExperimentConfig::load(&path).unwrap();
        assert_eq!(back.eval_sizes, vec![20, 100]);
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let mut v: serde_json::Value =
            serde_json::from_str(&serde_json::to_string(&sample_config()).unwrap()).unwrap();
        v["surprise"] = serde_json::json!(1);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.json");
        std::fs::write(&path, v.to_string()).unwrap();
        let err = ExperimentConfig::load(&path).unwrap_err();
        assert_eq!(err.exit_code(), crate::cli::EXIT_USAGE);
    }

    #[test]
    fn schema_document_is_valid_json() {
        let v: serde_json::Value = serde_json::from_str(CONFIG_SCHEMA).unwrap();
        assert_eq!(v["title"], "ExperimentConfig");
    }
}
