//! Model preset names and flag parsing.

use super::CmdError;
use crate::graph::GeneratorKind;
use crate::nn::GnKind;
use crate::tasks::TaskKind;
use crate::train::{ControllerKind, ModelSpec};

/// Which of the path-aligned layer flavours to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PathVariant {
    MpnnMax,
    Attention,
    AttentionSim,
}

impl PathVariant {
    pub fn parse(text: &str) -> Result<Self, CmdError> {
        match text {
            "mpnn-max" => Ok(PathVariant::MpnnMax),
            "attention" => Ok(PathVariant::Attention),
            "attention-sim" => Ok(PathVariant::AttentionSim),
            other => Err(CmdError::usage(format!(
                "unknown path variant `{other}` (mpnn-max | attention | attention-sim)"
            ))),
        }
    }

    pub fn kind(self) -> GnKind {
        match self {
            PathVariant::MpnnMax => GnKind::MpnnMax,
            PathVariant::Attention => GnKind::PathGnn,
            PathVariant::AttentionSim => GnKind::PathGnnSim,
        }
    }
}

pub fn parse_task(text: &str) -> Result<TaskKind, CmdError> {
    match text {
        "shortest-path" => Ok(TaskKind::ShortestPath),
        "component-counting" => Ok(TaskKind::ComponentCounting),
        "tsp" => Ok(TaskKind::Tsp),
        "physics" => Ok(TaskKind::Physics),
        "navigation" => Ok(TaskKind::Navigation),
        other => Err(CmdError::usage(format!("unknown task `{other}`"))),
    }
}

pub fn parse_generator(text: &str) -> Result<GeneratorKind, CmdError> {
    match text {
        "er" => Ok(GeneratorKind::default_er()),
        "knn" => Ok(GeneratorKind::default_knn()),
        "planar" => Ok(GeneratorKind::default_planar()),
        "lobster" => Ok(GeneratorKind::default_lobster()),
        other => Err(CmdError::usage(format!("unknown generator `{other}`"))),
    }
}

/// The stacked baselines use depth 30, matching the training iteration
/// cap of the adaptive controllers.
const STACK_DEPTH: usize = 30;

/// Build a model spec from a preset name like `iter-homo-path`.
pub fn parse_model(
    name: &str,
    task: TaskKind,
    path_variant: PathVariant,
    hidden: usize,
) -> Result<ModelSpec, CmdError> {
    let path = path_variant.kind();
    let counting = task == TaskKind::ComponentCounting;
    let iter = if counting {
        ControllerKind::IterNodewise
    } else {
        ControllerKind::Iter
    };
    let stacked = ControllerKind::Stacked { depth: STACK_DEPTH };
    let (core, controller, homogeneous) = match name {
        "gcn" => (GnKind::Gcn, stacked, false),
        "gat" => (GnKind::Gat, stacked, false),
        "path" => (path, stacked, false),
        "homo-path" => (path, stacked, true),
        "iter-path" => (path, iter, false),
        "iter-homo-path" => (path, iter, true),
        "act-homo-path" => (GnKind::MpnnMax, ControllerKind::Act, true),
        "shared-homo-path" => (path, ControllerKind::Shared { depth: STACK_DEPTH }, true),
        "iter-homo-gcn" => (GnKind::Gcn, iter, true),
        "iter-homo-gat" => (GnKind::Gat, iter, true),
        other => {
            return Err(CmdError::usage(format!(
                "unknown model `{other}` (gcn, gat, path, homo-path, iter-path, \
                 iter-homo-path, act-homo-path, shared-homo-path, iter-homo-gcn, iter-homo-gat)"
            )))
        }
    };
    let mut spec = ModelSpec::for_task(task, core, controller);
    spec.hidden = hidden;
    if homogeneous {
        spec = spec.homogenized();
    }
    Ok(spec)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn iter_homo_path_routes_to_homogenized_iterative_path_layer() {
        let spec = parse_model(
            "iter-homo-path",
            TaskKind::ShortestPath,
            PathVariant::Attention,
            64,
        )
        .unwrap();
        assert_eq!(spec.core, GnKind::PathGnn);
        assert_eq!(spec.controller, ControllerKind::Iter);
        assert!(spec.homogeneous);
        let block = spec.block_spec();
        assert!(block.homogeneous);
    }

    #[test]
    fn counting_presets_use_nodewise_controller_and_core_only_prior() {
        let spec = parse_model(
            "iter-homo-path",
            TaskKind::ComponentCounting,
            PathVariant::MpnnMax,
            64,
        )
        .unwrap();
        assert_eq!(spec.controller, ControllerKind::IterNodewise);
        assert_eq!(spec.stack, 2);
        assert!(spec.core_only_homogeneous);
        assert!(!spec.homogeneous);
        assert_eq!(spec.readout, crate::tensor::Reduce::Sum);
    }

    #[test]
    fn unknown_names_are_usage_errors() {
        let err = parse_model("warp-drive", TaskKind::Tsp, PathVariant::MpnnMax, 8).unwrap_err();
        assert_eq!(err.exit_code(), super::super::EXIT_USAGE);
    }
}
