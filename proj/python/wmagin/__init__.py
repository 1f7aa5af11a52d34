"""Python bindings for the WMA-GIN core library."""

from ._core import (
    AggregatorWeights,
    Checkpoint,
    EvalReport,
    ModelConfig,
    RunConfig,
    StageESource,
    SynthSpec,
    TrainConfig,
    Utterance,
    aggregate_mean,
    aggregate_softmax,
    aggregate_sum,
    cli,
    cross_validate,
    cycle_neighbors,
    generate_synthetic,
    gradient_check,
    init_checkpoint,
    load_checkpoint,
    load_dataset,
    parse_config,
    parse_config_text,
    report_from_confusion,
    save_checkpoint,
    save_dataset,
    stage_weights,
    train,
)

__all__ = [name for name in dir() if not name.startswith("_")]
