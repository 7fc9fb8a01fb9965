"""DiLoCo desk-scale simulator: protocols, quantized communication, network model."""

from ._core import (
    AdamConfig,
    Batch,
    ConfigError,
    Method,
    NesterovConfig,
    NumericError,
    ObjectiveKind,
    ObjectiveSpec,
    QuantFormat,
    ShardSet,
    TrainConfig,
    adam_step,
    average,
    compare,
    eager_combine,
    finite_diff_grad,
    l2_norm,
    loss_and_grad,
    nesterov_outer_step,
    netsim,
    parse_format,
    payload_bits,
    preset_names,
    quantize,
    round_to_format,
    run_config,
    run_preset,
    run_training,
)

__version__ = "0.1.0"
