"""From-scratch neural network engine: layers, the four ablation variants, training."""

from .layers import (
    EVAL,
    TRAIN,
    batchnorm_forward,
    conv1d_forward,
    conv1d_output_length,
    dense_forward,
    dropout_forward,
    softmax_cross_entropy,
)
from .model import VARIANTS, ConvSpec, ModelSpec, Network, TrainedModel, build_model, model_from_spec, predict, predict_proba
from .train import EpochRecord, TrainConfig, TrainingError, train, write_history_csv
