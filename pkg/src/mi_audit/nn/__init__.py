from .classifier import NeuralNetClassifier
from .model import (
    Conv2d,
    Dense,
    Flatten,
    MaxPool,
    ModelParams,
    ModelSpec,
    Relu,
    SoftmaxOutput,
    cross_entropy_loss,
    forward,
    grad_params,
    init_params,
    one_hot,
    phi_objective,
    phi_value_and_input_grad,
    spec_from_string,
)
from .serialize import load_params, save_params
from .training import (
    DpSgdConfig,
    TrainConfig,
    accuracy,
    count_training_runs,
    dataset_loss,
    dp_noise_std,
    train,
    train_dpsgd,
    training_run_count,
)

__all__ = [
    "Conv2d",
    "Dense",
    "DpSgdConfig",
    "Flatten",
    "MaxPool",
    "ModelParams",
    "ModelSpec",
    "NeuralNetClassifier",
    "Relu",
    "SoftmaxOutput",
    "TrainConfig",
    "accuracy",
    "count_training_runs",
    "cross_entropy_loss",
    "dataset_loss",
    "dp_noise_std",
    "forward",
    "grad_params",
    "init_params",
    "load_params",
    "one_hot",
    "phi_objective",
    "phi_value_and_input_grad",
    "save_params",
    "spec_from_string",
    "train",
    "train_dpsgd",
    "training_run_count",
]
