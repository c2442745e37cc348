"""Online-adaptive quantile tree and its shift-experiment tooling.

The core object is :class:`Xenovert`, a fixed-shape binary tree whose node
values chase the stream's quantiles, so that converting a value to its
interval index yields near-uniform interval usage even while the input
distribution drifts.  Around it: evaluation metrics, synthetic shifting
streams, a small from-scratch network, and a covariate-shift experiment
pipeline on tabular data.
"""

from .distgen import (
    ChiSquared,
    MultimodalNormal,
    Normal,
    ShiftSchedule,
    Uniform,
    UnivariateResult,
    draw_at,
    draw_stream,
    parse_dist,
    run_univariate,
    sample,
)
from .metrics import (
    IntervalHistogram,
    ShiftProfile,
    accuracy,
    hi_score,
    interval_histogram,
    mse,
    shift_function,
)
from .mlp import (
    MlpModel,
    TrainConfig,
    forward,
    gradient_check,
    gradients,
    init_model,
    load_model,
    loss,
    predict,
    save_model,
    train,
)
from .pipeline import (
    DATASETS,
    DatasetSpec,
    FeatureBank,
    Split,
    fit_bank,
    inject_noise,
    load_split,
    run_experiment,
    transform,
)
from .qtree import QuasiQuantileNode, Xenovert, XenovertConfig, grow

__version__ = "0.1.0"

__all__ = [
    "ChiSquared",
    "DATASETS",
    "DatasetSpec",
    "FeatureBank",
    "IntervalHistogram",
    "MlpModel",
    "MultimodalNormal",
    "Normal",
    "QuasiQuantileNode",
    "ShiftProfile",
    "ShiftSchedule",
    "Split",
    "TrainConfig",
    "Uniform",
    "UnivariateResult",
    "Xenovert",
    "XenovertConfig",
    "accuracy",
    "draw_at",
    "draw_stream",
    "fit_bank",
    "forward",
    "gradient_check",
    "gradients",
    "grow",
    "hi_score",
    "init_model",
    "inject_noise",
    "interval_histogram",
    "load_model",
    "load_split",
    "loss",
    "mse",
    "parse_dist",
    "predict",
    "run_experiment",
    "run_univariate",
    "sample",
    "save_model",
    "shift_function",
    "train",
    "transform",
]
