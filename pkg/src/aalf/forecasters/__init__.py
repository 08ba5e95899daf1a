from .ar import ARModel, fit_ar, predict_ar
from .baselines import baseline_last, baseline_mean
from .mlp import MLPModel, TrainConfig, fit_mlp, init_mlp, mlp_gradient, mlp_loss, predict_mlp, zero_mlp
from .table import PredictionTable, SegmentPredictions, import_predictions

__all__ = [
    "ARModel",
    "MLPModel",
    "PredictionTable",
    "SegmentPredictions",
    "TrainConfig",
    "baseline_last",
    "baseline_mean",
    "fit_ar",
    "fit_mlp",
    "import_predictions",
    "init_mlp",
    "mlp_gradient",
    "mlp_loss",
    "predict_ar",
    "predict_mlp",
    "zero_mlp",
]
