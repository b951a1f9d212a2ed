"""Twin-network difference regression toolkit."""

from .bench import ExperimentConfig, aggregate, emit_results, rmse, run_experiment
from .data import (
    Dataset,
    SplitSpec,
    StandardizationStats,
    gen_rcl,
    gen_tf,
    gen_wsb,
    load_csv,
    split,
    standardize,
)
from .knn import ALL, KnnIndex, build_index, knn_predict, query
from .nn import (
    AdadeltaState,
    MLPParams,
    TrainConfig,
    TrainHistory,
    adadelta_step,
    fit,
    forward,
    init_params,
    loss_and_gradient,
)
from .pairing import PairedDataset, all_pairs, make_inference_pairs, nn_pairs
from .twin import (
    AllPairsMode,
    NnPairsMode,
    PredictionResult,
    TwinModel,
    load_model,
    loop_violation,
    predict_full,
    predict_nn,
    predict_random_anchors,
    save_model,
    sym_diff,
    train_twin,
)

__all__ = [name for name in dir() if not name.startswith("_")]
