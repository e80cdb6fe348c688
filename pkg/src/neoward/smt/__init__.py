from .config import PARAM_ORDER, Params, SmtConfig, init_params, param_shapes
from .attention import (
    attended_edge_counts,
    offset_spans,
    pattern_offsets,
    relative_bias,
    sparse_attention_backward,
    sparse_attention_forward,
    valid_mask,
)
from .model import (
    CLASS_NAMES,
    NormStats,
    RiskScore,
    SmtModel,
    backward,
    classify,
    embed_window,
    forward,
    fusion_weights,
    predict_probs,
    softmax,
)
from .loss import DegenerateDatasetError, class_weights, focal_loss, focal_loss_grad_logits
from .train import Dataset, TrainConfig, TrainResult, accuracy, cross_validate, stratified_kfold, train
from .calibrate import CalibrationResult, ece, fit_temperature, nll
from .stream import StreamingInference
from .serialize import ModelFileError, load_model, save_model
from .data import label_window, make_synthetic_dataset, scenario_window
from .gradcheck import GradCheckEntry, format_report, run_gradcheck

__all__ = [name for name in dir() if not name.startswith("_")]
