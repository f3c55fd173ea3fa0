"""Learned keypoints and descriptors for sparse time-series alignment."""

from .cpab import CpabTransform, Tessellation, build_prior, sample_theta, warp_keypoints, warp_signal
from .keypoints import KeypointSet, detect_by_mass, extract_keypoints, keypoint_f1, nms, select_keypoints
from .losses import desc_loss, kp_loss, total_loss
from .model import PRESETS, ModelConfig, TimePointModel, build_model
from .synthalign import SynthConfig, generate_sample, make_finetune_pair, make_training_pair
from .training import TrainConfig, finetune, train

__version__ = "0.1.0"

__all__ = [
    "CpabTransform",
    "KeypointSet",
    "ModelConfig",
    "PRESETS",
    "SynthConfig",
    "Tessellation",
    "TimePointModel",
    "TrainConfig",
    "build_model",
    "build_prior",
    "desc_loss",
    "extract_keypoints",
    "finetune",
    "generate_sample",
    "keypoint_f1",
    "detect_by_mass",
    "kp_loss",
    "make_finetune_pair",
    "make_training_pair",
    "nms",
    "sample_theta",
    "select_keypoints",
    "total_loss",
    "train",
    "warp_keypoints",
    "warp_signal",
]
