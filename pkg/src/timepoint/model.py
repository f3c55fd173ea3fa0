"""Shared WTConv encoder with keypoint and descriptor heads."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .tensornet import functional as F
from .tensornet import Conv1d, Module, Tensor, WTConvBlock, no_grad, read_container, write_container

CELL = 8


@dataclass(frozen=True)
class ModelConfig:
    widths: tuple = (32, 32, 64, 64)
    strides: tuple = (1, 2, 2, 2)
    desc_dim: int = 64
    levels: int = 3
    kernel_size: int = 3
    kp_kernel: int = 3
    in_channels: int = 1


PRESETS = {
    "desk": ModelConfig(),
    "full": ModelConfig(widths=(128, 128, 256, 256), desc_dim=256),
    # smallest useful net, for gradient checks and quick tests
    "tiny": ModelConfig(widths=(4, 4, 8, 8), desc_dim=8),
}


class TimePointModel(Module):
    def __init__(self, config: ModelConfig = PRESETS["desk"], seed: int = 0):
        super().__init__()
        if int(np.prod(config.strides)) != CELL:
            raise ValueError("encoder strides must downsample by exactly 8")
        rng = np.random.default_rng(seed)
        self.config = config
        cin = config.in_channels
        self.encoder = []
        for width, stride in zip(config.widths, config.strides):
            self.encoder.append(
                WTConvBlock(cin, width, levels=config.levels, kernel_size=config.kernel_size, stride=stride, rng=rng)
            )
            cin = width
        self.kp_head = Conv1d(cin, CELL, config.kp_kernel, rng=rng)
        self.desc_head = Conv1d(cin, config.desc_dim, 1, rng=rng)

    @property
    def d_enc(self) -> int:
        return self.config.widths[-1]

    def encode(self, x: Tensor) -> Tensor:
        for block in self.encoder:
            x = block(x)
        return x

    def __call__(self, x):
        """x: (B, L) or (B, 1, L) -> scores (B, L) in [0, 1], descriptors (B, D, L)."""
        if not isinstance(x, Tensor):
            arr = np.asarray(x, dtype=self.dtype)
            x = Tensor(arr)
        if x.ndim == 2:
            x = F.reshape(x, (x.shape[0], 1, x.shape[1]))
        length = x.shape[-1]
        if length % CELL:
            raise ValueError(f"signal length {length} is not divisible by {CELL}; resample it first")
        feats = self.encode(x)
        scores = F.sigmoid(F.cells_to_time(self.kp_head(feats)))
        desc = F.l2_normalize(F.upsample_linear(self.desc_head(feats), length), axis=1)
        return scores, desc

    forward = __call__

    @property
    def dtype(self):
        return self.kp_head.weight.dtype

    def predict(self, signals) -> tuple[np.ndarray, np.ndarray]:
        """Inference in eval mode: arrays of scores (B, L) and descriptors (B, L, D)."""
        arr = np.asarray(signals, dtype=self.dtype)
        single = arr.ndim == 1
        if single:
            arr = arr[None]
        was_training = self.training
        self.eval()
        try:
            with no_grad():
                s, d = self(arr)
        finally:
            self.train(was_training)
        scores, desc = s.data, d.data.transpose(0, 2, 1)
        return (scores[0], desc[0]) if single else (scores, desc)

    def save(self, path) -> None:
        tensors = {"meta.widths": np.array(self.config.widths, dtype=np.float32),
                   "meta.strides": np.array(self.config.strides, dtype=np.float32),
                   "meta.desc_dim": np.array([self.config.desc_dim], dtype=np.float32),
                   "meta.levels": np.array([self.config.levels], dtype=np.float32)}
        tensors.update(self.state_dict())
        write_container(path, tensors)

    @classmethod
    def load(cls, path) -> "TimePointModel":
        tensors = read_container(path)
        try:
            config = ModelConfig(
                widths=tuple(int(v) for v in tensors["meta.widths"]),
                strides=tuple(int(v) for v in tensors["meta.strides"]),
                desc_dim=int(tensors["meta.desc_dim"][0]),
                levels=int(tensors["meta.levels"][0]),
            )
        except KeyError as exc:
            raise ValueError(f"{path}: checkpoint lacks model metadata") from exc
        model = cls(config)
        model.load_state_dict({k: v for k, v in tensors.items() if not k.startswith("meta.")})
        return model.eval()


def build_model(preset: str = "desk", seed: int = 0) -> TimePointModel:
    try:
        return TimePointModel(PRESETS[preset], seed=seed)
    except KeyError:
        raise ValueError(f"unknown preset {preset!r}; choose from {sorted(PRESETS)}") from None
