"""Small numpy autodiff stack: 1D convolutions, Haar wavelets, WTConv blocks."""

from . import functional
from .checkpoint import ContainerError, read_container, write_container
from .functional import (
    batchnorm1d,
    conv1d,
    haar_dwt,
    haar_iwt,
    l2_normalize,
    upsample_linear,
)
from .gradcheck import grad_check
from .layers import BatchNorm1d, Conv1d, Module, WTConvBlock
from .optim import AdamW, adamw_step, cosine_lr
from .tensor import Parameter, Tensor, no_grad, set_debug

__all__ = [
    "AdamW",
    "BatchNorm1d",
    "ContainerError",
    "Conv1d",
    "Module",
    "Parameter",
    "Tensor",
    "WTConvBlock",
    "adamw_step",
    "batchnorm1d",
    "conv1d",
    "cosine_lr",
    "functional",
    "grad_check",
    "haar_dwt",
    "haar_iwt",
    "l2_normalize",
    "no_grad",
    "read_container",
    "set_debug",
    "upsample_linear",
    "write_container",
]
