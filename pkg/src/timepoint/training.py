"""Training on procedurally generated pairs, and fine-tuning on real signals."""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field

import numpy as np

from .cpab import CpaPrior, build_prior
from .losses import batch_loss
from .model import TimePointModel
from .synthalign import SynthConfig, make_finetune_pair, make_training_pair
from .tensornet import adamw_step, cosine_lr, no_grad

log = logging.getLogger(__name__)

TRACE_COLUMNS = ("iteration", "lr", "kp_loss_x", "kp_loss_xw", "desc_loss", "total")


@dataclass
class TrainConfig:
    iters: int = 2000
    batch: int = 16
    base_lr: float = 1e-4
    seed: int = 0
    weight_decay: float = 0.01
    synth: SynthConfig = field(default_factory=SynthConfig)
    log_every: int = 100


class TrainingDiverged(RuntimeError):
    pass


def _stack_batch(pairs, dtype):
    x = np.stack([p.original.signal for p in pairs] + [p.warped.signal for p in pairs]).astype(dtype)
    la = np.stack([p.original.kp_mask for p in pairs])
    lb = np.stack([p.warped.kp_mask for p in pairs])
    return x, la, lb, [p.correspondences for p in pairs]


def train_step(model: TimePointModel, pairs, lr: float, weight_decay: float = 0.01, iteration: int = 0) -> dict:
    """Forward both views, backprop the summed objective and apply AdamW."""
    x, la, lb, corr = _stack_batch(pairs, model.dtype)
    model.train()
    model.zero_grad()
    scores, desc = model(x)
    loss, (kp_a, kp_b, d) = batch_loss(scores, desc, la, lb, corr)
    total = float(loss.data)
    if not np.isfinite(total):
        raise TrainingDiverged(
            f"non-finite loss at iteration {iteration}: kp_x={kp_a} kp_xw={kp_b} desc={d}; "
            "lower the learning rate or check the inputs"
        )
    loss.backward()
    adamw_step(model.parameters(), lr, weight_decay=weight_decay)
    for name, p in model.named_parameters():
        if not np.all(np.isfinite(p.data)):
            raise TrainingDiverged(f"parameter {name} became non-finite at iteration {iteration}")
    return {"iteration": iteration, "lr": lr, "kp_loss_x": kp_a, "kp_loss_xw": kp_b, "desc_loss": d, "total": total}


def train(model: TimePointModel, config: TrainConfig = TrainConfig(), prior: CpaPrior | None = None,
          data_source=None, callback=None):
    """Train on fresh pairs every iteration; returns (model, loss trace rows).

    ``data_source(rng, batch)`` may replace the synthetic generator; it must
    return a list of TrainingPair.
    """
    prior = prior or build_prior()
    rng = np.random.default_rng(config.seed)
    if data_source is None:
        def data_source(gen, n):
            return [make_training_pair(config.synth, prior, rng=gen) for _ in range(n)]
    trace = []
    for it in range(config.iters):
        lr = cosine_lr(it, config.iters, config.base_lr)
        row = train_step(model, data_source(rng, config.batch), lr, config.weight_decay, it + 1)
        trace.append(row)
        if config.log_every and (it + 1) % config.log_every == 0:
            log.info("iter %d lr %.2e total %.4f", it + 1, lr, row["total"])
        if callback is not None:
            callback(row)
    model.eval()
    return model, trace


def finetune(model: TimePointModel, signals, epochs: int, prior: CpaPrior | None = None, batch: int = 16,
             base_lr: float = 1e-4, seed: int = 0, weight_decay: float = 0.01):
    """Fine-tune on real signals (already resampled to a length divisible by 8).

    Each step draws two random warps per signal and labels both views with the
    heuristic extrema annotator.
    """
    signals = [np.asarray(s, dtype=np.float64) for s in signals]
    if epochs <= 0 or not signals:
        return model, []
    lengths = {s.size for s in signals}
    if len(lengths) != 1:
        raise ValueError("all fine-tuning signals must share one length")
    prior = prior or build_prior()
    rng = np.random.default_rng(seed)
    steps_per_epoch = -(-len(signals) // batch)
    total = epochs * steps_per_epoch
    trace = []
    step = 0
    for _ in range(epochs):
        order = rng.permutation(len(signals))
        for start in range(0, len(order), batch):
            chunk = order[start:start + batch]
            if len(chunk) < 2:
                # batch statistics need at least two signals per view
                chunk = np.concatenate([chunk, rng.choice(len(signals), 2 - len(chunk))])
            pairs = [make_finetune_pair(signals[i], prior, rng=rng) for i in chunk]
            lr = cosine_lr(step, total, base_lr)
            step += 1
            trace.append(train_step(model, pairs, lr, weight_decay, step))
    model.eval()
    return model, trace


def evaluate_loss(model: TimePointModel, pairs) -> float:
    """Total objective on fixed pairs in eval mode, without updating anything."""
    x, la, lb, corr = _stack_batch(pairs, model.dtype)
    was_training = model.training
    model.eval()
    try:
        with no_grad():
            scores, desc = model(x)
            loss, _ = batch_loss(scores, desc, la, lb, corr)
    finally:
        model.train(was_training)
    return float(loss.data)


def write_trace(trace, path_or_file) -> None:
    def emit(fh):
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TRACE_COLUMNS)
        for row in trace:
            w.writerow([row["iteration"], f"{row['lr']:.8e}"] + [f"{row[c]:.8f}" for c in TRACE_COLUMNS[2:]])

    if hasattr(path_or_file, "write"):
        emit(path_or_file)
    else:
        with open(path_or_file, "w", newline="") as fh:
            emit(fh)
