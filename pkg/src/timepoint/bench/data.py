"""Labelled datasets: UCR-style TSV I/O, resampling, perturbations, binary container."""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.ndimage import gaussian_filter1d

from ..tensornet import read_container, write_container

JITTER_SIGMA = {1: 0.1, 2: 0.3}
BLUR_SIGMA = {1: 1.0, 2: 3.0}
MIN_LENGTH = 16


class DatasetError(ValueError):
    pass


@dataclass
class LabeledDataset:
    name: str
    signals: list
    labels: list
    source_length: int = 0
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if len(self.signals) != len(self.labels):
            raise DatasetError("signals and labels differ in count")
        if len(self.signals) == 0:
            raise DatasetError(f"dataset {self.name!r} is empty")
        if not self.source_length:
            self.source_length = len(self.signals[0])

    def __len__(self):
        return len(self.signals)

    @property
    def length(self) -> int:
        return len(self.signals[0])

    def as_array(self) -> np.ndarray:
        return np.stack([np.asarray(s, dtype=np.float64) for s in self.signals])

    def resampled(self, target: int = 512) -> "LabeledDataset":
        sigs = [resample(s, target) for s in self.signals]
        return LabeledDataset(self.name, sigs, list(self.labels), self.source_length, dict(self.meta))

    def perturbed(self, kind: str, level: int, seed: int = 0) -> "LabeledDataset":
        rng = np.random.default_rng(seed)
        sigs = [perturb(s, kind, level, rng=rng) for s in self.signals]
        meta = dict(self.meta, perturbation=f"{kind}:{level}:{perturbation_sigma(kind, level)}")
        return LabeledDataset(self.name, sigs, list(self.labels), self.source_length, meta)


def load_ucr_tsv(path, name: str | None = None) -> LabeledDataset:
    """One series per line: label, then tab-separated values."""
    path = Path(path)
    signals, labels = [], []
    width = None
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            fields = line.split("\t") if "\t" in line else line.split(",")
            try:
                values = np.array([float(v) for v in fields], dtype=np.float64)
            except ValueError as exc:
                raise DatasetError(f"{path}:{lineno}: unparseable value ({exc})") from None
            if values.size < 2:
                raise DatasetError(f"{path}:{lineno}: a row needs a label and at least one value")
            if np.isnan(values).any():
                raise DatasetError(f"{path}:{lineno}: missing values (NaN) are not supported")
            if width is None:
                width = values.size
            elif values.size != width:
                raise DatasetError(
                    f"{path}:{lineno}: row has {values.size - 1} values, expected {width - 1} (ragged rows)"
                )
            labels.append(int(round(values[0])))
            signals.append(values[1:])
    if not signals:
        raise DatasetError(f"{path}: file contains no series")
    return LabeledDataset(name or path.stem, signals, labels, width - 1)


def save_ucr_tsv(dataset: LabeledDataset, path) -> None:
    with open(path, "w") as fh:
        for lab, sig in zip(dataset.labels, dataset.signals):
            fh.write("\t".join([str(int(lab))] + [repr(float(v)) for v in np.asarray(sig, dtype=np.float32)]))
            fh.write("\n")


def load_ucr_split(directory) -> tuple[LabeledDataset, LabeledDataset]:
    """Read <name>_TRAIN.tsv and <name>_TEST.tsv from an archive-style folder."""
    directory = Path(directory)
    trains = sorted(directory.glob("*_TRAIN.tsv"))
    if not trains:
        raise DatasetError(f"{directory}: no *_TRAIN.tsv file found")
    train_path = trains[0]
    name = train_path.name[: -len("_TRAIN.tsv")]
    test_path = directory / f"{name}_TEST.tsv"
    if not test_path.exists():
        raise DatasetError(f"{directory}: missing {test_path.name}")
    return load_ucr_tsv(train_path, name), load_ucr_tsv(test_path, name)


def resample(x, target: int = 512) -> np.ndarray:
    """Linear interpolation onto ``target`` uniformly spaced points, endpoints kept."""
    x = np.asarray(x, dtype=np.float64)
    if x.size < 2:
        raise DatasetError("resampling needs at least 2 samples")
    if x.size == target:
        return x.copy()
    src = np.linspace(0.0, 1.0, x.size)
    return np.interp(np.linspace(0.0, 1.0, target), src, x)


def perturbation_sigma(kind: str, level: int) -> float:
    table = {"jitter": JITTER_SIGMA, "blur": BLUR_SIGMA}
    if kind not in table:
        raise DatasetError(f"unknown perturbation {kind!r}; choose jitter or blur")
    if level not in table[kind]:
        raise DatasetError(f"level must be 1 or 2, got {level}")
    return table[kind][level]


def perturb(x, kind: str, level: int, rng=None, sigma: float | None = None) -> np.ndarray:
    """Jitter (additive Gaussian noise) or Gaussian blur with reflected edges.

    ``sigma`` overrides the level's preset value.
    """
    s = perturbation_sigma(kind, level) if sigma is None else float(sigma)
    x = np.asarray(x, dtype=np.float64)
    if s == 0:
        return x.copy()
    if kind == "jitter":
        gen = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
        return x + s * gen.standard_normal(x.shape)
    return gaussian_filter1d(x, s, mode="reflect", truncate=4.0)


def save_dataset(dataset: LabeledDataset, path) -> None:
    """Binary container with a ``signals`` matrix and a ``labels`` vector."""
    lengths = {len(s) for s in dataset.signals}
    if len(lengths) != 1:
        raise DatasetError("the container stores equal-length signals only; resample first")
    write_container(path, {
        "signals": dataset.as_array().astype(np.float32),
        "labels": np.asarray(dataset.labels, dtype=np.float32),
        "source_length": np.array([dataset.source_length], dtype=np.float32),
    })


def load_dataset(path, name: str | None = None) -> LabeledDataset:
    t = read_container(path)
    if "signals" not in t or "labels" not in t:
        raise DatasetError(f"{path}: not a dataset container (needs signals and labels)")
    sigs = [row.astype(np.float64) for row in t["signals"]]
    labels = [int(round(v)) for v in t["labels"]]
    src = int(t["source_length"][0]) if "source_length" in t else len(sigs[0])
    return LabeledDataset(name or Path(path).stem, sigs, labels, src)


def load_any(path) -> LabeledDataset:
    """TSV or binary container, chosen by content."""
    with open(path, "rb") as fh:
        head = fh.read(4)
    return load_dataset(path) if head == b"TPNT" else load_ucr_tsv(path)


def global_seed(default: int = 0) -> int:
    """Seed from TIMEPOINT_SEED when set, else ``default``."""
    raw = os.environ.get("TIMEPOINT_SEED")
    if raw is None or raw == "":
        return default
    try:
        return int(raw)
    except ValueError:
        raise DatasetError(f"TIMEPOINT_SEED must be an integer, got {raw!r}") from None


def check_length(x, name: str = "signal") -> None:
    if len(x) < MIN_LENGTH:
        raise DatasetError(f"{name} has {len(x)} samples; at least {MIN_LENGTH} are required")

