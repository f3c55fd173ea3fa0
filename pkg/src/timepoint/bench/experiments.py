"""Experiment drivers: classification, runtime, robustness and alignment quality."""

from __future__ import annotations

import csv
import io
import time
from dataclasses import dataclass, field

import numpy as np

from ..align import align_features, compute_features, dense_dtw_map, knn_classify
from ..align.dtw import _accumulate, cost_matrix
from ..align.sparse import feature_cost
from ..cpab import CpabTransform, Tessellation, build_prior, grid, sample_theta, warp_signal
from ..keypoints import keypoint_budget
from ..synthalign import SynthConfig, generate_sample, make_training_pair
from .data import LabeledDataset

REPORT_COLUMNS = ("experiment", "dataset", "method", "ratio", "gamma", "accuracy", "wall_ms", "dp_cells")
METHODS = ("raw-dtw", "raw-softdtw", "tp-dtw", "tp-softdtw", "tp-raw-subsample")


@dataclass
class BenchReport:
    rows: list = field(default_factory=list)

    def add(self, experiment, dataset, method, ratio=1.0, gamma=None, accuracy=None, wall_ms=None, dp_cells=0, **extra):
        if accuracy is not None and not 0.0 <= accuracy <= 1.0:
            raise ValueError("accuracy must lie in [0, 1]")
        row = dict(experiment=experiment, dataset=dataset, method=method, ratio=ratio, gamma=gamma,
                   accuracy=accuracy, wall_ms=wall_ms, dp_cells=int(dp_cells))
        row.update(extra)
        self.rows.append(row)
        return row

    def extend(self, other: "BenchReport") -> "BenchReport":
        self.rows.extend(other.rows)
        return self

    def sorted(self) -> list:
        def key(r):
            return (r["experiment"], r["dataset"], r["method"], float(r["ratio"]),
                    -1.0 if r["gamma"] is None else float(r["gamma"]), str(r.get("variant", "")))
        return sorted(self.rows, key=key)

    def select(self, **conds) -> list:
        return [r for r in self.rows if all(r.get(k) == v for k, v in conds.items())]

    def to_csv(self, fh=None) -> str:
        extra = sorted({k for r in self.rows for k in r} - set(REPORT_COLUMNS))
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(REPORT_COLUMNS + tuple(extra))
        for r in self.sorted():
            w.writerow([_fmt(r.get(c)) for c in REPORT_COLUMNS + tuple(extra)])
        text = buf.getvalue()
        if fh is not None:
            fh.write(text)
        return text


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return f"{v:.6g}"
    return str(v)


def parse_method(method: str) -> dict:
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}; choose from {METHODS}")
    return {
        "uses_model": method.startswith("tp-"),
        "distance": "softdtw" if method.endswith("softdtw") else "dtw",
        "mode": "raw-subsample" if method == "tp-raw-subsample" else "descriptor",
    }


def classify(train: LabeledDataset, test: LabeledDataset, method: str, model=None, ratio: float = 1.0,
             gamma: float | None = None, metric: str = "cosine", use_nms: bool = True, k: int = 1):
    spec = parse_method(method)
    if spec["uses_model"] and model is None:
        raise ValueError(f"method {method} needs a trained checkpoint")
    if spec["distance"] == "softdtw" and gamma is None:
        raise ValueError(f"method {method} needs gamma")
    return knn_classify(
        train.signals, train.labels, test.signals, test.labels, k=k, distance=spec["distance"],
        gamma=gamma if gamma is not None else 1.0, model=model if spec["uses_model"] else None,
        ratio=ratio if spec["uses_model"] else None, mode=spec["mode"], cost=metric, use_nms=use_nms,
    )


def run_classification(datasets, methods=("raw-dtw", "tp-dtw"), model=None, ratios=(0.2,), gammas=(1.0,),
                       metric: str = "cosine", nms_options=(True,), timing: bool = False, k: int = 1,
                       experiment: str = "classification") -> BenchReport:
    """1-NN accuracy for every (dataset, method, ratio, gamma, nms) cell.

    ``datasets`` is an iterable of (train, test) pairs. Wall-clock columns are
    left empty unless ``timing`` is set, which keeps the CSV reproducible.
    """
    report = BenchReport()
    for method in methods:
        if parse_method(method)["uses_model"] and model is None:
            raise ValueError(f"method {method} needs a trained checkpoint")
    for train, test in datasets:
        for method in methods:
            spec = parse_method(method)
            m_ratios = ratios if spec["uses_model"] else (1.0,)
            m_gammas = gammas if spec["distance"] == "softdtw" else (None,)
            m_nms = nms_options if spec["uses_model"] else (True,)
            for ratio in m_ratios:
                for gamma in m_gammas:
                    for nms_on in m_nms:
                        res = classify(train, test, method, model, ratio, gamma, metric, nms_on, k)
                        extra = {}
                        if spec["uses_model"]:
                            extra = {"metric": metric, "nms": "on" if nms_on else "off"}
                        report.add(experiment, train.name, method, ratio, gamma, res.accuracy,
                                   res.wall_ms if timing else None, res.dp_cells, **extra)
    return report


def warped_prototype_benchmark(n_train: int = 150, n_test: int = 150, n_classes: int = 3, length: int = 512,
                               noise: float = 0.1, seed: int = 0) -> tuple[LabeledDataset, LabeledDataset]:
    """Classes are random prototypes; members are CPAB-warped, noisy copies."""
    rng = np.random.default_rng(seed)
    clean = SynthConfig(length=length, noise_sigma=0.0)
    protos = [generate_sample(clean, rng=rng).clean for _ in range(n_classes)]
    prior = build_prior()
    tess = Tessellation(prior.n_cells)

    def draw(n):
        labels = [i % n_classes for i in range(n)]
        sigs = []
        for lab in labels:
            warp = CpabTransform(sample_theta(prior, rng), tess)
            sigs.append(warp_signal(protos[lab], warp) + noise * rng.standard_normal(length))
        return sigs, labels

    tr, tr_l = draw(n_train)
    te, te_l = draw(n_test)
    name = f"warped-prototypes-{n_classes}c"
    return LabeledDataset(name, tr, tr_l), LabeledDataset(name, te, te_l)


def robustness(train: LabeledDataset, test: LabeledDataset, model, kind: str = "jitter", level: int = 1,
               ratio: float = 0.2, seed: int = 0, metric: str = "cosine") -> BenchReport:
    """Accuracy of raw DTW and TP+DTW on clean and perturbed test signals."""
    report = BenchReport()
    noisy = test.perturbed(kind, level, seed=seed)
    for variant, te in (("clean", test), (f"{kind}{level}", noisy)):
        for method in ("raw-dtw", "tp-dtw"):
            r = ratio if method == "tp-dtw" else 1.0
            res = classify(train, te, method, model, r, None, metric)
            report.add("robustness", train.name, method, r, None, res.accuracy, None, res.dp_cells, variant=variant)
    return report


def degradation(report: BenchReport, method: str, variant: str) -> float:
    clean = report.select(method=method, variant="clean")[0]["accuracy"]
    pert = report.select(method=method, variant=variant)[0]["accuracy"]
    return clean - pert


def benchmark_runtime(model, lengths=(50, 100, 200, 400, 800), ratios=(0.2, 1.0), n: int = 50, seed: int = 0,
                      metric: str = "cosine") -> BenchReport:
    """Wall-clock of all n x n distance computations, dense against sparse.

    The sparse timing includes the forward pass, keypoint sorting, NMS and
    the DTW recursions.
    """
    report = BenchReport()
    rng = np.random.default_rng(seed)
    for length in lengths:
        cfg = SynthConfig(length=max(length, 32))
        a = [_fit(generate_sample(cfg, rng=rng).signal, length) for _ in range(n)]
        b = [_fit(generate_sample(cfg, rng=rng).signal, length) for _ in range(n)]
        name = f"synthetic-L{length}"
        start = time.perf_counter()
        cells = 0
        for x in a:
            for y in b:
                c = cost_matrix(x, y, "euclidean")
                cells += c.size
                _accumulate(c)
        report.add("runtime", name, "raw-dtw", 1.0, None, None, (time.perf_counter() - start) * 1e3, cells)
        for ratio in ratios:
            if model is None:
                raise ValueError("sparse timings need a model")
            start = time.perf_counter()
            fa = compute_features(model, a, ratio)
            fb = compute_features(model, b, ratio)
            cells = 0
            for x in fa:
                for y in fb:
                    c = feature_cost(x, y, "descriptor", metric)
                    cells += c.size
                    _accumulate(c)
            report.add("runtime", name, "tp-dtw", ratio, None, None, (time.perf_counter() - start) * 1e3, cells)
    return report


def _fit(x, length):
    if len(x) == length:
        return x
    return np.interp(np.linspace(0, 1, length), np.linspace(0, 1, len(x)), x)


def expected_dp_cells(ratio: float, length: int, n_a: int, n_b: int) -> int:
    k = keypoint_budget(ratio, length)
    return k * k * n_a * n_b


def alignment_quality(model, n_pairs: int = 200, ratio: float = 0.2, seed: int = 0,
                      config: SynthConfig = SynthConfig(), metric: str = "cosine") -> dict:
    """Mean |estimated map - true map| in indices for sparse, dense and uniform maps.

    Pairs come from the synthetic generator, so the warp is known: index s of
    the original sits at T^-1(s / (L - 1)) * (L - 1) in the warped copy.
    """
    prior = build_prior()
    rng = np.random.default_rng(seed)
    n = config.length
    pairs = [make_training_pair(config, prior, rng=rng) for _ in range(n_pairs)]
    feats = compute_features(model, [p.original.signal for p in pairs] + [p.warped.signal for p in pairs], ratio)
    tess = Tessellation(prior.n_cells)
    identity = np.arange(n, dtype=np.float64)
    err_tp, err_dense, err_uniform = [], [], []
    for k, p in enumerate(pairs):
        truth = CpabTransform(p.theta, tess).inverse(grid(n)) * (n - 1)
        sparse = align_features(feats[k], feats[n_pairs + k], "descriptor", metric)
        err_tp.append(np.mean(np.abs(sparse.dense_map - truth)))
        err_dense.append(np.mean(np.abs(dense_dtw_map(p.original.signal, p.warped.signal) - truth)))
        err_uniform.append(np.mean(np.abs(identity - truth)))
    return {"tp": float(np.mean(err_tp)), "dense": float(np.mean(err_dense)),
            "uniform": float(np.mean(err_uniform)), "n_pairs": n_pairs, "ratio": ratio}
