"""Command-line entry point.

Every subcommand writes CSV to stdout (or to --out where a file is the
natural product). Exit status: 0 on success, 2 on usage errors, 1 when the
run itself fails.
"""

from __future__ import annotations

import argparse
import contextlib
import csv
import logging
import sys
from pathlib import Path

import numpy as np

from .align import align_sparse
from .bench import (
    METHODS,
    BenchReport,
    benchmark_runtime,
    global_seed,
    load_any,
    load_ucr_split,
    resample,
    robustness,
    run_classification,
    warped_prototype_benchmark,
)
from .bench.data import DatasetError, LabeledDataset
from .cpab import build_prior
from .keypoints import extract_keypoints
from .model import PRESETS, TimePointModel, build_model
from .synthalign import SynthConfig, make_training_pair
from .tensornet import write_container
from .training import TrainConfig, finetune, train, write_trace

log = logging.getLogger("timepoint")


class UsageError(Exception):
    pass


def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _ints(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _ratio(text: str) -> float:
    v = float(text)
    if not 0 < v <= 1:
        raise argparse.ArgumentTypeError("ratio must lie in (0, 1]")
    return v


@contextlib.contextmanager
def _open_out(path):
    if not path:
        yield sys.stdout
        return
    with open(path, "w", newline="") as fh:
        yield fh


def _load_model(path) -> TimePointModel:
    if not path:
        raise UsageError("this command needs --checkpoint")
    return TimePointModel.load(path)


def load_series(path) -> np.ndarray:
    """A single series: numbers separated by whitespace, commas or tabs."""
    text = Path(path).read_text().replace(",", " ")
    try:
        values = np.array([float(v) for v in text.split()], dtype=np.float64)
    except ValueError as exc:
        raise DatasetError(f"{path}: {exc}") from None
    if values.size < 16:
        raise DatasetError(f"{path}: a series needs at least 16 values, got {values.size}")
    if np.isnan(values).any():
        raise DatasetError(f"{path}: missing values (NaN) are not supported")
    return values


def cmd_generate(args):
    seed = args.seed if args.seed is not None else global_seed()
    cfg = SynthConfig(length=args.length, rng_seed=seed)
    prior = build_prior()
    rng = np.random.default_rng(seed)
    pairs = [make_training_pair(cfg, prior, rng=rng) for _ in range(args.n)]
    if args.format == "tsv":
        with open(args.out, "w") as fh:
            for p in pairs:
                fh.write("\t".join(["0"] + [repr(float(v)) for v in p.original.signal.astype(np.float32)]) + "\n")
    else:
        write_container(args.out, {
            "signals": np.stack([p.original.signal for p in pairs]).astype(np.float32),
            "labels": np.zeros(args.n, dtype=np.float32),
            "masks": np.stack([p.original.kp_mask for p in pairs]).astype(np.float32),
            "thetas": np.stack([p.theta for p in pairs]).astype(np.float32),
            "warped": np.stack([p.warped.signal for p in pairs]).astype(np.float32),
            "warped_masks": np.stack([p.warped.kp_mask for p in pairs]).astype(np.float32),
        })
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(["index", "n_keypoints", "n_warped_keypoints", "n_correspondences"])
    for i, p in enumerate(pairs):
        w.writerow([i, int(p.original.kp_mask.sum()), int(p.warped.kp_mask.sum()), len(p.correspondences)])


def cmd_train(args):
    seed = args.seed if args.seed is not None else global_seed()
    model = build_model(args.preset, seed=seed)
    cfg = TrainConfig(iters=args.iters, batch=args.batch, base_lr=args.lr, seed=seed,
                      synth=SynthConfig(length=args.length))
    model, trace = train(model, cfg)
    model.save(args.out)
    with _open_out(args.trace) as fh:
        write_trace(trace, fh)


def _read_folder(folder, length):
    folder = Path(folder)
    files = sorted(list(folder.glob("*.tsv")) + list(folder.glob("*.tpnt")))
    if not files:
        raise DatasetError(f"{folder}: no .tsv or .tpnt files")
    signals = []
    for f in files:
        signals.extend(resample(s, length) for s in load_any(f).signals)
    return signals


def cmd_finetune(args):
    model = _load_model(args.checkpoint)
    signals = _read_folder(args.data_dir, args.length)
    seed = args.seed if args.seed is not None else global_seed()
    model, trace = finetune(model, signals, args.epochs, build_prior(), batch=args.batch, base_lr=args.lr, seed=seed)
    model.save(args.out)
    write_trace(trace, sys.stdout)


def cmd_extract(args):
    model = _load_model(args.checkpoint)
    data = load_any(args.input)
    with _open_out(args.out) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["series", "index", "score"])
        for i, x in enumerate(data.signals):
            scores, _ = model.predict(resample(x, _multiple_of_8(len(x))))
            scores = np.interp(np.linspace(0, 1, len(x)), np.linspace(0, 1, len(scores)), scores)
            for t in extract_keypoints(scores, args.ratio):
                w.writerow([i, int(t), f"{scores[t]:.6f}"])


def _multiple_of_8(n):
    return max(16, -(-n // 8) * 8)


def cmd_align(args):
    model = _load_model(args.checkpoint)
    a, b = load_series(args.a), load_series(args.b)
    res = align_sparse(a, b, model, args.ratio)
    scale = (len(b) - 1) / (len(a) - 1)
    deviation = float(np.mean(np.abs(res.dense_map - np.arange(len(a)) * scale)))
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(["kp_a", "kp_b", "dp_cells", "path_cost", "mean_identity_deviation"])
    w.writerow([len(res.kp_indices_a), len(res.kp_indices_b), res.dp_cells,
                f"{res.kp_path.total_cost:.6f}", f"{deviation:.6f}"])
    if args.map_out:
        with open(args.map_out, "w", newline="") as fh:
            mw = csv.writer(fh, lineterminator="\n")
            mw.writerow(["index_a", "index_b"])
            for t, v in enumerate(res.dense_map):
                mw.writerow([t, f"{v:.4f}"])


def _prepare(ds: LabeledDataset, length):
    return ds.resampled(length) if length else ds


def cmd_knn(args):
    if args.method.startswith("tp-") and not args.checkpoint:
        raise UsageError(f"method {args.method} needs --checkpoint")
    if args.method.endswith("softdtw") and args.gamma is None:
        raise UsageError(f"method {args.method} needs --gamma")
    model = _load_model(args.checkpoint) if args.method.startswith("tp-") else None
    train_ds = _prepare(load_any(args.train), args.length)
    test_ds = _prepare(load_any(args.test), args.length)
    report = run_classification(
        [(train_ds, test_ds)], methods=(args.method,), model=model, ratios=(args.ratio,),
        gammas=(args.gamma,), metric=args.metric, nms_options=(not args.no_nms,), timing=args.timing, k=args.k,
        experiment="knn",
    )
    with _open_out(args.out) as fh:
        report.to_csv(fh)


def cmd_bench_runtime(args):
    if not args.checkpoint:
        raise UsageError("bench-runtime needs --checkpoint for the keypoint model")
    model = _load_model(args.checkpoint)
    seed = args.seed if args.seed is not None else global_seed()
    report = benchmark_runtime(model, args.lengths, args.ratios, n=args.n, seed=seed)
    with _open_out(args.out) as fh:
        report.to_csv(fh)


def cmd_robustness(args):
    if not args.checkpoint:
        raise UsageError("robustness needs --checkpoint")
    model = _load_model(args.checkpoint)
    seed = args.seed if args.seed is not None else global_seed()
    report = BenchReport()
    for entry in args.datasets:
        if entry == "synthetic":
            tr, te = warped_prototype_benchmark(seed=seed)
        else:
            tr, te = load_ucr_split(entry)
            tr, te = tr.resampled(args.length), te.resampled(args.length)
        report.extend(robustness(tr, te, model, args.kind, args.level, args.ratio, seed=seed))
    with _open_out(args.out) as fh:
        report.to_csv(fh)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="timepoint", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="write synthetic signals with keypoint labels and warped copies")
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--length", type=int, default=512)
    g.add_argument("--seed", type=int)
    g.add_argument("--out", required=True)
    g.add_argument("--format", choices=("container", "tsv"), default="container")
    g.set_defaults(func=cmd_generate)

    t = sub.add_parser("train", help="train on freshly generated synthetic pairs")
    t.add_argument("--iters", type=int, default=2000)
    t.add_argument("--batch", type=int, default=16)
    t.add_argument("--lr", type=float, default=1e-4)
    t.add_argument("--preset", choices=sorted(PRESETS), default="desk")
    t.add_argument("--length", type=int, default=512)
    t.add_argument("--seed", type=int)
    t.add_argument("--out", required=True, help="checkpoint path")
    t.add_argument("--trace", help="loss trace CSV (default stdout)")
    t.set_defaults(func=cmd_train)

    f = sub.add_parser("finetune", help="fine-tune a checkpoint on a folder of TSV series")
    f.add_argument("--checkpoint", required=True)
    f.add_argument("--data-dir", required=True)
    f.add_argument("--epochs", type=int, default=10)
    f.add_argument("--batch", type=int, default=16)
    f.add_argument("--lr", type=float, default=1e-4)
    f.add_argument("--length", type=int, default=512)
    f.add_argument("--seed", type=int)
    f.add_argument("--out", required=True)
    f.set_defaults(func=cmd_finetune)

    e = sub.add_parser("extract", help="keypoints of every series in a dataset file")
    e.add_argument("--checkpoint", required=True)
    e.add_argument("--input", required=True)
    e.add_argument("--ratio", type=_ratio, default=0.2)
    e.add_argument("--out")
    e.set_defaults(func=cmd_extract)

    a = sub.add_parser("align", help="sparse alignment of two single-series files")
    a.add_argument("--checkpoint", required=True)
    a.add_argument("--a", required=True)
    a.add_argument("--b", required=True)
    a.add_argument("--ratio", type=_ratio, default=0.2)
    a.add_argument("--map-out", help="write the dense index map as CSV")
    a.set_defaults(func=cmd_align)

    k = sub.add_parser("knn", help="1-NN classification")
    k.add_argument("--checkpoint")
    k.add_argument("--train", required=True)
    k.add_argument("--test", required=True)
    k.add_argument("--method", choices=METHODS, default="raw-dtw")
    k.add_argument("--ratio", type=_ratio, default=0.2)
    k.add_argument("--gamma", type=float)
    k.add_argument("--k", type=int, default=1)
    k.add_argument("--metric", choices=("cosine", "euclidean"), default="cosine")
    k.add_argument("--no-nms", action="store_true")
    k.add_argument("--length", type=int, default=0, help="resample every series to this length first")
    k.add_argument("--timing", action="store_true", help="fill the wall_ms column")
    k.add_argument("--out")
    k.set_defaults(func=cmd_knn)

    b = sub.add_parser("bench-runtime", help="dense against sparse DTW wall-clock")
    b.add_argument("--checkpoint")
    b.add_argument("--lengths", type=_ints, default=[50, 100, 200, 400, 800])
    b.add_argument("--ratios", type=_floats, default=[0.2, 1.0])
    b.add_argument("--n", type=int, default=50)
    b.add_argument("--seed", type=int)
    b.add_argument("--out")
    b.set_defaults(func=cmd_bench_runtime)

    r = sub.add_parser("robustness", help="accuracy under jitter or blur")
    r.add_argument("--checkpoint")
    r.add_argument("--kind", choices=("jitter", "blur"), default="jitter")
    r.add_argument("--level", type=int, choices=(1, 2), default=1)
    r.add_argument("--datasets", nargs="+", default=["synthetic"],
                   help="archive-style folders, or 'synthetic' for the warped-prototype set")
    r.add_argument("--ratio", type=_ratio, default=0.2)
    r.add_argument("--length", type=int, default=512)
    r.add_argument("--seed", type=int)
    r.add_argument("--out")
    r.set_defaults(func=cmd_robustness)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"timepoint {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, OSError, RuntimeError) as exc:
        print(f"timepoint {args.command}: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
