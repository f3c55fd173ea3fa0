import csv
import io

import numpy as np
import pytest

from timepoint.bench import LabeledDataset, save_ucr_tsv
from timepoint.cli import main
from timepoint.model import build_model


@pytest.fixture(scope="module")
def checkpoint(tmp_path_factory):
    path = tmp_path_factory.mktemp("ckpt") / "tiny.tpnt"
    build_model("tiny", seed=0).save(path)
    return path


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


def rows(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_generate_is_deterministic(tmp_path, capsys):
    a, b = tmp_path / "a.tpnt", tmp_path / "b.tpnt"
    code, out1, _ = run(capsys, "generate", "--n", 4, "--length", 512, "--seed", 1, "--out", a)
    assert code == 0
    run(capsys, "generate", "--n", 4, "--length", 512, "--seed", 1, "--out", b)
    assert a.read_bytes() == b.read_bytes()
    assert len(rows(out1)) == 4


def test_unknown_flag_is_usage_error(capsys):
    code, _, err = run(capsys, "generate", "--bogus")
    assert code == 2
    assert "usage" in err


def test_knn_tp_without_checkpoint(tmp_path, capsys):
    ds = LabeledDataset("t", [np.zeros(16), np.ones(16)], [0, 1])
    save_ucr_tsv(ds, tmp_path / "t.tsv")
    code, _, err = run(capsys, "knn", "--train", tmp_path / "t.tsv", "--test", tmp_path / "t.tsv", "--method", "tp-dtw")
    assert code == 2
    assert "checkpoint" in err


def test_knn_raw(tmp_path, capsys):
    ds = LabeledDataset("t", [np.zeros(16), np.ones(16)], [0, 1])
    save_ucr_tsv(ds, tmp_path / "t.tsv")
    code, out, _ = run(capsys, "knn", "--train", tmp_path / "t.tsv", "--test", tmp_path / "t.tsv")
    assert code == 0
    (row,) = rows(out)
    assert float(row["accuracy"]) == 1.0


def test_knn_tp_output_is_byte_stable(tmp_path, capsys, checkpoint):
    rng = np.random.default_rng(0)
    ds = LabeledDataset("r", [rng.standard_normal(64) for _ in range(4)], [0, 1, 0, 1])
    save_ucr_tsv(ds, tmp_path / "r.tsv")
    argv = ["knn", "--checkpoint", checkpoint, "--train", tmp_path / "r.tsv", "--test", tmp_path / "r.tsv",
            "--method", "tp-dtw", "--ratio", "0.25"]
    _, first, _ = run(capsys, *argv)
    _, second, _ = run(capsys, *argv)
    assert first == second


def test_align_self(tmp_path, capsys, checkpoint):
    x = np.sin(np.linspace(0, 10, 128))
    f = tmp_path / "f1.txt"
    np.savetxt(f, x)
    code, out, _ = run(capsys, "align", "--checkpoint", checkpoint, "--a", f, "--b", f, "--ratio", 0.2)
    assert code == 0
    (row,) = rows(out)
    assert float(row["mean_identity_deviation"]) <= 1.0


def test_extract(tmp_path, capsys, checkpoint):
    ds = LabeledDataset("t", [np.sin(np.linspace(0, 9, 50)), np.cos(np.linspace(0, 9, 50))], [0, 1])
    save_ucr_tsv(ds, tmp_path / "t.tsv")
    code, out, _ = run(capsys, "extract", "--checkpoint", checkpoint, "--input", tmp_path / "t.tsv", "--ratio", 0.2)
    assert code == 0
    got = rows(out)
    assert len(got) == 2 * 10
    assert all(0 <= int(r["index"]) < 50 for r in got)


def test_missing_input_is_runtime_error(tmp_path, capsys, checkpoint):
    code, _, err = run(capsys, "extract", "--checkpoint", checkpoint, "--input", tmp_path / "nope.tsv")
    assert code == 1
    assert err


def test_train_and_finetune(tmp_path, capsys):
    ck = tmp_path / "m.tpnt"
    code, out, _ = run(capsys, "train", "--iters", 2, "--batch", 2, "--preset", "tiny", "--length", 64,
                       "--seed", 0, "--out", ck)
    assert code == 0 and ck.exists()
    assert len(rows(out)) == 2
    data = tmp_path / "data"
    data.mkdir()
    rng = np.random.default_rng(0)
    save_ucr_tsv(LabeledDataset("d", [np.sin(np.linspace(0, rng.uniform(3, 9), 40)) for _ in range(4)], [0] * 4),
                 data / "d.tsv")
    code, out, _ = run(capsys, "finetune", "--checkpoint", ck, "--data-dir", data, "--epochs", 1,
                       "--length", 64, "--batch", 2, "--out", tmp_path / "f.tpnt")
    assert code == 0
    assert len(rows(out)) == 2


def test_bench_runtime_needs_checkpoint(capsys):
    code, _, err = run(capsys, "bench-runtime", "--lengths", "50", "--n", 2)
    assert code == 2


def test_bench_runtime(capsys, checkpoint):
    code, out, _ = run(capsys, "bench-runtime", "--checkpoint", checkpoint, "--lengths", "50", "--ratios", "0.2",
                       "--n", 2)
    assert code == 0
    got = {r["method"]: r for r in rows(out)}
    assert int(got["raw-dtw"]["dp_cells"]) == 4 * 2500
    assert int(got["tp-dtw"]["dp_cells"]) == 4 * 100


def test_robustness_cli(capsys, checkpoint, monkeypatch):
    import timepoint.cli as cli
    from timepoint.bench import warped_prototype_benchmark

    monkeypatch.setattr(cli, "warped_prototype_benchmark",
                        lambda seed: warped_prototype_benchmark(n_train=6, n_test=3, length=64, seed=seed))
    code, out, _ = run(capsys, "robustness", "--checkpoint", checkpoint, "--kind", "jitter", "--level", 1,
                       "--ratio", 0.25)
    assert code == 0
    assert len(rows(out)) == 4
