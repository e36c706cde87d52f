import json
import subprocess
import sys

import numpy as np
import pytest

from roadmap.cli import main
from roadmap.train import save_checkpoint


@pytest.fixture(scope="module")
def workdir(tmp_path_factory):
    d = tmp_path_factory.mktemp("cli")
    assert main(["gen", "--classes", "8", "--per-class", "16", "--dim", "32", "--sigma", "0.1",
                 "--seed", "7", "--out", str(d / "d.csv")]) == 0
    return d


@pytest.fixture(scope="module")
def trained(workdir):
    args = ["train", "--loss", "roadmap", "--data", str(workdir / "d.csv"), "--batch", "32",
            "--m", "4", "--epochs", "50", "--seed", "1",
            "--ckpt", str(workdir / "m.bin"), "--history", str(workdir / "h.jsonl")]
    assert main(args) == 0
    return workdir


def _json(capsys):
    return json.loads(capsys.readouterr().out)


def test_gen_rows_and_determinism(workdir):
    lines = (workdir / "d.csv").read_text().splitlines()
    assert len(lines) == 129
    main(["gen", "--classes", "8", "--per-class", "16", "--dim", "32", "--sigma", "0.1",
          "--seed", "7", "--out", str(workdir / "d2.csv")])
    assert (workdir / "d.csv").read_bytes() == (workdir / "d2.csv").read_bytes()


def test_gen_rejects_one_class(workdir, capsys):
    assert main(["gen", "--classes", "1", "--out", str(workdir / "x.csv")]) == 1
    assert "2 classes" in capsys.readouterr().err


def test_train_outputs(trained):
    hist = [json.loads(l) for l in (trained / "h.jsonl").read_text().splitlines()]
    assert len(hist) == 50 and hist[-1]["metrics"]["map_at_r"] >= 0.95
    assert (trained / "m.bin").stat().st_size == 16 + 32 * 16 * 8


def test_train_smoothap_and_bad_flags(workdir, capsys):
    d = str(workdir / "d.csv")
    assert main(["train", "--loss", "smoothap", "--data", d, "--epochs", "2",
                 "--ckpt", str(workdir / "s.bin"), "--history", str(workdir / "s.jsonl")]) == 0
    assert main(["train", "--data", d, "--lambda", "1.2"]) == 1
    assert "--lambda" in capsys.readouterr().err
    assert main(["train", "--data", d, "--alpha", "0.5", "--beta", "0.6"]) == 1
    assert main(["train", "--data", str(workdir / "missing.csv")]) == 2
    assert main(["train", "--data", d, "--batch", "128", "--m", "4", "--epochs", "1",
                 "--ckpt", str(workdir / "z.bin"), "--history", str(workdir / "z.jsonl")]) == 2


def test_eval(trained, capsys):
    assert main(["eval", "--data", str(trained / "d.csv"), "--ckpt", str(trained / "m.bin"),
                 "--ks", "1,2,4,8"]) == 0
    out = _json(capsys)
    assert sorted(k for k in out if k.startswith("recall@")) == ["recall@1", "recall@2", "recall@4", "recall@8"]
    assert main(["eval", "--data", str(trained / "d.csv"), "--ckpt", str(trained / "nope.bin")]) == 2


def test_eval_perfect_clusters(tmp_path, capsys):
    from roadmap.train import write_csv

    x = np.repeat(np.eye(4), 3, axis=0)
    write_csv(tmp_path / "p.csv", x, np.repeat(np.arange(4), 3))
    save_checkpoint(np.eye(4), tmp_path / "p.bin")
    assert main(["eval", "--data", str(tmp_path / "p.csv"), "--ckpt", str(tmp_path / "p.bin")]) == 0
    out = _json(capsys)
    assert all(out[k] == 1.0 for k in out if k != "queries")


def test_dg(trained, capsys):
    base = ["dg", "--data", str(trained / "d.csv"), "--ckpt", str(trained / "m.bin")]
    assert main(base + ["--batches", "4", "--alpha", "0.9", "--beta", "0.6"]) == 0
    out = _json(capsys)
    assert {"dg", "bound_worst", "bound_refined"} <= set(out)
    assert main(base + ["--batches", "1"]) == 0
    assert _json(capsys)["dg"] == 0.0
    # 16 per class over 16 batches leaves the query's own batch without a positive
    assert main(base + ["--batches", "16"]) == 2
    assert "query" in capsys.readouterr().err


def test_gradcheck(capsys):
    assert main(["gradcheck", "--loss", "supap", "--trials", "100", "--tol", "1e-4"]) == 0
    assert _json(capsys)["passed"] is True
    assert main(["gradcheck", "--loss", "roadmap", "--trials", "20"]) == 0
    capsys.readouterr()
    assert main(["gradcheck", "--loss", "roadmap", "--trials", "20", "--tol", "1e-12"]) == 2
    assert _json(capsys)["passed"] is False


def test_sweep(workdir, capsys):
    out = workdir / "s.csv"
    args = ["sweep", "--axis", "lambda", "--values", "0,1", "--seeds", "0", "--epochs", "2",
            "--data", str(workdir / "d.csv"), "--out", str(out)]
    assert main(args) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "value,map_at_r,seed" and len(lines) == 3
    bad = ["sweep", "--axis", "margin", "--values", "0", "--data", str(workdir / "d.csv"), "--out", str(out)]
    assert main(bad) == 1
    assert main(["sweep", "--axis", "nope", "--values", "1", "--data", "x", "--out", "y"]) == 1


def test_toy(capsys):
    assert main(["toy"]) == 0
    out = _json(capsys)
    assert out["smoothap"]["upper_bound"] is False and out["supap"]["upper_bound"] is True
    assert out["supap"]["grad"][2] > 0


def test_module_entry_point():
    r = subprocess.run([sys.executable, "-m", "roadmap", "--help"], capture_output=True, text=True)
    assert r.returncode == 0 and "gradcheck" in r.stdout
