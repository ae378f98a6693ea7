import subprocess
import sys

import pytest

from cascade_embed import io
from cascade_embed.cli import EXIT_DATA, EXIT_NUMERIC, EXIT_OK, EXIT_USAGE, main
from cascade_embed.config import load_config
from cascade_embed.trainer import train


@pytest.fixture(scope="module")
def pipeline(tmp_path_factory):
    root = tmp_path_factory.mktemp("run")
    conf = root / "run.conf"
    conf.write_text("sim.target_size = 12.5\nsim.calibration_trials = 50\ntrain.iterations = 8\n"
                    "train.d = 20\nvirality.thetas = 0.9\nforest.n_trees = 10\nbench.repeats = 1\n")
    g, c = root / "graph.txt", root / "cascades.txt"
    assert main(["gen", "--config", str(conf), "--out", str(root), "--seed", "3"]) == EXIT_OK
    assert main(["simulate", str(g), "--config", str(conf), "--out", str(root), "--seed", "3"]) == EXIT_OK
    return root, conf, g, c


def test_full_pipeline_emits_all_artifacts(pipeline):
    root, conf, g, c = pipeline
    base = ["--config", str(conf), "--seed", "3"]
    assert main(["train", str(c), "--graph", str(g), "--out", str(root / "t"), *base]) == EXIT_OK
    emb = root / "t" / "embeddings.txt"
    assert main(["eval", str(emb), str(g), "--out", str(root / "e"), *base]) == EXIT_OK
    assert main(["predict", str(c), str(emb), "--out", str(root / "p"), *base]) == EXIT_OK
    assert main(["bench", str(c), "--worker-list", "1,2", "--out", str(root / "b"), *base]) == EXIT_OK
    for rel in ("graph.txt", "cascades.txt", "t/embeddings.txt", "t/trace.csv", "e/metrics.csv",
                "e/distances.csv", "p/f1_grid.csv", "b/bench.csv"):
        assert (root / rel).stat().st_size > 0, rel
    for d in ("", "t", "e", "p", "b"):
        assert (root / d / "config.resolved").exists() and (root / d / "seeds.csv").exists()
    header, rows = io.read_csv(root / "e" / "metrics.csv")
    assert header == ["metric", "value"] and [r[0] for r in rows] == ["k", "ami", "ars"]
    header, _ = io.read_csv(root / "b" / "bench.csv")
    assert header[:6] == ["workers", "iteration", "phase", "local_ms", "wait_ms", "messages_sent"]


def test_single_worker_cli_equals_direct_trainer(pipeline):
    root, conf, g, c = pipeline
    out = root / "w1"
    assert main(["train", str(c), "--graph", str(g), "--workers", "1", "--config", str(conf),
                 "--seed", "3", "--out", str(out)]) == EXIT_OK
    cascades = io.read_cascades(c)
    cfg = load_config(conf, {"seed": 3})
    direct = train(cascades, cfg.train(), node_count=io.read_graph(g).node_count)
    params, ids = io.read_embeddings(out / "embeddings.txt")
    assert params.same_as(direct.params)
    assert ids == [x.cascade_id for x in cascades]


def test_rerun_from_resolved_config_is_bitwise(pipeline):
    root, conf, g, c = pipeline
    first = root / "r1"
    assert main(["train", str(c), "--config", str(conf), "--seed", "3", "--out", str(first)]) == EXIT_OK
    second = root / "r2"
    assert main(["train", str(c), "--config", str(first / "config.resolved"), "--out", str(second)]) == EXIT_OK
    assert (first / "embeddings.txt").read_bytes() == (second / "embeddings.txt").read_bytes()
    assert (first / "trace.csv").read_bytes() == (second / "trace.csv").read_bytes()


def test_multi_worker_train(pipeline):
    root, conf, g, c = pipeline
    out = root / "w3"
    assert main(["train", str(c), "--workers", "3", "--partition", "hash", "--config", str(conf),
                 "--out", str(out)]) == EXIT_OK
    assert (out / "embeddings.txt").exists()


def test_malformed_cascade_line_exits_2(tmp_path, capsys):
    bad = tmp_path / "bad.txt"
    bad.write_text("cascade 0\ninf 1 0.0\ninf 2 soon\n")
    assert main(["train", str(bad), "--out", str(tmp_path)]) == EXIT_DATA
    assert "bad.txt:3:" in capsys.readouterr().err


@pytest.mark.parametrize("argv", [[], ["frobnicate"], ["train"], ["gen", "--workers", "two"]])
def test_usage_errors_exit_1(argv, tmp_path):
    assert main(argv) == EXIT_USAGE


def test_unknown_config_key_exits_1(tmp_path):
    conf = tmp_path / "c.conf"
    conf.write_text("train.speed = 3\n")
    assert main(["gen", "--config", str(conf), "--out", str(tmp_path)]) == EXIT_USAGE


def test_divergent_training_exits_3(pipeline, tmp_path):
    _, _, _, c = pipeline
    conf = tmp_path / "c.conf"
    conf.write_text("train.alpha = 1e300\ntrain.init_scale = 1\ntrain.clip = 0\ntrain.d = 5\n")
    assert main(["train", str(c), "--config", str(conf), "--out", str(tmp_path)]) == EXIT_NUMERIC


def test_module_entry_point(tmp_path):
    res = subprocess.run([sys.executable, "-m", "cascade_embed.cli", "--help"], capture_output=True, text=True)
    assert res.returncode == 0 and "simulate" in res.stdout
