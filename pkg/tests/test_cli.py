import json

import pytest

from disconet import ConfigError, save_csv
from disconet.cli import SCHEMA_VERSION, config_hash, load_config, main
from disconet.rng import substream
from disconet.synth import gen_conditional_bimodal


def write_config(path, doc):
    doc = dict(doc)
    doc.setdefault("schema_version", SCHEMA_VERSION)
    path.write_text(json.dumps(doc, indent=2) + "\n")
    return str(path)


SMALL_NET = {"x_dim": 1, "y_dim": 1, "z_dim": 2,
             "encoder_widths": [4], "decoder_widths": [4]}
SMALL_TRAIN = {"lr": 0.01, "batch_size": 16, "epochs": 2, "seed": 0, "val_count": 8}
SMALL_OBJECTIVE = {"gamma": 0.5, "num_candidates": 3}
SMALL_DATA = {"generator": "conditional_bimodal", "n": 48}


def train_doc():
    return {
        "net": dict(SMALL_NET),
        "objective": dict(SMALL_OBJECTIVE),
        "train": dict(SMALL_TRAIN),
        "data": dict(SMALL_DATA),
    }


def test_load_config_fills_defaults(tmp_path):
    path = write_config(tmp_path / "c.json", train_doc())
    config = load_config(path, ("net", "objective", "train", "data"))
    assert config["net"]["noise_enabled"] is True
    assert config["objective"]["beta"] == 1.0
    assert config["train"]["momentum"] == 0.9
    assert config["data"]["noise_sigma"] == 0.1
    assert config["schema_version"] == SCHEMA_VERSION


def test_load_config_rejections(tmp_path):
    base = train_doc()

    path = write_config(tmp_path / "c1.json", {**base, "mystery": {}})
    with pytest.raises(ConfigError, match="unknown section"):
        load_config(path, ())

    bad_net = {**base, "net": {**SMALL_NET, "depth": 3}}
    path = write_config(tmp_path / "c2.json", bad_net)
    with pytest.raises(ConfigError, match="unknown key net.depth"):
        load_config(path, ())

    bad_type = {**base, "train": {**SMALL_TRAIN, "lr": "fast"}}
    path = write_config(tmp_path / "c3.json", bad_type)
    with pytest.raises(ConfigError, match="train.lr"):
        load_config(path, ())

    # booleans must not pass for ints
    bad_bool = {**base, "train": {**SMALL_TRAIN, "epochs": True}}
    path = write_config(tmp_path / "c4.json", bad_bool)
    with pytest.raises(ConfigError, match="train.epochs"):
        load_config(path, ())

    path = tmp_path / "c5.json"
    path.write_text(json.dumps({"net": SMALL_NET}))
    with pytest.raises(ConfigError, match="schema_version"):
        load_config(str(path), ())

    path = write_config(tmp_path / "c6.json", {"schema_version": 99, **base})
    with pytest.raises(ConfigError, match="schema_version"):
        load_config(path, ())

    path = write_config(tmp_path / "c7.json", {"objective": SMALL_OBJECTIVE})
    with pytest.raises(ConfigError, match="missing required section"):
        load_config(path, ("net",))

    path = write_config(tmp_path / "c8.json", {"net": {"x_dim": 1}})
    with pytest.raises(ConfigError, match="missing required key net.y_dim"):
        load_config(path, ("net",))

    with pytest.raises(ConfigError, match="cannot read"):
        load_config(str(tmp_path / "absent.json"), ())

    path = tmp_path / "c9.json"
    path.write_text("{not json")
    with pytest.raises(ConfigError, match="not valid JSON"):
        load_config(str(path), ())


def test_config_hash_canonical(tmp_path):
    a = {"schema_version": 1, "net": {"x_dim": 1, "y_dim": 2}}
    b = {"net": {"y_dim": 2, "x_dim": 1}, "schema_version": 1}
    assert config_hash(a) == config_hash(b)
    c = {"schema_version": 1, "net": {"x_dim": 1, "y_dim": 3}}
    assert config_hash(a) != config_hash(c)


def test_seed_override(tmp_path):
    path = write_config(tmp_path / "c.json", train_doc())
    base = load_config(path, ("train",))
    overridden = load_config(path, ("train",), seed_override=9)
    assert overridden["train"]["seed"] == 9
    assert config_hash(base) != config_hash(overridden)

    toy = write_config(tmp_path / "t.json", {"toy": {"seeds": [0, 1, 2]}})
    overridden = load_config(toy, ("toy",), seed_override=4)
    assert overridden["toy"]["seeds"] == [4]


def test_toy_degenerate_grid(tmp_path):
    """A one-point grid forces both fits onto that point, so the cross
    table ties and strict dominance fails with exit code 1."""
    doc = {
        "toy": {
            "seeds": [0],
            "n_train": 40,
            "n_test": 40,
            "m": 8,
            "mu_values": [0.5],
            "sigma_values": [0.7],
        }
    }
    cfg = write_config(tmp_path / "toy.json", doc)
    out = tmp_path / "out"
    assert main(["toy", "--config", cfg, "--out", str(out)]) == 1
    fitted = json.loads((out / "fitted_params.json").read_text())
    for fit in fitted["per_seed"][0]["fits"].values():
        assert fit == {"mu1": 0.5, "mu2": 0.5, "sigma1": 0.7, "sigma2": 0.7}
    assert fitted["diagonal_dominance"] is False
    text = (out / "cross_table.csv").read_text()
    assert text.startswith("# config_sha256=")
    assert "train_loss,task_dim1,task_dim1_sem,task_dim2,task_dim2_sem" in text


def test_train_artifacts_and_rerun_identical(tmp_path):
    cfg = write_config(tmp_path / "train.json", train_doc())
    out1 = tmp_path / "run1"
    out2 = tmp_path / "run2"
    assert main(["train", "--config", cfg, "--out", str(out1)]) == 0
    assert main(["train", "--config", cfg, "--out", str(out2)]) == 0
    for name in ("checkpoint.txt", "history.csv", "summary.json"):
        assert (out1 / name).read_bytes() == (out2 / name).read_bytes()
    summary = json.loads((out1 / "summary.json").read_text())
    config = load_config(cfg, ("net", "objective", "train", "data"))
    assert summary["config_sha256"] == config_hash(config)
    assert summary["epochs"] == 2
    assert summary["param_count"] == (1 + 1) * 4 + (6 + 1) * 4 + (4 + 1) * 1
    header = (out1 / "history.csv").read_text().splitlines()
    assert "epoch,train_objective,val_objective" in header[1]


def test_train_seed_flag_changes_model(tmp_path):
    cfg = write_config(tmp_path / "train.json", train_doc())
    out1 = tmp_path / "a"
    out2 = tmp_path / "b"
    assert main(["train", "--config", cfg, "--out", str(out1)]) == 0
    assert main(["train", "--config", cfg, "--out", str(out2), "--seed", "3"]) == 0
    assert (out1 / "checkpoint.txt").read_text() != (out2 / "checkpoint.txt").read_text()


def test_train_data_override(tmp_path):
    x, y = gen_conditional_bimodal(32, substream(11, "cli-test-data"))
    data = tmp_path / "data.csv"
    save_csv(data, x, y)
    doc = train_doc()
    doc["data"] = {"generator": None, "path": None}
    doc["train"]["val_count"] = 4
    cfg = write_config(tmp_path / "train.json", doc)
    out = tmp_path / "out"
    assert main(["train", "--config", cfg, "--out", str(out),
                 "--data", str(data)]) == 0
    assert (out / "checkpoint.txt").exists()
    # without the override there is no data source at all
    assert main(["train", "--config", cfg, "--out", str(out)]) == 2


def _trained_checkpoint(tmp_path):
    cfg = write_config(tmp_path / "train.json", train_doc())
    out = tmp_path / "trained"
    assert main(["train", "--config", cfg, "--out", str(out)]) == 0
    return out / "checkpoint.txt"


def test_eval_paths(tmp_path):
    ckpt = _trained_checkpoint(tmp_path)
    doc = {"data": dict(SMALL_DATA), "eval": {"num_candidates": 3,
                                              "distances": [0.5, 1.0]}}
    cfg = write_config(tmp_path / "eval.json", doc)
    out = tmp_path / "ev"
    assert main(["eval", "--config", cfg, "--out", str(out),
                 "--checkpoint", str(ckpt)]) == 0
    doc_json = json.loads((out / "metrics.json").read_text())
    assert doc_json["counts"] == {"frames": 48, "candidates": 3, "joints": 1}
    assert doc_json["probloss"]["value"] > 0.0
    assert set(doc_json["ff"]) == {"0.5", "1"}
    assert "config_sha256" in doc_json
    lines = (out / "metrics.csv").read_text().splitlines()
    assert lines[1] == "metric,value,sem"

    # deterministic rerun
    out2 = tmp_path / "ev2"
    assert main(["eval", "--config", cfg, "--out", str(out2),
                 "--checkpoint", str(ckpt)]) == 0
    assert (out / "metrics.json").read_bytes() == (out2 / "metrics.json").read_bytes()


def test_eval_zero_noise_and_base(tmp_path):
    ckpt = _trained_checkpoint(tmp_path)
    doc = {"data": dict(SMALL_DATA),
           "eval": {"num_candidates": 3, "distances": [1.0], "zero_noise": True}}
    cfg = write_config(tmp_path / "eval.json", doc)
    out = tmp_path / "zn"
    assert main(["eval", "--config", cfg, "--out", str(out),
                 "--checkpoint", str(ckpt)]) == 0

    doc["eval"]["base_sigma"] = 0.25
    cfg = write_config(tmp_path / "eval2.json", doc)
    out_base = tmp_path / "base"
    assert main(["eval", "--config", cfg, "--out", str(out_base),
                 "--checkpoint", str(ckpt)]) == 0
    base_json = json.loads((out_base / "metrics.json").read_text())
    assert base_json["counts"]["candidates"] == 3

    # a missing checkpoint is an I/O failure, not a config failure
    assert main(["eval", "--config", cfg, "--out", str(out_base),
                 "--checkpoint", str(tmp_path / "nope.txt")]) == 3


def test_eval_rejects_bad_csv(tmp_path):
    ckpt = _trained_checkpoint(tmp_path)
    bad = tmp_path / "bad.csv"
    bad.write_text("1.0,2.0,3.0\n")  # three fields for a 1/1 net
    doc = {"data": {"generator": None}, "eval": {"num_candidates": 3,
                                                 "distances": [1.0]}}
    cfg = write_config(tmp_path / "eval.json", doc)
    assert main(["eval", "--config", cfg, "--out", str(tmp_path / "o"),
                 "--checkpoint", str(ckpt), "--data", str(bad)]) == 3


def test_gradcheck_pass_and_corrupt(tmp_path, capsys):
    # default num_examples: this fixture sits clear of the beta = 1 kinks,
    # where a finite-difference step across coinciding candidates would
    # report a false mismatch
    doc = {"net": dict(SMALL_NET),
           "gradcheck": {"gammas": [0.0, 0.5], "betas": [1.0, 1.5],
                         "num_candidates": 3}}
    cfg = write_config(tmp_path / "gc.json", doc)
    assert main(["gradcheck", "--config", cfg]) == 0
    out = capsys.readouterr().out
    assert "PASS" in out
    assert main(["gradcheck", "--config", cfg, "--corrupt-analytic"]) == 1
    out = capsys.readouterr().out
    assert "FAIL" in out


def test_sweep_requires_validation(tmp_path):
    doc = train_doc()
    doc["train"]["val_count"] = 0
    doc["sweep"] = {"seeds": [0], "l2_values": [0.001]}
    cfg = write_config(tmp_path / "sweep.json", doc)
    assert main(["sweep", "--config", cfg, "--out", str(tmp_path / "o")]) == 2


def test_sweep_artifacts(tmp_path):
    doc = train_doc()
    doc["sweep"] = {"seeds": [0], "l2_values": [0.0001, 0.01]}
    cfg = write_config(tmp_path / "sweep.json", doc)
    out = tmp_path / "sw"
    assert main(["sweep", "--config", cfg, "--out", str(out)]) == 0
    best = json.loads((out / "best.json").read_text())
    assert best["l2"] in (0.0001, 0.01)
    assert best["seed"] == 0
    assert (out / "best_checkpoint.txt").exists()
    lines = (out / "sweep.csv").read_text().splitlines()
    # comment, header, one row per (seed, l2) combination
    assert len(lines) == 2 + 2
