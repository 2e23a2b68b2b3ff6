"""Experiment command line.

Subcommands: ``toy`` (2-D mixture cross table), ``train``, ``eval``,
``gradcheck``, and ``sweep`` (seed x L2 grid). Configs are JSON documents
with fixed sections and strict validation: any unknown section or key is
an error, and a ``schema_version`` tag is required. Every command's
randomness flows from the config's seed through named substreams, so a
rerun with the same config and seed writes byte-identical files. Every
output file embeds the SHA-256 hash of the effective config (after any
``--seed`` override).

Exit codes: 0 success; 1 a checked result condition failed (cross-table
dominance or gradient tolerance); 2 config error; 3 data error; 4 numeric
error.
"""

import argparse
import hashlib
import json
import math
import sys
from pathlib import Path

import numpy as np

from .autodiff import Graph, grad_check
from .errors import (
    ConfigError,
    DisconetError,
    NumericError,
    ParseError,
    SchemaError,
)
from .metrics import JointLayout, base_candidates, metrics_report
from .network import (
    NetConfig,
    NetworkParams,
    bind_params,
    grad_flat,
    init_params,
    predict_rows,
    sample_candidates,
)
from .objective import ObjectiveConfig, disco_objective_node
from .rng import derive_seed, substream
from .scoring import LossSpec
from .synth import GridSpec, gen_conditional_bimodal, load_csv, toy_cross_table
from .training import TrainConfig, train, train_val_split
from .metrics import probloss as probloss_metric

SCHEMA_VERSION = 1

_REQUIRED = object()


def _is_int(v):
    return isinstance(v, int) and not isinstance(v, bool)


def _is_num(v):
    return _is_int(v) or isinstance(v, float)


def _check_int(v):
    return _is_int(v)


def _check_float(v):
    return _is_num(v)


def _check_bool(v):
    return isinstance(v, bool)


def _check_str(v):
    return isinstance(v, str)


def _check_opt_str(v):
    return v is None or isinstance(v, str)


def _check_list_int(v):
    return isinstance(v, list) and len(v) > 0 and all(_is_int(x) for x in v)


def _check_list_int_or_empty(v):
    return isinstance(v, list) and all(_is_int(x) for x in v)


def _check_list_float(v):
    return isinstance(v, list) and len(v) > 0 and all(_is_num(x) for x in v)


def _check_opt_list_float(v):
    return v is None or _check_list_float(v)


_DEFAULT_MUS = [round(float(v), 10) for v in np.linspace(-2.0, 2.0, 9)]
_DEFAULT_SIGMAS = [round(float(v), 10) for v in np.linspace(0.3, 3.0, 10)]

# section -> key -> (checker, human-readable type, default or _REQUIRED)
_SCHEMA = {
    "net": {
        "x_dim": (_check_int, "int", _REQUIRED),
        "y_dim": (_check_int, "int", _REQUIRED),
        "z_dim": (_check_int, "int", 8),
        "encoder_widths": (_check_list_int_or_empty, "list of int", [64]),
        "decoder_widths": (_check_list_int_or_empty, "list of int", [64, 64]),
        "noise_enabled": (_check_bool, "bool", True),
    },
    "objective": {
        "gamma": (_check_float, "number", 0.5),
        "num_candidates": (_check_int, "int", 16),
        "beta": (_check_float, "number", 1.0),
        "weights": (_check_opt_list_float, "list of numbers or null", None),
    },
    "train": {
        "lr": (_check_float, "number", 0.01),
        "momentum": (_check_float, "number", 0.9),
        "l2": (_check_float, "number", 0.0),
        "batch_size": (_check_int, "int", 64),
        "epochs": (_check_int, "int", 100),
        "seed": (_check_int, "int", 0),
        "val_count": (_check_int, "int", 0),
        "checkpoint_every": (_check_int, "int", 0),
    },
    "data": {
        "generator": (_check_opt_str, "string or null", "conditional_bimodal"),
        "n": (_check_int, "int", 1000),
        "path": (_check_opt_str, "string or null", None),
        "noise_sigma": (_check_float, "number", 0.1),
    },
    "eval": {
        "num_candidates": (_check_int, "int", 16),
        "group_size": (_check_int, "int", 1),
        "distances": (_check_list_float, "list of numbers", [0.1, 0.25, 0.5, 1.0]),
        "zero_noise": (_check_bool, "bool", False),
        "base_sigma": (_check_float, "number", 0.0),
        "seed": (_check_int, "int", 0),
    },
    "toy": {
        "seeds": (_check_list_int, "list of int", [0, 1, 2, 3, 4]),
        "n_train": (_check_int, "int", 400),
        "n_test": (_check_int, "int", 400),
        "m": (_check_int, "int", 24),
        "gamma": (_check_float, "number", 0.5),
        "mu_values": (_check_list_float, "list of numbers", _DEFAULT_MUS),
        "sigma_values": (_check_list_float, "list of numbers", _DEFAULT_SIGMAS),
    },
    "gradcheck": {
        "gammas": (_check_list_float, "list of numbers", [0.0, 0.25, 0.5]),
        "betas": (_check_list_float, "list of numbers", [0.5, 1.0, 1.5]),
        "num_examples": (_check_int, "int", 4),
        "num_candidates": (_check_int, "int", 3),
        "seed": (_check_int, "int", 0),
        "step": (_check_float, "number", 1e-6),
        "tolerance": (_check_float, "number", 1e-4),
    },
    "sweep": {
        "seeds": (_check_list_int, "list of int", [0, 1, 2]),
        "l2_values": (_check_list_float, "list of numbers", [0.0001, 0.001, 0.01]),
    },
}


def load_config(path, required_sections, seed_override=None):
    """Load, validate, and normalize a config file.

    Unknown sections or keys, wrong value types, a missing or mismatched
    ``schema_version``, and missing required sections all raise
    ConfigError. Defaults are filled so callers see complete sections.
    """
    try:
        text = Path(path).read_text(encoding="utf8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigError(f"{path}: top level must be an object")
    if "schema_version" not in doc:
        raise ConfigError(f"{path}: missing schema_version")
    if doc["schema_version"] != SCHEMA_VERSION:
        raise ConfigError(
            f"{path}: schema_version {doc['schema_version']!r} != {SCHEMA_VERSION}"
        )
    config = {"schema_version": SCHEMA_VERSION}
    for section, body in doc.items():
        if section == "schema_version":
            continue
        if section not in _SCHEMA:
            raise ConfigError(f"{path}: unknown section {section!r}")
        if not isinstance(body, dict):
            raise ConfigError(f"{path}: section {section!r} must be an object")
        spec = _SCHEMA[section]
        out = {}
        for key, value in body.items():
            if key not in spec:
                raise ConfigError(f"{path}: unknown key {section}.{key}")
            checker, typename, _ = spec[key]
            if not checker(value):
                raise ConfigError(f"{path}: {section}.{key} must be {typename}, got {value!r}")
            out[key] = value
        config[section] = out
    for section in required_sections:
        if section not in config:
            raise ConfigError(f"{path}: missing required section {section!r}")
    for section, body in config.items():
        if section == "schema_version":
            continue
        for key, (checker, typename, default) in _SCHEMA[section].items():
            if key not in body:
                if default is _REQUIRED:
                    raise ConfigError(f"{path}: missing required key {section}.{key}")
                body[key] = default
    if seed_override is not None:
        if "train" in config:
            config["train"]["seed"] = seed_override
        if "eval" in config:
            config["eval"]["seed"] = seed_override
        if "gradcheck" in config:
            config["gradcheck"]["seed"] = seed_override
        if "toy" in config:
            config["toy"]["seeds"] = [seed_override]
        if "sweep" in config:
            config["sweep"]["seeds"] = [seed_override]
    return config


def config_hash(config):
    """SHA-256 of the canonical JSON form of the effective config."""
    canon = json.dumps(config, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode("utf8")).hexdigest()


def _write_json(path, doc):
    Path(path).write_text(json.dumps(doc, sort_keys=True, indent=2) + "\n", encoding="utf8")


def _write_csv(path, comments, header, rows):
    lines = [f"# {c}" for c in comments]
    lines.append(",".join(header))
    lines.extend(",".join(str(v) for v in row) for row in rows)
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf8")


def _fmt(x):
    return repr(float(x))


def _net_config(section):
    return NetConfig(
        x_dim=section["x_dim"],
        y_dim=section["y_dim"],
        z_dim=section["z_dim"],
        encoder_widths=tuple(section["encoder_widths"]),
        decoder_widths=tuple(section["decoder_widths"]),
        noise_enabled=section["noise_enabled"],
    )


def _objective_config(section):
    weights = section["weights"]
    loss = LossSpec(beta=float(section["beta"]), weights=tuple(weights) if weights else None)
    return ObjectiveConfig(
        gamma=float(section["gamma"]),
        num_candidates=section["num_candidates"],
        loss=loss,
    )


def _load_xy(config, data_override, seed, x_dim, y_dim):
    """Resolve the (x, y) dataset: explicit path, config path, or generator."""
    path = data_override or config["data"]["path"]
    if path is not None:
        return load_csv(path, x_dim, y_dim)
    generator = config["data"]["generator"]
    if generator is None:
        raise ConfigError("data.path and data.generator are both null")
    if generator == "conditional_bimodal":
        if (x_dim, y_dim) != (1, 1):
            raise ConfigError(
                f"generator 'conditional_bimodal' produces 1-D x and y, net wants {x_dim}/{y_dim}"
            )
        return gen_conditional_bimodal(
            config["data"]["n"], substream(seed, "data"), config["data"]["noise_sigma"]
        )
    raise ConfigError(f"unknown data.generator {generator!r}")


def cmd_toy(config, out_dir):
    """Fit the 2-D mixture under both weighted losses and cross-evaluate."""
    toy = config["toy"]
    grid = GridSpec(
        tuple(toy["mu_values"]),
        tuple(toy["mu_values"]),
        tuple(toy["sigma_values"]),
        tuple(toy["sigma_values"]),
    )
    result = toy_cross_table(
        seeds=toy["seeds"],
        grid=grid,
        n_train=toy["n_train"],
        n_test=toy["n_test"],
        gamma=float(toy["gamma"]),
        m=toy["m"],
    )
    digest = config_hash(config)
    names = result["losses"]
    header = ["train_loss"]
    for name in names:
        header += [f"task_{name}", f"task_{name}_sem"]
    rows = []
    for train_name in names:
        row = [train_name]
        for task_name in names:
            value, sem = result["aggregate"][train_name][task_name]
            row += [_fmt(value), _fmt(sem)]
        rows.append(row)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    _write_csv(out / "cross_table.csv", [f"config_sha256={digest}"], header, rows)
    _write_json(
        out / "fitted_params.json",
        {
            "config_sha256": digest,
            "losses": names,
            "per_seed": result["per_seed"],
            "aggregate": result["aggregate"],
            "diagonal_dominance": result["diagonal_dominance"],
        },
    )
    verdict = "holds" if result["diagonal_dominance"] else "fails"
    print(f"toy: cross table written to {out}/cross_table.csv; diagonal dominance {verdict}")
    return 0 if result["diagonal_dominance"] else 1


def _val_probloss(params, x_val, y_val, num_candidates, seed):
    rng = substream(seed, "summary-eval")
    sets = [
        sample_candidates(params, x_val[i], num_candidates, rng, index=i)
        for i in range(x_val.shape[0])
    ]
    return probloss_metric(sets, y_val)


def cmd_train(config, out_dir, data_override=None):
    """Train one model and write checkpoint, history, and summary."""
    net = _net_config(config["net"])
    objective = _objective_config(config["objective"])
    tc = config["train"]
    train_config = TrainConfig(
        objective=objective,
        lr=float(tc["lr"]),
        momentum=float(tc["momentum"]),
        l2=float(tc["l2"]),
        batch_size=tc["batch_size"],
        epochs=tc["epochs"],
        seed=tc["seed"],
        val_count=tc["val_count"],
        checkpoint_every=tc["checkpoint_every"],
    )
    data = _load_xy(config, data_override, tc["seed"], net.x_dim, net.y_dim)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    params, history = train(net, train_config, data, checkpoint_dir=str(out))
    digest = config_hash(config)
    params.save(out / "checkpoint.txt")
    _write_csv(
        out / "history.csv",
        [f"config_sha256={digest}"],
        ["epoch", "train_objective", "val_objective"],
        [[e.epoch, _fmt(e.train_objective), _fmt(e.val_objective)] for e in history.epochs],
    )
    final_val = history.final().val_objective
    summary = {
        "config_sha256": digest,
        "epochs": len(history.epochs),
        "final_train_objective": history.final().train_objective,
        "final_val_objective": None if math.isnan(final_val) else final_val,
        "param_count": params.size,
        "val_probloss": None,
        "val_probloss_sem": None,
    }
    if train_config.val_count:
        (_, _), (x_val, y_val) = train_val_split(data, train_config.val_count, tc["seed"])
        value, sem = _val_probloss(params, x_val, y_val, objective.num_candidates, tc["seed"])
        summary["val_probloss"] = value
        summary["val_probloss_sem"] = sem
    _write_json(out / "summary.json", summary)
    seconds = sum(e.seconds for e in history.epochs)
    print(
        f"train: {len(history.epochs)} epochs in {seconds:.1f}s, "
        f"final train objective {history.final().train_objective:.6f}, "
        f"outputs in {out}"
    )
    return 0


def cmd_eval(config, out_dir, checkpoint, data_override=None):
    """Evaluate a checkpoint: sampled candidates, pointwise metrics, report."""
    params = NetworkParams.load(checkpoint)
    net = params.config
    ev = config["eval"]
    seed = ev["seed"]
    x, y = _load_xy(config, data_override, seed, net.x_dim, net.y_dim)
    if x.shape[0] == 0:
        raise SchemaError("evaluation dataset is empty")
    k = ev["num_candidates"]
    layout = JointLayout.grouped(net.y_dim, ev["group_size"])
    if float(ev["base_sigma"]) > 0.0:
        point = _zero_noise_preds(params, x)
        jitter_rng = substream(seed, "base-jitter")
        sets = [
            base_candidates(point[i], k, float(ev["base_sigma"]), jitter_rng, index=i)
            for i in range(x.shape[0])
        ]
    else:
        rng = substream(seed, "eval-noise")
        sets = [sample_candidates(params, x[i], k, rng, index=i) for i in range(x.shape[0])]
    pointwise = _zero_noise_preds(params, x) if ev["zero_noise"] else None
    report = metrics_report(sets, y, layout, ev["distances"], pointwise_preds=pointwise)
    digest = config_hash(config)
    doc = report.to_json_dict()
    doc["config_sha256"] = digest
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    _write_json(out / "metrics.json", doc)
    _write_csv(
        out / "metrics.csv",
        [f"config_sha256={digest}"],
        ["metric", "value", "sem"],
        report.to_csv_rows(),
    )
    print(f"eval: {x.shape[0]} frames, K={k}, report in {out}/metrics.json")
    return 0


def _zero_noise_preds(params, x):
    if params.config.noise_enabled:
        z = np.zeros((x.shape[0], params.config.z_dim))
        return predict_rows(params, x, z)
    return predict_rows(params, x)


def cmd_gradcheck(config, corrupt=False):
    """Check analytic objective gradients against central differences."""
    net = _net_config(config["net"])
    gc = config["gradcheck"]
    n, k = gc["num_examples"], gc["num_candidates"]
    rng = substream(gc["seed"], "gradcheck-data")
    x = rng.uniform(-1.0, 1.0, size=(n, net.x_dim))
    y = rng.uniform(-1.0, 1.0, size=(n, net.y_dim))
    noises = None
    if net.noise_enabled:
        noises = rng.uniform(-1.0, 1.0, size=(n, k, net.z_dim))
    params = init_params(net, derive_seed(gc["seed"], "gradcheck-init"))
    worst = 0.0
    for gamma in gc["gammas"]:
        for beta in gc["betas"]:
            objective = ObjectiveConfig(
                gamma=float(gamma), num_candidates=k, loss=LossSpec(beta=float(beta))
            )

            def f(flat):
                p = NetworkParams.from_flat(net, flat)
                g = Graph()
                bound = bind_params(g, p)
                root = disco_objective_node(g, bound, (x, y), noises, objective)
                value = g.value(root).item()
                g.backward(root)
                grad = grad_flat(g, bound)
                if corrupt:
                    grad = grad + 1e-3
                return value, grad

            err = grad_check(f, params.to_flat(), step=float(gc["step"]))
            worst = max(worst, err)
            print(f"gradcheck: gamma={gamma:g} beta={beta:g} max_rel_err={err:.3e}")
    ok = worst < float(gc["tolerance"])
    print(f"gradcheck: worst {worst:.3e} vs tolerance {gc['tolerance']:g}: "
          + ("PASS" if ok else "FAIL"))
    return 0 if ok else 1


def cmd_sweep(config, out_dir, data_override=None):
    """Train over seeds x L2 values; report all runs and the best by val probloss."""
    if config["train"]["val_count"] < 1:
        raise ConfigError("sweep needs train.val_count >= 1 to select by validation probloss")
    digest = config_hash(config)
    rows = []
    best = None
    for seed in config["sweep"]["seeds"]:
        for l2 in config["sweep"]["l2_values"]:
            run = {s: dict(body) for s, body in config.items() if isinstance(body, dict)}
            run["schema_version"] = SCHEMA_VERSION
            run["train"]["seed"] = seed
            run["train"]["l2"] = l2
            net = _net_config(run["net"])
            objective = _objective_config(run["objective"])
            tc = run["train"]
            train_config = TrainConfig(
                objective=objective,
                lr=float(tc["lr"]),
                momentum=float(tc["momentum"]),
                l2=float(l2),
                batch_size=tc["batch_size"],
                epochs=tc["epochs"],
                seed=seed,
                val_count=tc["val_count"],
            )
            data = _load_xy(run, data_override, seed, net.x_dim, net.y_dim)
            params, history = train(net, train_config, data)
            (_, _), (x_val, y_val) = train_val_split(data, train_config.val_count, seed)
            value, sem = _val_probloss(params, x_val, y_val, objective.num_candidates, seed)
            rows.append(
                [seed, _fmt(l2), _fmt(history.final().val_objective), _fmt(value), _fmt(sem)]
            )
            print(f"sweep: seed={seed} l2={l2:g} val_probloss={value:.6f}")
            if best is None or value < best[0]:
                best = (value, sem, seed, l2, params)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    _write_csv(
        out / "sweep.csv",
        [f"config_sha256={digest}"],
        ["seed", "l2", "final_val_objective", "val_probloss", "val_probloss_sem"],
        rows,
    )
    value, sem, seed, l2, params = best
    params.save(out / "best_checkpoint.txt")
    _write_json(
        out / "best.json",
        {
            "config_sha256": digest,
            "seed": seed,
            "l2": l2,
            "val_probloss": value,
            "val_probloss_sem": sem,
        },
    )
    print(f"sweep: best seed={seed} l2={l2:g} val_probloss={value:.6f}; outputs in {out}")
    return 0


_SECTIONS = {
    "toy": ("toy",),
    "train": ("net", "objective", "train", "data"),
    "eval": ("data", "eval"),
    "gradcheck": ("net",),
    "sweep": ("net", "objective", "train", "data", "sweep"),
}


def build_parser():
    parser = argparse.ArgumentParser(
        prog="disconet",
        description="Probabilistic predictors trained on a sampled dissimilarity objective.",
        epilog=(
            "exit codes: 0 success, 1 checked condition failed, "
            "2 config error, 3 data error, 4 numeric error"
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)
    specs = {
        "toy": "fit the 2-D mixture under both losses and cross-evaluate",
        "train": "train one model from a config",
        "eval": "evaluate a checkpoint on a dataset",
        "gradcheck": "compare analytic gradients against central differences",
        "sweep": "train over seeds x L2 values and pick the best",
    }
    for name, help_text in specs.items():
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True, help="path to the JSON config")
        if name != "gradcheck":
            p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--seed", type=int, default=None, help="override the config seed(s)")
        if name in ("train", "eval", "sweep"):
            p.add_argument("--data", default=None, help="CSV dataset overriding the config")
        if name == "eval":
            p.add_argument("--checkpoint", required=True, help="checkpoint to evaluate")
        if name == "gradcheck":
            p.add_argument(
                "--corrupt-analytic",
                action="store_true",
                help="testing hook: perturb the analytic gradient so the check must fail",
            )
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        config = load_config(args.config, _SECTIONS[args.command], seed_override=args.seed)
        if args.command == "toy":
            return cmd_toy(config, args.out)
        if args.command == "train":
            return cmd_train(config, args.out, data_override=args.data)
        if args.command == "eval":
            return cmd_eval(config, args.out, args.checkpoint, data_override=args.data)
        if args.command == "gradcheck":
            return cmd_gradcheck(config, corrupt=args.corrupt_analytic)
        return cmd_sweep(config, args.out, data_override=args.data)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ParseError, SchemaError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except NumericError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4
    except DisconetError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def entry():
    raise SystemExit(main())


if __name__ == "__main__":
    raise SystemExit(main())
