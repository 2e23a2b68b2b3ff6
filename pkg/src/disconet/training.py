"""Minibatch SGD with momentum and L2 over the sampled training objective.

Every epoch reshuffles the training set, draws fresh noise per example and
candidate, builds the objective graph per minibatch, and takes one
momentum step per batch. The last incomplete minibatch is used, weighted
by its own size in the epoch aggregate. All randomness comes from named
substreams of the config seed, so a rerun with the same config is
bitwise identical.
"""

import time
from dataclasses import dataclass, field

import numpy as np

from .autodiff import Graph
from .errors import ContractError, DimensionError, NumericError, ParameterError
from .network import NetworkParams, bind_params, grad_flat, init_params, predict_rows
from .objective import ObjectiveConfig, _batch_arrays, disco_objective, disco_objective_node
from .network import CandidateSet
from .rng import derive_seed, substream


@dataclass(frozen=True)
class TrainConfig:
    """Optimization settings around an ObjectiveConfig."""

    objective: ObjectiveConfig = field(default_factory=ObjectiveConfig)
    lr: float = 0.01
    momentum: float = 0.9
    l2: float = 0.0
    batch_size: int = 64
    epochs: int = 100
    seed: int = 0
    val_count: int = 0
    checkpoint_every: int = 0

    def __post_init__(self):
        if not self.lr > 0.0:
            raise ParameterError("lr must be positive")
        if not 0.0 <= self.momentum < 1.0:
            raise ParameterError("momentum must lie in [0, 1)")
        if self.l2 < 0.0:
            raise ParameterError("l2 must be non-negative")
        if self.batch_size < 1 or self.epochs < 1:
            raise ParameterError("batch_size and epochs must be >= 1")
        if self.val_count < 0 or self.checkpoint_every < 0:
            raise ParameterError("val_count and checkpoint_every must be >= 0")
        if self.seed < 0:
            raise ParameterError("seed must be non-negative")


@dataclass
class EpochStats:
    epoch: int
    train_objective: float
    val_objective: float
    seconds: float


@dataclass
class TrainHistory:
    epochs: list

    def final(self):
        return self.epochs[-1]


def train_val_split(data, val_count, seed):
    """Disjoint, exhaustive train/validation split by a seeded shuffle.

    Returns ``((x_train, y_train), (x_val, y_val))``.
    """
    x, y = _batch_arrays(data)
    n = x.shape[0]
    if not 0 < val_count < n:
        raise ContractError(f"val_count must lie strictly between 0 and {n}, got {val_count}")
    perm = substream(seed, "split").permutation(n)
    val_idx = perm[:val_count]
    train_idx = perm[val_count:]
    return (x[train_idx], y[train_idx]), (x[val_idx], y[val_idx])


def sgd_momentum_step(params, grads, velocity, lr, momentum, l2=0.0, weight_mask=None):
    """One update: v <- momentum v - lr (g + l2 theta); theta <- theta + v.

    With a weight mask the L2 term applies only where the mask is True
    (weights yes, biases no). Returns ``(new_params, new_velocity)``.
    """
    p = np.asarray(params, dtype=np.float64)
    g = np.asarray(grads, dtype=np.float64)
    v = np.asarray(velocity, dtype=np.float64)
    if p.shape != g.shape or p.shape != v.shape:
        raise DimensionError(
            f"params {p.shape}, grads {g.shape}, velocity {v.shape} must share a shape"
        )
    reg = l2 * p
    if weight_mask is not None:
        reg = reg * weight_mask
    v_new = momentum * v - lr * (g + reg)
    return p + v_new, v_new


def validation_objective(params, data, objective, rng):
    """The sampled objective on a held-out set with fresh noise draws."""
    x, y = _batch_arrays(data)
    k = objective.num_candidates
    cfg = params.config
    if cfg.noise_enabled:
        z = rng.uniform(-1.0, 1.0, size=(x.shape[0], k, cfg.z_dim))
        outs = predict_rows(params, np.repeat(x, k, axis=0), z.reshape(-1, cfg.z_dim))
    else:
        outs = np.repeat(predict_rows(params, x), k, axis=0)
    sets = [
        CandidateSet(i, outs[i * k : (i + 1) * k]) for i in range(x.shape[0])
    ]
    return disco_objective((x, y), sets, objective)


def train(net_config, train_config, data, checkpoint_dir=None):
    """Run the full training loop; returns ``(params, history)``.

    Substreams of the config seed: "split" for the validation split,
    "init" for parameter init, "shuffle" for epoch permutations, "noise"
    for training noise, and "val-noise" for validation noise. A non-finite
    objective aborts with the epoch and batch in the error.
    """
    x, y = _batch_arrays(data)
    if x.shape[1] != net_config.x_dim or y.shape[1] != net_config.y_dim:
        raise DimensionError(
            f"data dims {x.shape[1]}/{y.shape[1]} do not match net {net_config.x_dim}/{net_config.y_dim}"
        )
    cfg = train_config
    if cfg.val_count:
        (x_train, y_train), (x_val, y_val) = train_val_split((x, y), cfg.val_count, cfg.seed)
    else:
        x_train, y_train = x, y
        x_val = y_val = None
    n = x_train.shape[0]
    if n < 1:
        raise ContractError("no training examples left after the split")
    k = cfg.objective.num_candidates
    params = init_params(net_config, derive_seed(cfg.seed, "init"))
    flat = params.to_flat()
    velocity = np.zeros_like(flat)
    mask = params.weight_mask()
    shuffle_rng = substream(cfg.seed, "shuffle")
    noise_rng = substream(cfg.seed, "noise")
    val_rng = substream(cfg.seed, "val-noise")
    history = []
    for epoch in range(1, cfg.epochs + 1):
        t0 = time.perf_counter()
        perm = shuffle_rng.permutation(n)
        weighted = 0.0
        for bi, start in enumerate(range(0, n, cfg.batch_size), start=1):
            idx = perm[start : start + cfg.batch_size]
            xb, yb = x_train[idx], y_train[idx]
            noises = None
            if net_config.noise_enabled:
                noises = noise_rng.uniform(-1.0, 1.0, size=(len(idx), k, net_config.z_dim))
            try:
                g = Graph()
                bound = bind_params(g, params)
                root = disco_objective_node(g, bound, (xb, yb), noises, cfg.objective)
                value = g.value(root).item()
                g.backward(root)
                grads = grad_flat(g, bound)
            except NumericError as exc:
                raise NumericError(f"epoch {epoch}, batch {bi}: {exc}") from exc
            flat, velocity = sgd_momentum_step(
                flat, grads, velocity, cfg.lr, cfg.momentum, cfg.l2, mask
            )
            params = NetworkParams.from_flat(net_config, flat)
            weighted += value * len(idx)
        train_obj = weighted / n
        if x_val is not None:
            val_obj = validation_objective(params, (x_val, y_val), cfg.objective, val_rng)
        else:
            val_obj = float("nan")
        history.append(EpochStats(epoch, train_obj, val_obj, time.perf_counter() - t0))
        if checkpoint_dir is not None and cfg.checkpoint_every:
            if epoch % cfg.checkpoint_every == 0:
                params.save(f"{checkpoint_dir}/checkpoint_epoch_{epoch}.txt")
    return params, TrainHistory(history)
