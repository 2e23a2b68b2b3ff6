"""Synthetic data, CSV ingestion, and grid-search Gaussian fitting.

The 2-D mixture task: data from a two-component diagonal Gaussian mixture
is fitted by a single diagonal Gaussian under different weighted losses by
exhaustive grid search on the sampled dissimilarity estimate. Evaluating
each fitted model under each loss gives a cross table whose diagonal
should dominate: training under a loss wins when judged by that loss.

Common random numbers: all grid points see the same standard-normal draws,
so the argmin is stable at small sample counts and ties are broken by grid
iteration order alone.
"""

import itertools
from dataclasses import dataclass

import numpy as np

from .errors import ContractError, ParseError, SchemaError
from .rng import substream
from .scoring import LOSS_DIM1, LOSS_DIM2

TOY_GAMMA = 0.5


@dataclass(frozen=True)
class GmmComponent:
    mean: tuple
    stddev: tuple
    weight: float

    def __post_init__(self):
        object.__setattr__(self, "mean", tuple(float(m) for m in self.mean))
        object.__setattr__(self, "stddev", tuple(float(s) for s in self.stddev))
        if len(self.mean) != 2 or len(self.stddev) != 2:
            raise ContractError("components are 2-D: mean and stddev need two entries")
        if any(s <= 0.0 for s in self.stddev):
            raise ContractError("component stddevs must be positive")
        if not 0.0 < self.weight < 1.0:
            raise ContractError("component weight must lie strictly inside (0, 1)")


@dataclass(frozen=True)
class GmmSpec:
    """Two-component diagonal Gaussian mixture in two dimensions."""

    components: tuple

    def __post_init__(self):
        comps = tuple(self.components)
        object.__setattr__(self, "components", comps)
        if len(comps) != 2:
            raise ContractError("the mixture has exactly two components")
        total = sum(c.weight for c in comps)
        if abs(total - 1.0) > 1e-12:
            raise ContractError(f"component weights sum to {total!r}, not 1")

    def means(self):
        return np.asarray([c.mean for c in self.components])

    def stddevs(self):
        return np.asarray([c.stddev for c in self.components])

    def weights(self):
        return np.asarray([c.weight for c in self.components])


# Mixture separated along the diagonal, anisotropic within components, so
# the two weighted losses produce visibly different single-Gaussian fits.
TOY_MIXTURE = GmmSpec(
    (
        GmmComponent(mean=(-1.4, -1.4), stddev=(0.5, 1.5), weight=0.5),
        GmmComponent(mean=(1.4, 1.4), stddev=(0.5, 1.5), weight=0.5),
    )
)


@dataclass(frozen=True)
class DiagGaussianParams:
    """Single diagonal Gaussian: per-axis mean and stddev."""

    mu1: float
    mu2: float
    sigma1: float
    sigma2: float

    def __post_init__(self):
        if self.sigma1 <= 0.0 or self.sigma2 <= 0.0:
            raise ContractError("sigmas must be positive")

    def mean(self):
        return np.asarray([self.mu1, self.mu2])

    def stddev(self):
        return np.asarray([self.sigma1, self.sigma2])

    def to_dict(self):
        return {
            "mu1": self.mu1,
            "mu2": self.mu2,
            "sigma1": self.sigma1,
            "sigma2": self.sigma2,
        }


@dataclass(frozen=True)
class GridSpec:
    """Axis-wise candidate values for the exhaustive Gaussian fit."""

    mu1_values: tuple
    mu2_values: tuple
    sigma1_values: tuple
    sigma2_values: tuple

    def __post_init__(self):
        for name in ("mu1_values", "mu2_values", "sigma1_values", "sigma2_values"):
            vals = tuple(float(v) for v in getattr(self, name))
            if not vals:
                raise ContractError(f"{name} must not be empty")
            object.__setattr__(self, name, vals)
        if any(s <= 0.0 for s in self.sigma1_values + self.sigma2_values):
            raise ContractError("sigma grid values must be positive")

    @classmethod
    def default(cls):
        mus = tuple(np.round(np.linspace(-2.0, 2.0, 9), 10))
        sigmas = tuple(np.round(np.linspace(0.3, 3.0, 10), 10))
        return cls(mus, mus, sigmas, sigmas)

    def size(self):
        return (
            len(self.mu1_values)
            * len(self.mu2_values)
            * len(self.sigma1_values)
            * len(self.sigma2_values)
        )


def gen_gmm2d(spec, n, rng):
    """Draw n points from the mixture; shape (n, 2)."""
    if n < 1:
        raise ContractError("n must be >= 1")
    which = rng.choice(len(spec.components), size=n, p=spec.weights())
    eps = rng.standard_normal((n, 2))
    return spec.means()[which] + spec.stddevs()[which] * eps


def gen_conditional_bimodal(n, rng, noise_sigma=0.1):
    """Scalar-input bimodal regression task: y = +-(1 + x^2) + noise.

    x is uniform on [-1, 1]; the sign is an even coin flip, so the
    conditional law of y given x has two modes a distance 2 (1 + x^2)
    apart. Returns (X, Y) with shapes (n, 1).
    """
    if n < 1:
        raise ContractError("n must be >= 1")
    if noise_sigma < 0.0:
        raise ContractError("noise_sigma must be non-negative")
    x = rng.uniform(-1.0, 1.0, size=(n, 1))
    sign = rng.integers(0, 2, size=(n, 1)) * 2 - 1
    eps = rng.standard_normal((n, 1)) * noise_sigma
    y = sign * (1.0 + x * x) + eps
    return x, y


def load_csv(path, x_dim, y_dim):
    """Read numeric comma-separated (x, y) rows.

    Lines starting with '#' and blank lines are skipped. Every data row
    must carry exactly x_dim + y_dim numeric fields; malformed numbers
    raise ParseError and wrong arity raises SchemaError, both naming the
    line. An empty file yields empty arrays.
    """
    width = int(x_dim) + int(y_dim)
    xs, ys = [], []
    with open(path, "r", encoding="utf8") as fh:
        for ln, line in enumerate(fh, start=1):
            text = line.strip()
            if not text or text.startswith("#"):
                continue
            fields = [f.strip() for f in text.split(",")]
            if len(fields) != width:
                raise SchemaError(f"{path}: line {ln}: expected {width} fields, got {len(fields)}")
            try:
                row = [float(f) for f in fields]
            except ValueError as exc:
                raise ParseError(f"{path}: line {ln}: {exc}") from exc
            xs.append(row[:x_dim])
            ys.append(row[x_dim:])
    if not xs:
        return np.zeros((0, x_dim)), np.zeros((0, y_dim))
    return np.asarray(xs), np.asarray(ys)


def save_csv(path, x, y, comments=()):
    """Write (x, y) rows in the format load_csv reads, values via repr."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.ndim != 2 or y.ndim != 2 or x.shape[0] != y.shape[0]:
        raise ContractError(f"x {x.shape} and y {y.shape} must be matrices with equal rows")
    lines = [f"# {c}" for c in comments]
    for xi, yi in zip(x, y):
        lines.append(",".join(repr(float(v)) for v in np.concatenate([xi, yi])))
    with open(path, "w", encoding="utf8") as fh:
        fh.write("\n".join(lines) + ("\n" if lines else ""))


def _point_values(y, params, loss, gamma, eps):
    """Per-data-point sampled dissimilarity against one Gaussian.

    eps are fixed standard-normal draws of shape (n, m, 2); the model
    samples are mean + stddev * eps (common random numbers).
    """
    w = loss.weight_vector(2)
    beta = loss.beta
    q = params.mean()[None, None, :] + params.stddev()[None, None, :] * eps
    d = y[:, None, :] - q
    pq = (((d * d) @ w) ** (beta / 2.0)).mean(axis=1)
    if gamma == 0.0:
        return pq
    m = eps.shape[1]
    dd = q[:, :, None, :] - q[:, None, :, :]
    qq = (((dd * dd) @ w) ** (beta / 2.0)).sum(axis=(1, 2)) / (m * (m - 1))
    return pq - gamma * qq


def fit_gaussian_grid(train, grid, loss, gamma=TOY_GAMMA, m=24, rng=None):
    """Exhaustive argmin of the sampled dissimilarity over the grid.

    Parameters
    ----------
    train : array-like, shape (n, 2)
    grid : GridSpec
    loss : LossSpec
    gamma : float
        Diversity weight; 1/2 makes the criterion the sampled energy score.
    m : int
        Model samples per data point (>= 2).
    rng : numpy Generator
        Source of the standard-normal draws shared by all grid points.

    Ties keep the earliest grid point in iteration order: nested loops
    over (mu1, mu2, sigma1, sigma2) with the last axis fastest.
    """
    y = np.asarray(train, dtype=np.float64)
    if y.ndim != 2 or y.shape[1] != 2 or y.shape[0] < 1:
        raise ContractError(f"train must be a non-empty (n, 2) array, got {y.shape}")
    if m < 2:
        raise ContractError("m must be >= 2")
    if rng is None:
        raise ContractError("an rng is required")
    w = loss.weight_vector(2)
    beta = loss.beta
    eps = rng.standard_normal((y.shape[0], m, 2))
    # The diversity term depends only on the sigmas; precompute it per pair.
    qq_table = {}
    if gamma > 0.0:
        for s1, s2 in itertools.product(grid.sigma1_values, grid.sigma2_values):
            dd = (eps[:, :, None, :] - eps[:, None, :, :]) * np.asarray([s1, s2])
            qq = (((dd * dd) @ w) ** (beta / 2.0)).sum(axis=(1, 2)) / (m * (m - 1))
            qq_table[(s1, s2)] = float(qq.mean())
    best_val = None
    best = None
    for mu1, mu2, s1, s2 in itertools.product(
        grid.mu1_values, grid.mu2_values, grid.sigma1_values, grid.sigma2_values
    ):
        q = np.asarray([mu1, mu2]) + np.asarray([s1, s2]) * eps
        d = y[:, None, :] - q
        val = float((((d * d) @ w) ** (beta / 2.0)).mean())
        if gamma > 0.0:
            val -= gamma * qq_table[(s1, s2)]
        if best_val is None or val < best_val:
            best_val = val
            best = DiagGaussianParams(mu1, mu2, s1, s2)
    return best


def eval_gaussian(params, test, loss, gamma=TOY_GAMMA, m=24, rng=None):
    """Sampled dissimilarity of a fitted Gaussian on held-out points.

    Returns ``(mean, sem)`` over the test points.
    """
    y = np.asarray(test, dtype=np.float64)
    if y.ndim != 2 or y.shape[1] != 2 or y.shape[0] < 1:
        raise ContractError(f"test must be a non-empty (n, 2) array, got {y.shape}")
    if m < 2:
        raise ContractError("m must be >= 2")
    if rng is None:
        raise ContractError("an rng is required")
    eps = rng.standard_normal((y.shape[0], m, 2))
    vals = _point_values(y, params, loss, gamma, eps)
    mean = float(vals.mean())
    sem = float(vals.std(ddof=1) / np.sqrt(vals.size)) if vals.size > 1 else 0.0
    return mean, sem


TOY_LOSSES = (("dim1", LOSS_DIM1), ("dim2", LOSS_DIM2))


def toy_cross_table(
    seeds,
    mixture=TOY_MIXTURE,
    grid=None,
    n_train=400,
    n_test=400,
    gamma=TOY_GAMMA,
    m=24,
    losses=TOY_LOSSES,
):
    """Fit under each loss, evaluate under each loss, per seed.

    Evaluation draws are shared across fitted models within a task-loss
    column (common random numbers) so column comparisons are paired.

    Returns a dict with per-seed fitted parameters and tables, the
    seed-aggregated cross table (per-cell mean over seeds, sem across
    seeds), and ``diagonal_dominance``: True when in the aggregated
    table every task column is strictly minimized by the model trained
    under that column's loss. Per-seed cells can tie when the loss
    weighting leaves a fit direction nearly flat, so the contract is on
    the aggregate.
    """
    if grid is None:
        grid = GridSpec.default()
    names = [name for name, _ in losses]
    per_seed = []
    for seed in seeds:
        data_rng = substream(seed, "toy-data")
        train = gen_gmm2d(mixture, n_train, data_rng)
        test = gen_gmm2d(mixture, n_test, data_rng)
        fits = {}
        for name, loss in losses:
            fit_rng = substream(seed, "toy-fit", name)
            fits[name] = fit_gaussian_grid(train, grid, loss, gamma, m, fit_rng)
        table = {}
        for train_name in names:
            table[train_name] = {}
            for task_name, task_loss in losses:
                eval_rng = substream(seed, "toy-eval", task_name)
                table[train_name][task_name] = eval_gaussian(
                    fits[train_name], test, task_loss, gamma, m, eval_rng
                )
        per_seed.append(
            {
                "seed": int(seed),
                "fits": {name: fits[name].to_dict() for name in names},
                "table": table,
            }
        )
    aggregate = {}
    for train_name in names:
        aggregate[train_name] = {}
        for task_name in names:
            vals = np.asarray([e["table"][train_name][task_name][0] for e in per_seed])
            sem = float(vals.std(ddof=1) / np.sqrt(vals.size)) if vals.size > 1 else 0.0
            aggregate[train_name][task_name] = (float(vals.mean()), sem)
    dominant = True
    for task_name in names:
        own = aggregate[task_name][task_name][0]
        for train_name in names:
            if train_name != task_name and not own < aggregate[train_name][task_name][0]:
                dominant = False
    return {
        "losses": names,
        "per_seed": per_seed,
        "aggregate": aggregate,
        "diagonal_dominance": dominant,
    }
