"""Pointwise prediction from candidate sets and evaluation metrics.

The pointwise prediction is the candidate with maximum expected utility:
the one minimizing its summed task loss to all candidates of the same set.
Pointwise metrics follow the hand-pose convention: output coordinates are
grouped into joints, errors are Euclidean per joint, and a frame is one
evaluated example. The probabilistic metric is the per-frame sampled
energy score (unit weights, beta = 1) across candidates.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import ContractError, DimensionError, EstimatorError, ParameterError
from .network import CandidateSet
from .scoring import LossSpec, energy_score_sample, pairwise_delta


@dataclass(frozen=True)
class JointLayout:
    """Joint names plus how many consecutive coordinates each joint spans."""

    names: tuple
    group_size: int = 1

    def __post_init__(self):
        object.__setattr__(self, "names", tuple(str(n) for n in self.names))
        if not self.names:
            raise ContractError("layout needs at least one joint")
        if self.group_size < 1:
            raise ContractError("group_size must be >= 1")

    @property
    def num_joints(self):
        return len(self.names)

    @property
    def y_dim(self):
        return self.num_joints * self.group_size

    @classmethod
    def scalar(cls, y_dim):
        """Degenerate layout: every output coordinate is its own joint."""
        return cls(tuple(f"y{i}" for i in range(y_dim)), 1)

    @classmethod
    def grouped(cls, y_dim, group_size, names=None):
        if y_dim % group_size != 0:
            raise DimensionError(f"y_dim {y_dim} not divisible by group size {group_size}")
        j = y_dim // group_size
        if names is None:
            names = tuple(f"j{i}" for i in range(j))
        layout = cls(tuple(names), group_size)
        if layout.num_joints != j:
            raise DimensionError(f"{len(names)} names for {j} joints")
        return layout


def joint_errors(pred, gt, layout):
    """Per-joint Euclidean errors of one prediction; shape (num_joints,)."""
    p = np.asarray(pred, dtype=np.float64).reshape(-1)
    t = np.asarray(gt, dtype=np.float64).reshape(-1)
    if p.shape[0] != layout.y_dim or t.shape[0] != layout.y_dim:
        raise DimensionError(f"expected length {layout.y_dim}, got {p.shape[0]}/{t.shape[0]}")
    d = (p - t).reshape(layout.num_joints, layout.group_size)
    return np.sqrt((d * d).sum(axis=1))


def meu_predict(candidates, task_loss=LossSpec()):
    """Candidate with maximum expected utility under the task loss.

    Returns ``(index, output)`` for the candidate minimizing the sum of
    its task losses to every candidate in the set; ties keep the lowest
    index. With one candidate that candidate is returned.
    """
    outs = np.asarray(getattr(candidates, "outputs", candidates), dtype=np.float64)
    if outs.ndim != 2 or outs.shape[0] < 1:
        raise ContractError(f"candidates must be a non-empty (K, y_dim) matrix, got {outs.shape}")
    totals = pairwise_delta(task_loss, outs).sum(axis=1)
    idx = int(np.argmin(totals))  # argmin takes the first minimum: lowest index wins ties
    return idx, outs[idx].copy()


def _mean_sem(values):
    v = np.asarray(values, dtype=np.float64)
    mean = float(v.mean())
    if v.size < 2:
        return mean, 0.0
    return mean, float(v.std(ddof=1) / math.sqrt(v.size))


def _frame_errors(preds, gts, layout):
    preds = np.asarray(preds, dtype=np.float64)
    gts = np.asarray(gts, dtype=np.float64)
    if preds.shape != gts.shape or preds.ndim != 2:
        raise DimensionError(f"preds {preds.shape} and gts {gts.shape} must be equal matrices")
    if preds.shape[0] == 0:
        raise ContractError("no frames to evaluate")
    if preds.shape[1] != layout.y_dim:
        raise DimensionError(f"outputs have dim {preds.shape[1]}, layout expects {layout.y_dim}")
    d = (preds - gts).reshape(preds.shape[0], layout.num_joints, layout.group_size)
    return np.sqrt((d * d).sum(axis=2))


def mejee(preds, gts, layout):
    """Mean joint error: per-frame mean over joints, averaged over frames.

    Returns ``(value, sem)`` with the standard error over frames.
    """
    return _mean_sem(_frame_errors(preds, gts, layout).mean(axis=1))


def majee(preds, gts, layout):
    """Max joint error: per-frame max over joints, averaged over frames."""
    return _mean_sem(_frame_errors(preds, gts, layout).max(axis=1))


def ff(preds, gts, layout, distance):
    """Fraction of frames whose worst joint error is within `distance`."""
    worst = _frame_errors(preds, gts, layout).max(axis=1)
    return float((worst <= distance).mean())


def probloss(candidate_sets, gts):
    """Mean per-frame energy score (beta = 1, unit weights) with its sem."""
    gts = np.asarray(gts, dtype=np.float64)
    if len(candidate_sets) != gts.shape[0]:
        raise ContractError(f"{gts.shape[0]} ground truths but {len(candidate_sets)} sets")
    spec = LossSpec(beta=1.0)
    vals = [energy_score_sample(cs, y, spec) for cs, y in zip(candidate_sets, gts)]
    return _mean_sem(vals)


def pearson_matrix(candidate_sets, layout):
    """Per-joint deviation correlations across candidates, averaged over inputs.

    For each input the per-candidate deviation from the candidate mean is
    reduced per joint (Euclidean magnitude for multi-coordinate joints,
    signed value for singleton joints) and correlated across the K
    candidates. Zero-variance joints are flagged undefined for that input
    and excluded from the average rather than propagating NaN.

    Returns
    -------
    (values, defined) : (ndarray, ndarray)
        Both (J, J). ``values`` holds averaged correlations, exactly 1 on
        the defined diagonal, and NaN filler where ``defined`` is False.
    """
    if not candidate_sets:
        raise ContractError("no candidate sets")
    j = layout.num_joints
    sums = np.zeros((j, j))
    counts = np.zeros((j, j), dtype=np.int64)
    for cs in candidate_sets:
        outs = cs.outputs
        if outs.shape[1] != layout.y_dim:
            raise DimensionError(f"outputs have dim {outs.shape[1]}, layout expects {layout.y_dim}")
        k = outs.shape[0]
        if k < 2:
            raise EstimatorError("correlations need at least two candidates")
        dev = (outs - outs.mean(axis=0, keepdims=True)).reshape(k, j, layout.group_size)
        if layout.group_size > 1:
            e = np.sqrt((dev * dev).sum(axis=2))
        else:
            e = dev[:, :, 0]
        c = e - e.mean(axis=0, keepdims=True)
        ss = (c * c).sum(axis=0)
        live = ss > 0.0
        mask = np.outer(live, live)
        denom = np.sqrt(np.outer(ss, ss))
        with np.errstate(invalid="ignore", divide="ignore"):
            r = np.where(mask, (c.T @ c) / np.where(denom > 0.0, denom, 1.0), 0.0)
        sums += np.clip(r, -1.0, 1.0) * mask
        counts += mask
    defined = counts > 0
    values = np.full((j, j), np.nan)
    values[defined] = sums[defined] / counts[defined]
    # r(x, x) = 1 identically; write the identity rather than its roundoff.
    di = np.arange(j)
    values[di, di] = np.where(defined[di, di], 1.0, np.nan)
    return values, defined


def base_candidates(pointwise, num_candidates, sigma, rng, index=0):
    """Candidate set for a point predictor: the prediction plus Gaussian jitter."""
    if sigma <= 0.0:
        raise ParameterError("sigma must be positive")
    if num_candidates < 1:
        raise ContractError("num_candidates must be >= 1")
    p = np.asarray(pointwise, dtype=np.float64).reshape(-1)
    outs = p[None, :] + sigma * rng.standard_normal((num_candidates, p.shape[0]))
    return CandidateSet(index, outs, None)


@dataclass
class MetricsReport:
    """Evaluation summary: probabilistic and pointwise metrics plus counts.

    ``probloss`` and ``pearson`` are None when only one candidate per
    input was available (the estimators need K >= 2).
    """

    probloss: tuple
    mejee: tuple
    majee: tuple
    ff: dict
    pearson: tuple
    counts: dict

    def to_json_dict(self):
        doc = {
            "probloss": _pair_dict(self.probloss),
            "mejee": _pair_dict(self.mejee),
            "majee": _pair_dict(self.majee),
            "ff": {f"{d:g}": float(v) for d, v in self.ff.items()},
            "pearson": None,
            "counts": {k: int(v) for k, v in self.counts.items()},
        }
        if self.pearson is not None:
            values, defined = self.pearson
            doc["pearson"] = [
                [float(values[i, j]) if defined[i, j] else None for j in range(values.shape[1])]
                for i in range(values.shape[0])
            ]
        return doc

    def to_csv_rows(self):
        """Flat (name, value, sem) string triples; blanks for undefined."""
        rows = []
        for name, pair in (("probloss", self.probloss), ("mejee", self.mejee), ("majee", self.majee)):
            if pair is None:
                rows.append((name, "", ""))
            else:
                rows.append((name, repr(float(pair[0])), repr(float(pair[1]))))
        for d in sorted(self.ff):
            rows.append((f"ff_{d:g}", repr(float(self.ff[d])), ""))
        if self.pearson is not None:
            values, defined = self.pearson
            for i in range(values.shape[0]):
                for j in range(values.shape[1]):
                    val = repr(float(values[i, j])) if defined[i, j] else ""
                    rows.append((f"pearson_{i}_{j}", val, ""))
        for key in sorted(self.counts):
            rows.append((f"count_{key}", str(int(self.counts[key])), ""))
        return rows


def _pair_dict(pair):
    if pair is None:
        return None
    return {"value": float(pair[0]), "sem": float(pair[1])}


def metrics_report(candidate_sets, gts, layout, distances, task_loss=LossSpec(), pointwise_preds=None):
    """Assemble the full evaluation report for one dataset.

    Pointwise predictions default to maximum-expected-utility selection
    per candidate set; pass `pointwise_preds` to evaluate externally
    chosen predictions (e.g. the zero-noise forward pass) instead. With a
    single candidate per input the probabilistic entries are None.
    """
    gts = np.asarray(gts, dtype=np.float64)
    k = _common_k(candidate_sets)
    if pointwise_preds is None:
        preds = np.asarray([meu_predict(cs, task_loss)[1] for cs in candidate_sets])
    else:
        preds = np.asarray(pointwise_preds, dtype=np.float64)
    report = MetricsReport(
        probloss=probloss(candidate_sets, gts) if k >= 2 else None,
        mejee=mejee(preds, gts, layout),
        majee=majee(preds, gts, layout),
        ff={float(d): ff(preds, gts, layout, float(d)) for d in distances},
        pearson=pearson_matrix(candidate_sets, layout) if k >= 2 else None,
        counts={
            "frames": gts.shape[0],
            "candidates": k,
            "joints": layout.num_joints,
        },
    )
    return report


def _common_k(candidate_sets):
    if not candidate_sets:
        raise ContractError("no candidate sets")
    ks = {cs.num_candidates for cs in candidate_sets}
    if len(ks) != 1:
        raise ContractError(f"candidate sets must share one K, got {sorted(ks)}")
    return ks.pop()
