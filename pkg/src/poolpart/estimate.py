"""Maximum-likelihood fits of population models to observed batches.

Both fits use only sufficient statistics of the fully observed statuses:
the positives-per-batch histogram for the exchangeable family (its
likelihood depends on each batch only through its positive count) and the
pooled positive fraction for the IID family.  `kl_counts` compares two
fitted models; on a common population size the count-level divergence
equals the divergence between the full outcome distributions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ValidationError
from .model import SymmetricModel, iid_model

__all__ = [
    "EmpiricalCounts",
    "empirical_counts",
    "fit_symmetric",
    "fit_iid",
    "log_likelihood",
    "kl_counts",
]


@dataclass(frozen=True, eq=False)
class EmpiricalCounts:
    """Histogram of batches by number of positive specimens."""

    n: int
    histogram: np.ndarray
    total_batches: int

    def __post_init__(self):
        h = np.asarray(self.histogram, dtype=int).copy()
        if h.ndim != 1 or h.shape[0] != self.n + 1:
            raise ValidationError(f"histogram must have length n+1 = {self.n + 1}")
        if np.any(h < 0):
            raise ValidationError("histogram entries must be nonnegative")
        if int(h.sum()) != self.total_batches:
            raise ValidationError("histogram must sum to total_batches")
        h.setflags(write=False)
        object.__setattr__(self, "histogram", h)


def _status_matrix(batches: Sequence) -> np.ndarray:
    if not batches:
        raise ValidationError("at least one batch is required to fit a model")
    rows = []
    size = None
    for b in batches:
        s = np.asarray(getattr(b, "statuses", b))
        if s.ndim != 1:
            raise ValidationError("each batch must be a 1-d status vector")
        if size is None:
            size = s.shape[0]
        elif s.shape[0] != size:
            raise ValidationError(
                f"heterogeneous batch sizes: {size} then {s.shape[0]}"
            )
        if not np.all((s == 0) | (s == 1)):
            raise ValidationError("batch statuses must be binary; filter inconclusives upstream")
        rows.append(s.astype(np.uint8))
    return np.stack(rows)


def empirical_counts(batches: Sequence) -> EmpiricalCounts:
    data = _status_matrix(batches)
    n = data.shape[1]
    hist = np.bincount(data.sum(axis=1), minlength=n + 1)
    return EmpiricalCounts(n, hist, data.shape[0])


def fit_symmetric(batches: Sequence, laplace: float = 0.0) -> SymmetricModel:
    """MLE over all exchangeable models: alpha[k] = count-k frequency.

    Optional additive smoothing (laplace > 0) keeps downstream q curves away
    from hard zeros; the default is the raw, possibly non-monotone histogram.
    """
    if laplace < 0:
        raise ValidationError(f"laplace must be >= 0, got {laplace!r}")
    ec = empirical_counts(batches)
    num = ec.histogram.astype(float) + laplace
    alpha = num / (ec.total_batches + laplace * (ec.n + 1))
    return SymmetricModel(ec.n, alpha / math.fsum(alpha.tolist()))


def fit_iid(batches: Sequence, laplace: float = 0.0) -> SymmetricModel:
    """MLE within the IID subfamily: prevalence = pooled positive fraction,
    smoothed toward 1/2 by `laplace` pseudo-counts per status."""
    if laplace < 0:
        raise ValidationError(f"laplace must be >= 0, got {laplace!r}")
    data = _status_matrix(batches)
    positives = float(data.sum())
    specimens = float(data.size)
    p = (positives + laplace) / (specimens + 2.0 * laplace)
    return iid_model(data.shape[1], p)


def log_likelihood(m: SymmetricModel, batches: Sequence) -> float:
    """Joint log-likelihood of fully observed batches under the model."""
    ec = empirical_counts(batches)
    if ec.n != m.n:
        raise ValidationError(f"model size {m.n} does not match batch size {ec.n}")
    terms = []
    for k in range(ec.n + 1):
        c = int(ec.histogram[k])
        if c == 0:
            continue
        a = float(m.alpha[k])
        if a <= 0.0:
            return -math.inf
        terms.append(c * (math.log(a) - math.log(math.comb(ec.n, k))))
    return math.fsum(terms)


def kl_counts(r: SymmetricModel, p: SymmetricModel) -> float:
    """KL divergence D(r || p) evaluated on positive counts, in nats.

    For exchangeable models every outcome with k positives shares one
    weight, so the count-level sum equals the divergence over the full
    outcome space.
    """
    if r.n != p.n:
        raise ValidationError(f"models must share n, got {r.n} and {p.n}")
    terms = []
    for k in range(r.n + 1):
        a = float(r.alpha[k])
        if a == 0.0:
            continue
        b = float(p.alpha[k])
        if b == 0.0:
            raise ValidationError(
                f"support violation: r.alpha[{k}] = {a!r} but p.alpha[{k}] = 0"
            )
        terms.append(a * math.log(a / b))
    return math.fsum(terms)
