"""Exchangeable binary population models in three equivalent representations.

A population of n specimens with exchangeable (permutation-invariant) binary
statuses is fully described by any one of:

  alpha[k]  probability that exactly k specimens are positive (k = 0..n)
  w[k]      probability of one particular outcome vector with k positives;
            alpha[k] = C(n,k) * w[k]
  q[h]      probability that an arbitrary group of h specimens tests all
            negative (h = 0..n, q[0] = 1)

alpha is the canonical form held by SymmetricModel: its entries stay in
[0, 1] at every population size, while w underflows and q inversion is badly
conditioned for large n.  QCurve and OutcomeWeights are derived views.

Conversions carry exact rational values alongside the float64 vectors
whenever n <= _EXACT_LIMIT.  The q -> w recursion subtracts near-equal
quantities and amplifies rounding in q by roughly 2**n, so float arithmetic
alone cannot round-trip alpha -> q -> w -> alpha at large n; the rational
channel makes the round trip exact.  Conversions fall back to compensated
float summation when the channel is absent.

All values are immutable after construction and safe to share across
threads.  Sampling takes an explicit seed or generator and keeps no hidden
state; `substream` derives independent generators for parallel Monte Carlo.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence, Union

import numpy as np

from .errors import ValidationError

__all__ = [
    "SymmetricModel",
    "QCurve",
    "OutcomeWeights",
    "OutcomeVector",
    "iid_model",
    "q_from_alpha",
    "w_from_q",
    "alpha_from_w",
    "w_from_alpha",
    "marginal_zero_bruteforce",
    "sample_outcome",
    "prevalence",
    "substream",
]

# Largest n for which conversions keep an exact rational channel.  Beyond
# this the Fractions get expensive and callers fall back to float paths.
_EXACT_LIMIT = 100

_NORM_TOL = 1e-12
_NEG_W_TOL = -1e-9

ExactVec = Optional[tuple]  # tuple[Fraction, ...] when present


def _readonly(a: np.ndarray) -> np.ndarray:
    out = np.asarray(a, dtype=float).copy()
    out.setflags(write=False)
    return out


def _check_vector(v: np.ndarray, n: int, name: str) -> None:
    if v.ndim != 1 or v.shape[0] != n + 1:
        raise ValidationError(f"{name} must have length n+1 = {n + 1}, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise ValidationError(f"{name} contains non-finite entries")


@dataclass(frozen=True, eq=False)
class SymmetricModel:
    """Exchangeable model in the alpha (positive-count) representation."""

    n: int
    alpha: np.ndarray
    _exact: ExactVec = field(default=None, repr=False)

    def __post_init__(self):
        if not isinstance(self.n, int) or self.n < 1:
            raise ValidationError(f"population size must be an integer >= 1, got {self.n!r}")
        a = _readonly(self.alpha)
        _check_vector(a, self.n, "alpha")
        if np.any(a < 0.0) or np.any(a > 1.0):
            raise ValidationError("alpha entries must lie in [0, 1]")
        total = math.fsum(a.tolist())
        if abs(total - 1.0) > _NORM_TOL:
            raise ValidationError(f"alpha must sum to 1 within {_NORM_TOL}, got {total!r}")
        object.__setattr__(self, "alpha", a)

    def to_dict(self) -> dict:
        return {"n": self.n, "alpha": [float(x) for x in self.alpha]}

    @classmethod
    def from_dict(cls, d: dict) -> "SymmetricModel":
        try:
            n = d["n"]
            alpha = d["alpha"]
        except (KeyError, TypeError) as e:
            raise ValidationError(f"model document needs keys 'n' and 'alpha': {e}") from e
        return cls(int(n), np.asarray(alpha, dtype=float))


@dataclass(frozen=True, eq=False)
class QCurve:
    """Group all-negative probabilities q[h], h = 0..n."""

    n: int
    q: np.ndarray
    _exact: ExactVec = field(default=None, repr=False)

    def __post_init__(self):
        if not isinstance(self.n, int) or self.n < 1:
            raise ValidationError(f"population size must be an integer >= 1, got {self.n!r}")
        v = _readonly(self.q)
        _check_vector(v, self.n, "q")
        if v[0] != 1.0:
            raise ValidationError(f"q[0] must equal 1 exactly, got {v[0]!r}")
        if np.any(v < 0.0) or np.any(v > 1.0):
            raise ValidationError("q entries must lie in [0, 1]")
        # allow one ulp of float slack on the monotonicity check
        if np.any(np.diff(v) > 1e-12):
            raise ValidationError("q must be nonincreasing in group size")
        object.__setattr__(self, "q", v)


@dataclass(frozen=True, eq=False)
class OutcomeWeights:
    """Per-outcome probabilities w[k] for outcomes with k positives."""

    n: int
    w: np.ndarray
    _exact: ExactVec = field(default=None, repr=False)

    def __post_init__(self):
        if not isinstance(self.n, int) or self.n < 1:
            raise ValidationError(f"population size must be an integer >= 1, got {self.n!r}")
        v = _readonly(self.w)
        _check_vector(v, self.n, "w")
        if np.any(v < 0.0):
            raise ValidationError("w entries must be nonnegative")
        total = math.fsum(math.comb(self.n, k) * v[k] for k in range(self.n + 1))
        if abs(total - 1.0) > _NORM_TOL:
            raise ValidationError(
                f"sum of C(n,k)*w[k] must be 1 within {_NORM_TOL}, got {total!r}"
            )
        object.__setattr__(self, "w", v)


@dataclass(frozen=True, eq=False)
class OutcomeVector:
    """Realized statuses for one population draw: 0 negative, 1 positive."""

    statuses: np.ndarray

    def __post_init__(self):
        s = np.asarray(self.statuses)
        if s.ndim != 1 or s.size == 0:
            raise ValidationError("statuses must be a nonempty 1-d vector")
        if not np.all((s == 0) | (s == 1)):
            raise ValidationError("statuses must be 0/1 valued")
        s = s.astype(np.uint8).copy()
        s.setflags(write=False)
        object.__setattr__(self, "statuses", s)

    @property
    def n(self) -> int:
        return int(self.statuses.shape[0])

    @property
    def nnz(self) -> int:
        return int(self.statuses.sum())


def _exact_alpha(m: SymmetricModel) -> ExactVec:
    if m._exact is not None:
        return m._exact
    if m.n <= _EXACT_LIMIT:
        return tuple(Fraction(float(a)) for a in m.alpha)
    return None


def iid_model(n: int, prevalence: float) -> SymmetricModel:
    """Binomial-count model: each specimen independently positive with the
    given prevalence.  alpha[k] = C(n,k) p^k (1-p)^(n-k), so q[h] = (1-p)^h.
    """
    if not isinstance(n, int) or n < 1:
        raise ValidationError(f"population size must be an integer >= 1, got {n!r}")
    p = float(prevalence)
    if not 0.0 <= p <= 1.0:
        raise ValidationError(f"prevalence must lie in [0, 1], got {p!r}")
    if p == 0.0 or p == 1.0:
        alpha = np.zeros(n + 1)
        alpha[n if p == 1.0 else 0] = 1.0
        exact = tuple(Fraction(int(x)) for x in alpha) if n <= _EXACT_LIMIT else None
        return SymmetricModel(n, alpha, _exact=exact)
    if n <= _EXACT_LIMIT:
        pf = Fraction(p)
        qf = 1 - pf
        exact = tuple(math.comb(n, k) * pf**k * qf ** (n - k) for k in range(n + 1))
        alpha = np.array([float(x) for x in exact])
        return SymmetricModel(n, alpha, _exact=exact)
    # log-space binomial pmf for large n; exponent differences stay modest
    lp, lq = math.log(p), math.log1p(-p)
    logc = [
        math.lgamma(n + 1) - math.lgamma(k + 1) - math.lgamma(n - k + 1)
        for k in range(n + 1)
    ]
    alpha = np.array([math.exp(logc[k] + k * lp + (n - k) * lq) for k in range(n + 1)])
    alpha = alpha / math.fsum(alpha.tolist())
    return SymmetricModel(n, alpha)


def q_from_alpha(m: SymmetricModel) -> QCurve:
    """Convert alpha to the q representation.

    Drawing h specimens without replacement from a population with exactly k
    positives leaves all h negative with probability C(n-h,k)/C(n,k), so
    q[h] = sum_k alpha[k] C(n-h,k)/C(n,k).  The binomial ratios are computed
    as exact integer quotients; CPython rounds big-int division correctly,
    so this stays accurate at any n.
    """
    n = m.n
    exact = _exact_alpha(m)
    if exact is not None:
        cn = [math.comb(n, k) for k in range(n + 1)]
        qx = []
        for h in range(n + 1):
            acc = Fraction(0)
            for k in range(n - h + 1):
                if exact[k]:
                    acc += exact[k] * Fraction(math.comb(n - h, k), cn[k])
            qx.append(acc)
        q = np.array([float(x) for x in qx])
        q[0] = 1.0
        return QCurve(n, q, _exact=tuple(qx))
    cn = [math.comb(n, k) for k in range(n + 1)]
    q = np.empty(n + 1)
    q[0] = 1.0
    for h in range(1, n + 1):
        q[h] = math.fsum(
            float(m.alpha[k]) * (math.comb(n - h, k) / cn[k]) for k in range(n - h + 1)
        )
    return QCurve(n, np.minimum(q, 1.0))


def w_from_q(qc: QCurve) -> OutcomeWeights:
    """Invert q to per-outcome weights via the triangular recursion

        w[0] = q[n],   w[k] = q[n-k] - sum_{i<k} C(k,i) w[i].

    Entries in [-1e-9, 0) are treated as roundoff and clamped to zero;
    anything more negative means q is not a valid exchangeable
    representation and raises ValidationError.  The recursion at k = n
    forces sum_k C(n,k) w[k] = q[0] = 1; drift beyond 1e-9 after clamping
    is likewise an error, drift in (1e-12, 1e-9] is renormalized away.

    Rounding in a float q is amplified by roughly 2**n here.  Curves
    produced by q_from_alpha carry exact rationals and invert exactly;
    float-only curves are trustworthy only at small n.
    """
    n = qc.n
    if qc._exact is not None:
        qx = qc._exact
        wx = [qx[n]]
        for k in range(1, n + 1):
            acc = qx[n - k]
            for i in range(k):
                if wx[i]:
                    acc -= math.comb(k, i) * wx[i]
            wx.append(acc)
        w = np.array([float(x) for x in wx])
        exact: ExactVec = tuple(wx)
    else:
        wl = []
        for k in range(n + 1):
            terms = [float(qc.q[n - k])]
            terms.extend(-math.comb(k, i) * wl[i] for i in range(k))
            wl.append(math.fsum(terms))
        w = np.array(wl)
        exact = None

    bad = [(k, v) for k, v in enumerate(w) if v < _NEG_W_TOL]
    if bad:
        k, v = bad[0]
        raise ValidationError(
            f"q is not a valid symmetric representation: reconstructed w[{k}] = {v!r} "
            f"< {_NEG_W_TOL} ({len(bad)} entr{'y' if len(bad) == 1 else 'ies'} below tolerance)"
        )
    clamped = w < 0.0
    if clamped.any():
        w = np.where(clamped, 0.0, w)
        exact = None  # rational channel no longer matches the floats

    total = math.fsum(math.comb(n, k) * w[k] for k in range(n + 1))
    drift = abs(total - 1.0)
    if drift > 1e-9:
        raise ValidationError(
            f"q does not normalize: sum of C(n,k)*w[k] = {total!r} is off by {drift:.3e}"
        )
    if drift > _NORM_TOL:
        w = w / total
        exact = None
    return OutcomeWeights(n, w, _exact=exact)


def alpha_from_w(ow: OutcomeWeights) -> SymmetricModel:
    """alpha[k] = C(n,k) w[k]."""
    n = ow.n
    if ow._exact is not None:
        ax = tuple(math.comb(n, k) * ow._exact[k] for k in range(n + 1))
        return SymmetricModel(n, np.array([float(x) for x in ax]), _exact=ax)
    alpha = np.array([math.comb(n, k) * float(ow.w[k]) for k in range(n + 1)])
    return SymmetricModel(n, alpha)


def w_from_alpha(m: SymmetricModel) -> OutcomeWeights:
    """w[k] = alpha[k] / C(n,k)."""
    n = m.n
    exact = _exact_alpha(m)
    if exact is not None:
        wx = tuple(exact[k] / math.comb(n, k) for k in range(n + 1))
        return OutcomeWeights(n, np.array([float(x) for x in wx]), _exact=wx)
    w = np.array([float(m.alpha[k]) / math.comb(n, k) for k in range(n + 1)])
    return OutcomeWeights(n, w)


def marginal_zero_bruteforce(m: SymmetricModel, h: int) -> float:
    """All-negative probability for the first h specimens, by summing the
    per-outcome weights over every outcome vector.  Test oracle; 2**n terms,
    so n is capped at 16.
    """
    n = m.n
    if n > 16:
        raise ValidationError(f"brute-force marginal is limited to n <= 16, got n = {n}")
    if not 0 <= h <= n:
        raise ValidationError(f"group size must lie in [0, {n}], got {h}")
    w = [float(m.alpha[k]) / math.comb(n, k) for k in range(n + 1)]
    mask = (1 << h) - 1
    return math.fsum(w[z.bit_count()] for z in range(1 << n) if not z & mask)


def substream(seed: int, lane: int = 0, draw: int = 0) -> np.random.Generator:
    """Independent counter-based generator for (seed, lane, draw).

    Philox increments counter word 0 first, so placing the stream labels in
    words 2 and 3 leaves 2**128 states per stream: substreams never overlap
    and results do not depend on scheduling order.
    """
    for name, v in (("seed", seed), ("lane", lane), ("draw", draw)):
        if not 0 <= int(v) < 2**64:
            raise ValidationError(f"{name} must be a uint64, got {v!r}")
    bg = np.random.Philox(key=int(seed), counter=[0, 0, int(lane), int(draw)])
    return np.random.Generator(bg)


def sample_outcome(
    m: SymmetricModel, rng_seed: Union[int, np.random.Generator]
) -> OutcomeVector:
    """Draw one outcome vector: count k ~ alpha, then a uniformly random
    k-subset of positions goes positive.  Accepts an integer master seed or
    a Generator (e.g. from `substream`) for use inside Monte Carlo loops.
    """
    rng = rng_seed if isinstance(rng_seed, np.random.Generator) else substream(int(rng_seed))
    k = int(rng.choice(m.n + 1, p=m.alpha))
    x = np.zeros(m.n, dtype=np.uint8)
    if k == m.n:
        x[:] = 1
    elif k > 0:
        x[rng.choice(m.n, size=k, replace=False)] = 1
    return OutcomeVector(x)


def prevalence(m: SymmetricModel) -> float:
    """Marginal positive probability of any single specimen: E[count]/n."""
    return math.fsum(k * float(m.alpha[k]) for k in range(m.n + 1)) / m.n
