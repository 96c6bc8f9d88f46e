"""Two-stage (pool then retest) testing costs.

A pool of size h is tested once; if positive, every member is retested
individually.  Expected tests:

    U(1) = 1                (a singleton needs no confirmation)
    U(h) = 1 + h (1 - q(h)) for h >= 2

A partition's expected total is the sum of U over its group sizes, which is
what turns optimal pooling into an additive integer-partition problem.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np

from .errors import ValidationError
from .model import QCurve

__all__ = [
    "CostVector",
    "GroupFamily",
    "expected_tests_group",
    "cost_vector",
    "expected_tests_partition",
    "efficiency",
]


@dataclass(frozen=True, eq=False)
class CostVector:
    """c[i] = expected tests for one group of size i, i = 1..max_size.

    Index 0 is padding (nan) so that c[i] reads naturally.
    """

    n: int
    c: np.ndarray

    def __post_init__(self):
        if not isinstance(self.n, int) or self.n < 1:
            raise ValidationError(f"population size must be an integer >= 1, got {self.n!r}")
        v = np.asarray(self.c, dtype=float).copy()
        if v.ndim != 1 or v.shape[0] < 2 or v.shape[0] > self.n + 1:
            raise ValidationError(
                f"c must cover sizes 1..m with 1 <= m <= {self.n}, got shape {v.shape}"
            )
        if not np.all(np.isfinite(v[1:])):
            raise ValidationError("cost entries must be finite")
        v[0] = np.nan
        v.setflags(write=False)
        object.__setattr__(self, "c", v)

    @property
    def max_size(self) -> int:
        return int(self.c.shape[0] - 1)


@dataclass(frozen=True, eq=False)
class GroupFamily:
    """Pairwise-disjoint, nonempty groups of specimen indices.

    Member order inside a group and group order in the family are preserved;
    a family whose union is the whole population is a pooling.
    """

    groups: tuple

    def __post_init__(self):
        gs = tuple(tuple(int(i) for i in g) for g in self.groups)
        if not gs:
            raise ValidationError("a group family must contain at least one group")
        seen = set()
        for g in gs:
            if not g:
                raise ValidationError("groups must be nonempty")
            for i in g:
                if i < 0:
                    raise ValidationError(f"specimen indices must be >= 0, got {i}")
                if i in seen:
                    raise ValidationError(f"groups must be pairwise disjoint; index {i} repeats")
                seen.add(i)
        object.__setattr__(self, "groups", gs)

    @property
    def sizes(self) -> tuple:
        return tuple(len(g) for g in self.groups)

    @property
    def covered(self) -> int:
        return sum(len(g) for g in self.groups)


def expected_tests_group(qc: QCurve, h: int) -> float:
    if not 1 <= h <= qc.n:
        raise ValidationError(f"group size must lie in [1, {qc.n}], got {h}")
    if h == 1:
        return 1.0
    return 1.0 + h * (1.0 - float(qc.q[h]))


def cost_vector(qc: QCurve, max_size: Optional[int] = None) -> CostVector:
    m = qc.n if max_size is None else max_size
    if not 1 <= m <= qc.n:
        raise ValidationError(f"max_size must lie in [1, {qc.n}], got {max_size!r}")
    c = np.empty(m + 1)
    c[0] = np.nan
    for i in range(1, m + 1):
        c[i] = expected_tests_group(qc, i)
    return CostVector(qc.n, c)


def expected_tests_partition(cv: CostVector, f: GroupFamily) -> float:
    for g in f.groups:
        if len(g) > cv.max_size:
            raise ValidationError(
                f"group of size {len(g)} exceeds cost vector range 1..{cv.max_size}"
            )
    # fsum rounds the exact sum once, so the total is order-independent
    return math.fsum(float(cv.c[len(g)]) for g in f.groups)


def efficiency(n: int, expected_tests: float) -> float:
    if not expected_tests > 0.0:
        raise ValidationError(f"expected tests must be positive, got {expected_tests!r}")
    return n / expected_tests
