"""Execute the two-stage procedure on concrete outcomes and batches.

`run_dorfman` counts tests exactly for one outcome; `monte_carlo` averages
over model draws; `empirical_evaluate` replays a pooling design against
recorded batch statuses, optionally randomizing the specimen-to-pool
assignment within each batch.

Every random draw comes from a counter-based substream keyed by
(seed, batch_index, trial_index), so results are reproducible and do not
depend on execution order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .cost import GroupFamily
from .errors import ValidationError
from .model import OutcomeVector, SymmetricModel, sample_outcome, substream
from .optimize import MultiplicityFunction

__all__ = [
    "TestTally",
    "TrialSummary",
    "run_dorfman",
    "monte_carlo",
    "mc_trial_totals",
    "empirical_evaluate",
    "empirical_trial_totals",
]


@dataclass(frozen=True)
class TestTally:
    """Exact test count for one outcome: per group (size, status, tests)."""

    __test__ = False  # the Test- prefix is domain language, not a test case

    total_tests: int
    per_group: Tuple[Tuple[int, int, int], ...]

    def __post_init__(self):
        if self.total_tests != sum(t for _, _, t in self.per_group):
            raise ValidationError("total_tests must equal the sum of per-group tests")
        for h, s, t in self.per_group:
            ok = t == 1 if (h == 1 or s == 0) else t == 1 + h
            if not ok:
                raise ValidationError(f"impossible tally ({h}, {s}, {t})")


@dataclass(frozen=True)
class TrialSummary:
    trials: int
    mean_tests: float
    std_error: float
    mean_efficiency: float
    efficiency_std_error: float

    def __post_init__(self):
        if self.trials < 1:
            raise ValidationError(f"trials must be >= 1, got {self.trials}")
        if self.std_error < 0 or self.efficiency_std_error < 0:
            raise ValidationError("standard errors must be nonnegative")

    def to_dict(self) -> dict:
        return {
            "trials": self.trials,
            "mean_tests": self.mean_tests,
            "std_error": self.std_error,
            "mean_efficiency": self.mean_efficiency,
            "efficiency_std_error": self.efficiency_std_error,
        }


def run_dorfman(f: GroupFamily, x: OutcomeVector) -> TestTally:
    """Tally tests for one outcome: each group is tested once, and a
    positive group of size >= 2 is retested member by member.  A singleton's
    first test already settles its status, so it is never retested.
    """
    statuses = x.statuses
    n = statuses.shape[0]
    per_group = []
    total = 0
    for g in f.groups:
        h = len(g)
        for i in g:
            if i >= n:
                raise IndexError(f"group member {i} outside population of size {n}")
        s = int(statuses[np.asarray(g, dtype=int)].max())
        t = 1 if (h == 1 or s == 0) else 1 + h
        per_group.append((h, s, t))
        total += t
    return TestTally(total, tuple(per_group))


def _mean_se(values: np.ndarray) -> Tuple[float, float]:
    mean = float(values.mean())
    if values.size < 2:
        return mean, 0.0
    se = float(values.std(ddof=1) / math.sqrt(values.size))
    return mean, se


def mc_trial_totals(
    m: SymmetricModel, f: GroupFamily, trials: int, seed: int
) -> np.ndarray:
    """Total tests per trial for outcomes sampled from the model; trial t
    draws on substream (seed, 0, t)."""
    if trials < 1:
        raise ValidationError(f"trials must be >= 1, got {trials}")
    garrs = [np.asarray(g, dtype=int) for g in f.groups]
    top = max(int(ga.max()) for ga in garrs)
    if top >= m.n:
        raise IndexError(f"group member {top} outside population of size {m.n}")
    totals = np.empty(trials)
    for t in range(trials):
        x = sample_outcome(m, substream(seed, 0, t)).statuses
        tot = 0
        for ga in garrs:
            h = ga.size
            if h >= 2 and x[ga].any():
                tot += 1 + int(h)
            else:
                tot += 1
        totals[t] = tot
    return totals


def monte_carlo(
    m: SymmetricModel, f: GroupFamily, trials: int, seed: int
) -> TrialSummary:
    """Sample outcomes from the model and tally the family on each.

    mean_tests estimates the analytic expected total; mean_efficiency
    averages the per-trial ratio covered_specimens / tests, which is not
    the same as covered / mean_tests.
    """
    totals = mc_trial_totals(m, f, trials, seed)
    mean_tests, se = _mean_se(totals)
    mean_eff, eff_se = _mean_se(f.covered / totals)
    return TrialSummary(trials, mean_tests, se, mean_eff, eff_se)


def _batch_matrix(batches: Sequence, target: int) -> np.ndarray:
    rows = []
    for b in batches:
        s = np.asarray(getattr(b, "statuses", b), dtype=np.uint8)
        if s.ndim != 1 or s.shape[0] != target:
            raise ValidationError(
                f"batch size {s.shape[0] if s.ndim == 1 else s.shape} "
                f"does not match pooling target {target}"
            )
        rows.append(s)
    if not rows:
        raise ValidationError("at least one batch is required")
    return np.stack(rows)


def _slice_design(mu: MultiplicityFunction):
    """Pool-boundary arrays for the consecutive-slice design (largest
    pools first): reduceat starts and per-pool retest charges."""
    sizes = np.array(mu.part_sizes())
    starts = np.concatenate(([0], np.cumsum(sizes)[:-1]))
    retest = sizes * (sizes >= 2)

    def total_tests(row: np.ndarray) -> int:
        pool_positive = np.maximum.reduceat(row, starts)
        return int(len(sizes) + retest[pool_positive == 1].sum())

    return total_tests


def empirical_trial_totals(
    batches: Sequence,
    mu: MultiplicityFunction,
    randomize: bool,
    trials: int,
    seed: int,
) -> np.ndarray:
    """Whole-cohort total tests per trial.

    The design assigns consecutive slices (largest pools first) within each
    batch.  With randomize on, trial t permutes batch b's specimens with
    substream (seed, b, t) before slicing; with randomize off there is a
    single deterministic pass in stored order (length-1 result).
    """
    n = mu.target
    data = _batch_matrix(batches, n)
    nb = data.shape[0]
    total_tests = _slice_design(mu)
    if not randomize:
        return np.array([float(sum(total_tests(data[b]) for b in range(nb)))])
    if trials < 1:
        raise ValidationError(f"trials must be >= 1, got {trials}")
    totals = np.empty(trials)
    for t in range(trials):
        tot = 0
        for b in range(nb):
            perm = substream(seed, b, t).permutation(n)
            tot += total_tests(data[b][perm])
        totals[t] = tot
    return totals


def empirical_evaluate(
    batches: Sequence,
    mu: MultiplicityFunction,
    randomize: bool,
    trials: int,
    seed: int,
    per_batch: bool = False,
) -> TrialSummary:
    """Replay a pooling design against recorded batch statuses.

    See empirical_trial_totals for the assignment scheme.  mean_tests is
    the mean tests per batch; efficiency is batch_size / mean tests per
    batch aggregated across the whole cohort per trial, or with per_batch
    the average of each batch's own ratio.
    """
    n = mu.target
    if not per_batch:
        totals = empirical_trial_totals(batches, mu, randomize, trials, seed)
        nb = len(batches)
        mean_tests, se = _mean_se(totals / nb)
        mean_eff, eff_se = _mean_se(n * nb / totals)
        return TrialSummary(len(totals), mean_tests, se, mean_eff, eff_se)

    data = _batch_matrix(batches, n)
    nb = data.shape[0]
    total_tests = _slice_design(mu)
    if not randomize:
        per = np.array([total_tests(data[b]) for b in range(nb)], dtype=float)
        return TrialSummary(1, float(per.mean()), 0.0, float((n / per).mean()), 0.0)
    if trials < 1:
        raise ValidationError(f"trials must be >= 1, got {trials}")
    mean_by_trial = np.empty(trials)
    eff_by_trial = np.empty(trials)
    for t in range(trials):
        per = np.empty(nb)
        for b in range(nb):
            perm = substream(seed, b, t).permutation(n)
            per[b] = total_tests(data[b][perm])
        mean_by_trial[t] = per.mean()
        eff_by_trial[t] = (n / per).mean()
    mean_tests, se = _mean_se(mean_by_trial)
    mean_eff, eff_se = _mean_se(eff_by_trial)
    return TrialSummary(trials, mean_tests, se, mean_eff, eff_se)
