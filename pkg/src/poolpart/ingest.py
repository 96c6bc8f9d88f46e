"""Read pooled-testing records and impute fixed-size batches.

Input CSV schema (header required, extra columns ignored):

    pool_id,run_timestamp,pool_size,statuses

where run_timestamp is ISO-8601 or empty, and statuses is a token string
over {N, P, I} (negative / positive / inconclusive) of length pool_size,
e.g. ``NNPNNNNN``.

The cleaning rules drop pools with no timestamp, pools of an excluded size,
and pools containing any inconclusive status.  Surviving pools are sorted
by timestamp (stable, so ties keep file order), their specimens are
concatenated, and consecutive slices of batch_size become batches; a
trailing remainder shorter than one batch is discarded and reported.

Batches round-trip through a second CSV, ``batch_index,statuses``, with
tokens restricted to {N, P}.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from datetime import datetime
from typing import Dict, List, Optional, Sequence, Set, Tuple

import numpy as np

from .errors import ValidationError

__all__ = [
    "PoolRecord",
    "Batch",
    "parse_pools",
    "write_pools",
    "filter_pools",
    "impute_batches",
    "write_batches",
    "read_batches",
]

NEGATIVE = "N"
POSITIVE = "P"
INCONCLUSIVE = "I"

_POOL_COLUMNS = ("pool_id", "run_timestamp", "pool_size", "statuses")
_BATCH_COLUMNS = ("batch_index", "statuses")


@dataclass(frozen=True)
class PoolRecord:
    pool_id: str
    run_timestamp: Optional[datetime]
    pool_size: int
    statuses: str

    def __post_init__(self):
        if self.pool_size < 1:
            raise ValidationError(f"pool_size must be >= 1, got {self.pool_size}")
        if len(self.statuses) != self.pool_size:
            raise ValidationError(
                f"pool {self.pool_id!r}: {len(self.statuses)} statuses for size {self.pool_size}"
            )
        bad = set(self.statuses) - {NEGATIVE, POSITIVE, INCONCLUSIVE}
        if bad:
            raise ValidationError(
                f"pool {self.pool_id!r}: unknown status token(s) {sorted(bad)}"
            )

    @property
    def has_inconclusive(self) -> bool:
        return INCONCLUSIVE in self.statuses


@dataclass(frozen=True, eq=False)
class Batch:
    index: int
    statuses: np.ndarray
    source_pools: Tuple[str, ...] = ()

    def __post_init__(self):
        s = np.asarray(self.statuses)
        if s.ndim != 1 or s.size == 0:
            raise ValidationError("batch statuses must be a nonempty 1-d vector")
        if not np.all((s == 0) | (s == 1)):
            raise ValidationError("batch statuses must be binary")
        s = s.astype(np.uint8).copy()
        s.setflags(write=False)
        object.__setattr__(self, "statuses", s)
        object.__setattr__(self, "source_pools", tuple(self.source_pools))

    @property
    def size(self) -> int:
        return int(self.statuses.shape[0])


def _parse_timestamp(text: str, line: int) -> Optional[datetime]:
    text = text.strip()
    if not text:
        return None
    try:
        # fromisoformat on 3.10 rejects a trailing Z; normalize it
        return datetime.fromisoformat(text.replace("Z", "+00:00"))
    except ValueError as e:
        raise ValidationError(f"line {line}: bad timestamp {text!r}: {e}") from e


def parse_pools(path) -> List[PoolRecord]:
    """Read pool records, failing loudly with line numbers on bad rows."""
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        missing = [c for c in _POOL_COLUMNS if c not in header]
        if missing:
            raise ValidationError(f"{path}: missing column(s) {missing}; header is {header}")
        records = []
        problems = []
        for row in reader:
            line = reader.line_num
            try:
                try:
                    size = int(row["pool_size"])
                except ValueError:
                    raise ValidationError(f"bad pool_size {row['pool_size']!r}")
                records.append(
                    PoolRecord(
                        pool_id=row["pool_id"],
                        run_timestamp=_parse_timestamp(row["run_timestamp"] or "", line),
                        pool_size=size,
                        statuses=(row["statuses"] or "").strip(),
                    )
                )
            except ValidationError as e:
                msg = str(e)
                problems.append(msg if msg.startswith("line ") else f"line {line}: {msg}")
        if problems:
            raise ValidationError(
                f"{path}: {len(problems)} malformed row(s):\n  " + "\n  ".join(problems)
            )
    return records


def write_pools(path, records: Sequence[PoolRecord]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(_POOL_COLUMNS)
        for r in records:
            ts = r.run_timestamp.isoformat() if r.run_timestamp else ""
            writer.writerow([r.pool_id, ts, r.pool_size, r.statuses])


def filter_pools(
    records: Sequence[PoolRecord], excluded_sizes: Set[int] = frozenset({5})
) -> Tuple[List[PoolRecord], Dict[str, int]]:
    """Apply the cleaning rules in order: (a) no timestamp, (b) excluded
    size, (c) any inconclusive status.  A record failing several rules is
    counted under the first.  Returns surviving records in input order plus
    per-rule drop counts (in specimens as well as pools).
    """
    kept = []
    dropped = {
        "no_timestamp": 0,
        "excluded_size": 0,
        "inconclusive": 0,
        "dropped_specimens": 0,
    }
    for r in records:
        if r.run_timestamp is None:
            rule = "no_timestamp"
        elif r.pool_size in excluded_sizes:
            rule = "excluded_size"
        elif r.has_inconclusive:
            rule = "inconclusive"
        else:
            kept.append(r)
            continue
        dropped[rule] += 1
        dropped["dropped_specimens"] += r.pool_size
    return kept, dropped


def impute_batches(
    records: Sequence[PoolRecord], batch_size: int
) -> Tuple[List[Batch], int]:
    """Slice timestamp-ordered specimens into fixed-size batches.

    Returns the batches and the size of the discarded trailing remainder.
    Every record must carry a timestamp (run filter_pools first).
    """
    if batch_size < 1:
        raise ValidationError(f"batch_size must be >= 1, got {batch_size}")
    for r in records:
        if r.run_timestamp is None:
            raise ValidationError(
                f"pool {r.pool_id!r} has no timestamp; filter before imputing"
            )
    ordered = sorted(records, key=lambda r: r.run_timestamp)

    statuses: List[int] = []
    owners: List[str] = []
    for r in ordered:
        statuses.extend(1 if ch == POSITIVE else 0 for ch in r.statuses)
        owners.extend([r.pool_id] * r.pool_size)

    batches = []
    full = len(statuses) // batch_size
    for b in range(full):
        lo, hi = b * batch_size, (b + 1) * batch_size
        sources = tuple(dict.fromkeys(owners[lo:hi]))  # unique, order kept
        batches.append(Batch(b, np.array(statuses[lo:hi], dtype=np.uint8), sources))
    remainder = len(statuses) - full * batch_size
    return batches, remainder


def write_batches(path, batches: Sequence[Batch]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(_BATCH_COLUMNS)
        for b in batches:
            tokens = "".join(POSITIVE if v else NEGATIVE for v in b.statuses)
            writer.writerow([b.index, tokens])


def read_batches(path) -> List[Batch]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        missing = [c for c in _BATCH_COLUMNS if c not in header]
        if missing:
            raise ValidationError(f"{path}: missing column(s) {missing}; header is {header}")
        batches = []
        for row in reader:
            line = reader.line_num
            tokens = (row["statuses"] or "").strip()
            bad = set(tokens) - {NEGATIVE, POSITIVE}
            if bad:
                raise ValidationError(f"{path}: line {line}: unknown status token(s) {sorted(bad)}")
            if not tokens:
                raise ValidationError(f"{path}: line {line}: empty statuses")
            try:
                idx = int(row["batch_index"])
            except ValueError as e:
                raise ValidationError(
                    f"{path}: line {line}: bad batch_index {row['batch_index']!r}"
                ) from e
            values = np.fromiter((tok == POSITIVE for tok in tokens), dtype=np.uint8)
            batches.append(Batch(idx, values))
    return batches
