"""Command-line pipeline: ingest, fit, optimize, simulate, report.

`report` runs the full experiment: fit IID and exchangeable models to a
batch file, build four pooling strategies, and evaluate each analytically
(under both fitted models) and empirically (replayed against the batches,
with and without randomized specimen-to-pool assignment).

Strategies:

    team8      fixed size-8 pools
    dorfman    classical infinite-population pool size at the fitted
               prevalence, one smaller remainder pool if it does not divide
               the batch size
    iid        cost-optimal partition under the fitted IID model
    symmetric  cost-optimal partition under the fitted exchangeable model

Option values resolve as flags > POOLPART_* environment variables >
defaults.  Exit codes: 0 success, 2 validation error, 3 I/O error,
4 infeasible optimization.
"""

from __future__ import annotations

import argparse
import contextlib
import csv
import json
import math
import os
import sys
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .cost import cost_vector, efficiency, expected_tests_group, expected_tests_partition
from .errors import InfeasibleError, PoolPartError, ValidationError
from .estimate import fit_iid, fit_symmetric
from .ingest import filter_pools, impute_batches, parse_pools, read_batches, write_batches
from .model import SymmetricModel, iid_model, prevalence, q_from_alpha
from .optimize import (
    MultiplicityFunction,
    dorfman_infinite_size,
    dp_solve,
    pooling_from_multiplicity,
)
from .simulate import TrialSummary, empirical_evaluate, empirical_trial_totals, mc_trial_totals

__all__ = ["StrategyReport", "strategy_multiplicity", "run_experiment", "emit_model_analysis", "main"]

STRATEGIES = ("team8", "dorfman", "iid", "symmetric")


@dataclass(frozen=True)
class StrategyReport:
    """One strategy's pooling and its evaluations for a single batch size.

    theoretical_tests / theoretical_efficiency are computed under the
    fitted exchangeable model; iid_tests / iid_efficiency under the fitted
    IID model.
    """

    strategy: str
    multiplicity: MultiplicityFunction
    theoretical_tests: float
    theoretical_efficiency: float
    iid_tests: float
    iid_efficiency: float
    empirical_randomized: Optional[TrialSummary] = None
    empirical_deterministic: Optional[TrialSummary] = None

    def __post_init__(self):
        n = self.multiplicity.target
        for tests, eff in (
            (self.theoretical_tests, self.theoretical_efficiency),
            (self.iid_tests, self.iid_efficiency),
        ):
            if not math.isclose(eff, n / tests, rel_tol=1e-12):
                raise ValidationError(
                    f"efficiency {eff!r} does not equal {n}/{tests!r}"
                )

    def to_dict(self) -> dict:
        return {
            "strategy": self.strategy,
            "multiplicity": {str(i): m for i, m in self.multiplicity.counts},
            "num_pools": self.multiplicity.num_parts,
            "max_pool": self.multiplicity.max_part,
            "theoretical": {
                "symmetric": {
                    "expected_tests": self.theoretical_tests,
                    "efficiency": self.theoretical_efficiency,
                },
                "iid": {
                    "expected_tests": self.iid_tests,
                    "efficiency": self.iid_efficiency,
                },
            },
            "empirical": {
                "randomized": self.empirical_randomized.to_dict()
                if self.empirical_randomized
                else None,
                "deterministic": self.empirical_deterministic.to_dict()
                if self.empirical_deterministic
                else None,
            },
        }


@contextlib.contextmanager
def _stage(label: str):
    """Prefix domain and I/O errors with the pipeline stage that raised."""
    try:
        yield
    except ValidationError as e:
        raise ValidationError(f"{label}: {e}") from e
    except InfeasibleError as e:
        raise InfeasibleError(f"{label}: {e}") from e
    except OSError as e:
        raise OSError(f"{label}: {e}") from e


def _blocks(n: int, size: int) -> MultiplicityFunction:
    counts = {size: n // size}
    r = n % size
    if r:
        counts[r] = counts.get(r, 0) + 1
    return MultiplicityFunction(n, counts)


def strategy_multiplicity(
    strategy: str,
    batch_size: int,
    m_iid: SymmetricModel,
    m_sym: SymmetricModel,
    max_pool: Optional[int] = None,
) -> MultiplicityFunction:
    """Pooling multiplicity for one strategy.

    max_pool caps every strategy's pool size (fixed sizes are clamped, the
    optimizers get a restricted cost vector).  The dorfman strategy handles
    the degenerate fits the infinite-population formula excludes: one big
    pool at zero prevalence, individual testing at full prevalence.
    """
    if strategy not in STRATEGIES:
        raise ValidationError(f"unknown strategy {strategy!r}; choose from {STRATEGIES}")
    cap = batch_size if max_pool is None else min(int(max_pool), batch_size)
    if cap < 1:
        raise ValidationError(f"max pool size must be >= 1, got {max_pool!r}")
    if strategy == "team8":
        return _blocks(batch_size, min(8, cap))
    if strategy == "dorfman":
        p = prevalence(m_iid)
        if p <= 0.0:
            s = cap
        elif p >= 1.0:
            s = 1
        else:
            s = min(dorfman_infinite_size(p, s_max=max(cap, 2)), cap)
        return _blocks(batch_size, s)
    m = m_iid if strategy == "iid" else m_sym
    if m.n != batch_size:
        raise ValidationError(
            f"model size {m.n} does not match batch size {batch_size}"
        )
    cv = cost_vector(q_from_alpha(m), max_size=cap)
    mu, _ = dp_solve(cv, batch_size)
    return mu


def run_experiment(
    batches_path,
    batch_size: int = 80,
    trials: int = 10000,
    seed: int = 0,
    max_pool: Optional[int] = None,
    laplace: float = 0.0,
) -> List[StrategyReport]:
    """Fit both models to a batch file and evaluate all four strategies."""
    with _stage("ingest"):
        batches = read_batches(batches_path)
        for b in batches:
            if b.size != batch_size:
                raise ValidationError(
                    f"batch {b.index} has size {b.size}, expected {batch_size}"
                )
    with _stage("fit"):
        m_iid = fit_iid(batches, laplace=laplace)
        m_sym = fit_symmetric(batches, laplace=laplace)
        cv_sym = cost_vector(q_from_alpha(m_sym))
        cv_iid = cost_vector(q_from_alpha(m_iid))
    reports = []
    for name in STRATEGIES:
        with _stage(f"optimize[{name}]"):
            mu = strategy_multiplicity(name, batch_size, m_iid, m_sym, max_pool)
            pools = pooling_from_multiplicity(mu, range(batch_size))
            t_sym = expected_tests_partition(cv_sym, pools)
            t_iid = expected_tests_partition(cv_iid, pools)
        with _stage(f"simulate[{name}]"):
            randomized = empirical_evaluate(batches, mu, True, trials, seed)
            deterministic = empirical_evaluate(batches, mu, False, trials, seed)
        reports.append(
            StrategyReport(
                strategy=name,
                multiplicity=mu,
                theoretical_tests=t_sym,
                theoretical_efficiency=efficiency(batch_size, t_sym),
                iid_tests=t_iid,
                iid_efficiency=efficiency(batch_size, t_iid),
                empirical_randomized=randomized,
                empirical_deterministic=deterministic,
            )
        )
    return reports


def emit_model_analysis(m_iid: SymmetricModel, m_sym: SymmetricModel, out_dir) -> List[str]:
    """Write plot-ready CSV series comparing the two fitted models:
    alpha[k] vs k, q[h] vs h, and U(h) vs h."""
    if m_iid.n != m_sym.n:
        raise ValidationError(f"models must share n, got {m_iid.n} and {m_sym.n}")
    n = m_iid.n
    os.makedirs(out_dir, exist_ok=True)
    q_iid, q_sym = q_from_alpha(m_iid), q_from_alpha(m_sym)
    series = {
        "alpha.csv": (
            ("k", "iid", "symmetric"),
            [(k, float(m_iid.alpha[k]), float(m_sym.alpha[k])) for k in range(n + 1)],
        ),
        "q.csv": (
            ("h", "iid", "symmetric"),
            [(h, float(q_iid.q[h]), float(q_sym.q[h])) for h in range(n + 1)],
        ),
        "u.csv": (
            ("h", "iid", "symmetric"),
            [
                (h, expected_tests_group(q_iid, h), expected_tests_group(q_sym, h))
                for h in range(1, n + 1)
            ],
        ),
    }
    paths = []
    for name, (header, rows) in series.items():
        path = os.path.join(out_dir, name)
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(header)
            writer.writerows(rows)
        paths.append(path)
    return paths


# ---------------------------------------------------------------------------
# argument plumbing

def _env(name: str, cast, fallback):
    raw = os.environ.get("POOLPART_" + name)
    if raw is None:
        return fallback
    try:
        return cast(raw)
    except ValueError as e:
        raise ValidationError(f"bad POOLPART_{name} value {raw!r}: {e}") from e


def _write_json(doc: dict, path: Optional[str]) -> None:
    text = json.dumps(doc, indent=2, sort_keys=True) + "\n"
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w") as fh:
            fh.write(text)


def _load_model(path) -> SymmetricModel:
    with open(path) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as e:
            raise ValidationError(f"{path}: invalid JSON: {e}") from e
    return SymmetricModel.from_dict(doc)


def _load_multiplicity(path) -> MultiplicityFunction:
    with open(path) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as e:
            raise ValidationError(f"{path}: invalid JSON: {e}") from e
    if isinstance(doc, dict) and "multiplicity" in doc:
        doc = doc["multiplicity"]
    if not isinstance(doc, dict) or not doc:
        raise ValidationError(f"{path}: expected a nonempty size->count object")
    try:
        counts = {int(i): int(m) for i, m in doc.items()}
    except (TypeError, ValueError) as e:
        raise ValidationError(f"{path}: bad multiplicity entry: {e}") from e
    target = sum(i * m for i, m in counts.items())
    return MultiplicityFunction(target, counts)


def _cmd_ingest(args) -> int:
    records = parse_pools(args.input)
    specimens_in = sum(r.pool_size for r in records)
    excluded = set(args.exclude_size) if args.exclude_size else {5}
    kept, dropped = filter_pools(records, excluded)
    batches, remainder = impute_batches(kept, args.batch_size)
    write_batches(args.out, batches)
    _write_json(
        {
            "pools_read": len(records),
            "pools_kept": len(kept),
            "dropped": dropped,
            "batch_size": args.batch_size,
            "batches": len(batches),
            "specimens_in": specimens_in,
            "specimens_out": len(batches) * args.batch_size,
            "remainder_discarded": remainder,
            "out": str(args.out),
        },
        None,
    )
    return 0


def _cmd_fit(args) -> int:
    batches = read_batches(args.input)
    fit = fit_iid if args.family == "iid" else fit_symmetric
    m = fit(batches, laplace=args.laplace)
    _write_json(m.to_dict(), args.out)
    if args.out not in (None, "-"):
        _write_json(
            {
                "family": args.family,
                "n": m.n,
                "batches": len(batches),
                "prevalence": prevalence(m),
                "out": str(args.out),
            },
            None,
        )
    return 0


def _cmd_optimize(args) -> int:
    if args.model is not None:
        if args.prevalence is not None:
            raise ValidationError("give either --model or --prevalence, not both")
        m = _load_model(args.model)
        n = args.n if args.n is not None else m.n
        if n != m.n:
            raise ValidationError(f"--n {n} does not match model size {m.n}")
    else:
        if args.prevalence is None or args.n is None:
            raise ValidationError("without --model, both --n and --prevalence are required")
        n = args.n
        m = iid_model(n, args.prevalence)
    p = args.prevalence if args.prevalence is not None else prevalence(m)
    m_iid = m if args.model is None else iid_model(n, p)
    mu = strategy_multiplicity(args.strategy, n, m_iid, m, args.max_pool_size)
    pools = pooling_from_multiplicity(mu, range(n))
    tests = expected_tests_partition(cost_vector(q_from_alpha(m)), pools)
    _write_json(
        {
            "strategy": args.strategy,
            "n": n,
            "multiplicity": {str(i): cnt for i, cnt in mu.counts},
            "expected_tests": tests,
            "efficiency": efficiency(n, tests),
            "pools": [list(g) for g in pools.groups],
        },
        args.out,
    )
    return 0


def _cmd_simulate(args) -> int:
    if (args.model is None) == (args.batches is None):
        raise ValidationError("give exactly one of --model or --batches")
    mu = _load_multiplicity(args.multiplicity)
    if args.model is not None:
        m = _load_model(args.model)
        if mu.target != m.n:
            raise ValidationError(
                f"multiplicity target {mu.target} does not match model size {m.n}"
            )
        pools = pooling_from_multiplicity(mu, range(m.n))
        totals = mc_trial_totals(m, pools, args.trials, args.seed)
        mean, se = _summary_stats(totals)
        eff = m.n / totals
        summary = TrialSummary(args.trials, mean, se, *_summary_stats(eff))
    else:
        batches = read_batches(args.batches)
        randomize = args.randomize == "on"
        totals = empirical_trial_totals(batches, mu, randomize, args.trials, args.seed)
        nb = len(batches)
        mean, se = _summary_stats(totals / nb)
        eff, eff_se = _summary_stats(mu.target * nb / totals)
        summary = TrialSummary(len(totals), mean, se, eff, eff_se)
    if args.per_trial_out:
        with open(args.per_trial_out, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(("trial", "total_tests"))
            writer.writerows((t, int(v)) for t, v in enumerate(totals))
    _write_json(summary.to_dict(), args.out)
    return 0


def _summary_stats(values: np.ndarray) -> Tuple[float, float]:
    mean = float(values.mean())
    if values.size < 2:
        return mean, 0.0
    return mean, float(values.std(ddof=1) / math.sqrt(values.size))


def _cmd_report(args) -> int:
    reports = run_experiment(
        args.batches,
        batch_size=args.batch_size,
        trials=args.trials,
        seed=args.seed,
        max_pool=args.max_pool_size,
        laplace=args.laplace,
    )
    doc = {
        "batch_size": args.batch_size,
        "trials": args.trials,
        "seed": args.seed,
        "strategies": [r.to_dict() for r in reports],
    }
    if args.plots_dir:
        with _stage("fit"):
            batches = read_batches(args.batches)
            m_iid = fit_iid(batches, laplace=args.laplace)
            m_sym = fit_symmetric(batches, laplace=args.laplace)
        doc["plots"] = emit_model_analysis(m_iid, m_sym, args.plots_dir)
    _write_json(doc, args.out)
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="poolpart",
        description="Pool partitioning for two-stage group testing.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, trials=True):
        p.add_argument("--seed", type=int, default=_env("SEED", int, 0))
        if trials:
            p.add_argument("--trials", type=int, default=_env("TRIALS", int, 10000))

    p = sub.add_parser("ingest", help="parse pool records and impute batches")
    p.add_argument("--input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--batch-size", type=int, default=_env("BATCH_SIZE", int, 80))
    p.add_argument(
        "--exclude-size",
        type=int,
        action="append",
        default=None,
        help="pool size to drop; repeatable (default: 5)",
    )
    p.set_defaults(func=_cmd_ingest)

    p = sub.add_parser("fit", help="fit a model to a batch file")
    p.add_argument("--input", required=True)
    p.add_argument("--family", choices=("iid", "symmetric"), default="symmetric")
    p.add_argument("--laplace", type=float, default=_env("LAPLACE", float, 0.0))
    p.add_argument("--out", default=None, help="model JSON path (default: stdout)")
    p.set_defaults(func=_cmd_fit)

    p = sub.add_parser("optimize", help="compute a pooling for one strategy")
    p.add_argument("--model", default=None, help="model JSON file")
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--prevalence", type=float, default=None, help="IID shortcut")
    p.add_argument(
        "--max-pool-size", type=int, default=_env("MAX_POOL_SIZE", int, None)
    )
    p.add_argument("--strategy", choices=STRATEGIES, default="symmetric")
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_optimize)

    p = sub.add_parser("simulate", help="Monte Carlo or batch replay of a pooling")
    p.add_argument("--model", default=None)
    p.add_argument("--batches", default=None)
    p.add_argument("--multiplicity", required=True, help="JSON size->count file")
    p.add_argument("--randomize", choices=("on", "off"), default="on")
    p.add_argument("--per-trial-out", default=None, help="CSV of per-trial totals")
    p.add_argument("--out", default=None)
    common(p)
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("report", help="full four-strategy comparison")
    p.add_argument("--batches", required=True)
    p.add_argument("--batch-size", type=int, default=_env("BATCH_SIZE", int, 80))
    p.add_argument(
        "--max-pool-size", type=int, default=_env("MAX_POOL_SIZE", int, None)
    )
    p.add_argument("--laplace", type=float, default=_env("LAPLACE", float, 0.0))
    p.add_argument("--plots-dir", default=None, help="also write alpha/q/U plot CSVs")
    p.add_argument("--out", default=None)
    common(p)
    p.set_defaults(func=_cmd_report)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        args = _build_parser().parse_args(argv)
        return args.func(args)
    except ValidationError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except OSError as e:
        print(f"I/O error: {e}", file=sys.stderr)
        return 3
    except InfeasibleError as e:
        print(f"infeasible: {e}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
