"""Ranking metrics: DCG, nDCG under two IDCG semantics, precision, recall.

The two IDCG semantics reflect a real divergence between evaluation stacks:

* ``truncated``: the ideal list length is min(cutoff, number of relevant
  items), so a user with fewer test items than the cutoff can still reach
  nDCG 1.0.
* ``fixed-k``: the ideal list is always cutoff positions long, which caps
  nDCG below 1.0 whenever the user has fewer relevant items than the cutoff.

Relevance is binary throughout this artifact (implicit feedback), although
:func:`dcg` implements the general (2**rel - 1) gain.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple, Sequence

from .errors import ContractError
from .ingest import InteractionDataset
from .recommend import RecommendationList

IDCG_TRUNCATED = "truncated"
IDCG_FIXED_K = "fixed-k"
IDCG_MODES = (IDCG_TRUNCATED, IDCG_FIXED_K)


class UserMetrics(NamedTuple):
    ndcg: float
    precision: float
    recall: float


@dataclass
class MetricReport:
    """Per-user and mean metric values under one declared configuration."""

    n: int
    idcg_mode: str
    preset: str | None = None
    seed: int | None = None
    per_user: dict[str, UserMetrics] = field(default_factory=dict)
    mean_ndcg: float = 0.0
    mean_precision: float = 0.0
    mean_recall: float = 0.0

    @property
    def n_users(self) -> int:
        return len(self.per_user)

    def as_dict(self) -> dict:
        return {
            "n": self.n,
            "idcg_mode": self.idcg_mode,
            "preset": self.preset,
            "seed": self.seed,
            "mean_ndcg": self.mean_ndcg,
            "mean_precision": self.mean_precision,
            "mean_recall": self.mean_recall,
            "n_users": self.n_users,
            "per_user": {u: list(m) for u, m in self.per_user.items()},
        }

    @classmethod
    def from_dict(cls, d: dict) -> "MetricReport":
        return cls(
            n=d["n"],
            idcg_mode=d["idcg_mode"],
            preset=d["preset"],
            seed=d["seed"],
            per_user={u: UserMetrics(*vals) for u, vals in d["per_user"].items()},
            mean_ndcg=d["mean_ndcg"],
            mean_precision=d["mean_precision"],
            mean_recall=d["mean_recall"],
        )


def _check_idcg_mode(mode: str) -> None:
    if mode not in IDCG_MODES:
        raise ValueError(f"unknown IDCG mode {mode!r} (expected one of {IDCG_MODES})")


def dcg(gains: Sequence[float]) -> float:
    """Discounted cumulative gain: sum of (2**rel_i - 1) / log2(i + 1), i from 1."""
    return sum(
        (2.0**rel - 1.0) / math.log2(i + 1.0) for i, rel in enumerate(gains, start=1)
    )


def _ideal_dcg(m: int) -> float:
    # Binary ideal: gain 1 at each of the first m positions.
    return sum(1.0 / math.log2(i + 1.0) for i in range(1, m + 1))


def ndcg_at_n(gains: Sequence[float], n_relevant: int, n: int, mode: str) -> float:
    """nDCG at cutoff ``n`` for a gains vector aligned with a ranked list.

    ``n_relevant`` is the user's total number of relevant (test) items and
    must be >= 1; callers exclude users without test items.  The IDCG covers
    min(n, n_relevant) positions in truncated mode and exactly n positions in
    fixed-k mode.
    """
    _check_idcg_mode(mode)
    if n_relevant < 1:
        raise ContractError("ndcg_at_n requires n_relevant >= 1")
    if len(gains) > n:
        raise ContractError(f"gains vector longer ({len(gains)}) than cutoff ({n})")
    m = min(n, n_relevant) if mode == IDCG_TRUNCATED else n
    return dcg(gains) / _ideal_dcg(m)


def precision_at_n(gains: Sequence[float], n: int) -> float:
    """Fraction of the n slots holding a hit; the denominator stays n for short lists."""
    return sum(1 for g in gains if g > 0) / n


def recall_at_n(gains: Sequence[float], n_relevant: int) -> float:
    """Fraction of the user's relevant items retrieved, capped at 1."""
    if n_relevant < 1:
        raise ContractError("recall_at_n requires n_relevant >= 1")
    return min(sum(1 for g in gains if g > 0) / n_relevant, 1.0)


def report_from_gains(
    per_user: Iterable[tuple[str, Sequence[float], int]], n: int, mode: str
) -> MetricReport:
    """Assemble a report from (user, gains, n_relevant) triples.

    Means are arithmetic means over exactly the evaluated users, computed
    with exact summation so they are independent of user order.
    """
    _check_idcg_mode(mode)
    report = MetricReport(n=n, idcg_mode=mode)
    for user, gains, n_relevant in per_user:
        report.per_user[user] = UserMetrics(
            ndcg=ndcg_at_n(gains, n_relevant, n, mode),
            precision=precision_at_n(gains, n),
            recall=recall_at_n(gains, n_relevant),
        )
    if report.per_user:
        count = len(report.per_user)
        values = report.per_user.values()
        report.mean_ndcg = math.fsum(m.ndcg for m in values) / count
        report.mean_precision = math.fsum(m.precision for m in values) / count
        report.mean_recall = math.fsum(m.recall for m in values) / count
    return report


def evaluate(
    recs: list[RecommendationList],
    test: InteractionDataset,
    n: int,
    mode: str,
    preset: str | None = None,
    seed: int | None = None,
) -> MetricReport:
    """Score recommendation lists against a test dataset.

    A recommended item earns gain 1 when it appears in that user's test set.
    Every list's user must hold at least one test interaction (contract);
    users are keyed by external id in the report.
    """
    test_sets: dict[int, set[int]] = {}
    for r in test.interactions:
        test_sets.setdefault(test.user_index.dense(r.user), set()).add(
            test.item_index.dense(r.item)
        )

    def triples():
        for rl in recs:
            relevant = test_sets.get(rl.user)
            if not relevant:
                raise ContractError(
                    f"user {rl.user} has a recommendation list but no test interactions"
                )
            gains = [1.0 if item in relevant else 0.0 for item, _ in rl.entries]
            yield test.user_index.ext(rl.user), gains, len(relevant)

    report = report_from_gains(triples(), n, mode)
    report.preset = preset
    report.seed = seed
    return report
