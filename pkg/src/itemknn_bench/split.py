"""Deterministic per-user holdout splitting of an implicit dataset.

The split must be bit-reproducible across platforms and thread counts, so it
uses a fully pinned PRNG instead of any library's seed semantics: each user
gets an independent splitmix64 stream seeded with
``seed XOR (dense_user_index * 0x9E3779B97F4A7C15 mod 2**64)``, and that
stream drives a Fisher-Yates shuffle of the user's interactions in canonical
order (timestamp ascending, ties by dense item index ascending).  The first
``ceil(train_ratio * n)`` shuffled interactions go to train, the rest to test.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

from .errors import ContractError
from .ingest import Interaction, InteractionDataset, save_interactions

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


class SplitMix64:
    """splitmix64 PRNG (Steele, Lea & Flood); 64-bit wraparound arithmetic."""

    __slots__ = ("_state",)

    def __init__(self, seed: int):
        self._state = seed & _MASK64

    def next_u64(self) -> int:
        self._state = (self._state + _GOLDEN) & _MASK64
        z = self._state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
        return z ^ (z >> 31)


def _fisher_yates(items: list, rng: SplitMix64) -> None:
    # Modulo draw is biased in general but the bias is irrelevant at per-user
    # list sizes; what matters here is that the sequence is pinned exactly.
    for i in range(len(items) - 1, 0, -1):
        j = rng.next_u64() % (i + 1)
        items[i], items[j] = items[j], items[i]


@dataclass(frozen=True, slots=True)
class SplitConfig:
    train_ratio: float = 0.8
    seed: int = 42

    def __post_init__(self):
        if not (0.0 < self.train_ratio <= 1.0):
            raise ValueError(f"train_ratio must be in (0, 1], got {self.train_ratio}")


@dataclass(frozen=True)
class SplitPair:
    """Train/test partition sharing the source dataset's index maps."""

    train: InteractionDataset
    test: InteractionDataset

    @classmethod
    def from_datasets(cls, train: InteractionDataset, test: InteractionDataset) -> "SplitPair":
        """Re-key two independently loaded datasets onto one shared id universe.

        Used when a persisted split is read back from disk; indices are
        rebuilt in train-first, then test-first appearance order.
        """
        merged = InteractionDataset.from_interactions(
            list(train.interactions) + list(test.interactions)
        )
        new_train = InteractionDataset(
            list(train.interactions), merged.user_index, merged.item_index
        )
        new_test = InteractionDataset(
            list(test.interactions), merged.user_index, merged.item_index
        )
        return cls(new_train, new_test)


def split_holdout(ds: InteractionDataset, cfg: SplitConfig) -> SplitPair:
    """Split each user's interactions into train/test by ``cfg.train_ratio``.

    For a user with n interactions exactly ``ceil(train_ratio * n)`` go to
    train, so every user keeps at least one training interaction; users whose
    test side is empty simply never show up in the test interactions.  Both
    output datasets share the source index maps.

    Raises ``ContractError`` if the dataset is not implicit.
    """
    if not ds.is_implicit():
        raise ContractError("split_holdout requires an implicit dataset (all ratings 1)")

    per_user: dict[int, list[Interaction]] = {}
    for r in ds.interactions:
        per_user.setdefault(ds.user_index.dense(r.user), []).append(r)

    train: list[Interaction] = []
    test: list[Interaction] = []
    for u in sorted(per_user):
        rows = per_user[u]
        rows.sort(key=lambda r: (r.timestamp, ds.item_index.dense(r.item)))
        rng = SplitMix64(cfg.seed ^ ((u * _GOLDEN) & _MASK64))
        _fisher_yates(rows, rng)
        n_train = math.ceil(cfg.train_ratio * len(rows))
        head, tail = rows[:n_train], rows[n_train:]
        # Canonical output order: user ascending, then (timestamp, item) within.
        head.sort(key=lambda r: (r.timestamp, ds.item_index.dense(r.item)))
        tail.sort(key=lambda r: (r.timestamp, ds.item_index.dense(r.item)))
        train.extend(head)
        test.extend(tail)

    return SplitPair(
        train=InteractionDataset(train, ds.user_index, ds.item_index),
        test=InteractionDataset(test, ds.user_index, ds.item_index),
    )


def save_split(pair: SplitPair, out_dir: str | Path, stem: str) -> tuple[Path, Path]:
    """Persist a split as ``<stem>.train.inter`` / ``<stem>.test.inter``."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    train_path = save_interactions(pair.train, out_dir / f"{stem}.train.inter")
    test_path = save_interactions(pair.test, out_dir / f"{stem}.test.inter")
    return train_path, test_path
