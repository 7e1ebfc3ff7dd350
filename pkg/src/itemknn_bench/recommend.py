"""Candidate scoring and top-N recommendation under configurable scoring modes.

Two scoring modes exist for a user profile P and similarity matrix S:

* ``sum-all``: score(i) = sum of S[i, j] over j in P.
* ``profile-topk``: score(i) = sum of the k largest values among
  {S[i, j] : j in P}, value ties resolved toward the smaller j.

Both modes accumulate the selected values for a candidate in the same order
(ascending j, strict left-to-right).  Adding a selected zero is an exact
no-op in IEEE arithmetic, so whenever the two modes select the same nonzero
values — e.g. on a top-k truncated matrix whose rows hold at most k entries —
their scores are bit-identical, not merely close.  That exactness is what
makes the strategy-alignment equivalence checkable as equality downstream.

Named presets pair a matrix strategy with a scoring mode:

* ``lenskit-original``: full matrix, profile-topk scoring.
* ``recbole``: top-k truncated matrix, sum-all scoring.
* ``lenskit-adjusted``: top-k truncated matrix, profile-topk scoring.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

import numpy as np

from .errors import ContractError
from .ingest import InteractionDataset
from .knn import STRATEGY_FULL, STRATEGY_TOPK, SimilarityMatrix
from .split import SplitPair

SCORING_SUM_ALL = "sum-all"
SCORING_PROFILE_TOPK = "profile-topk"


@dataclass(frozen=True, slots=True)
class ScoringMode:
    kind: str
    k: int | None = None

    def __post_init__(self):
        if self.kind not in (SCORING_SUM_ALL, SCORING_PROFILE_TOPK):
            raise ValueError(f"unknown scoring kind {self.kind!r}")
        if self.kind == SCORING_PROFILE_TOPK and (self.k is None or self.k < 1):
            raise ValueError("profile-topk scoring requires k >= 1")


@dataclass(frozen=True, slots=True)
class Preset:
    """A named (matrix strategy, scoring mode) combination."""

    name: str
    matrix_strategy: str
    scoring_kind: str

    def scoring_mode(self, k: int) -> ScoringMode:
        if self.scoring_kind == SCORING_PROFILE_TOPK:
            return ScoringMode(SCORING_PROFILE_TOPK, k)
        return ScoringMode(SCORING_SUM_ALL)


PRESETS = {
    "lenskit-original": Preset("lenskit-original", STRATEGY_FULL, SCORING_PROFILE_TOPK),
    "recbole": Preset("recbole", STRATEGY_TOPK, SCORING_SUM_ALL),
    "lenskit-adjusted": Preset("lenskit-adjusted", STRATEGY_TOPK, SCORING_PROFILE_TOPK),
}


@dataclass(frozen=True)
class RecommendationList:
    """Ranked (item, score) entries for one user; scores positive, non-increasing."""

    user: int
    entries: list[tuple[int, float]]


def score_user(
    s: SimilarityMatrix, profile: Iterable[int], mode: ScoringMode
) -> np.ndarray:
    """Score every item as a candidate for a user with the given train profile.

    Returns a dense float64 vector over all items.  Candidates sharing no
    stored similarity with the profile score exactly 0.  Items inside the
    profile are scored too; exclusion happens in :func:`recommend_topn`.
    """
    profile = np.unique(np.asarray(list(profile), dtype=np.int64))
    if len(profile) and (profile[0] < 0 or profile[-1] >= s.n_items):
        raise ContractError(
            f"profile indices out of range [0, {s.n_items}): {profile.min()}..{profile.max()}"
        )

    scores = np.zeros(s.n_items, dtype=np.float64)
    if len(profile) == 0:
        return scores

    gathered = s.csc()[:, profile].toarray()  # (n_items, |profile|), ascending j

    if mode.kind == SCORING_PROFILE_TOPK and mode.k < gathered.shape[1]:
        order = np.argsort(-gathered, axis=1, kind="stable")  # ties -> smaller j
        selected = np.zeros_like(gathered, dtype=bool)
        np.put_along_axis(selected, order[:, : mode.k], True, axis=1)
        gathered = np.where(selected, gathered, 0.0)

    # One column at a time keeps per-candidate accumulation sequential in
    # ascending j for both modes; see the module docstring for why.
    for idx in range(gathered.shape[1]):
        scores += gathered[:, idx]
    return scores


def recommend_topn(
    scores: np.ndarray, seen: Iterable[int], n: int, user: int = 0
) -> RecommendationList:
    """Top-n unseen positively scored items, by score descending then item ascending."""
    if n < 1:
        raise ContractError(f"n must be >= 1, got {n}")
    candidates = scores > 0.0
    seen = np.asarray(list(seen), dtype=np.int64)
    if len(seen):
        candidates[seen] = False
    (items,) = np.nonzero(candidates)
    if len(items) == 0:
        return RecommendationList(user=user, entries=[])
    vals = scores[items]
    order = np.lexsort((items, -vals))[:n]
    return RecommendationList(
        user=user, entries=[(int(items[o]), float(vals[o])) for o in order]
    )


def train_profiles(train: InteractionDataset) -> dict[int, np.ndarray]:
    """Dense user index -> sorted array of the user's train item indices."""
    per_user: dict[int, list[int]] = {}
    for r in train.interactions:
        per_user.setdefault(train.user_index.dense(r.user), []).append(
            train.item_index.dense(r.item)
        )
    return {u: np.array(sorted(items), dtype=np.int64) for u, items in per_user.items()}


def recommend_all(
    s: SimilarityMatrix, split: SplitPair, mode: ScoringMode, n: int
) -> list[RecommendationList]:
    """One recommendation list per user holding at least one test interaction.

    Scoring uses the user's train profile, which is also the excluded seen
    set.  Lists come back in ascending dense-user order, so the output is
    independent of any internal scheduling.
    """
    if s.n_items != split.train.n_items:
        raise ContractError(
            f"matrix has {s.n_items} items but split.train has {split.train.n_items}"
        )

    profiles = train_profiles(split.train)
    eval_users = sorted(
        {split.test.user_index.dense(r.user) for r in split.test.interactions}
    )

    out: list[RecommendationList] = []
    for u in eval_users:
        profile = profiles.get(u)
        if profile is None:
            # Unreachable with split_holdout's ceil rule; guard for foreign splits.
            profile = np.zeros(0, dtype=np.int64)
        scores = score_user(s, profile, mode)
        out.append(recommend_topn(scores, profile, n, user=u))
    return out


def save_recommendations(
    recs: list[RecommendationList], ds: InteractionDataset, path: str | Path
) -> Path:
    """Dump lists as ``user<TAB>rank<TAB>item<TAB>score`` with external ids."""
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="\n") as fh:
        fh.write("user\trank\titem\tscore\n")
        for rl in recs:
            user = ds.user_index.ext(rl.user)
            for rank, (item, score) in enumerate(rl.entries, start=1):
                fh.write(f"{user}\t{rank}\t{ds.item_index.ext(item)}\t{score:.17g}\n")
    return path


def load_recommendations(path: str | Path) -> dict[str, list[tuple[str, float]]]:
    """Read a dump back as external-id lists, preserving rank order."""
    path = Path(path)
    out: dict[str, list[tuple[str, float]]] = {}
    with path.open(encoding="utf-8") as fh:
        next(fh)  # header
        for line in fh:
            user, _rank, item, score = line.rstrip("\n").split("\t")
            out.setdefault(user, []).append((item, float(score)))
    return out
