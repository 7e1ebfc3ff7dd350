from __future__ import annotations

import random

import numpy as np
import pytest

from itemknn_bench.errors import ContractError
from itemknn_bench.ingest import Interaction, InteractionDataset
from itemknn_bench.knn import (
    STRATEGY_FULL,
    STRATEGY_TOPK,
    SimilarityMatrix,
    build_matrix,
    cosine_similarity,
    load_similarity,
    save_similarity,
    truncate_topk,
)

from conftest import dense_cosine_oracle, dense_truncate_oracle, make_implicit_dataset


def ds_from_pairs(pairs):
    return InteractionDataset.from_interactions(
        [Interaction(u, i, 1.0, 0.0) for u, i in pairs]
    )


def sim_from_dense(dense, strategy=STRATEGY_FULL, k=None) -> SimilarityMatrix:
    n = len(dense)
    indptr = [0]
    cols, vals = [], []
    for row in dense:
        for j, v in enumerate(row):
            if v != 0.0:
                cols.append(j)
                vals.append(v)
        indptr.append(len(cols))
    return SimilarityMatrix(
        n_items=n,
        indptr=np.array(indptr, dtype=np.int64),
        cols=np.array(cols, dtype=np.int64),
        vals=np.array(vals, dtype=np.float64),
        strategy=strategy,
        k=k,
    )


def to_dense(s: SimilarityMatrix) -> list[list[float]]:
    dense = [[0.0] * s.n_items for _ in range(s.n_items)]
    for i in range(s.n_items):
        cols, vals = s.row(i)
        for c, v in zip(cols, vals):
            dense[i][c] = v
    return dense


def test_build_matrix_rows_sorted():
    from itemknn_bench.ingest import IdIndex

    ds = InteractionDataset(
        [
            Interaction("u0", "i0", 1.0, 0.0),
            Interaction("u0", "i2", 1.0, 0.0),
            Interaction("u1", "i1", 1.0, 0.0),
        ],
        IdIndex(["u0", "u1"]),
        IdIndex(["i0", "i1", "i2"]),
    )
    m = build_matrix(ds)
    assert m.n_users == 2
    assert m.n_items == 3
    assert m.rows[0].tolist() == [0, 2]
    assert m.rows[1].tolist() == [1]


def test_build_matrix_empty():
    m = build_matrix(ds_from_pairs([]))
    assert m.n_users == 0
    assert m.n_items == 0
    assert m.rows == []


def test_cosine_identical_single_user():
    # i and j interacted with by exactly the same one user
    s = cosine_similarity(build_matrix(ds_from_pairs([("u", "i"), ("u", "j")])))
    dense = to_dense(s)
    assert dense[0][1] == 1.0
    assert dense[1][0] == 1.0
    assert dense[0][0] == 0.0  # diagonal excluded


def test_cosine_disjoint_users_not_stored():
    s = cosine_similarity(build_matrix(ds_from_pairs([("a", "i"), ("b", "j")])))
    assert s.nnz == 0


def test_cosine_half_overlap():
    # U_i = {u1, u2}, U_j = {u2, u3} -> 1 / (sqrt(2) * sqrt(2)) = 0.5
    s = cosine_similarity(
        build_matrix(ds_from_pairs([("u1", "i"), ("u2", "i"), ("u2", "j"), ("u3", "j")]))
    )
    assert to_dense(s)[0][1] == 0.5


def test_cosine_requires_items():
    with pytest.raises(ContractError):
        cosine_similarity(build_matrix(ds_from_pairs([])))


def test_cosine_matches_dense_oracle():
    rng = random.Random(42)
    for _ in range(30):
        ds = make_implicit_dataset(rng)
        s = cosine_similarity(build_matrix(ds))
        expected = dense_cosine_oracle(ds)
        got = to_dense(s)
        for i in range(ds.n_items):
            for j in range(ds.n_items):
                assert got[i][j] == pytest.approx(expected[i][j], abs=1e-12)


def test_cosine_symmetry_and_range():
    rng = random.Random(9)
    for _ in range(10):
        s = cosine_similarity(build_matrix(make_implicit_dataset(rng)))
        assert np.all(s.vals > 0.0)  # zeros never stored
        assert np.all(s.vals <= 1.0)
        dense = np.array(to_dense(s))
        assert np.array_equal(dense, dense.T)
        assert np.all(np.diag(dense) == 0.0)


def test_truncate_examples():
    full = sim_from_dense([[0.0, 0.9, 0.5, 0.2]] + [[0.0] * 4] * 3)
    out = truncate_topk(full, 2)
    assert to_dense(out)[0] == [0.0, 0.9, 0.5, 0.0]
    assert out.strategy == STRATEGY_TOPK
    assert out.k == 2


def test_truncate_tie_break_smaller_column():
    full = sim_from_dense([[0.0, 0.5, 0.5, 0.5]] + [[0.0] * 4] * 3)
    out = truncate_topk(full, 2)
    assert to_dense(out)[0] == [0.0, 0.5, 0.5, 0.0]


def test_truncate_noop_when_k_large():
    rng = random.Random(17)
    s = cosine_similarity(build_matrix(make_implicit_dataset(rng)))
    out = truncate_topk(s, s.n_items - 1 if s.n_items > 1 else 1)
    assert out.entries_equal(s)


def test_truncate_soundness_and_oracle():
    rng = random.Random(23)
    for _ in range(25):
        ds = make_implicit_dataset(rng)
        s = cosine_similarity(build_matrix(ds))
        k = rng.choice([1, 2, 5])
        out = truncate_topk(s, k)
        # matches the dense oracle exactly (values unchanged, same kept set)
        assert to_dense(out) == dense_truncate_oracle(to_dense(s), k)
        for i in range(s.n_items):
            _, full_vals = s.row(i)
            kept_cols, kept_vals = out.row(i)
            assert len(kept_cols) <= k
            removed = sorted(full_vals.tolist())
            for v in kept_vals:
                removed.remove(v)
            if len(kept_vals) and removed:
                assert kept_vals.min() >= max(removed)


def test_truncate_idempotent_and_monotone():
    rng = random.Random(31)
    for _ in range(10):
        s = cosine_similarity(build_matrix(make_implicit_dataset(rng)))
        k = rng.choice([1, 2, 5])
        once = truncate_topk(s, k)
        assert truncate_topk(once, k).entries_equal(once)
        kept_k = {(i, c) for i in range(s.n_items) for c in once.row(i)[0]}
        bigger = truncate_topk(s, k + 1)
        kept_k1 = {(i, c) for i in range(s.n_items) for c in bigger.row(i)[0]}
        assert kept_k <= kept_k1


def test_truncate_rejects_widening():
    s = cosine_similarity(build_matrix(make_implicit_dataset(random.Random(37))))
    out = truncate_topk(s, 2)
    with pytest.raises(ContractError):
        truncate_topk(out, 3)
    with pytest.raises(ContractError):
        truncate_topk(s, 0)


def test_save_load_round_trip_exact(tmp_path):
    s = cosine_similarity(build_matrix(make_implicit_dataset(random.Random(41))))
    for mat in (s, truncate_topk(s, 3)):
        path = save_similarity(mat, tmp_path / f"{mat.strategy}.sim.tsv")
        back = load_similarity(path)
        assert back.strategy == mat.strategy
        assert back.k == mat.k
        assert back.n_items == mat.n_items
        assert back.entries_equal(mat)  # 17 significant digits round-trip doubles


def test_save_header_format(tmp_path):
    s = cosine_similarity(build_matrix(ds_from_pairs([("u", "i"), ("u", "j")])))
    path = save_similarity(truncate_topk(s, 1), tmp_path / "m.tsv")
    header = path.read_text(encoding="utf-8").splitlines()[0]
    assert header == "items=2 strategy=topk k=1"
