from __future__ import annotations

import math
import random
from collections import Counter

import pytest

from itemknn_bench.errors import ContractError
from itemknn_bench.ingest import Interaction, InteractionDataset, load_interactions
from itemknn_bench.split import (
    SplitConfig,
    SplitMix64,
    SplitPair,
    save_split,
    split_holdout,
)

from conftest import make_implicit_dataset


def single_user_ds(n: int) -> InteractionDataset:
    rows = [Interaction("u", f"i{j}", 1.0, float(j)) for j in range(n)]
    return InteractionDataset.from_interactions(rows)


def test_splitmix64_reference_vectors():
    # Published outputs of the splitmix64 reference implementation, state 0.
    rng = SplitMix64(0)
    assert [rng.next_u64() for _ in range(3)] == [
        0xE220A8397B1DCDAF,
        0x6E789E6AA1B965F4,
        0x06C45D188009454F,
    ]


def test_split_config_validates_ratio():
    with pytest.raises(ValueError):
        SplitConfig(train_ratio=0.0, seed=1)
    with pytest.raises(ValueError):
        SplitConfig(train_ratio=1.5, seed=1)


def test_ceiling_rule_ten_interactions():
    pair = split_holdout(single_user_ds(10), SplitConfig(0.8, 42))
    assert pair.train.n_interactions == 8
    assert pair.test.n_interactions == 2


def test_single_interaction_user_absent_from_test():
    pair = split_holdout(single_user_ds(1), SplitConfig(0.8, 42))
    assert pair.train.n_interactions == 1
    assert pair.test.n_interactions == 0


def test_requires_implicit():
    ds = InteractionDataset.from_interactions([Interaction("u", "i", 4.0, 0.0)])
    with pytest.raises(ContractError):
        split_holdout(ds, SplitConfig(0.8, 42))


def test_deterministic_repeat():
    ds = make_implicit_dataset(random.Random(100))
    a = split_holdout(ds, SplitConfig(0.8, 21))
    b = split_holdout(ds, SplitConfig(0.8, 21))
    assert a.train == b.train
    assert a.test == b.test


def test_seeds_produce_different_memberships():
    rng = random.Random(0)
    rows = []
    for u in range(100):
        for i in rng.sample(range(40), 10):
            rows.append(Interaction(f"u{u}", f"i{i}", 1.0, float(rng.randint(0, 99))))
    ds = InteractionDataset.from_interactions(rows)
    t21 = split_holdout(ds, SplitConfig(0.8, 21)).test.pair_set()
    t42 = split_holdout(ds, SplitConfig(0.8, 42)).test.pair_set()
    assert t21 != t42


def test_partition_and_ceiling_per_user():
    rng = random.Random(1)
    for _ in range(25):
        ds = make_implicit_dataset(rng)
        ratio = rng.choice([0.5, 0.8, 1.0])
        pair = split_holdout(ds, SplitConfig(ratio, rng.randint(0, 2**63)))
        train_pairs = pair.train.pair_set()
        test_pairs = pair.test.pair_set()
        assert train_pairs | test_pairs == ds.pair_set()
        assert not (train_pairs & test_pairs)
        # per-user counts: exactly ceil(ratio * n) in train
        totals = Counter(r.user for r in ds.interactions)
        trains = Counter(r.user for r in pair.train.interactions)
        for user, n in totals.items():
            assert trains[user] == math.ceil(ratio * n)
        # no test-only users
        assert {r.user for r in pair.test.interactions} <= set(trains)


def test_shared_index_universe():
    ds = make_implicit_dataset(random.Random(2))
    pair = split_holdout(ds, SplitConfig(0.8, 84))
    assert pair.train.user_index is ds.user_index
    assert pair.test.item_index is ds.item_index


def test_save_split_round_trips(tmp_path):
    ds = make_implicit_dataset(random.Random(3))
    pair = split_holdout(ds, SplitConfig(0.8, 42))
    train_path, test_path = save_split(pair, tmp_path, "toy.seed42")
    assert train_path.name == "toy.seed42.train.inter"
    loaded = SplitPair.from_datasets(
        load_interactions(train_path), load_interactions(test_path)
    )
    assert loaded.train.pair_set() == pair.train.pair_set()
    assert loaded.test.pair_set() == pair.test.pair_set()
    # re-keyed universe covers both sides, train-first
    assert loaded.train.n_users == len({r.user for r in ds.interactions})


def test_byte_identical_persisted_split(tmp_path):
    ds = make_implicit_dataset(random.Random(4))
    a_dir, b_dir = tmp_path / "a", tmp_path / "b"
    pa = save_split(split_holdout(ds, SplitConfig(0.8, 21)), a_dir, "x")
    pb = save_split(split_holdout(ds, SplitConfig(0.8, 21)), b_dir, "x")
    for pth_a, pth_b in zip(pa, pb):
        assert pth_a.read_bytes() == pth_b.read_bytes()
