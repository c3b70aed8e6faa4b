"""Shared fixtures: exhaustively generated small classes and random samplers."""

import random

import pytest

from n1lsearch.config import Configuration, from_labeled_rows, pack_key, unpack_key
from n1lsearch.search import SEED, SearchLimits, StageStore, run_stage
from n1lsearch.validity import is_valid_n1_prime


@pytest.fixture(scope="session")
def small_stage_keys():
    """Sorted canonical keys per row count, r = 1..4, c <= 12 (pure search)."""
    limits = SearchLimits(max_rows=4, max_cols=12)
    store = StageStore(1, [pack_key(SEED)])
    stages = {1: sorted(store.keys)}
    for r in range(2, 5):
        store = run_stage(store, limits)
        stages[r] = sorted(store.keys)
    return stages


@pytest.fixture(scope="session")
def small_classes(small_stage_keys):
    """Every stored class with 2 <= r <= 4, c <= 12, as configurations."""
    out = []
    for r in range(2, 5):
        out.extend(unpack_key(k) for k in small_stage_keys[r])
    return out


def _random_valid(rng: random.Random, max_r: int = 4, max_c: int = 8) -> Configuration:
    """Rejection-sample one valid configuration (not necessarily span-filtered)."""
    while True:
        c = rng.randint(4, max_c)
        r = rng.randint(2, min(max_r, 4 * (c // 3)))
        labeled: list[tuple[int, int]] = []
        class_cover = [0, 0, 0, 0]
        ok = True
        for _ in range(r):
            placed = False
            for _attempt in range(60):
                k = rng.randrange(4)
                cols = rng.sample(range(c), 3)
                mask = (1 << cols[0]) | (1 << cols[1]) | (1 << cols[2])
                if mask & class_cover[k]:
                    continue
                if any((mask & other).bit_count() > 1 for other, _ in labeled):
                    continue
                labeled.append((mask, k))
                class_cover[k] |= mask
                placed = True
                break
            if not placed:
                ok = False
                break
        if not ok:
            continue
        cover = 0
        for mask, _ in labeled:
            cover |= mask
        if cover != (1 << c) - 1:
            continue
        cfg = from_labeled_rows(c, labeled)
        if is_valid_n1_prime(cfg):
            return cfg


def _random_isomorph(cfg: Configuration, rng: random.Random) -> Configuration:
    """Relabel classes, permute columns, and shuffle row order at random."""
    class_map = list(range(4))
    rng.shuffle(class_map)
    col_map = list(range(cfg.c))
    rng.shuffle(col_map)
    labeled = []
    for mask, k in cfg.labeled_rows():
        m2 = 0
        for j in range(cfg.c):
            if mask >> j & 1:
                m2 |= 1 << col_map[j]
        labeled.append((m2, class_map[k]))
    rng.shuffle(labeled)
    return from_labeled_rows(cfg.c, labeled)


@pytest.fixture(scope="session")
def random_valid_config():
    return _random_valid


@pytest.fixture(scope="session")
def random_isomorph():
    return _random_isomorph
