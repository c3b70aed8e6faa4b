"""Staged exhaustive search: stores, stages, archives, and whole runs."""

from fractions import Fraction

import pytest

from n1lsearch.canon import canonical_key
from n1lsearch.config import pack_key, unpack_key
from n1lsearch.errors import StageOverflowError
from n1lsearch.gf2code import is_n1l
from n1lsearch.search import (
    ARCHIVE_MAGIC,
    SEED,
    BoundedSearchReport,
    CountsTable,
    SearchLimits,
    StageStore,
    _extensions,
    enumerate_extensions,
    report_ratio,
    run_bounded_search,
    run_search,
    run_stage,
)
from n1lsearch.validity import is_valid_n1_prime, max_rows_for_cols


def test_limits_validate_and_expose_the_fresh_budget():
    full = SearchLimits(max_rows=8, max_cols=15)
    assert full.n1l_filter and full.mode == "full"
    assert full.fresh_limit == 3
    bounded = SearchLimits(
        max_rows=19, max_cols=22, mode="bounded", max_new_cols_per_step=2
    )
    assert bounded.fresh_limit == 2
    with pytest.raises(ValueError):
        SearchLimits(max_rows=0, max_cols=15)
    with pytest.raises(ValueError):
        SearchLimits(max_rows=2, max_cols=2)
    with pytest.raises(ValueError):
        SearchLimits(max_rows=2, max_cols=9, mode="depth-first")
    with pytest.raises(ValueError):
        SearchLimits(max_rows=2, max_cols=9, mode="bounded", max_new_cols_per_step=4)


def test_seed_is_the_single_one_row_class():
    assert SEED.r == 1 and SEED.c == 3
    assert SEED.parts == (1, 0, 0, 0)
    assert is_valid_n1_prime(SEED) and is_n1l(SEED)
    assert canonical_key(SEED) == pack_key(SEED)


def test_extensions_cover_all_classes_but_only_one_empty_class():
    limits = SearchLimits(max_rows=4, max_cols=9)
    seen_classes = {k for _, _, k in _extensions(SEED, limits)}
    # class 0 is occupied; classes 1..3 are empty, so only class 1 extends
    assert seen_classes == {0, 1}
    for child, mask, k in _extensions(SEED, limits):
        assert is_valid_n1_prime(child)
        assert mask.bit_count() == 3
        assert child.r == 2
    assert list(enumerate_extensions(SEED, limits)) == [
        child for child, _, _ in _extensions(SEED, limits)
    ]


def test_extensions_respect_column_budget():
    # at 3 columns no second weight-3 row can avoid a double share
    assert list(enumerate_extensions(SEED, SearchLimits(max_rows=4, max_cols=3))) == []
    children = list(enumerate_extensions(SEED, SearchLimits(max_rows=4, max_cols=6)))
    assert children
    assert all(child.c <= 6 for child in children)


def test_stage_counts_match_the_published_small_rows():
    limits = SearchLimits(max_rows=4, max_cols=12)
    store = StageStore(1, [pack_key(SEED)])
    store = run_stage(store, limits)
    assert store.counts_by_c() == {5: 1, 6: 2}
    store = run_stage(store, limits)
    assert store.counts_by_c() == {7: 3, 8: 2, 9: 3}
    store = run_stage(store, limits)
    assert store.counts_by_c() == {8: 2, 9: 10, 10: 11, 11: 5, 12: 5}


def test_stage_members_are_canonical_valid_and_filtered(small_stage_keys):
    for r in (2, 3, 4):
        for key in small_stage_keys[r]:
            cfg = unpack_key(key)
            assert is_valid_n1_prime(cfg)
            assert is_n1l(cfg)
            assert canonical_key(cfg) == key


def test_disabling_the_span_filter_only_adds_classes():
    on = run_search(SearchLimits(max_rows=4, max_cols=10))
    off = run_search(SearchLimits(max_rows=4, max_cols=10, n1l_filter=False))
    for rc, n in on.counts.items():
        assert off.counts.get(rc, 0) >= n
    assert sum(off.counts.values()) > sum(on.counts.values())


def test_counts_table_reports_and_structural_zeros():
    table = run_search(SearchLimits(max_rows=5, max_cols=12))
    assert table.get(2, 5) == 1 and table.get(2, 6) == 2
    assert table.get(5, 10) == 12
    for (r, c), n in table.counts.items():
        if n:
            assert r <= max_rows_for_cols(c)
    tsv = table.to_tsv()
    lines = tsv.splitlines()
    assert lines[0].startswith("r\tc5")
    assert lines[1].split("\t")[0] == "2"
    ratios = report_ratio(table)
    assert ratios[2] == (5, Fraction(2, 5))
    assert ratios[3] == (7, Fraction(3, 7))
    assert ratios[4] == (8, Fraction(1, 2))
    assert ratios[5] == (10, Fraction(1, 2))


def test_report_ratio_rejects_empty_tables():
    with pytest.raises(ValueError):
        report_ratio(CountsTable())


def test_stage_overflow_is_all_or_nothing():
    limits = SearchLimits(max_rows=4, max_cols=12)
    store = StageStore(1, [pack_key(SEED)])
    store = run_stage(store, limits)
    with pytest.raises(StageOverflowError):
        run_stage(store, limits, max_store_keys=4)
    with pytest.raises(StageOverflowError) as exc:
        run_search(SearchLimits(max_rows=4, max_cols=12), max_store_keys=4)
    assert exc.value.completed_counts == {(2, 5): 1, (2, 6): 2}


def test_store_validates_and_packs_stably():
    keys = [pack_key(SEED)]
    store = StageStore(1, keys)
    with pytest.raises(ValueError):
        StageStore(2, keys)
    blob = store.pack()
    assert blob[:8] == ARCHIVE_MAGIC
    assert StageStore.unpack(blob).keys == store.keys
    assert StageStore.unpack(blob).pack() == blob
    with pytest.raises(ValueError):
        StageStore.unpack(blob[:-1])
    with pytest.raises(ValueError):
        StageStore.unpack(blob + b"\x00")
    with pytest.raises(ValueError):
        StageStore.unpack(b"WRONGMAG" + blob[8:])


def test_archive_round_trip_preserves_key_sets(small_stage_keys, tmp_path):
    store = StageStore(4, small_stage_keys[4])
    blob = store.pack()
    back = StageStore.unpack(blob)
    assert sorted(back.keys) == small_stage_keys[4]
    assert back.r == 4
    restricted = back.restrict_to_c([8, 9])
    assert sorted(restricted.counts_by_c()) == [8, 9]
    assert len(restricted) == 12


def test_run_search_writes_selected_archives(tmp_path):
    run_search(
        SearchLimits(max_rows=3, max_cols=9),
        archive_dir=tmp_path,
        archive_rows={3},
    )
    files = sorted(p.name for p in tmp_path.iterdir())
    assert files == ["stage-r03.n1larc"]
    store = StageStore.unpack((tmp_path / "stage-r03.n1larc").read_bytes())
    assert store.counts_by_c() == {7: 3, 8: 2, 9: 3}


def test_bounded_run_with_no_retention_matches_full_when_budget_allows():
    # with 3 fresh columns per step and no retention cap, bounded mode
    # degenerates to the full search over the same grid
    seed = StageStore(1, [pack_key(SEED)])
    report = run_bounded_search(
        seed,
        SearchLimits(
            max_rows=4,
            max_cols=12,
            mode="bounded",
            max_new_cols_per_step=3,
            keep_c_min_count=None,
        ),
    )
    full = run_search(SearchLimits(max_rows=4, max_cols=12))
    assert not report.aborted
    assert report.bounds == {2: 5, 3: 7, 4: 8}
    for r in (2, 3, 4):
        assert report.bounds[r] == min(
            c for (rr, c), n in full.counts.items() if rr == r and n
        )


def test_bounded_retention_keeps_only_the_smallest_column_counts():
    seed = StageStore(1, [pack_key(SEED)])
    report = run_bounded_search(
        seed,
        SearchLimits(
            max_rows=5,
            max_cols=12,
            mode="bounded",
            max_new_cols_per_step=2,
            keep_c_min_count=2,
        ),
    )
    assert not report.aborted
    assert report.bounds[2] == 5
    assert report.bounds[3] == 7
    assert report.bounds[4] == 8
    assert report.bounds[5] == 10
    tsv = report.to_tsv()
    assert tsv.splitlines()[0] == "r\tcMinUpperBound"
    assert "5\t10" in tsv


def test_bounded_overflow_reports_partial_bounds():
    seed = StageStore(1, [pack_key(SEED)])
    report = run_bounded_search(
        seed,
        SearchLimits(
            max_rows=5,
            max_cols=12,
            mode="bounded",
            max_new_cols_per_step=3,
            keep_c_min_count=None,
        ),
        max_store_keys=20,
    )
    assert report.aborted
    assert report.aborted_at_r == 4
    assert report.bounds == {2: 5, 3: 7}
    assert report.reason


def test_mode_mismatch_is_rejected():
    with pytest.raises(ValueError):
        run_search(SearchLimits(max_rows=3, max_cols=9, mode="bounded"))
    with pytest.raises(ValueError):
        run_bounded_search(
            StageStore(1, [pack_key(SEED)]),
            SearchLimits(max_rows=3, max_cols=9),
        )
    with pytest.raises(ValueError):
        run_search(SearchLimits(max_rows=3, max_cols=9), engine="fortran")
