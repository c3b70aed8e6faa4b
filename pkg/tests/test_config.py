"""Configuration model: construction, layout, text and key codecs."""

import random

import pytest

from n1lsearch.config import (
    Configuration,
    class_masks,
    column_type_of,
    compute_signature,
    from_labeled_rows,
    normalize_layout,
    pack_key,
    parse_text,
    replicate,
    serialize_text,
    unpack_key,
)
from n1lsearch.errors import (
    ClassRangeError,
    ColumnRangeError,
    HeaderError,
    InvalidConfigurationError,
    ParseError,
    PartitionMismatchError,
    RowWeightError,
)

TWO_DISJOINT = Configuration(6, (0b000111, 0b111000), (2, 0, 0, 0))
TWO_SHARING = Configuration(5, (0b00111, 0b11001), (1, 1, 0, 0))


def test_row_and_class_accessors():
    cfg = TWO_SHARING
    assert cfg.r == 2
    assert cfg.class_of_row(0) == 0 and cfg.class_of_row(1) == 1
    assert cfg.class_start(0) == 0 and cfg.class_start(1) == 1
    assert cfg.class_rows(0) == (0b00111,)
    assert cfg.class_rows(2) == ()
    assert cfg.labeled_rows() == [(0b00111, 0), (0b11001, 1)]


def test_constructor_rejects_bad_shapes():
    with pytest.raises(InvalidConfigurationError):
        Configuration(5, (0b00111,), (2, 0, 0, 0))  # parts sum != r
    with pytest.raises(InvalidConfigurationError):
        Configuration(5, (0b00011,), (1, 0, 0, 0))  # row weight 2
    with pytest.raises(InvalidConfigurationError):
        Configuration(3, (0b1011,), (1, 0, 0, 0))  # bit above c
    with pytest.raises(InvalidConfigurationError):
        Configuration(2, (0b11,), (1, 0, 0, 0))  # c too small for a row


def test_from_labeled_rows_groups_by_class_preserving_order():
    cfg = from_labeled_rows(
        9, [(0b000000111, 1), (0b000111000, 0), (0b111000000, 1)]
    )
    assert cfg.parts == (1, 2, 0, 0)
    assert cfg.rows == (0b000111000, 0b000000111, 0b111000000)


def test_column_types_and_signature():
    cfg = TWO_SHARING
    assert class_masks(cfg) == (0b00111, 0b11001, 0, 0)
    assert column_type_of(cfg, 0) == 0b0011  # met by classes 0 and 1
    assert column_type_of(cfg, 1) == 0b0001
    assert column_type_of(cfg, 3) == 0b0010
    sig = compute_signature(cfg)
    assert sum(sig) == cfg.c
    # one shared column (type 3), two private to each class (types 1, 2)
    assert sig == (0, 0, 0, 0, 0, 1, 0, 0, 0, 0, 0, 2, 2, 0, 0)


def test_signature_is_invariant_under_column_order():
    rng = random.Random(7)
    cfg = TWO_SHARING
    for _ in range(20):
        perm = list(range(cfg.c))
        rng.shuffle(perm)
        rows = []
        for row in cfg.rows:
            m = 0
            for j in range(cfg.c):
                if row >> j & 1:
                    m |= 1 << perm[j]
            rows.append(m)
        shuffled = Configuration(cfg.c, tuple(rows), cfg.parts)
        assert compute_signature(shuffled) == compute_signature(cfg)


def test_normalize_layout_sorts_columns_by_type_group():
    cfg = TWO_SHARING
    norm = normalize_layout(cfg)
    types = [column_type_of(norm, j) for j in range(norm.c)]
    # heaviest type first, stable within groups
    assert types == [0b0011, 0b0001, 0b0001, 0b0010, 0b0010]
    assert compute_signature(norm) == compute_signature(cfg)
    assert normalize_layout(norm) == norm


def test_text_round_trip():
    for cfg in (TWO_DISJOINT, TWO_SHARING):
        text = serialize_text(cfg)
        assert parse_text(text) == cfg
    text = serialize_text(TWO_SHARING)
    assert text.splitlines()[0] == "N1L v1"
    assert "rows=2 cols=5" in text
    assert "parts=1,1,0,0" in text


def test_parse_errors_carry_line_numbers():
    with pytest.raises(HeaderError):
        parse_text("nope\n")
    good = serialize_text(TWO_SHARING).splitlines()

    bad = list(good)
    bad[3] = "row 0 : 0 1"  # weight 2
    with pytest.raises(RowWeightError) as exc:
        parse_text("\n".join(bad) + "\n")
    assert exc.value.line == 4
    assert "line 4" in str(exc.value)

    bad = list(good)
    bad[4] = "row 7 : 0 3 4"
    with pytest.raises(ClassRangeError):
        parse_text("\n".join(bad) + "\n")

    bad = list(good)
    bad[4] = "row 1 : 0 3 9"
    with pytest.raises(ColumnRangeError):
        parse_text("\n".join(bad) + "\n")

    bad = list(good)
    bad[2] = "parts=2,0,0,0"  # rows below say 1,1
    with pytest.raises(PartitionMismatchError):
        parse_text("\n".join(bad) + "\n")

    bad = list(good)
    bad[3], bad[4] = "row 1 : 0 3 4", "row 0 : 0 1 2"  # classes out of order
    with pytest.raises(ParseError):
        parse_text("\n".join(bad) + "\n")


def test_key_round_trip_on_generated_classes(small_classes):
    for cfg in small_classes:
        key = pack_key(cfg)
        assert key[0] == cfg.r and key[1] == cfg.c
        assert tuple(key[2:6]) == cfg.parts
        assert unpack_key(key) == cfg
    keys = [pack_key(cfg) for cfg in small_classes]
    assert len(set(keys)) == len(keys)


def test_key_bytes_are_fixed_width_rows():
    key = pack_key(TWO_SHARING)
    assert len(key) == 6 + 2 * ((5 + 7) // 8)
    with pytest.raises(ValueError):
        unpack_key(key[:-1])


def test_replicate_places_shifted_copies_per_class():
    cfg = TWO_SHARING
    doubled = replicate(cfg, 2)
    assert doubled.c == 10
    assert doubled.parts == (2, 2, 0, 0)
    assert doubled.rows == (
        0b00111,
        0b00111 << 5,
        0b11001,
        0b11001 << 5,
    )
    assert replicate(cfg, 1) == cfg
    with pytest.raises(ValueError):
        replicate(cfg, 0)


def test_replicate_scales_signature(small_classes):
    for cfg in small_classes[:12]:
        base = compute_signature(cfg)
        for m in (2, 3):
            rep = compute_signature(replicate(cfg, m))
            assert rep == tuple(m * x for x in base)
