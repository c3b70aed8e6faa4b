"""Whole-configuration canonicalization against the factorial-scan oracle."""

import random

import pytest

from n1lsearch.canon import brute_force_canonical, canonical_form, canonical_key
from n1lsearch.config import (
    Configuration,
    compute_signature,
    pack_key,
    unpack_key,
)
from n1lsearch.errors import InvalidConfigurationError, TooLargeError
from n1lsearch.sigcanon import canonicalize_signature

TWO_SHARING = Configuration(5, (0b00111, 0b11001), (1, 1, 0, 0))


def test_canonical_form_is_idempotent_and_valid(small_classes):
    for cfg in small_classes:
        canon = canonical_form(cfg)
        assert canonical_form(canon) == canon
        assert compute_signature(canon) == canonicalize_signature(
            compute_signature(cfg)
        ).canonical


def test_stored_classes_are_already_canonical(small_stage_keys):
    for r in (2, 3, 4):
        for key in small_stage_keys[r]:
            cfg = unpack_key(key)
            assert pack_key(canonical_form(cfg)) == key


def test_agrees_with_factorial_scan_on_generated_classes(small_classes):
    for cfg in small_classes:
        if cfg.c > 8:
            continue
        assert canonical_form(cfg) == brute_force_canonical(cfg)


def test_agrees_with_factorial_scan_on_random_configurations(random_valid_config):
    rng = random.Random(61)
    for _ in range(300):
        cfg = random_valid_config(rng, max_r=4, max_c=8)
        assert canonical_form(cfg) == brute_force_canonical(cfg)


def test_is_invariant_under_random_isomorphisms(
    small_classes, random_isomorph
):
    rng = random.Random(62)
    for cfg in small_classes:
        key = canonical_key(cfg)
        for _ in range(8):
            iso = random_isomorph(cfg, rng)
            assert canonical_key(iso) == key


def test_grouped_signature_variant_gives_the_same_form(
    small_classes, random_valid_config
):
    rng = random.Random(63)
    for cfg in small_classes:
        assert canonical_form(cfg, grouped_signature=True) == canonical_form(cfg)
    for _ in range(100):
        cfg = random_valid_config(rng)
        assert canonical_form(cfg, grouped_signature=True) == canonical_form(cfg)


def test_small_fixed_points():
    canon = canonical_form(TWO_SHARING)
    assert canonical_form(canon) == canon
    assert canon == brute_force_canonical(TWO_SHARING)
    seed = Configuration(3, (0b111,), (1, 0, 0, 0))
    assert canonical_form(seed) == seed


def test_factorial_scan_guards_its_size():
    big = Configuration(
        18,
        tuple(0b111 << (3 * i) for i in range(6)),
        (6, 0, 0, 0),
    )
    with pytest.raises(TooLargeError):
        brute_force_canonical(big)


def test_rejects_invalid_configurations():
    padded = Configuration(7, (0b0000111, 0b0111000), (2, 0, 0, 0))
    with pytest.raises(InvalidConfigurationError):
        canonical_form(padded)
