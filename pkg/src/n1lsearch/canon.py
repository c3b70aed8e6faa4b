"""Canonical representatives for configuration isomorphism.

Isomorphisms are: permute the four classes, permute rows within a class,
permute columns within a type group. The canonical form is computed in two
layers, mirroring that structure:

1. Signature canonicalization picks the right coset of class permutations
   achieving the lexicographically greatest signature.
2. For each achiever, a fixed-class canonical labeling finds the greatest
   matrix under block-preserving row/column permutations. Matrices are
   compared as row-major bit strings (row 0 of class 0 first, column 0
   most significant), greatest wins.

The fixed-class labeling works on an ordered partition of columns into
cells (initially the type groups in fixed order). Placing a row emits its
bits, with the row's columns moved to the front of each cell, and splits
every cell it meets. A row's emitted bits are determined by its cell
profile (per-cell incidence counts), so candidate rows are ranked by
profile and only the maximal ones are branched on. A best-prefix array
prunes branches as soon as they fall below the best serialization found.

brute_force_canonical cross-checks all of this by exhaustive enumeration
of class permutations and within-class row orders; for a fixed row order
the greatest block-preserving column arrangement is exact by sorting each
type group's columns in descending column-bitstring order (an adjacent
swap of two out-of-order columns changes the matrix first in the topmost
row where they differ, in favor of the sorted order).
"""

from __future__ import annotations

from itertools import permutations

from .config import (
    Configuration,
    class_masks,
    compute_signature,
    from_labeled_rows,
    pack_key,
)
from .errors import InvalidConfigurationError, TooLargeError
from .perm4 import TYPE_ORDER, Perm4
from .sigcanon import canonicalize_signature, canonicalize_signature_grouped
from .validity import is_valid_n1_prime

__all__ = [
    "canonical_form_fixed_classes",
    "canonical_form",
    "canonical_key",
    "brute_force_canonical",
]


def _initial_cells(cfg: Configuration) -> list[int]:
    masks = class_masks(cfg)
    by_type: dict[int, int] = {}
    for j in range(cfg.c):
        t = 0
        for k in range(4):
            t |= (masks[k] >> j & 1) << k
        by_type[t] = by_type.get(t, 0) | (1 << j)
    return [by_type[t] for t in TYPE_ORDER if t in by_type]


def _row_bits_greater(a: int, b: int) -> int:
    """-1, 0, 1 comparing bit strings read from bit 0 (earlier bit wins)."""
    if a == b:
        return 0
    low = (a ^ b) & -(a ^ b)
    return 1 if a & low else -1


def canonical_form_fixed_classes(cfg: Configuration) -> Configuration:
    """Greatest matrix over within-class row and within-type column permutations.

    Class order is kept as given; the result's columns are renumbered into
    their canonical order.
    """
    r = cfg.r
    if r == 0:
        return cfg
    class_of = [k for k in range(4) for _ in range(cfg.parts[k])]
    rows = cfg.rows

    best: list[int] = []

    def dfs(level: int, cells: list[int], placed: int, left_in_class: list[int]):
        if level == r:
            return
        k = 0
        while left_in_class[k] == 0:
            k += 1
        candidates = [i for i in range(r) if not placed >> i & 1 and class_of[i] == k]

        best_prof: tuple[int, ...] | None = None
        ties: list[int] = []
        for i in candidates:
            prof = tuple((rows[i] & cell).bit_count() for cell in cells)
            if best_prof is None or prof > best_prof:
                best_prof = prof
                ties = [i]
            elif prof == best_prof:
                ties.append(i)

        row_bits = 0
        offset = 0
        for cell, x in zip(cells, best_prof):
            row_bits |= ((1 << x) - 1) << offset
            offset += cell.bit_count()

        if level < len(best):
            cmp = _row_bits_greater(row_bits, best[level])
            if cmp < 0:
                return
            if cmp > 0:
                del best[level:]
                best.append(row_bits)
        else:
            best.append(row_bits)

        left_in_class[k] -= 1
        for i in ties:
            row = rows[i]
            new_cells: list[int] = []
            for cell in cells:
                inter = cell & row
                rest = cell & ~row
                if inter:
                    new_cells.append(inter)
                if rest:
                    new_cells.append(rest)
            dfs(level + 1, new_cells, placed | (1 << i), left_in_class)
        left_in_class[k] += 1

    dfs(0, _initial_cells(cfg), 0, list(cfg.parts))
    return Configuration(cfg.c, tuple(best), cfg.parts)


def _relabel_classes(cfg: Configuration, a: Perm4) -> Configuration:
    """Rows of class k become rows of class a(k)."""
    return from_labeled_rows(cfg.c, [(mask, a.images[k]) for mask, k in cfg.labeled_rows()])


def _matrix_sort_key(cfg: Configuration) -> tuple[int, ...]:
    """Row-major bit sequence; tuple comparison matches the matrix order."""
    return tuple(row >> j & 1 for row in cfg.rows for j in range(cfg.c))


def canonical_form(cfg: Configuration, *, grouped_signature: bool = False) -> Configuration:
    """The canonical representative of cfg's isomorphism class."""
    if not is_valid_n1_prime(cfg):
        raise InvalidConfigurationError("canonical form requires a valid configuration")
    canon_sig = canonicalize_signature_grouped if grouped_signature else canonicalize_signature
    result = canon_sig(compute_signature(cfg))

    best: Configuration | None = None
    best_key: tuple[int, ...] | None = None
    for a in result.achiever_elements():
        fixed = canonical_form_fixed_classes(_relabel_classes(cfg, a))
        key = _matrix_sort_key(fixed)
        if best_key is None or key > best_key:
            best = fixed
            best_key = key
        elif key == best_key and fixed.parts != best.parts:
            raise AssertionError("achievers disagree on partition sizes")
    assert best is not None
    return best


def canonical_key(cfg: Configuration, *, grouped_signature: bool = False) -> bytes:
    return pack_key(canonical_form(cfg, grouped_signature=grouped_signature))


def brute_force_canonical(cfg: Configuration) -> Configuration:
    """Oracle: exhaustive search over the same isomorphism moves.

    Guarded to small sizes; within-class row orders are fully enumerated
    while the column arrangement for each row order is the provably
    greatest one (see module docstring).
    """
    if cfg.r > 5 or cfg.c > 9:
        raise TooLargeError(f"brute force guard: r={cfg.r}, c={cfg.c}")
    if not is_valid_n1_prime(cfg):
        raise InvalidConfigurationError("canonical form requires a valid configuration")
    result = canonicalize_signature(compute_signature(cfg))

    best: Configuration | None = None
    best_key: tuple[int, ...] | None = None
    for a in result.achiever_elements():
        relabeled = _relabel_classes(cfg, a)
        masks = class_masks(relabeled)
        types = []
        for j in range(relabeled.c):
            t = 0
            for k in range(4):
                t |= (masks[k] >> j & 1) << k
            types.append(t)

        class_orders = [
            list(permutations(relabeled.class_rows(k))) for k in range(4)
        ]
        for rows0 in class_orders[0]:
            for rows1 in class_orders[1]:
                for rows2 in class_orders[2]:
                    for rows3 in class_orders[3]:
                        ordered = rows0 + rows1 + rows2 + rows3
                        # column bitstring read top-down, row 0 most significant
                        r = len(ordered)
                        colvec = [
                            sum(
                                (ordered[i] >> j & 1) << (r - 1 - i)
                                for i in range(r)
                            )
                            for j in range(relabeled.c)
                        ]
                        col_order = []
                        for t in TYPE_ORDER:
                            group = [j for j in range(relabeled.c) if types[j] == t]
                            group.sort(key=lambda j: -colvec[j])
                            col_order.extend(group)
                        new_rows = []
                        for row in ordered:
                            mask = 0
                            for new_j, old_j in enumerate(col_order):
                                mask |= (row >> old_j & 1) << new_j
                            new_rows.append(mask)
                        candidate = Configuration(
                            relabeled.c, tuple(new_rows), relabeled.parts
                        )
                        key = _matrix_sort_key(candidate)
                        if best_key is None or key > best_key:
                            best = candidate
                            best_key = key
    assert best is not None
    return best
