"""Structural validity of configurations.

A valid configuration is a partial linear space of constant row weight 3
(every pair of rows shares at most one column, so the matrix has no 2x2
all-ones rectangle), with no all-zero column, whose rows are partitioned
into at most 4 classes with the rows of each class pairwise disjoint.
Checks run cheapest first because the search calls this on every candidate.
"""

from __future__ import annotations

from .config import Configuration

__all__ = [
    "check_row_weights",
    "check_no_zero_column",
    "check_part_disjointness",
    "check_partial_linear_space",
    "is_valid_n1_prime",
    "max_rows_for_cols",
]


def check_row_weights(cfg: Configuration) -> bool:
    return all(row.bit_count() == 3 for row in cfg.rows)


def check_no_zero_column(cfg: Configuration) -> bool:
    used = 0
    for row in cfg.rows:
        used |= row
    return used == (1 << cfg.c) - 1


def check_part_disjointness(cfg: Configuration) -> bool:
    for k in range(4):
        acc = 0
        for row in cfg.class_rows(k):
            if acc & row:
                return False
            acc |= row
    return True


def check_partial_linear_space(cfg: Configuration) -> bool:
    """Row-pair form: every two rows share at most one column.

    Equivalent to the column-pair form (two columns meet in at most one
    row): both say the matrix has no 2x2 all-ones rectangle.
    """
    rows = cfg.rows
    for i in range(len(rows)):
        ri = rows[i]
        for j in range(i + 1, len(rows)):
            if (ri & rows[j]).bit_count() > 1:
                return False
    return True


def check_rectangle_free_by_columns(cfg: Configuration) -> bool:
    """Column-pair form of the partial-linear-space check (test oracle)."""
    cols = []
    for j in range(cfg.c):
        mask = 0
        for i, row in enumerate(cfg.rows):
            mask |= (row >> j & 1) << i
        cols.append(mask)
    for a in range(cfg.c):
        for b in range(a + 1, cfg.c):
            if (cols[a] & cols[b]).bit_count() > 1:
                return False
    return True


def is_valid_n1_prime(cfg: Configuration) -> bool:
    return (
        check_row_weights(cfg)
        and check_no_zero_column(cfg)
        and check_part_disjointness(cfg)
        and check_partial_linear_space(cfg)
    )


def max_rows_for_cols(c: int) -> int:
    """Upper bound on the row count of any valid configuration on c columns.

    Each class's rows are disjoint weight-3 sets, so a class holds at most
    floor(c/3) rows and four classes at most 4*floor(c/3).
    """
    return 4 * (c // 3)
