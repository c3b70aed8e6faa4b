"""Anchored GF(2) embedding and the minimum-weight span condition.

A configuration row of class k embeds into GF(2)^(c+5) as its weight-3
body plus two fixed positions: an anchor column a_k (position c+k, one per
class) and the shared column i (position c+4). The anchor vector
v = {a0,a1,a2,a3,i} completes the generator set. The configuration has the
span property ("is N1L") iff the span of the embedded rows and v contains
no nonzero word of weight less than 5; since v itself has weight 5, the
minimum weight then equals 5 exactly.

For a combination that sums the rows of a set S (and optionally v), only
the body part depends on which rows were chosen; the anchor and shared
bits depend just on the per-class parities of S. Writing p for the 4-bit
parity nibble and P for its overall parity, the non-body contribution is
|p| + P without v and (4 - |p|) + (1 - P) with v, so the cheaper choice is
_ANCHOR_PENALTY[p] = min(|p| + P, 5 - |p| - P). This turns the span check
into: no nonempty row subset may have body-XOR weight d with
d + penalty <= 4, excluding d = 0 with p = 0 (the zero word, or v itself).
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .config import Configuration
from .errors import InvalidConfigurationError
from .validity import is_valid_n1_prime

__all__ = [
    "Embedding",
    "SpanReport",
    "embed",
    "span_min_weight",
    "is_n1l",
    "is_n1l_incremental",
    "goodness_measure",
    "ANCHOR_PENALTY",
]

# _ANCHOR_PENALTY[p] for parity nibble p; see module docstring.
ANCHOR_PENALTY: tuple[int, ...] = tuple(
    0
    if p == 0
    else min(
        p.bit_count() + (p.bit_count() & 1),
        5 - p.bit_count() - (p.bit_count() & 1),
    )
    for p in range(16)
)


@dataclass(frozen=True)
class Embedding:
    """Embedded generator set: one word per row (row order) plus the anchor."""

    length: int
    words: tuple[int, ...]
    anchor: int


@dataclass(frozen=True)
class SpanReport:
    """Exact minimum weight over all nonzero span elements, with a witness.

    If the generators span only the zero word, min_weight is 0 and the
    witness is 0 (cannot happen for embedded configurations: the anchor
    vector always has weight 5).
    """

    min_weight: int
    rank: int
    witness: int


def embed(cfg: Configuration) -> Embedding:
    if not is_valid_n1_prime(cfg):
        raise InvalidConfigurationError("embedding requires a valid configuration")
    c = cfg.c
    shared = 1 << (c + 4)
    words = tuple(mask | (1 << (c + k)) | shared for mask, k in cfg.labeled_rows())
    anchor = (0b1111 << c) | shared
    return Embedding(c + 5, words, anchor)


def span_min_weight(generators: Sequence[int]) -> SpanReport:
    """Exact minimum weight of the GF(2) span of the given words.

    Walks all 2^g - 1 nonzero combinations in Gray-code order (one XOR per
    step), so cost is exponential in len(generators); spans here have at
    most about 20 generators.
    """
    gens = list(generators)
    if not gens:
        raise ValueError("empty generator list")

    rank = 0
    basis: list[int] = []
    for word in gens:
        w = word
        for b in basis:
            w = min(w, w ^ b)
        if w:
            basis.append(w)
            basis.sort(reverse=True)
            rank += 1

    best_weight = None
    witness = 0
    word = 0
    gray = 0
    for t in range(1, 1 << len(gens)):
        g = t ^ (t >> 1)
        diff = g ^ gray
        gray = g
        word ^= gens[(diff & -diff).bit_length() - 1]
        if word == 0:
            continue
        w = word.bit_count()
        if best_weight is None or w < best_weight:
            best_weight = w
            witness = word
    if best_weight is None:
        return SpanReport(0, 0, 0)
    return SpanReport(best_weight, rank, witness)


def is_n1l(cfg: Configuration) -> bool:
    """True iff the span of the embedded rows and the anchor has min weight 5."""
    emb = embed(cfg)
    gens = list(emb.words) + [emb.anchor]
    word = 0
    gray = 0
    for t in range(1, 1 << len(gens)):
        g = t ^ (t >> 1)
        diff = g ^ gray
        gray = g
        word ^= gens[(diff & -diff).bit_length() - 1]
        if word and word.bit_count() <= 4:
            return False
    return True


def is_n1l_incremental(parent: Configuration, new_row: int, new_class: int) -> bool:
    """Span check for parent plus one new row, reusing the parent's certificate.

    Assumes the parent already has the span property, so any new violating
    combination must include the new row. Those combinations are exactly
    indexed by subsets of the parent's rows: with body XOR X and parity
    nibble q over a subset, the candidate fails iff
    wt(new_row ^ X) + penalty(q ^ (1 << new_class)) <= 4 for some subset,
    excluding the degenerate zero word. The choice of including the anchor
    vector is folded into the penalty table. The parent and the new row may
    use any column indices; only bodies and classes matter.
    """
    beta = new_row
    bit = 1 << new_class
    labeled = parent.labeled_rows()
    bodies = [mask for mask, _ in labeled]
    class_bits = [1 << k for _, k in labeled]

    # Subset S' = empty: the new row alone has d = 3, penalty 2, total 5.
    x = 0
    q = 0
    gray = 0
    for t in range(1, 1 << len(bodies)):
        g = t ^ (t >> 1)
        diff = g ^ gray
        gray = g
        idx = (diff & -diff).bit_length() - 1
        x ^= bodies[idx]
        q ^= class_bits[idx]
        d = (x ^ beta).bit_count()
        p = q ^ bit
        if d + ANCHOR_PENALTY[p] <= 4 and (d or p):
            return False
    return True


def goodness_measure(n: int, k: int) -> Fraction:
    """(1 + n + C(n,2)) / 2^(n-k), exact: compares the sphere count of a
    distance-5 code against the number of syndromes."""
    if not 0 <= k <= n:
        raise ValueError(f"need 0 <= k <= n, got n={n}, k={k}")
    return Fraction(1 + n + n * (n - 1) // 2, 1 << (n - k))
