"""Exact, table-driven machinery for S4 acting on the four row classes.

S4 enters the search in one role: a class permutation alpha moves the row
class at position i to position alpha(i), which permutes column types
(4-bit class masks) and therefore signature positions. Everything here is
precomputed at import over the 24 elements: composition, inverses, the
action on types, the 30 subgroups and their 234 right cosets. Tables are
generated by exhaustive closure rather than hand-coded, then checked
against the known census so a transcription bug cannot survive import.
"""

from __future__ import annotations

from typing import Iterable, NamedTuple

from .errors import NotACosetError

__all__ = [
    "Perm4",
    "CosetHandle",
    "ELEMENTS",
    "IDENTITY",
    "TYPE_ORDER",
    "TYPE_POS",
    "SUBGROUPS",
    "COSET_COUNT",
    "compose",
    "inverse",
    "perm_from_images",
    "apply_to_type",
    "apply_to_signature",
    "mask_of",
    "identify_coset",
    "subgroup_census",
]


class Perm4(NamedTuple):
    """An element of S4: images[i] = alpha(i), plus its fixed index 0..23."""

    images: tuple[int, int, int, int]
    index: int


class CosetHandle(NamedTuple):
    """An identified right coset: subgroup index plus least-index representative."""

    subgroup_index: int
    representative: Perm4


def _symmetric_group_order(n: int) -> list[tuple[int, ...]]:
    # Recursive block order: first the elements fixing n-1 (a copy of
    # S_{n-1}, recursively ordered), then for m = n-2 .. 0 the block of
    # elements sending n-1 to m. Identity lands at index 0.
    if n == 1:
        return [(0,)]
    prev = _symmetric_group_order(n - 1)
    out: list[tuple[int, ...]] = []
    for m in range(n - 1, -1, -1):
        for p in prev:
            extended = p + (n - 1,)
            out.append(
                tuple(
                    m if v == n - 1 else (n - 1 if v == m else v)
                    for v in extended
                )
            )
    return out


_IMAGES: tuple[tuple[int, int, int, int], ...] = tuple(_symmetric_group_order(4))
ELEMENTS: tuple[Perm4, ...] = tuple(Perm4(img, i) for i, img in enumerate(_IMAGES))
_INDEX_OF: dict[tuple[int, int, int, int], int] = {img: i for i, img in enumerate(_IMAGES)}
IDENTITY: Perm4 = ELEMENTS[0]

# compose(a, b)(i) = a(b(i))
_COMPOSE: tuple[tuple[int, ...], ...] = tuple(
    tuple(_INDEX_OF[tuple(a[b[i]] for i in range(4))] for b in _IMAGES) for a in _IMAGES
)
_INVERSE: tuple[int, ...] = tuple(
    _INDEX_OF[tuple(sorted(range(4), key=lambda i: a[i]))] for a in _IMAGES
)

# Column types in the fixed signature order: weight 4, then weight 3, 2, 1,
# each weight group in ascending support order. Hex: F,7,B,D,E,3,5,9,6,A,C,1,2,4,8.
TYPE_ORDER: tuple[int, ...] = (15, 7, 11, 13, 14, 3, 5, 9, 6, 10, 12, 1, 2, 4, 8)
TYPE_POS: dict[int, int] = {t: p for p, t in enumerate(TYPE_ORDER)}

# _TYPE_IMAGE[a][t]: bit alpha(i) of the result set iff bit i of t is set.
_TYPE_IMAGE: tuple[tuple[int, ...], ...] = tuple(
    tuple(
        sum(1 << a[i] for i in range(4) if t >> i & 1) if t else 0
        for t in range(16)
    )
    for a in _IMAGES
)

# _SIG_DEST[a][p]: signature position that position p's count moves to under a.
_SIG_DEST: tuple[tuple[int, ...], ...] = tuple(
    tuple(TYPE_POS[_TYPE_IMAGE[a][t]] for t in TYPE_ORDER) for a in range(24)
)


def perm_from_images(images: Iterable[int]) -> Perm4:
    key = tuple(images)
    try:
        return ELEMENTS[_INDEX_OF[key]]
    except KeyError:
        raise ValueError(f"not a permutation of 0..3: {key!r}") from None


def compose(a: Perm4, b: Perm4) -> Perm4:
    """Return a after b: result(i) = a(b(i))."""
    return ELEMENTS[_COMPOSE[a.index][b.index]]


def inverse(a: Perm4) -> Perm4:
    return ELEMENTS[_INVERSE[a.index]]


def apply_to_type(a: Perm4, t: int) -> int:
    """Image of column type t (nonzero 4-bit mask) under the class permutation."""
    if not 1 <= t <= 15:
        raise ValueError(f"column type out of range: {t}")
    return _TYPE_IMAGE[a.index][t]


def apply_to_signature(a: Perm4, s: tuple[int, ...]) -> tuple[int, ...]:
    """Permuted signature: the count at type alpha[T] equals s's count at T."""
    dest = _SIG_DEST[a.index]
    out = [0] * 15
    for p in range(15):
        out[dest[p]] = s[p]
    return tuple(out)


def _closure(seed: frozenset[int]) -> frozenset[int]:
    members = set(seed)
    members.add(0)
    frontier = list(members)
    while frontier:
        g = frontier.pop()
        for h in tuple(members):
            for prod in (_COMPOSE[g][h], _COMPOSE[h][g]):
                if prod not in members:
                    members.add(prod)
                    frontier.append(prod)
    return frozenset(members)


def _generate_subgroups() -> tuple[frozenset[int], ...]:
    found = {_closure(frozenset())}
    for g in range(24):
        for h in range(g, 24):
            found.add(_closure(frozenset((g, h))))
    # Every subgroup of S4 is generated by at most two elements; the census
    # check below would catch it if that ever failed to hold.
    return tuple(sorted(found, key=lambda s: (len(s), sorted(s))))


SUBGROUPS: tuple[frozenset[int], ...] = _generate_subgroups()


def mask_of(indices: Iterable[int]) -> int:
    """24-bit membership mask for a set of element indices."""
    mask = 0
    for i in indices:
        if not 0 <= i < 24:
            raise ValueError(f"element index out of range: {i}")
        mask |= 1 << i
    return mask


def _generate_cosets() -> dict[int, tuple[int, int]]:
    table: dict[int, tuple[int, int]] = {}
    for sub_idx, sub in enumerate(SUBGROUPS):
        for g in range(24):
            coset = [_COMPOSE[h][g] for h in sub]
            key = mask_of(coset)
            if key not in table:
                table[key] = (sub_idx, min(coset))
    return table


_COSET_INDEX: dict[int, tuple[int, int]] = _generate_cosets()
COSET_COUNT: int = len(_COSET_INDEX)


def subgroup_census() -> dict[int, int]:
    """Histogram of subgroup orders, e.g. census[2] = number of order-2 subgroups."""
    census: dict[int, int] = {}
    for sub in SUBGROUPS:
        census[len(sub)] = census.get(len(sub), 0) + 1
    return census


def identify_coset(mask: int | Iterable[int]) -> CosetHandle:
    """Resolve a 24-bit membership mask to its unique (subgroup, representative).

    Accepts either the integer mask or an iterable of element indices.
    """
    if not isinstance(mask, int):
        mask = mask_of(mask)
    if not 0 < mask < (1 << 24):
        raise NotACosetError(f"mask out of range: {mask:#x}")
    entry = _COSET_INDEX.get(mask)
    if entry is None:
        raise NotACosetError(f"mask {mask:#x} is not a right coset of any subgroup")
    sub_idx, rep = entry
    return CosetHandle(sub_idx, ELEMENTS[rep])


_EXPECTED_CENSUS = {1: 1, 2: 9, 3: 4, 4: 7, 6: 4, 8: 3, 12: 1, 24: 1}
if subgroup_census() != _EXPECTED_CENSUS:
    raise RuntimeError(f"S4 subgroup census mismatch: {subgroup_census()}")
if len(SUBGROUPS) != 30 or COSET_COUNT != 234:
    raise RuntimeError(f"S4 table mismatch: {len(SUBGROUPS)} subgroups, {COSET_COUNT} cosets")
