"""Canonicalized signatures and the right coset of class permutations achieving them.

The canonical signature is the lexicographically greatest of the 24 images
of a signature under the S4 action on classes (15-tuples compared left to
right in the fixed type order, larger count wins). The permutations that
achieve it form a right coset of the canonical signature's stabilizer.

canonicalize_signature tries all 24 elements; that is the default used by
the search. canonicalize_signature_grouped restricts candidates one column
weight group at a time (weights 4,3,2,1). Weight 4 never discriminates
(type F is fixed by every permutation). The weight-3 counts are indexed by
the single missing class, so the action there is the full S4 permuting
four numbers: the greatest block is those counts sorted descending, and
the candidate set follows from the sorted pattern of ties without trying
any permutation. Weights 2 and 1 then filter the surviving candidates.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import permutations

from .perm4 import (
    ELEMENTS,
    CosetHandle,
    apply_to_signature,
    identify_coset,
    mask_of,
    perm_from_images,
)

__all__ = ["SignatureCanonResult", "canonicalize_signature", "canonicalize_signature_grouped"]

# Signature positions by column weight group.
_W3_POSITIONS = (1, 2, 3, 4)
_W2_POSITIONS = (5, 6, 7, 8, 9, 10)
_W1_POSITIONS = (11, 12, 13, 14)


@dataclass(frozen=True)
class SignatureCanonResult:
    canonical: tuple[int, ...]
    coset: CosetHandle
    achievers: int

    def achiever_elements(self):
        return [a for a in ELEMENTS if self.achievers >> a.index & 1]


def canonicalize_signature(s: tuple[int, ...]) -> SignatureCanonResult:
    best: tuple[int, ...] | None = None
    achievers: list[int] = []
    for a in ELEMENTS:
        sa = apply_to_signature(a, s)
        if best is None or sa > best:
            best = sa
            achievers = [a.index]
        elif sa == best:
            achievers.append(a.index)
    mask = mask_of(achievers)
    return SignatureCanonResult(best, identify_coset(mask), mask)  # type: ignore[arg-type]


def _weight3_candidates(s: tuple[int, ...]) -> list[int]:
    # missing[k] = count of the weight-3 type whose support omits class k;
    # position order (7,B,D,E) puts missing-3 first, so alpha's weight-3
    # block is (missing[inv(3)], missing[inv(2)], missing[inv(1)], missing[inv(0)])
    # and the greatest block assigns classes to 3,2,1,0 by descending count.
    missing = (s[4], s[3], s[2], s[1])
    order = sorted(range(4), key=lambda k: -missing[k])
    groups: list[list[int]] = []
    for k in order:
        if groups and missing[groups[-1][0]] == missing[k]:
            groups[-1].append(k)
        else:
            groups.append([k])

    candidates: list[int] = []
    slot_blocks: list[list[int]] = []
    slot = 3
    for group in groups:
        slot_blocks.append(list(range(slot, slot - len(group), -1)))
        slot -= len(group)

    # alpha(class) = slot; classes in a tie group may take their group's
    # slots in any order.
    def build(i: int, images: dict[int, int]):
        if i == len(groups):
            candidates.append(perm_from_images(images[k] for k in range(4)).index)
            return
        for perm in permutations(slot_blocks[i]):
            nxt = dict(images)
            for k, dest in zip(groups[i], perm):
                nxt[k] = dest
            build(i + 1, nxt)

    build(0, {})
    return candidates


def canonicalize_signature_grouped(s: tuple[int, ...]) -> SignatureCanonResult:
    candidates = _weight3_candidates(s)

    for positions in (_W2_POSITIONS, _W1_POSITIONS):
        best_block: tuple[int, ...] | None = None
        keep: list[int] = []
        for idx in candidates:
            sa = apply_to_signature(ELEMENTS[idx], s)
            block = tuple(sa[p] for p in positions)
            if best_block is None or block > best_block:
                best_block = block
                keep = [idx]
            elif block == best_block:
                keep.append(idx)
        candidates = keep

    canonical = apply_to_signature(ELEMENTS[candidates[0]], s)
    mask = mask_of(candidates)
    return SignatureCanonResult(canonical, identify_coset(mask), mask)
