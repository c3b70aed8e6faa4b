"""Configuration model: incidence rows, class partition, column types, signatures.

A configuration is an r x c 0/1 incidence matrix together with a partition
of its rows into 4 ordered classes (empty classes allowed). Rows are stored
as integer bitmasks with bit j = column j, grouped so that class 0 occupies
the first parts[0] row indices, class 1 the next parts[1], and so on.

A column's type is the 4-bit mask of classes it meets (bit 0 = class 0,
never 0: all-zero columns are forbidden). The signature is the 15-tuple of
per-type column counts in the fixed order F,7,B,D,E,3,5,9,6,A,C,1,2,4,8.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

from .errors import (
    ClassRangeError,
    ColumnRangeError,
    HeaderError,
    InvalidConfigurationError,
    ParseError,
    PartitionMismatchError,
    RowWeightError,
    ZeroColumnError,
)
from .perm4 import TYPE_ORDER, TYPE_POS

__all__ = [
    "Configuration",
    "from_labeled_rows",
    "column_type_of",
    "class_masks",
    "compute_signature",
    "normalize_layout",
    "replicate",
    "serialize_text",
    "parse_text",
    "pack_key",
    "unpack_key",
]

TEXT_MAGIC = "N1L v1"


@dataclass(frozen=True)
class Configuration:
    """Immutable incidence matrix plus row partition.

    rows[i] is the bitmask of columns row i meets; parts gives the four
    class sizes, class k covering row indices sum(parts[:k]) onward.
    """

    c: int
    rows: tuple[int, ...]
    parts: tuple[int, int, int, int]

    def __post_init__(self):
        if self.c < 0:
            raise InvalidConfigurationError(f"negative column count: {self.c}")
        if len(self.parts) != 4 or any(s < 0 for s in self.parts):
            raise InvalidConfigurationError(f"bad partition sizes: {self.parts}")
        if sum(self.parts) != len(self.rows):
            raise InvalidConfigurationError(
                f"partition sizes {self.parts} do not sum to row count {len(self.rows)}"
            )
        full = (1 << self.c) - 1
        for i, row in enumerate(self.rows):
            if row < 0 or row & ~full:
                raise InvalidConfigurationError(
                    f"row {i} has bits outside 0..{self.c - 1}"
                )
            if row.bit_count() != 3:
                raise InvalidConfigurationError(
                    f"row {i} has weight {row.bit_count()}, need 3"
                )

    @property
    def r(self) -> int:
        return len(self.rows)

    def class_of_row(self, i: int) -> int:
        bound = 0
        for k in range(4):
            bound += self.parts[k]
            if i < bound:
                return k
        raise IndexError(f"row index out of range: {i}")

    def class_start(self, k: int) -> int:
        return sum(self.parts[:k])

    def class_rows(self, k: int) -> tuple[int, ...]:
        start = self.class_start(k)
        return self.rows[start : start + self.parts[k]]

    def labeled_rows(self) -> list[tuple[int, int]]:
        """(mask, class) pairs in row order."""
        out = []
        i = 0
        for k in range(4):
            for _ in range(self.parts[k]):
                out.append((self.rows[i], k))
                i += 1
        return out


def from_labeled_rows(c: int, labeled: Iterable[tuple[int, int]]) -> Configuration:
    """Build a Configuration from (mask, class) pairs in any order.

    Rows are grouped by class (stable within a class), which is the only
    layout the Configuration type stores.
    """
    buckets: tuple[list[int], ...] = ([], [], [], [])
    for mask, k in labeled:
        buckets[k].append(mask)
    rows = tuple(mask for bucket in buckets for mask in bucket)
    parts = tuple(len(bucket) for bucket in buckets)
    return Configuration(c, rows, parts)  # type: ignore[arg-type]


def class_masks(cfg: Configuration) -> tuple[int, int, int, int]:
    """Per-class OR of row masks: bit j set iff class k meets column j."""
    out = []
    for k in range(4):
        acc = 0
        for row in cfg.class_rows(k):
            acc |= row
        out.append(acc)
    return tuple(out)  # type: ignore[return-value]


def column_type_of(cfg: Configuration, j: int) -> int:
    if not 0 <= j < cfg.c:
        raise IndexError(f"column index out of range: {j}")
    masks = class_masks(cfg)
    t = sum(1 << k for k in range(4) if masks[k] >> j & 1)
    if t == 0:
        raise ZeroColumnError(f"column {j} is all-zero")
    return t


def compute_signature(cfg: Configuration) -> tuple[int, ...]:
    masks = class_masks(cfg)
    counts = [0] * 15
    for j in range(cfg.c):
        t = 0
        for k in range(4):
            t |= (masks[k] >> j & 1) << k
        if t == 0:
            raise ZeroColumnError(f"column {j} is all-zero")
        counts[TYPE_POS[t]] += 1
    return tuple(counts)


def normalize_layout(cfg: Configuration) -> Configuration:
    """Stably reorder columns into the fixed type-group order; rows unchanged."""
    masks = class_masks(cfg)
    types = []
    for j in range(cfg.c):
        t = 0
        for k in range(4):
            t |= (masks[k] >> j & 1) << k
        if t == 0:
            raise ZeroColumnError(f"column {j} is all-zero")
        types.append(t)
    order = sorted(range(cfg.c), key=lambda j: (TYPE_POS[types[j]], j))
    new_rows = []
    for row in cfg.rows:
        mask = 0
        for new_j, old_j in enumerate(order):
            mask |= (row >> old_j & 1) << new_j
        new_rows.append(mask)
    return Configuration(cfg.c, tuple(new_rows), cfg.parts)


def replicate(cfg: Configuration, m: int) -> Configuration:
    """Diagonal replication: m shifted copies of every class.

    Copy t of class k sits at column offset t*c; within the new class k its
    rows follow copy t-1's. Preserves validity and the span condition.
    """
    if m < 1:
        raise ValueError(f"replication count must be >= 1, got {m}")
    new_rows = []
    for k in range(4):
        for t in range(m):
            for row in cfg.class_rows(k):
                new_rows.append(row << (t * cfg.c))
    parts = tuple(m * s for s in cfg.parts)
    return Configuration(m * cfg.c, tuple(new_rows), parts)  # type: ignore[arg-type]


def serialize_text(cfg: Configuration) -> str:
    lines = [TEXT_MAGIC, f"rows={cfg.r} cols={cfg.c}", "parts=" + ",".join(map(str, cfg.parts))]
    for mask, k in cfg.labeled_rows():
        cols = [j for j in range(cfg.c) if mask >> j & 1]
        lines.append(f"row {k} : " + " ".join(map(str, cols)))
    return "\n".join(lines) + "\n"


def parse_text(text: str) -> Configuration:
    lines = text.splitlines()
    if not lines or lines[0].strip() != TEXT_MAGIC:
        raise HeaderError(f"expected magic {TEXT_MAGIC!r}", 1)
    if len(lines) < 3:
        raise HeaderError("missing size or parts line", len(lines))

    size_line = lines[1].strip()
    try:
        rows_part, cols_part = size_line.split()
        r = int(rows_part.removeprefix("rows="))
        c = int(cols_part.removeprefix("cols="))
        if not size_line.startswith("rows=") or "cols=" not in cols_part:
            raise ValueError
    except ValueError:
        raise HeaderError(f"bad size line: {size_line!r}", 2) from None
    if r < 0 or c < 0:
        raise HeaderError(f"negative size: {size_line!r}", 2)

    parts_line = lines[2].strip()
    if not parts_line.startswith("parts="):
        raise HeaderError(f"bad parts line: {parts_line!r}", 3)
    try:
        parts = tuple(int(x) for x in parts_line.removeprefix("parts=").split(","))
    except ValueError:
        raise HeaderError(f"bad parts line: {parts_line!r}", 3) from None
    if len(parts) != 4 or any(s < 0 for s in parts):
        raise HeaderError(f"parts must be four nonnegative sizes: {parts_line!r}", 3)
    if sum(parts) != r:
        raise PartitionMismatchError(f"parts {parts} do not sum to rows={r}", 3)

    labeled: list[tuple[int, int]] = []
    lineno = 3
    for raw in lines[3:]:
        lineno += 1
        line = raw.strip()
        if not line:
            continue
        head, _, tail = line.partition(":")
        fields = head.split()
        if len(fields) != 2 or fields[0] != "row":
            raise ParseError(f"expected 'row <class> : <cols>', got {line!r}", lineno)
        try:
            k = int(fields[1])
        except ValueError:
            raise ClassRangeError(f"bad class label: {fields[1]!r}", lineno) from None
        if not 0 <= k <= 3:
            raise ClassRangeError(f"class {k} outside 0..3", lineno)
        try:
            cols = [int(x) for x in tail.split()]
        except ValueError:
            raise ParseError(f"bad column list: {tail.strip()!r}", lineno) from None
        if len(set(cols)) != 3 or len(cols) != 3:
            raise RowWeightError(f"row must have exactly 3 distinct columns, got {cols}", lineno)
        mask = 0
        for j in cols:
            if not 0 <= j < c:
                raise ColumnRangeError(f"column {j} outside 0..{c - 1}", lineno)
            mask |= 1 << j
        labeled.append((mask, k))

    if len(labeled) != r:
        raise PartitionMismatchError(f"expected {r} rows, found {len(labeled)}", lineno)
    classes = [k for _, k in labeled]
    if classes != sorted(classes):
        raise PartitionMismatchError("rows must be grouped by class, class 0 first", lineno)
    found = tuple(classes.count(k) for k in range(4))
    if found != parts:
        raise PartitionMismatchError(f"declared parts {parts} but rows give {found}", lineno)
    return Configuration(c, tuple(mask for mask, _ in labeled), parts)


def pack_key(cfg: Configuration) -> bytes:
    """CanonicalKey bytes: r, c, the 4 part sizes, then rows packed row-major.

    Each row takes ceil(c/8) bytes with bit j stored in byte j//8 at bit
    position j%8. Only meaningful as an isomorphism key when cfg is a
    canonical form; the packing itself is lossless for any configuration.
    """
    if cfg.r > 255 or cfg.c > 255:
        raise ValueError("key format supports at most 255 rows and columns")
    nbytes = (cfg.c + 7) // 8
    out = bytearray([cfg.r, cfg.c, *cfg.parts])
    for row in cfg.rows:
        out += row.to_bytes(nbytes, "little")
    return bytes(out)


def unpack_key(data: bytes) -> Configuration:
    if len(data) < 6:
        raise ValueError("key too short")
    r, c, s0, s1, s2, s3 = data[:6]
    nbytes = (c + 7) // 8
    if len(data) != 6 + r * nbytes:
        raise ValueError(f"key length {len(data)} does not match r={r}, c={c}")
    rows = []
    for i in range(r):
        chunk = data[6 + i * nbytes : 6 + (i + 1) * nbytes]
        rows.append(int.from_bytes(chunk, "little"))
    return Configuration(c, tuple(rows), (s0, s1, s2, s3))
