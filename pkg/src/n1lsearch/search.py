"""Staged, isomorph-free exhaustive generation.

The search grows configurations one row at a time. Stage r takes every
stored canonical representative with r-1 rows, adds a weight-3 row in
every admissible way (to any of the four classes, using existing columns
and up to three freshly appended ones), filters by the linear condition,
canonicalizes, and deduplicates by canonical key. Completeness follows
from the reverse move: deleting the last row of any class of a valid
configuration (dropping columns that become empty) yields a valid
configuration with one row fewer, and the linear condition is inherited
by row subsets, so every class at stage r is reached from some stored
parent at stage r-1.

Two search modes share this machinery. The full mode counts isomorphism
classes for every (r, c) inside the limits. The bounded mode trades
completeness for reach: extensions may append at most a small number of
fresh columns and only configurations at the smallest few column counts
survive as parents, which still yields valid upper bounds on the least
column count per row count.

This module is the pure reference; a vectorized engine (see engine.py)
can execute stages instead and must produce byte-identical key sets.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Callable, Iterable, Iterator

from .canon import canonical_key
from .config import Configuration, class_masks, pack_key, unpack_key
from .errors import StageOverflowError
from .gf2code import is_n1l_incremental

__all__ = [
    "ARCHIVE_MAGIC",
    "SEED",
    "BoundedSearchReport",
    "CountsTable",
    "SearchLimits",
    "StageStore",
    "enumerate_extensions",
    "report_ratio",
    "run_bounded_search",
    "run_search",
    "run_stage",
]

ARCHIVE_MAGIC = b"N1LARC01"

#: The unique 1-row configuration: one row {0,1,2} in class 0.
SEED = Configuration(3, (0b111,), (1, 0, 0, 0))

ProgressFn = Callable[[str], None]


@dataclass(frozen=True)
class SearchLimits:
    """Bounds and switches for a search run.

    ``max_new_cols_per_step`` and ``keep_c_min_count`` only apply in
    bounded mode; the full mode always allows up to three fresh columns
    per added row and retains everything. ``keep_c_min_count=None`` means
    unlimited retention (bounded mode then differs from full mode only
    through ``max_new_cols_per_step``).
    """

    max_rows: int
    max_cols: int
    n1l_filter: bool = True
    mode: str = "full"
    max_new_cols_per_step: int = 2
    keep_c_min_count: int | None = 2

    def __post_init__(self):
        if self.max_rows < 1:
            raise ValueError(f"max_rows must be >= 1, got {self.max_rows}")
        if self.max_cols < 3:
            raise ValueError(f"max_cols must be >= 3, got {self.max_cols}")
        if self.mode not in ("full", "bounded"):
            raise ValueError(f"mode must be 'full' or 'bounded', got {self.mode!r}")
        if not 0 <= self.max_new_cols_per_step <= 3:
            raise ValueError("max_new_cols_per_step must be in 0..3")
        if self.keep_c_min_count is not None and self.keep_c_min_count < 1:
            raise ValueError("keep_c_min_count must be >= 1 or None")

    @property
    def fresh_limit(self) -> int:
        return 3 if self.mode == "full" else self.max_new_cols_per_step


class StageStore:
    """Deduplicating set of canonical keys for one stage.

    Insert-if-absent semantics; packing is sorted so archives are stable
    across runs regardless of insertion order.
    """

    __slots__ = ("r", "keys", "previous_archive")

    def __init__(
        self,
        r: int,
        keys: Iterable[bytes] = (),
        previous_archive: bytes | None = None,
    ):
        self.r = r
        self.keys: set[bytes] = set(keys)
        self.previous_archive = previous_archive
        for key in self.keys:
            if key[0] != r:
                raise ValueError(f"key with r={key[0]} in stage store for r={r}")

    def insert(self, key: bytes) -> bool:
        """Add a key; returns True if it was absent."""
        if key in self.keys:
            return False
        self.keys.add(key)
        return True

    def __len__(self) -> int:
        return len(self.keys)

    def __contains__(self, key: bytes) -> bool:
        return key in self.keys

    def __iter__(self) -> Iterator[bytes]:
        return iter(sorted(self.keys))

    def configurations(self) -> Iterator[Configuration]:
        for key in self:
            yield unpack_key(key)

    def counts_by_c(self) -> dict[int, int]:
        out: dict[int, int] = {}
        for key in self.keys:
            c = key[1]
            out[c] = out.get(c, 0) + 1
        return dict(sorted(out.items()))

    def restrict_to_c(self, c_values: Iterable[int]) -> "StageStore":
        wanted = set(c_values)
        return StageStore(self.r, (k for k in self.keys if k[1] in wanted))

    def pack(self) -> bytes:
        cmax = max((k[1] for k in self.keys), default=0)
        parts = [ARCHIVE_MAGIC, struct.pack("<BBHI", self.r, cmax, 0, len(self.keys))]
        for key in sorted(self.keys):
            parts.append(struct.pack("<H", len(key)))
            parts.append(key)
        return b"".join(parts)

    @classmethod
    def unpack(cls, data: bytes) -> "StageStore":
        if len(data) < 16 or data[:8] != ARCHIVE_MAGIC:
            raise ValueError("not a stage archive: bad magic")
        r, _cmax, _pad, count = struct.unpack("<BBHI", data[8:16])
        keys = []
        pos = 16
        for _ in range(count):
            if pos + 2 > len(data):
                raise ValueError("stage archive truncated")
            (n,) = struct.unpack("<H", data[pos : pos + 2])
            pos += 2
            if pos + n > len(data):
                raise ValueError("stage archive truncated")
            keys.append(data[pos : pos + n])
            pos += n
        if pos != len(data):
            raise ValueError("stage archive has trailing bytes")
        return cls(r, keys)


@dataclass
class CountsTable:
    """Isomorphism class counts indexed by (row count, column count)."""

    counts: dict[tuple[int, int], int] = field(default_factory=dict)

    def get(self, r: int, c: int) -> int:
        return self.counts.get((r, c), 0)

    def row_counts(self, r: int) -> dict[int, int]:
        return {c: n for (rr, c), n in sorted(self.counts.items()) if rr == r}

    def max_r(self) -> int:
        return max((r for r, _ in self.counts), default=0)

    def to_tsv(self, min_c: int = 5, max_c: int | None = None) -> str:
        if max_c is None:
            max_c = max((c for _, c in self.counts), default=min_c)
        cols = list(range(min_c, max_c + 1))
        lines = ["r\t" + "\t".join(f"c{c}" for c in cols)]
        for r in range(2, self.max_r() + 1):
            lines.append(f"{r}\t" + "\t".join(str(self.get(r, c)) for c in cols))
        return "\n".join(lines) + "\n"


@dataclass
class BoundedSearchReport:
    """Outcome of a bounded run: per-r least column count found.

    ``aborted`` marks a run cut short by storage exhaustion; the bounds
    for completed stages remain valid.
    """

    bounds: dict[int, int] = field(default_factory=dict)
    aborted: bool = False
    aborted_at_r: int | None = None
    reason: str | None = None

    def to_tsv(self) -> str:
        lines = ["r\tcMinUpperBound"]
        for r in sorted(self.bounds):
            lines.append(f"{r}\t{self.bounds[r]}")
        return "\n".join(lines) + "\n"


def _extensions(
    parent: Configuration, limits: SearchLimits
) -> Iterator[tuple[Configuration, int, int]]:
    """Yield (child, new row mask, class index) for every admissible added row.

    Fresh columns are appended contiguously after the existing ones and
    must all be used by the new row, so no zero column can appear.
    Among currently empty classes only the lowest-numbered one is
    extended: adding the row to any other empty class gives an isomorphic
    configuration.
    """
    c = parent.c
    rows = parent.rows
    masks = class_masks(parent)
    labeled = parent.labeled_rows()
    max_fresh = min(limits.fresh_limit, max(0, limits.max_cols - c))

    def pls_ok(mask: int) -> bool:
        return all((mask & row).bit_count() <= 1 for row in rows)

    seen_empty = False
    for k in range(4):
        if parent.parts[k] == 0:
            if seen_empty:
                continue
            seen_empty = True
        blocked = masks[k]
        for fresh in range(max_fresh + 1):
            fresh_mask = ((1 << fresh) - 1) << c
            need = 3 - fresh
            if need < 0:
                break
            # choose `need` existing columns in ascending order
            def rec(start: int, chosen: int, depth: int):
                if depth == need:
                    mask = chosen | fresh_mask
                    if pls_ok(mask):
                        child_rows = labeled + [(mask, k)]
                        child = _assemble(c + fresh, child_rows)
                        yield child, mask, k
                    return
                for j in range(start, c):
                    bit = 1 << j
                    if blocked & bit:
                        continue
                    yield from rec(j + 1, chosen | bit, depth + 1)

            yield from rec(0, 0, 0)


def _assemble(c: int, labeled: list[tuple[int, int]]) -> Configuration:
    parts = [0, 0, 0, 0]
    for _, k in labeled:
        parts[k] += 1
    rows = [m for kk in range(4) for m, k in labeled if k == kk]
    return Configuration(c, tuple(rows), (parts[0], parts[1], parts[2], parts[3]))


def enumerate_extensions(
    parent: Configuration, limits: SearchLimits
) -> Iterator[Configuration]:
    """Every configuration obtained from parent by adding one admissible row."""
    for child, _mask, _k in _extensions(parent, limits):
        yield child


def run_stage(
    previous: StageStore,
    limits: SearchLimits,
    *,
    max_store_keys: int | None = None,
    progress: ProgressFn | None = None,
) -> StageStore:
    """Extend every parent, filter, canonicalize, deduplicate.

    Results are all-or-nothing: exceeding ``max_store_keys`` raises
    StageOverflowError and the partial stage is discarded.
    """
    out: set[bytes] = set()
    r_next = previous.r + 1
    for key in previous:
        parent = unpack_key(key)
        for child, mask, k in _extensions(parent, limits):
            if limits.n1l_filter and not is_n1l_incremental(parent, mask, k):
                continue
            ck = canonical_key(child)
            if ck in out:
                continue
            if max_store_keys is not None and len(out) >= max_store_keys:
                raise StageOverflowError(
                    f"stage r={r_next} exceeded {max_store_keys} stored keys"
                )
            out.add(ck)
    if progress is not None:
        progress(f"stage r={r_next}: {len(out)} classes")
    return StageStore(r_next, out, previous_archive=previous.pack())


def _stage_keys(
    previous: StageStore,
    limits: SearchLimits,
    *,
    engine: str,
    threads: int,
    max_store_keys: int | None,
    progress: ProgressFn | None,
) -> list[bytes]:
    """Run one stage with the chosen executor; returns sorted child keys."""
    if engine == "python":
        store = run_stage(
            previous, limits, max_store_keys=max_store_keys, progress=None
        )
        return sorted(store.keys)
    if engine == "numba":
        from . import engine as _eng

        return _eng.stage_child_keys(
            sorted(previous.keys),
            max_cols=limits.max_cols,
            fresh_limit=limits.fresh_limit,
            n1l_filter=limits.n1l_filter,
            threads=threads,
            max_store_keys=max_store_keys,
            progress=progress,
        )
    raise ValueError(f"unknown engine {engine!r}")


def _write_archive(
    archive_dir: str | Path | None,
    store: StageStore,
    archive_rows: set[int] | None = None,
) -> None:
    if archive_dir is None:
        return
    if archive_rows is not None and store.r not in archive_rows:
        return
    path = Path(archive_dir)
    path.mkdir(parents=True, exist_ok=True)
    (path / f"stage-r{store.r:02d}.n1larc").write_bytes(store.pack())


def run_search(
    limits: SearchLimits,
    *,
    engine: str = "python",
    threads: int = 1,
    archive_dir: str | Path | None = None,
    archive_rows: set[int] | None = None,
    max_store_keys: int | None = None,
    progress: ProgressFn | None = None,
) -> CountsTable:
    """Exhaustive staged search from the 1-row seed up to the limits.

    Returns class counts per (r, c). Deterministic for any thread count:
    stage results are sets of canonical keys, so schedule order cannot
    change them. StageOverflowError carries the completed counts in its
    ``completed_counts`` attribute.
    """
    if limits.mode != "full":
        raise ValueError("run_search requires mode='full'")
    if engine == "numba":
        from . import engine as _eng

        return _eng.run_search_engine(
            limits,
            threads=threads,
            archive_dir=archive_dir,
            archive_rows=archive_rows,
            max_store_keys=max_store_keys,
            progress=progress,
        )
    if engine != "python":
        raise ValueError(f"unknown engine {engine!r}")
    table = CountsTable()
    store = StageStore(1, [pack_key(SEED)])
    _write_archive(archive_dir, store, archive_rows)
    for r in range(2, limits.max_rows + 1):
        try:
            keys = _stage_keys(
                store,
                limits,
                engine=engine,
                threads=threads,
                max_store_keys=max_store_keys,
                progress=progress,
            )
        except StageOverflowError as exc:
            exc.completed_counts = dict(table.counts)
            raise
        store = StageStore(r, keys, previous_archive=None)
        _write_archive(archive_dir, store, archive_rows)
        for c, n in store.counts_by_c().items():
            table.counts[(r, c)] = n
        if progress is not None:
            progress(f"stage r={r}: {len(keys)} classes, by c: {store.counts_by_c()}")
        if not keys:
            break
    return table


def run_bounded_search(
    seed: StageStore,
    limits: SearchLimits,
    *,
    engine: str = "python",
    threads: int = 1,
    archive_dir: str | Path | None = None,
    max_store_keys: int | None = None,
    progress: ProgressFn | None = None,
) -> BoundedSearchReport:
    """Bounded-extension search for column-count upper bounds.

    Each stage limits fresh columns per added row and afterwards retains
    only configurations at the smallest ``keep_c_min_count`` distinct
    column counts as parents. The reported per-r minimum column count is
    an upper bound on the true least column count. Storage exhaustion
    ends the run gracefully with the bounds completed so far.
    """
    if limits.mode != "bounded":
        raise ValueError("run_bounded_search requires mode='bounded'")
    if engine == "numba":
        from . import engine as _eng

        return _eng.run_bounded_search_engine(
            seed,
            limits,
            threads=threads,
            archive_dir=archive_dir,
            max_store_keys=max_store_keys,
            progress=progress,
        )
    if engine != "python":
        raise ValueError(f"unknown engine {engine!r}")
    report = BoundedSearchReport()
    store = seed
    for r in range(seed.r + 1, limits.max_rows + 1):
        try:
            keys = _stage_keys(
                store,
                limits,
                engine=engine,
                threads=threads,
                max_store_keys=max_store_keys,
                progress=progress,
            )
        except (StageOverflowError, MemoryError) as exc:
            report.aborted = True
            report.aborted_at_r = r
            report.reason = str(exc) or type(exc).__name__
            return report
        if not keys:
            break
        by_c: dict[int, int] = {}
        for key in keys:
            by_c[key[1]] = by_c.get(key[1], 0) + 1
        report.bounds[r] = min(by_c)
        if limits.keep_c_min_count is not None:
            kept_c = sorted(by_c)[: limits.keep_c_min_count]
            keys = [k for k in keys if k[1] in set(kept_c)]
        store = StageStore(r, keys)
        _write_archive(archive_dir, store)
        if progress is not None:
            progress(
                f"bounded stage r={r}: by c {by_c}, "
                f"bound {report.bounds[r]}, parents kept {len(keys)}"
            )
    return report


def report_ratio(table: CountsTable) -> dict[int, tuple[int, Fraction]]:
    """Per row count: least column count with classes, and the ratio r/c."""
    if not table.counts:
        raise ValueError("counts table is empty")
    out: dict[int, tuple[int, Fraction]] = {}
    for r in sorted({r for r, _ in table.counts}):
        cs = [c for (rr, c), n in table.counts.items() if rr == r and n > 0]
        if cs:
            c_min = min(cs)
            out[r] = (c_min, Fraction(r, c_min))
    return out
