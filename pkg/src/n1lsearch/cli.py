"""Command-line front end.

Subcommands:
  search          exhaustive staged enumeration up to row/column limits
  bounded-search  depth-first-style bounded extension run from a stage archive
  verify          validity checks plus span diagnostics for one configuration
  canon           canonical form and key digest for one configuration
  replicate       diagonal m-fold replication of one configuration
  stats           class-permutation subgroup and coset census

Exit codes: 0 success, 1 runtime failure (overflow, I/O, parse), 2 usage
error. Progress goes to standard error; data to standard output or files.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import re
import sys
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

from .config import (
    Configuration,
    compute_signature,
    pack_key,
    parse_text,
    replicate,
    serialize_text,
)
from .canon import canonical_form, canonical_key
from .errors import InvalidConfigurationError, ParseError, StageOverflowError
from .gf2code import embed, goodness_measure, is_n1l, span_min_weight
from .perm4 import subgroup_census
from .search import (
    BoundedSearchReport,
    CountsTable,
    SearchLimits,
    StageStore,
    run_bounded_search,
    run_search,
)
from .validity import (
    check_no_zero_column,
    check_part_disjointness,
    check_partial_linear_space,
    check_row_weights,
    is_valid_n1_prime,
    max_rows_for_cols,
)

_STAGE_LINE = re.compile(r"stage r=(\d+)")


@dataclass
class RunManifest:
    """Everything needed to audit or reproduce a search run."""

    command: str
    limits: dict
    mode: str
    engine: str
    threads: int
    output_paths: dict
    started_at: str
    finished_at: str = ""
    stages: list = field(default_factory=list)
    counts: dict = field(default_factory=dict)
    status: str = "running"

    def write(self, path: Path) -> None:
        path.write_text(json.dumps(asdict(self), indent=2) + "\n")


def _now() -> str:
    return time.strftime("%Y-%m-%dT%H:%M:%S", time.gmtime()) + "Z"


def _progress_logger(manifest: RunManifest, t0: float):
    def progress(msg: str) -> None:
        print(f"[{time.time() - t0:8.1f}s] {msg}", file=sys.stderr, flush=True)
        m = _STAGE_LINE.search(msg)
        if m is not None:
            manifest.stages.append(
                {"r": int(m.group(1)), "t": round(time.time() - t0, 2), "line": msg}
            )

    return progress


def _read_configuration(path: str) -> Configuration:
    text = Path(path).read_text() if path != "-" else sys.stdin.read()
    return parse_text(text)


def _int_list(text: str) -> list[int]:
    return [int(part) for part in text.split(",") if part.strip() != ""]


def cmd_search(args) -> int:
    try:
        limits = SearchLimits(
            max_rows=args.max_rows,
            max_cols=args.max_cols,
            n1l_filter=not args.no_n1l_filter,
        )
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    manifest = RunManifest(
        command="search",
        limits={
            "max_rows": limits.max_rows,
            "max_cols": limits.max_cols,
            "n1l_filter": limits.n1l_filter,
        },
        mode="full",
        engine=args.engine,
        threads=args.threads,
        output_paths={
            "out": args.out,
            "archive_dir": args.archive_dir,
            "manifest": args.manifest,
        },
        started_at=_now(),
    )
    t0 = time.time()
    progress = _progress_logger(manifest, t0)
    status = 0
    try:
        table = run_search(
            limits,
            engine=args.engine,
            threads=args.threads,
            archive_dir=args.archive_dir,
            archive_rows=set(_int_list(args.archive_rows)) or None,
            max_store_keys=args.max_store_keys,
            progress=progress,
        )
        manifest.status = "completed"
    except StageOverflowError as exc:
        print(f"error: stage overflow: {exc}", file=sys.stderr)
        table = CountsTable(getattr(exc, "completed_counts", {}) or {})
        manifest.status = f"overflow: {exc}"
        status = 1
    manifest.finished_at = _now()
    manifest.counts = {f"{r},{c}": n for (r, c), n in sorted(table.counts.items())}
    tsv = table.to_tsv()
    if args.out:
        Path(args.out).write_text(tsv)
    else:
        sys.stdout.write(tsv)
    if args.manifest:
        manifest.write(Path(args.manifest))
    return status


def cmd_bounded_search(args) -> int:
    try:
        limits = SearchLimits(
            max_rows=args.max_rows,
            max_cols=args.max_cols,
            n1l_filter=not args.no_n1l_filter,
            mode="bounded",
            max_new_cols_per_step=args.max_new_cols,
            keep_c_min_count=args.keep_c_values,
        )
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    try:
        seed = StageStore.unpack(Path(args.seed_archive).read_bytes())
    except (OSError, ValueError) as exc:
        print(f"error: cannot read seed archive: {exc}", file=sys.stderr)
        return 1
    if args.seed_c:
        seed = seed.restrict_to_c(_int_list(args.seed_c))
    if len(seed) == 0:
        print("error: seed archive holds no configurations after the c "
              "restriction", file=sys.stderr)
        return 2
    manifest = RunManifest(
        command="bounded-search",
        limits={
            "max_rows": limits.max_rows,
            "max_cols": limits.max_cols,
            "n1l_filter": limits.n1l_filter,
            "max_new_cols_per_step": limits.max_new_cols_per_step,
            "keep_c_min_count": limits.keep_c_min_count,
            "seed_r": seed.r,
            "seed_keys": len(seed),
            "seed_c": sorted(seed.counts_by_c()),
        },
        mode="bounded",
        engine=args.engine,
        threads=args.threads,
        output_paths={
            "out": args.out,
            "archive_dir": args.archive_dir,
            "manifest": args.manifest,
        },
        started_at=_now(),
    )
    t0 = time.time()
    progress = _progress_logger(manifest, t0)
    if args.engine == "numba":
        from . import engine as _eng

        report = _eng.run_bounded_search_engine(
            seed,
            limits,
            threads=args.threads,
            archive_dir=args.archive_dir,
            max_store_keys=args.max_store_keys,
            budget_bytes=args.budget_bytes,
            progress=progress,
        )
    else:
        report = run_bounded_search(
            seed,
            limits,
            engine=args.engine,
            threads=args.threads,
            archive_dir=args.archive_dir,
            max_store_keys=args.max_store_keys,
            progress=progress,
        )
    manifest.finished_at = _now()
    manifest.status = (
        f"aborted at r={report.aborted_at_r}: {report.reason}"
        if report.aborted
        else "completed"
    )
    manifest.counts = {str(r): c for r, c in sorted(report.bounds.items())}
    tsv = report.to_tsv()
    if args.out:
        Path(args.out).write_text(tsv)
    else:
        sys.stdout.write(tsv)
    if report.aborted:
        print(
            f"run ended early at r={report.aborted_at_r}: {report.reason}; "
            f"bounds through r={max(report.bounds, default=seed.r)} are complete",
            file=sys.stderr,
        )
    if args.manifest:
        manifest.write(Path(args.manifest))
    return 0


def cmd_verify(args) -> int:
    cfg = _read_configuration(args.file)
    checks = [
        ("row-weights-3", check_row_weights(cfg)),
        ("no-zero-column", check_no_zero_column(cfg)),
        ("class-disjointness", check_part_disjointness(cfg)),
        ("partial-linear-space", check_partial_linear_space(cfg)),
        ("row-bound", cfg.r <= max_rows_for_cols(cfg.c)),
    ]
    print(f"rows={cfg.r} cols={cfg.c} parts={','.join(map(str, cfg.parts))}")
    for name, okay in checks:
        print(f"check {name}: {'pass' if okay else 'FAIL'}")
    valid = is_valid_n1_prime(cfg)
    print(f"valid: {str(valid).lower()}")
    if not valid:
        return 1
    emb = embed(cfg)
    rep = span_min_weight(list(emb.words) + [emb.anchor])
    print(f"signature: {','.join(map(str, compute_signature(cfg)))}")
    print(f"is_n1l: {str(is_n1l(cfg)).lower()}")
    print(f"min_weight: {rep.min_weight}")
    if rep.min_weight < 5:
        cols = [j for j in range(emb.length) if (rep.witness >> j) & 1]
        print(f"witness: weight {rep.min_weight} at positions {cols}")
    print(f"rank: {rep.rank}")
    g = goodness_measure(emb.length, rep.rank)
    print(f"goodness: {g} (~{float(g):.4f})")
    return 0


def cmd_canon(args) -> int:
    cfg = _read_configuration(args.file)
    canon = canonical_form(cfg, grouped_signature=args.grouped_signature)
    key = canonical_key(cfg, grouped_signature=args.grouped_signature)
    sys.stdout.write(serialize_text(canon))
    print(f"key: {hashlib.sha256(key).hexdigest()[:16]}")
    return 0


def cmd_replicate(args) -> int:
    cfg = _read_configuration(args.file)
    out = replicate(cfg, args.m)
    text = serialize_text(out)
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return 0


def cmd_stats(args) -> int:
    census = subgroup_census()
    subgroups = sum(census.values())
    cosets = sum(24 // order * count for order, count in census.items())
    print(f"subgroups: {subgroups}, cosets: {cosets}")
    print(
        "order histogram: "
        + ", ".join(f"{order}:{count}" for order, count in sorted(census.items()))
    )
    return 0


def _add_run_flags(sub, *, bounded: bool) -> None:
    sub.add_argument("--max-rows", type=int, required=True)
    sub.add_argument("--max-cols", type=int, required=True)
    sub.add_argument("--no-n1l-filter", action="store_true",
                     help="enumerate without the span minimum-weight filter")
    sub.add_argument("--engine", choices=("python", "numba"), default="numba")
    sub.add_argument("--threads", type=int, default=1)
    sub.add_argument("--out", help="write the result table here (default stdout)")
    sub.add_argument("--archive-dir", help="write per-stage key archives here")
    sub.add_argument("--manifest", help="write a JSON run manifest here")
    sub.add_argument("--max-store-keys", type=int, default=None,
                     help="abort any stage growing past this many classes")
    if not bounded:
        sub.add_argument("--archive-rows", default="",
                         help="comma-separated row counts to archive "
                              "(default: every stage)")
    if bounded:
        sub.add_argument("--seed-archive", required=True,
                         help="stage archive to extend from")
        sub.add_argument("--seed-c", default="",
                         help="comma-separated column counts kept from the seed")
        sub.add_argument("--max-new-cols", type=int, default=2,
                         help="fresh columns allowed per added row")
        sub.add_argument("--keep-c-values", type=lambda s: None if s == "none" else int(s),
                         default=2,
                         help="distinct column counts retained per stage, or 'none'")
        sub.add_argument("--budget-bytes", type=int, default=None,
                         help="stage storage budget; exceeding it ends the run "
                              "with the bounds completed so far")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="n1lsearch",
        description="Enumerate and verify row-weight-3 partial linear spaces "
                    "with class partitions and span minimum-weight 5.",
    )
    subs = parser.add_subparsers(dest="command", required=True)

    s = subs.add_parser("search", help="exhaustive staged enumeration")
    _add_run_flags(s, bounded=False)
    s.set_defaults(func=cmd_search)

    s = subs.add_parser("bounded-search", help="bounded extension run")
    _add_run_flags(s, bounded=True)
    s.set_defaults(func=cmd_bounded_search)

    s = subs.add_parser("verify", help="validity and span diagnostics")
    s.add_argument("file", help="configuration text file, or - for stdin")
    s.set_defaults(func=cmd_verify)

    s = subs.add_parser("canon", help="canonical form and key digest")
    s.add_argument("file")
    s.add_argument("--grouped-signature", action="store_true",
                   help="use the grouped signature-canonicalization variant")
    s.set_defaults(func=cmd_canon)

    s = subs.add_parser("replicate", help="diagonal m-fold replication")
    s.add_argument("file")
    s.add_argument("m", type=int)
    s.add_argument("--out")
    s.set_defaults(func=cmd_replicate)

    s = subs.add_parser("stats", help="class-permutation subgroup census")
    s.set_defaults(func=cmd_stats)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ParseError, InvalidConfigurationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
