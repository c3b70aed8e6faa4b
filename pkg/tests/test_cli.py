"""End-to-end command-line checks via cli.main(argv)."""

import hashlib
import io
import json

import pytest

from n1lsearch import cli
from n1lsearch.canon import canonical_form, canonical_key
from n1lsearch.config import (
    Configuration,
    pack_key,
    parse_text,
    replicate,
    serialize_text,
)
from n1lsearch.search import SearchLimits, StageStore, run_bounded_search

TWO_SHARING = Configuration(5, (0b00111, 0b11001), (1, 1, 0, 0))
FOUR_TRIANGLES = Configuration(
    6, (0b001011, 0b010101, 0b100110, 0b111000), (1, 1, 1, 1)
)


@pytest.fixture
def cfg_file(tmp_path):
    path = tmp_path / "two.txt"
    path.write_text(serialize_text(TWO_SHARING))
    return path


def test_verify_reports_all_checks_for_a_valid_configuration(cfg_file, capsys):
    assert cli.main(["verify", str(cfg_file)]) == 0
    out = capsys.readouterr().out
    assert "rows=2 cols=5 parts=1,1,0,0" in out
    for name in ("row-weights-3", "no-zero-column", "class-disjointness",
                 "partial-linear-space", "row-bound"):
        assert f"check {name}: pass" in out
    assert "valid: true" in out
    assert "signature: 0,0,0,0,0,1,0,0,0,0,0,2,2,0,0" in out
    assert "is_n1l: true" in out
    assert "min_weight: 5" in out
    assert "witness" not in out
    assert "goodness: 7/16 (~0.4375)" in out


def test_verify_shows_the_low_weight_witness(tmp_path, capsys):
    path = tmp_path / "triangles.txt"
    path.write_text(serialize_text(FOUR_TRIANGLES))
    assert cli.main(["verify", str(path)]) == 0
    out = capsys.readouterr().out
    assert "valid: true" in out
    assert "is_n1l: false" in out
    assert "min_weight: 1" in out
    assert "witness: weight 1 at positions [10]" in out


def test_verify_rejects_an_invalid_configuration(tmp_path, capsys):
    bad = Configuration(4, (0b0111, 0b1011), (1, 1, 0, 0))
    path = tmp_path / "bad.txt"
    path.write_text(serialize_text(bad))
    assert cli.main(["verify", str(path)]) == 1
    out = capsys.readouterr().out
    assert "check partial-linear-space: FAIL" in out
    assert "valid: false" in out


def test_verify_reads_stdin_when_told_to(monkeypatch, capsys):
    monkeypatch.setattr("sys.stdin", io.StringIO(serialize_text(TWO_SHARING)))
    assert cli.main(["verify", "-"]) == 0
    assert "valid: true" in capsys.readouterr().out


def test_parse_failures_exit_with_runtime_error(tmp_path, capsys):
    path = tmp_path / "garbage.txt"
    path.write_text("not a configuration\n")
    assert cli.main(["verify", str(path)]) == 1
    assert "error:" in capsys.readouterr().err
    assert cli.main(["verify", str(tmp_path / "missing.txt")]) == 1


def test_canon_prints_the_canonical_form_and_digest(tmp_path, capsys):
    scrambled = Configuration(5, (0b10110, 0b01101), (1, 1, 0, 0))
    path = tmp_path / "scrambled.txt"
    path.write_text(serialize_text(scrambled))
    assert cli.main(["canon", str(path)]) == 0
    out = capsys.readouterr().out
    want = canonical_form(scrambled)
    assert serialize_text(want) in out
    digest = hashlib.sha256(canonical_key(scrambled)).hexdigest()[:16]
    assert f"key: {digest}" in out

    assert cli.main(["canon", str(path), "--grouped-signature"]) == 0
    assert serialize_text(want) in capsys.readouterr().out


def test_replicate_writes_a_parseable_doubled_configuration(cfg_file, tmp_path, capsys):
    out_path = tmp_path / "doubled.txt"
    assert cli.main(["replicate", str(cfg_file), "2", "--out", str(out_path)]) == 0
    parsed = parse_text(out_path.read_text())
    assert parsed == replicate(TWO_SHARING, 2)
    assert parsed.r == 4 and parsed.c == 10

    assert cli.main(["replicate", str(cfg_file), "0"]) == 2
    assert "error:" in capsys.readouterr().err


def test_stats_prints_the_subgroup_and_coset_census(capsys):
    assert cli.main(["stats"]) == 0
    out = capsys.readouterr().out
    assert "subgroups: 30, cosets: 234" in out
    assert "order histogram: 1:1, 2:9, 3:4, 4:7, 6:4, 8:3, 12:1, 24:1" in out


@pytest.mark.parametrize("engine", ["python", "numba"])
def test_search_prints_the_counts_table(engine, capsys):
    assert cli.main([
        "search", "--max-rows", "3", "--max-cols", "9", "--engine", engine,
    ]) == 0
    out = capsys.readouterr().out
    lines = out.strip().split("\n")
    assert lines[0] == "r\tc5\tc6\tc7\tc8\tc9"
    assert lines[1] == "2\t1\t2\t0\t0\t0"
    assert lines[2] == "3\t0\t0\t3\t2\t3"


def test_search_writes_table_manifest_and_selected_archives(tmp_path, capsys):
    out_path = tmp_path / "counts.tsv"
    manifest_path = tmp_path / "run.json"
    archive_dir = tmp_path / "stages"
    code = cli.main([
        "search", "--max-rows", "3", "--max-cols", "9",
        "--out", str(out_path),
        "--manifest", str(manifest_path),
        "--archive-dir", str(archive_dir),
        "--archive-rows", "3",
    ])
    assert code == 0
    capsys.readouterr()
    assert "3\t0\t0\t3\t2\t3" in out_path.read_text()

    manifest = json.loads(manifest_path.read_text())
    assert manifest["command"] == "search"
    assert manifest["status"] == "completed"
    assert manifest["counts"]["3,7"] == 3
    assert any(stage["r"] == 3 for stage in manifest["stages"])

    names = sorted(p.name for p in archive_dir.iterdir())
    assert names == ["stage-r03.n1larc"]
    store = StageStore.unpack((archive_dir / "stage-r03.n1larc").read_bytes())
    assert store.counts_by_c() == {7: 3, 8: 2, 9: 3}


def test_search_rejects_impossible_limits(capsys):
    assert cli.main(["search", "--max-rows", "0", "--max-cols", "9"]) == 2
    assert "error:" in capsys.readouterr().err


def test_search_overflow_reports_partial_counts(capsys):
    code = cli.main([
        "search", "--max-rows", "4", "--max-cols", "12",
        "--max-store-keys", "4",
    ])
    assert code == 1
    captured = capsys.readouterr()
    assert "stage overflow" in captured.err
    assert "2\t1\t2" in captured.out


def test_bad_usage_exits_through_argparse():
    with pytest.raises(SystemExit) as exc:
        cli.main(["search", "--max-rows", "3"])
    assert exc.value.code == 2
    with pytest.raises(SystemExit):
        cli.main(["no-such-command"])


def test_bounded_search_matches_the_library_result(tmp_path, capsys):
    archive_dir = tmp_path / "stages"
    assert cli.main([
        "search", "--max-rows", "4", "--max-cols", "9",
        "--archive-dir", str(archive_dir), "--archive-rows", "4",
    ]) == 0
    capsys.readouterr()
    seed_path = archive_dir / "stage-r04.n1larc"
    seed = StageStore.unpack(seed_path.read_bytes()).restrict_to_c([8, 9])
    limits = SearchLimits(
        max_rows=6, max_cols=11, mode="bounded",
        max_new_cols_per_step=2, keep_c_min_count=2,
    )
    want = run_bounded_search(seed, limits, engine="python")
    assert not want.aborted

    manifest_path = tmp_path / "bounded.json"
    for engine in ("python", "numba"):
        code = cli.main([
            "bounded-search", "--max-rows", "6", "--max-cols", "11",
            "--seed-archive", str(seed_path), "--seed-c", "8,9",
            "--max-new-cols", "2", "--keep-c-values", "2",
            "--engine", engine, "--manifest", str(manifest_path),
        ])
        assert code == 0
        out = capsys.readouterr().out
        assert out == want.to_tsv()
    manifest = json.loads(manifest_path.read_text())
    assert manifest["status"] == "completed"
    assert manifest["limits"]["seed_r"] == 4
    assert manifest["counts"] == {str(r): c for r, c in want.bounds.items()}


def test_bounded_search_seed_problems_are_reported(tmp_path, capsys):
    archive_dir = tmp_path / "stages"
    cli.main([
        "search", "--max-rows", "4", "--max-cols", "9",
        "--archive-dir", str(archive_dir), "--archive-rows", "4",
    ])
    capsys.readouterr()
    seed_path = archive_dir / "stage-r04.n1larc"

    assert cli.main([
        "bounded-search", "--max-rows", "6", "--max-cols", "11",
        "--seed-archive", str(seed_path), "--seed-c", "5",
    ]) == 2
    assert "no configurations" in capsys.readouterr().err

    assert cli.main([
        "bounded-search", "--max-rows", "6", "--max-cols", "11",
        "--seed-archive", str(tmp_path / "missing.n1larc"),
    ]) == 1
    assert "cannot read seed archive" in capsys.readouterr().err

    corrupt = tmp_path / "corrupt.n1larc"
    corrupt.write_bytes(b"XXXXXXXX" + bytes(16))
    assert cli.main([
        "bounded-search", "--max-rows", "6", "--max-cols", "11",
        "--seed-archive", str(corrupt),
    ]) == 1
    assert "cannot read seed archive" in capsys.readouterr().err
