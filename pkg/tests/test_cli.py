import csv
import io
import json

import pytest

from cli.app import (
    EXIT_ERROR,
    EXIT_INFEASIBLE,
    EXIT_NOT_FOUND,
    EXIT_OK,
    EXIT_USAGE,
    INAPPLICABLE,
    INFEASIBLE,
    main,
    parse_sizes,
)


@pytest.fixture
def run(tmp_path, monkeypatch):
    monkeypatch.setenv("HOME", str(tmp_path / "home"))

    def invoke(*argv):
        out, err = io.StringIO(), io.StringIO()
        code = main(list(argv) + ["--store-dir", str(tmp_path / "store")], stdout=out, stderr=err)
        return code, out.getvalue(), err.getvalue()
    return invoke


def query(*extra, code="id", grid="square", height=2):
    return ["--code", code, "--grid", grid, "--height", str(height), *extra]


class TestSolve:
    def test_circular(self, run):
        code, out, _ = run("solve", *query("--size", "14", "--circular"))
        assert code == EXIT_OK
        assert out == "id square h=2 n=14: 12\n"

    def test_json(self, run):
        code, out, _ = run("solve", *query("--size", "7", "--circular", "--json"))
        record = json.loads(out)
        assert code == EXIT_OK
        assert record["answer"] == 6
        assert record["query"] == {"kind": "id", "grid": "square", "h": 2, "n": 7, "circular": True}
        assert record["stability"]["lambda"] == "6/7"

    def test_finite_range(self, run):
        code, out, _ = run("solve", *query("--size", "4..9", "--json", code="d", height=1))
        records = json.loads(out)
        assert code == EXIT_OK
        assert [r["answer"] for r in records] == [2, 2, 2, 3, 3, 3]

    def test_finite_json_has_vertex_counts(self, run):
        code, out, _ = run("solve", *query("--size", "12", "--json"))
        record = json.loads(out)
        assert code == EXIT_OK
        assert record["certificate"]["method"] == "source-sink"
        stability = record["stability"]
        assert 0 < stability["trimmed_vertices"] <= stability["raw_vertices"]
        assert "lambda" in stability or "dead_from" in stability

    def test_infeasible(self, run):
        code, out, _ = run("solve", *query("--size", "8", "--circular", grid="king"))
        assert code == EXIT_INFEASIBLE
        assert "infeasible" in out

    def test_toroidal_height_two(self, run):
        code, _, err = run("solve", *query("--size", "8", "--circular", grid="toroidal"))
        assert code == EXIT_USAGE
        assert "toroidal" in err

    def test_circular_size_two(self, run):
        code, _, _ = run("solve", *query("--size", "2", "--circular"))
        assert code == EXIT_USAGE

    def test_unknown_code(self, run):
        code, _, _ = run("solve", *query("--size", "6", code="xyz"))
        assert code == EXIT_USAGE

    def test_missing_size(self, run):
        code, _, _ = run("solve", *query())
        assert code == EXIT_USAGE


def test_density(run):
    code, out, _ = run("density", *query(grid="triangular"))
    assert code == EXIT_OK
    assert out.strip().endswith(": 1/2")


def test_density_json_has_certificate(run):
    code, out, _ = run("density", *query("--json"))
    record = json.loads(out)
    assert record["answer"] == "3/7"
    assert {"c", "p", "u", "lambda", "raw_vertices", "trimmed_vertices", "karp_matches"} <= set(record["stability"])
    assert record["stability"]["karp_matches"] is True


def test_pattern(run):
    code, out, _ = run("pattern", *query(height=1))
    lines = out.splitlines()
    assert code == EXIT_OK
    assert lines[0].startswith("# id square 1 ")
    assert lines[0].endswith("density=1/2")
    assert len(lines) == 2 and set(lines[1]) <= {"X", "."}


def test_pattern_json_has_stability(run):
    code, out, _ = run("pattern", *query("--json"))
    record = json.loads(out)
    assert code == EXIT_OK
    stability = record["stability"]
    assert {"c", "p", "u", "lambda", "raw_vertices", "trimmed_vertices"} <= set(stability)
    assert stability["lambda"] == record["answer"] == "3/7"
    assert stability["karp_matches"] is True


def test_pattern_json_infeasible_keeps_stability(run):
    code, out, _ = run("pattern", *query("--json", grid="king"))
    record = json.loads(out)
    assert code == EXIT_INFEASIBLE
    assert record["stability"]["outcome"] != "stable"
    assert record["stability"]["trimmed_vertices"] >= 0


def test_pattern_infeasible(run):
    code, _, _ = run("pattern", *query(grid="king"))
    assert code == EXIT_INFEASIBLE


def test_stability_json(run):
    code, out, _ = run("stability", *query("--json", code="ld", height=1))
    record = json.loads(out)
    assert code == EXIT_OK
    assert record["stability"]["outcome"] == "stable"
    assert record["answer"] == "2/5"
    assert list(record) == sorted(record)


def test_stability_not_found(run):
    code, _, err = run("stability", *query("--power-cap", "2"))
    assert code == EXIT_NOT_FOUND
    assert "2" in err


def test_closed_form(run):
    code, out, _ = run("closed-form", *query("--json"))
    record = json.loads(out)
    assert code == EXIT_OK
    assert record["lambda"] == "6/7"
    assert record["exceptional_sizes"][:4] == [8, 9, 15, 16]
    assert record["stability"]["lambda"] == "6/7"
    assert {"raw_vertices", "trimmed_vertices"} <= set(record["stability"])


def test_closed_form_finite_has_vertex_counts(run):
    code, out, _ = run("closed-form", *query("--finite", "--json", code="d", height=1))
    record = json.loads(out)
    assert code == EXIT_OK
    assert {"raw_vertices", "trimmed_vertices"} <= set(record["stability"])
    assert record["stability"]["trimmed_vertices"] <= record["stability"]["raw_vertices"]


def test_table(run):
    code, out, _ = run("table", "--max-height", "2")
    rows = {(r["grid"], r["h"], r["code"]): r["density"] for r in csv.DictReader(io.StringIO(out))}
    assert code == EXIT_OK
    assert rows[("square", "1", "id")] == "1/2"
    assert rows[("square", "2", "ld")] == "3/8"
    assert rows[("king", "2", "id")] == INFEASIBLE
    assert rows[("king", "1", "ld")] == INAPPLICABLE
    assert rows[("toroidal", "2", "ltd")] == INAPPLICABLE
    assert rows[("triangular", "2", "ltd")] == "1/3"


def test_export_graph(run, tmp_path):
    target = tmp_path / "graph.txt"
    code, out, _ = run("export-graph", *query("--output", str(target), height=1))
    assert code == EXIT_OK
    assert target.read_text().startswith("# id square h=1")
    assert str(target) in out


def test_in_memory_store_leaves_no_files(run, tmp_path):
    code, _, _ = run("density", *query("--in-memory-store", height=1))
    assert code == EXIT_OK
    assert not (tmp_path / "store").exists()


def test_parse_sizes():
    assert parse_sizes("5..7") == [5, 6, 7]
    assert parse_sizes("12") == [12]


def test_memory_cap_is_a_resource_error(run):
    code, _, err = run("density", *query("--in-memory-store", "--memory-cap", "40000"))
    assert code == EXIT_ERROR
    assert "cap: 40000" in err
