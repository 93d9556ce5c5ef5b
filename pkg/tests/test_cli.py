"""Tests for the command-line entry point."""
import json

import pytest

from main import EXIT_ALGORITHM_ERROR, EXIT_OK, EXIT_USAGE, main


@pytest.fixture(autouse=True)
def clean_environment(monkeypatch, mocker):
    """Keep a developer's .env and Sentry settings out of CLI runs."""
    mocker.patch("main.load_dotenv")
    monkeypatch.delenv("DATABASE_PATH", raising=False)
    monkeypatch.delenv("SENTRY_DSN", raising=False)


def test_generate_is_deterministic(tmp_path):
    """Test the same seed writes the same graph file."""
    first, second = tmp_path / "a.graph", tmp_path / "b.graph"
    args = ["generate", "--n", "12", "--p", "0.3", "--seed", "5"]
    assert main(args + ["--output", str(first)]) == EXIT_OK
    assert main(args + ["--output", str(second)]) == EXIT_OK
    assert first.read_text() == second.read_text()
    assert "p 12 " in first.read_text()


def test_generate_rejects_bad_probability(capsys):
    """Test an edge probability above 1 is a usage error."""
    assert main(["generate", "--n", "5", "--p", "1.5"]) == EXIT_USAGE


def test_run_ksp_on_example(example_path, tmp_path):
    """Test a verified run exits 0 and writes report and distances."""
    report_path = tmp_path / "report.json"
    csv_path = tmp_path / "dist.csv"
    code = main([
        "run", example_path, "ksp", "--sources", "a,b", "--h", "2",
        "--report", str(report_path), "--distances", str(csv_path),
    ])
    assert code == EXIT_OK

    report = json.loads(report_path.read_text())
    assert report["verdict"] == "exact"
    assert report["blocker_set"] == [1]
    assert report["config"]["sources"] == [0, 1]
    assert "1,0,inf" in csv_path.read_text()


def test_run_blocker_report(example_path, tmp_path):
    """Test the blocker report lists b."""
    report_path = tmp_path / "report.json"
    assert main(["run", example_path, "blocker", "--h", "2", "--report", str(report_path)]) == EXIT_OK
    assert json.loads(report_path.read_text())["blocker_set"] == [1]


def test_run_distances_to_stdout(example_path, capsys):
    """Test '-' streams the distance CSV to stdout."""
    assert main(["run", example_path, "apsp", "--distances", "-"]) == EXIT_OK
    out = capsys.readouterr().out
    assert out.startswith("source,target,distance\n")
    assert "0,2,3" in out


def test_epsilon_too_small_is_algorithm_error(tmp_path):
    """Test epsilon <= 3/n exits with the algorithm error code."""
    graph_path = tmp_path / "g.graph"
    assert main(["generate", "--n", "40", "--seed", "1", "--output", str(graph_path)]) == EXIT_OK
    assert main(["run", str(graph_path), "approx", "--epsilon", "0.01"]) == EXIT_ALGORITHM_ERROR


@pytest.mark.parametrize("argv", [
    ["run", "{graph}", "ksp", "--sources", "0,9"],
    ["run", "{graph}", "ksp", "--sources", "x!"],
    ["run", "{graph}", "dijkstra"],
    ["run", "{graph}", "approx", "--epsilon", "-1"],
    ["run", "{graph}", "csssp", "--h", "0"],
    ["run", "missing.graph", "ksp"],
    ["bench", "--algorithm", "floyd", "--sizes", "4"],
    ["bench", "--algorithm", "ksp", "--sizes", "4,x"],
    ["history"],
])
def test_usage_errors(example_path, argv):
    """Test bad input exits with the usage code."""
    argv = [example_path if a == "{graph}" else a for a in argv]
    assert main(argv) == EXIT_USAGE


def test_parser_errors_exit_with_usage_code():
    """Test argparse failures use the usage code too."""
    with pytest.raises(SystemExit) as exc_info:
        main(["run"])
    assert exc_info.value.code == EXIT_USAGE


def test_malformed_graph_file(tmp_path):
    """Test a graph file with a bad line is a usage error."""
    bad = tmp_path / "bad.graph"
    bad.write_text("p 2 1 1 nn\ne 0 one 3\n")
    assert main(["run", str(bad), "ksp"]) == EXIT_USAGE


def test_bench_writes_csv(tmp_path):
    """Test bench writes one total row per size."""
    out = tmp_path / "bench.csv"
    assert main(["bench", "--algorithm", "ksp", "--sizes", "4,6", "--output", str(out)]) == EXIT_OK
    lines = out.read_text().splitlines()
    assert lines[0].startswith("algorithm,n,")
    assert sum(1 for line in lines if ",total," in line) == 2


def test_history_lists_stored_runs(example_path, tmp_path, capsys):
    """Test runs saved with --db show up in history."""
    db = str(tmp_path / "results.duckdb")
    assert main(["run", example_path, "csssp", "--h", "2", "--db", db]) == EXIT_OK
    assert main(["run", example_path, "ksp", "--h", "2", "--db", db]) == EXIT_OK
    capsys.readouterr()

    assert main(["history", "--db", db, "--algorithm", "csssp"]) == EXIT_OK
    lines = capsys.readouterr().out.splitlines()
    assert len(lines) == 1
    assert json.loads(lines[0])["algorithm"] == "csssp"


def test_database_path_from_environment(example_path, tmp_path, monkeypatch, capsys):
    """Test DATABASE_PATH is used when --db is absent."""
    monkeypatch.setenv("DATABASE_PATH", str(tmp_path / "env.duckdb"))
    assert main(["run", example_path, "csssp", "--h", "2"]) == EXIT_OK
    capsys.readouterr()
    assert main(["history"]) == EXIT_OK
    assert len(capsys.readouterr().out.splitlines()) == 1
