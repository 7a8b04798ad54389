import json

import numpy as np
import pytest

from tspheat.cli import main
from tspheat.heatmap import parse_heatmap
from tspheat.instances import format_instance, generate_random, parse_instance
from tspheat.search import parse_tour


@pytest.fixture
def instance_file(tmp_path):
    path = tmp_path / "inst.txt"
    path.write_text(format_instance(generate_random(10, 3)))
    return str(path)


class TestGenerate:
    def test_writes_instance(self, tmp_path):
        out = tmp_path / "inst.txt"
        code = main(["generate", "--n", "8", "--seed", "5", "--out", str(out)])
        assert code == 0
        inst = parse_instance(out.read_text())
        assert inst.n == 8
        assert np.array_equal(inst.coords, generate_random(8, 5).coords)

    def test_rejects_bad_n(self, tmp_path, capsys):
        code = main(["generate", "--n", "2", "--out", str(tmp_path / "x.txt")])
        assert code == 2
        assert "error" in capsys.readouterr().err


class TestTrainHeatmap:
    def test_writes_heatmap_and_trace(self, instance_file, tmp_path):
        out = tmp_path / "heat.txt"
        trace = tmp_path / "trace.csv"
        code = main([
            "train-heatmap", "--instance", instance_file, "--steps", "40",
            "--seed", "3", "--out", str(out), "--trace-out", str(trace),
        ])
        assert code == 0
        heat = parse_heatmap(out.read_text())
        assert heat.shape == (10, 10)
        assert heat.sum() == pytest.approx(10.0, abs=1e-6)
        lines = trace.read_text().strip().splitlines()
        assert lines[0] == "step,total,row_penalty,self_loop,expected_length"
        assert len(lines) == 41


class TestSearchCommand:
    def test_search_from_heatmap_file(self, instance_file, tmp_path):
        heat_path = tmp_path / "heat.txt"
        main(["train-heatmap", "--instance", instance_file, "--steps", "60",
              "--seed", "3", "--out", str(heat_path)])
        tour_path = tmp_path / "tour.txt"
        code = main([
            "search", "--instance", instance_file, "--heatmap", str(heat_path),
            "--preset", "tsp20", "--rounds", "6", "--seed", "3",
            "--out", str(tour_path),
        ])
        assert code == 0
        tour, length = parse_tour(tour_path.read_text())
        assert sorted(tour.order.tolist()) == list(range(10))
        assert length > 0

    def test_requires_budget(self, instance_file, tmp_path, capsys):
        heat_path = tmp_path / "heat.txt"
        main(["train-heatmap", "--instance", instance_file, "--steps", "10",
              "--seed", "3", "--out", str(heat_path)])
        code = main([
            "search", "--instance", instance_file, "--heatmap", str(heat_path),
            "--preset", "tsp20", "--seed", "3", "--out", str(tmp_path / "t.txt"),
        ])
        assert code == 2


class TestSolve:
    def test_end_to_end_optimal(self, instance_file, tmp_path):
        tour_path = tmp_path / "tour.txt"
        svg_path = tmp_path / "tour.svg"
        code = main([
            "solve", "--instance", instance_file, "--preset", "tsp20",
            "--rounds", "10", "--seed", "3", "--out", str(tour_path),
            "--svg", str(svg_path),
        ])
        assert code == 0
        from tspheat.bench import held_karp_exact

        _, opt = held_karp_exact(generate_random(10, 3))
        _, length = parse_tour(tour_path.read_text())
        assert length == pytest.approx(opt, abs=1e-9)
        assert svg_path.read_text().count("<circle") == 10


class TestOracleAndBaseline:
    def test_oracle(self, instance_file, tmp_path):
        out = tmp_path / "opt.txt"
        assert main(["oracle", "--instance", instance_file, "--out", str(out)]) == 0
        tour, length = parse_tour(out.read_text())
        assert sorted(tour.order.tolist()) == list(range(10))

    def test_oracle_guard(self, tmp_path, capsys):
        big = tmp_path / "big.txt"
        big.write_text(format_instance(generate_random(19, 0)))
        assert main(["oracle", "--instance", str(big), "--out", str(tmp_path / "o.txt")]) == 2

    def test_baseline(self, instance_file, tmp_path):
        out = tmp_path / "base.txt"
        assert main(["baseline", "--instance", instance_file, "--out", str(out)]) == 0
        _, length = parse_tour(out.read_text())
        assert length > 0

    def test_missing_file(self, tmp_path):
        assert main(["oracle", "--instance", str(tmp_path / "nope.txt")]) == 2


class TestCoverageCommand:
    def test_csv_output(self, tmp_path):
        out = tmp_path / "cov.csv"
        code = main([
            "coverage", "--n", "10", "--count", "3", "--m", "4",
            "--steps", "60", "--seed", "0", "--out", str(out),
        ])
        assert code == 0
        lines = out.read_text().strip().splitlines()
        assert lines[0] == "instance,seed,M,eta,pi_size,fully_covered"
        assert len(lines) == 4


class TestBenchCommand:
    def test_json_output(self, tmp_path):
        out = tmp_path / "bench.json"
        code = main([
            "bench", "--n", "8", "--count", "2", "--preset", "tsp20",
            "--rounds", "3", "--steps", "60", "--format", "json",
            "--seed", "1", "--out", str(out),
        ])
        assert code == 0
        rows = json.loads(out.read_text())
        assert len(rows) == 4  # pipeline + baseline per instance
        methods = {r["method"] for r in rows}
        assert methods == {"pipeline", "nn+2opt"}
        for r in rows:
            assert r["gap_percent"] is not None and r["gap_percent"] >= -1e-9

    def test_csv_default(self, tmp_path):
        out = tmp_path / "bench.csv"
        code = main([
            "bench", "--n", "8", "--count", "1", "--preset", "tsp20",
            "--rounds", "3", "--steps", "60", "--seed", "1", "--out", str(out),
        ])
        assert code == 0
        lines = out.read_text().strip().splitlines()
        assert len(lines) == 3
