import csv

from backend.utils.BoundSweep import (get_csv_output_path, run_even_table, run_odd_limit_study,
                                      run_refinement_study)


def read_rows(path):
    with open(path, newline="") as file:
        return list(csv.DictReader(file))


def test_output_paths_are_numbered(tmp_path):
    first = get_csv_output_path("odd_limit", "k3", base_dir=tmp_path)
    first.write_text("")
    second = get_csv_output_path("odd_limit", "k3", base_dir=tmp_path)
    assert first.parent == tmp_path / "odd_limit"
    assert first.name.startswith("odd_limit_001_k3_")
    assert second.name.startswith("odd_limit_002_k3_")


def test_even_table(tmp_path, capsys):
    rows = read_rows(run_even_table([2, 4], base_dir=tmp_path))
    assert [row["bound_rational"] for row in rows] == ["2/3", "8/15"]
    assert all(float(row["abs_error"]) <= 1e-10 for row in rows)
    assert "k=4" in capsys.readouterr().out


def test_odd_limit_study(tmp_path):
    rows = read_rows(run_odd_limit_study([3], count=4, base_dir=tmp_path))
    assert len(rows) == 4
    p0 = [float(row["p0"]) for row in rows if row["feasible"] == "1"]
    assert all(b > a for a, b in zip(p0, p0[1:]))
    assert all(row["target_bound"] == "2/3" for row in rows)


def test_refinement_study(tmp_path):
    rows = read_rows(run_refinement_study([2], [6, 12], extent=6.0, base_dir=tmp_path))
    assert [int(row["count"]) for row in rows] == [6, 12]
    assert all(float(row["gap"]) >= -1e-9 for row in rows if row["status"] == "optimal")
