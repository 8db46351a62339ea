import numpy as np
import pytest
from click.testing import CliRunner

from embedlens.cli import main
from embedlens.dataset import to_csv
from embedlens.session import load_session
from embedlens.synth import BLOB_PLANTED_VARIABLE, make_blob_dataset


@pytest.fixture(scope="module")
def workdir(tmp_path_factory):
    path = tmp_path_factory.mktemp("cli")
    ds, labels, held, _ = make_blob_dataset(n_per_blob=30, seed=23,
                                            held_out_per_blob=3)
    (path / "data.csv").write_text(to_csv(ds))
    new_lines = [",".join(ds.variables)]
    new_lines += [",".join(repr(float(v)) for v in row) for row in held]
    (path / "new.csv").write_text("\n".join(new_lines) + "\n")
    return path, labels


def _fit(path, out_name, runner, seed=9):
    return runner.invoke(main, [
        "fit", "--input", str(path / "data.csv"), "--preprocess", "center",
        "--neighbors", "8", "--epochs", "60", "--max-pcs", "6",
        "--seed", str(seed), "--out", str(path / out_name),
    ])


def test_fit_writes_session(workdir):
    path, _ = workdir
    runner = CliRunner()
    result = _fit(path, "s1.session", runner)
    assert result.exit_code == 0, result.output
    s = load_session((path / "s1.session").read_bytes())
    assert s.dataset.n_samples == 90


def test_fit_deterministic_bytes(workdir):
    path, _ = workdir
    runner = CliRunner()
    assert _fit(path, "d1.session", runner).exit_code == 0
    assert _fit(path, "d2.session", runner).exit_code == 0
    assert (path / "d1.session").read_bytes() == (path / "d2.session").read_bytes()


def test_compare_identical_groups_all_zero(workdir):
    path, _ = workdir
    runner = CliRunner()
    _fit(path, "c.session", runner)
    result = runner.invoke(main, [
        "compare", "--session", str(path / "c.session"),
        "--a", "0,1,2", "--b", "0,1,2",
        "--out", str(path / "zero.csv"),
    ])
    assert result.exit_code == 0, result.output
    lines = (path / "zero.csv").read_text().strip().split("\n")
    assert lines[0] == "variable,contribution"
    for line in lines[1:]:
        assert float(line.split(",")[1]) == 0.0


def test_compare_finds_planted_variable(workdir):
    path, labels = workdir
    runner = CliRunner()
    _fit(path, "p.session", runner)
    a = ",".join(str(i) for i in np.flatnonzero(labels == 0))
    b = ",".join(str(i) for i in np.flatnonzero(labels == 1))
    result = runner.invoke(main, [
        "compare", "--session", str(path / "p.session"),
        "--a", a, "--b", b, "--out", str(path / "ranked.csv"),
    ])
    assert result.exit_code == 0, result.output
    lines = (path / "ranked.csv").read_text().strip().split("\n")
    assert lines[1].split(",")[0] == f"var{BLOB_PLANTED_VARIABLE}"


def test_compare_index_file(workdir):
    path, _ = workdir
    runner = CliRunner()
    _fit(path, "f.session", runner)
    (path / "a.txt").write_text("0\n1\n2\n")
    result = runner.invoke(main, [
        "compare", "--session", str(path / "f.session"),
        "--a", f"@{path / 'a.txt'}", "--b", "3,4,5",
        "--out", str(path / "file.csv"),
    ])
    assert result.exit_code == 0, result.output


def test_plot_voronoi_deterministic_svg(workdir):
    path, _ = workdir
    runner = CliRunner()
    _fit(path, "v.session", runner)
    for name, spec in (("a.svg", "pc:0"), ("b.svg", "q:total"),
                       ("c.svg", "var:var3"), ("d.svg", "q:1")):
        result = runner.invoke(main, [
            "plot-voronoi", "--session", str(path / "v.session"),
            "--color", spec, "--out", str(path / name),
        ])
        assert result.exit_code == 0, result.output
        text = (path / name).read_text()
        assert text.startswith("<?xml")
        assert "<polygon" in text

    result = runner.invoke(main, [
        "plot-voronoi", "--session", str(path / "v.session"),
        "--color", "pc:0", "--out", str(path / "a2.svg"),
    ])
    assert result.exit_code == 0
    assert (path / "a.svg").read_text() == (path / "a2.svg").read_text()


def test_plot_voronoi_bad_color_spec(workdir):
    path, _ = workdir
    runner = CliRunner()
    _fit(path, "bad.session", runner)
    result = runner.invoke(main, [
        "plot-voronoi", "--session", str(path / "bad.session"),
        "--color", "rainbow", "--out", str(path / "x.svg"),
    ])
    assert result.exit_code != 0
    assert "InvalidParameter" in result.output


def test_transform_new_rows(workdir):
    path, _ = workdir
    runner = CliRunner()
    _fit(path, "t.session", runner)
    result = runner.invoke(main, [
        "transform", "--session", str(path / "t.session"),
        "--input", str(path / "new.csv"), "--out", str(path / "coords.csv"),
    ])
    assert result.exit_code == 0, result.output
    lines = (path / "coords.csv").read_text().strip().split("\n")
    assert lines[0] == "x,y"
    assert len(lines) == 10  # 9 held-out rows + header
    for line in lines[1:]:
        x, y = (float(v) for v in line.split(","))
        assert np.isfinite(x) and np.isfinite(y)


def test_cli_error_reports_code(workdir):
    path, _ = workdir
    runner = CliRunner()
    (path / "bad.csv").write_text("a,b\n1,2\n3,x\n5,6\n")
    result = runner.invoke(main, [
        "fit", "--input", str(path / "bad.csv"),
        "--out", str(path / "no.session"),
    ])
    assert result.exit_code != 0
    assert "NonNumericCell" in result.output
