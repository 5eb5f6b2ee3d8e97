import json
import math

import pytest

from symmspec.analysis import CheckStatus
from symmspec.cli import main

SQRT_PI = math.sqrt(math.pi)


@pytest.fixture
def files(tmp_path):
    (tmp_path / "disk.toml").write_text('kind = "disk"\nradius = 1.0\n')
    (tmp_path / "coarse.toml").write_text('kind = "ellipse"\nsemi_axes = [1.2, 0.8333]\n[mesh]\nh = 0.15\n')
    (tmp_path / "square_pi.toml").write_text(f'kind = "rectangle"\nside_lengths = [{SQRT_PI!r}, {SQRT_PI!r}]\n')
    (tmp_path / "bad.toml").write_text('kind = "disk"\nradius = "one"\n')
    return tmp_path


def _rows(path):
    return [ln.split(",") for ln in path.read_text().splitlines() if not ln.startswith("#")]


def test_spectrum_disk(files, capsys):
    out = files / "s.csv"
    assert main(["spectrum", "--domain", str(files / "disk.toml"), "--bc", "nonlocal",
                 "--k", "6", "--h", "0.05", "--out", str(out)]) == 0
    rows = _rows(out)
    assert rows[0] == ["index", "lambda", "parity", "odd_residual", "even_residual", "cluster"]
    assert float(rows[1][1]) == pytest.approx(3.390, rel=2e-3) and rows[1][2] == "odd"
    assert len(rows) == 7
    assert float(capsys.readouterr().out) == float(rows[1][1])
    assert "# h=0.05" in out.read_text()


def test_spectrum_neumann_zero(files):
    out = files / "n.json"
    assert main(["spectrum", "--domain", str(files / "coarse.toml"), "--bc", "neumann",
                 "--k", "1", "--out", str(out), "--format", "json"]) == 0
    d = json.loads(out.read_text())
    assert abs(d["entries"][0]["lambda"]) < 1e-8
    assert d["config"]["h"] == 0.15


def test_spectrum_deterministic(files):
    args = ["spectrum", "--domain", str(files / "coarse.toml"), "--k", "4"]
    main(args + ["--out", str(files / "a.csv")])
    main(args + ["--out", str(files / "a.csv").replace("a.csv", "b.csv")])
    a, b = (files / "a.csv").read_text(), (files / "b.csv").read_text()
    assert a.replace("a.csv", "b.csv") == b


@pytest.mark.parametrize("extra", [
    ["--domain", "bad.toml"],
    ["--domain", "missing.toml"],
    ["--domain", "disk.toml", "--k", "0"],
    ["--domain", "disk.toml", "--tol", "0.5"],
    ["--domain", "disk.toml", "--h", "-1"],
])
def test_spectrum_config_errors(files, extra, monkeypatch):
    monkeypatch.chdir(files)
    assert main(["spectrum", *extra, "--out", "x.csv"]) == 2
    assert not (files / "x.csv").exists()


def test_spectrum_solver_failure(files, monkeypatch):
    from symmspec import cli
    from symmspec.errors import NoConvergence

    def boom(*a, **k):
        raise NoConvergence(500)

    monkeypatch.setattr(cli, "smallest_eigenpairs", boom)
    out = files / "f.csv"
    assert main(["spectrum", "--domain", str(files / "coarse.toml"), "--out", str(out)]) == 3
    assert not out.exists()


def test_oracle(capsys):
    assert main(["oracle", "disk", "--problem", "p", "--count", "6"]) == 0
    rows = [ln.split(",") for ln in capsys.readouterr().out.splitlines() if not ln.startswith("#")]
    assert rows[0] == ["index", "value", "problem", "parity", "m", "n"]
    assert float(rows[1][1]) == pytest.approx(3.38996, abs=1e-5)
    assert float(rows[3][1]) == pytest.approx(5.78319, abs=1e-5)
    assert main(["oracle", "rect", "--a", "1", "--b", "1", "--problem", "neumann", "--count", "1"]) == 0
    rows = [ln.split(",") for ln in capsys.readouterr().out.splitlines() if not ln.startswith("#")]
    assert float(rows[1][1]) == 0.0


def test_oracle_bad_problem(capsys):
    assert main(["oracle", "disk", "--problem", "robin"]) == 2


def test_verify_square(files):
    out = files / "sq.json"
    assert main(["verify", "--domain", str(files / "square_pi.toml"), "--out", str(out)]) == 0
    d = json.loads(out.read_text())
    checks = {c["name"]: c for c in d["checks"]}
    assert checks["ball_max_p1"]["lhs"] == pytest.approx(math.pi, rel=2e-3)
    assert checks["ball_max_ratio"]["lhs"] == pytest.approx(0.5, rel=0.02)
    assert checks["ball_min_gap"]["lhs"] == pytest.approx(math.pi, rel=0.02)


def test_verify_family(files):
    out = files / "fam.csv"
    assert main(["verify", "--family", "ellipse", "--steps", "3", "--h", "0.1", "--out", str(out)]) == 0
    rows = _rows(out)
    assert len(rows) == 4 and all(r[-1] == "true" for r in rows[1:])
    assert len(list(files.glob("fam_ellipse_*.json"))) == 3


def test_verify_steps_precondition(files):
    assert main(["verify", "--family", "ellipse", "--steps", "1"]) == 2
    assert main(["verify"]) == 2


def test_verify_failing_check_exit_1(files, monkeypatch):
    from symmspec import cli

    real = cli.inequality_report

    def broken(*a, **k):
        r = real(*a, **k)
        r.checks[0].status = CheckStatus.FAIL
        return r

    monkeypatch.setattr(cli, "inequality_report", broken)
    assert main(["verify", "--domain", str(files / "coarse.toml"), "--out", str(files / "v.json")]) == 1


def test_greens_origin(files):
    from symmspec.oracles import green_dirichlet_disk

    out = files / "g.csv"
    assert main(["greens", "--source", "0,0", "--grid", "50", "--out", str(out)]) == 0
    rows = _rows(out)[1:]
    assert len(rows) > 1500
    for x1, x2, v in rows[::37]:
        assert float(v) == green_dirichlet_disk([float(x1), float(x2)], [0.0, 0.0])


def test_greens_symmetry(files):
    from symmspec.oracles import green_p_disk

    out = files / "g.csv"
    assert main(["greens", "--source", "0.2,0.3", "--grid", "50", "--out", str(out)]) == 0
    rows = [tuple(map(float, r)) for r in _rows(out)[1:]]
    inside = [r for r in rows if math.hypot(r[0], r[1]) < 0.99][::25][:20]
    assert len(inside) == 20
    for x1, x2, v in inside:
        assert abs(v - green_p_disk([0.2, 0.3], [x1, x2])) <= 1e-12


def test_greens_solve(files, capsys):
    out = files / "g.csv"
    assert main(["greens", "--source", "0.2,0.3", "--grid", "10", "--solve", "1", "--out", str(out)]) == 0
    rows = _rows(files / "g_solve.csv")
    assert rows[0] == ["x1", "x2", "green", "fem", "rel_deviation"]
    assert max(float(r[-1]) for r in rows[1:]) <= 0.02
    assert "max relative deviation" in capsys.readouterr().out


@pytest.mark.parametrize("src", ["1,0", "0.8,0.8", "abc", "0.1"])
def test_greens_bad_source(files, src):
    assert main(["greens", "--source", src, "--out", str(files / "g.csv")]) == 2
    assert not (files / "g.csv").exists()


def test_greens_bad_expression(files):
    assert main(["greens", "--source", "0,0", "--solve", "z + 1", "--out", str(files / "g.csv")]) == 2
