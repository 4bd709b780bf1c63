"""Command-line harness: config parsing, commands and CSV output."""

import csv
import io
import math
import subprocess
import sys

import numpy as np
import pytest

from subfpt import __version__
from subfpt import cli
from subfpt.models import HalfLine, PartialAbsorb, cdf_sf_subdiffusive


def run_cli(tmp_path, command, config=None, *extra, name="out.csv"):
    argv = [command]
    if config is not None:
        cfg = tmp_path / "run.cfg"
        cfg.write_text(config, encoding="utf-8")
        argv += ["--config", str(cfg)]
    out = tmp_path / name
    rc = cli.main(argv + ["--out", str(out)] + list(extra))
    return rc, out


def read_csv(path):
    raw = path.read_bytes()
    text = raw.decode("utf-8")
    meta = [l for l in text.split("\n") if l.startswith("#")]
    body = [l for l in text.split("\n") if l and not l.startswith("#")]
    rows = list(csv.reader(io.StringIO("\n".join(body))))
    cols = rows[0]
    data = np.array([[float(v) for v in r] for r in rows[1:]])
    return meta, cols, data, raw


# -- config parsing ---------------------------------------------------------

def test_parse_full_config():
    cfg = cli.parse_config(
        "# comment\nalpha = 0.7\nN_grid = logspace(2, 4, 3)\nseed = 9\nrel_tol = 1e-10\n\n"
        "[model]\ntype = PartialAbsorb\nx0 = 2\nK_alpha = 1.5\nkappa_alpha = 0.3\n")
    assert cfg.alpha == 0.7 and cfg.seed == 9
    assert np.allclose(cfg.N_grid, [100, 1000, 10000])
    assert cfg.model == PartialAbsorb(2.0, 1.5, 0.3)
    assert cfg.accuracy.rel_tol == 1e-10


@pytest.mark.parametrize("text, line, fragment", [
    ("alpha = 0.5\nfoo = 1\n", 2, "unknown key 'foo'"),
    ("alpha = 0.5\nalpha = 0.6\n", 2, "duplicate key 'alpha'"),
    ("alpha = 1.5\n", 1, "alpha"),
    ("alpha = half\n", 1, "alpha"),
    ("[model]\ntype = HalfLine\nx0 = -1\nK_alpha = 1\n", 3, "x0"),
    ("[model]\ntype = HalfLine\nx0 = 1\nK_alpha = 1\nspeed = 3\n", 5, "speed"),
    ("[solver]\n", 1, "unknown section"),
    ("just text\n", 1, "key = value"),
    ("N = 5\nk = 7\n", 2, "k"),
    ("[model]\ntype = HalfLine\nx0 = 1\nK_alpha = 1\n[model]\n", 5, "one [model]"),
])
def test_config_errors_carry_line_numbers(text, line, fragment):
    with pytest.raises(cli.ConfigError) as exc:
        cli.parse_config(text, source="run.cfg")
    assert f"run.cfg:{line}:" in str(exc.value)
    assert fragment in str(exc.value)


def test_digest_ignores_output_path_only():
    a = cli.parse_config("alpha = 0.5\noutput_path = a.csv\n")
    b = cli.parse_config("alpha = 0.5\noutput_path = b.csv\n")
    c = cli.parse_config("alpha = 0.6\n")
    assert a.digest() == b.digest() != c.digest()


def test_invalid_config_writes_nothing(tmp_path, capsys):
    rc, out = run_cli(tmp_path, "survival", "t_grid = 1, 2\nfoo = 1\n")
    assert rc == 2 and not out.exists()
    assert "run.cfg:2: unknown key 'foo'" in capsys.readouterr().err
    assert list(tmp_path.iterdir()) == [tmp_path / "run.cfg"]


def test_missing_config_file(tmp_path):
    assert cli.main(["survival", "--config", str(tmp_path / "nope.cfg")]) == 2


def test_bad_threads(tmp_path):
    rc, out = run_cli(tmp_path, "survival", None, "--threads", "0")
    assert rc == 2 and not out.exists()


def test_unsupported_model_reported(tmp_path, capsys):
    rc, out = run_cli(tmp_path, "survival",
                      "[model]\ntype = NarrowEscapeSphere\nL = 1\nK_alpha = 1\neps = 0.2\n")
    assert rc == 3 and not out.exists()
    assert "survival" in capsys.readouterr().err
    rc, out = run_cli(tmp_path, "msd-check", "[model]\ntype = HalfLine\nx0 = 1\nK_alpha = 1\n")
    assert rc == 3 and not out.exists()


# -- CSV format -------------------------------------------------------------

def test_csv_header_and_format(tmp_path):
    rc, out = run_cli(tmp_path, "survival", "t_grid = 0.1, 1, 10\nseed = 5\n")
    assert rc == 0
    meta, cols, data, raw = read_csv(out)
    assert b"\r" not in raw and raw.endswith(b"\n")
    assert meta[0] == f"# subfpt {__version__}"
    assert "# schema: survival/1" in meta
    assert "# seed: 5" in meta
    digest = cli.parse_config("t_grid = 0.1, 1, 10\nseed = 5\n").digest()
    assert f"# config_sha256: {digest}" in meta
    assert cols[:3] == ["t", "survival", "cdf"]
    line = [l for l in raw.decode().split("\n") if l.startswith("0.1")][0]
    for field in line.split(",")[1:]:
        assert float(repr(float(field))) == float(field)
        assert float("%.17g" % float(field)) == float(field)
    assert cli._fmt(0.1) == "0.10000000000000001"


def test_stdout_output(capsys):
    assert cli.main(["asymptotics"]) == 0
    assert capsys.readouterr().out.startswith(f"# subfpt {__version__}\n")


def test_module_entry_point(tmp_path):
    out = tmp_path / "a.csv"
    r = subprocess.run([sys.executable, "-m", "subfpt", "asymptotics", "--out", str(out)],
                       capture_output=True, text=True)
    assert r.returncode == 0 and out.exists()


# -- commands ---------------------------------------------------------------

def test_survival_dual_path(tmp_path):
    rc, out = run_cli(tmp_path, "survival", "t_grid = logspace(-2, 2, 9)\n")
    assert rc == 0
    _, cols, d, _ = read_csv(out)
    assert "survival_closed_form" in cols
    s, c, sc = d[:, 1], d[:, 2], d[:, cols.index("survival_closed_form")]
    assert np.max(np.abs(s - sc)) < 1e-9
    assert np.allclose(s + c, 1.0, atol=1e-15)


def test_survival_other_model(tmp_path):
    rc, out = run_cli(tmp_path, "survival", "alpha = 0.8\nt_grid = 0.5, 2\n[model]\n"
                      "type = DriftInterval\nx0 = 0.3\nL0 = 1\nK_alpha = 1\nV_alpha = 1\n")
    assert rc == 0
    _, cols, d, _ = read_csv(out)
    assert "survival_closed_form" not in cols
    from subfpt.models import DriftInterval
    m = DriftInterval(0.3, 1.0, 1.0, 1.0)
    assert d[1, 1] == cdf_sf_subdiffusive(m, 0.8, 2.0)[1]


def test_asymptotics_alpha_one_identity(tmp_path):
    rc, out = run_cli(tmp_path, "asymptotics", "N_grid = 100, 10000\n", "--alpha", "1")
    assert rc == 0
    _, cols, d, _ = read_csv(out)
    row = dict(zip(cols, d[0]))
    assert (row["A"], row["p"], row["C"], row["beta"]) == (row["A1"], row["p1"], row["C1"], 1.0)
    assert row["N_min"] == 3.0


def test_asymptotics_half(tmp_path):
    rc, out = run_cli(tmp_path, "asymptotics", "N_grid = 1e5\nscheme = loglog\n")
    _, cols, d, _ = read_csv(out)
    row = dict(zip(cols, d[0]))
    assert row["beta"] == pytest.approx(1 / 3) and row["p"] == pytest.approx(1 / 6)
    assert row["C"] == pytest.approx(row["t_alpha"] ** row["beta"], rel=1e-14)
    assert row["N_min"] == 6.0


def test_sample_deterministic_and_thread_independent(tmp_path):
    conf = "N = 50\nk = 2\nreps = 2500\nseed = 3\n"
    _, a = run_cli(tmp_path, "sample", conf, "--threads", "1", name="a.csv")
    _, b = run_cli(tmp_path, "sample", conf, "--threads", "3", name="b.csv")
    _, c = run_cli(tmp_path, "sample", conf, "--seed", "4", name="c.csv")
    assert a.read_bytes() == b.read_bytes()
    assert a.read_bytes() != c.read_bytes()
    _, cols, d, _ = read_csv(a)
    assert cols == ["replication", "value"] and d.shape == (2500, 2)
    assert np.all(d[:, 1] > 0)


def test_fig2_left_default(tmp_path):
    rc, out = run_cli(tmp_path, "fig2-left")
    assert rc == 0
    _, cols, d, raw = read_csv(out)
    assert cols == ["N", "E_TN_exact", "err_leading", "err_lambert", "err_loglog"]
    row = d[d[:, 0] == 1e5][0]
    assert row[3] < row[2]
    _, again = run_cli(tmp_path, "fig2-left", None, "--out", str(tmp_path / "again.csv"),
                       name="unused.csv")
    assert (tmp_path / "again.csv").read_bytes() == raw


def test_fig2_left_alpha_one(tmp_path):
    rc, out = run_cli(tmp_path, "fig2-left", "N_grid = 1e2, 1e4, 1e6\n", "--alpha", "1")
    assert rc == 0
    _, _, d, _ = read_csv(out)
    assert np.all(np.diff(d[:, 2]) < 0)


def test_fig2_right_default(tmp_path):
    rc, out = run_cli(tmp_path, "fig2-right")
    assert rc == 0
    meta, cols, d, _ = read_csv(out)
    assert cols == ["x", "density_N100", "density_N1000", "density_N100000", "gumbel_density"]
    x = d[:, 0]
    assert x[0] == -6.0 and x[-1] == 3.0
    assert np.allclose(d[:, 4], np.exp(x - np.exp(x)), rtol=1e-14, atol=0)
    sups = [np.max(np.abs(d[:, j] - d[:, 4])) for j in (1, 2, 3)]
    assert sups[0] > sups[1] > sups[2]
    assert any("sup" in m for m in meta)


def test_msd_check_ratio(tmp_path):
    rc, out = run_cli(tmp_path, "msd-check", "t_grid = 1\nn_paths = 100000\nseed = 1\n")
    assert rc == 0
    _, cols, d, _ = read_csv(out)
    row = dict(zip(cols, d[0]))
    assert row["MSD_theory"] == pytest.approx(2.0 / math.gamma(1.5), rel=1e-15)
    assert 0.98 <= row["ratio"] <= 1.02
