from fractions import Fraction

import numpy as np
import pytest

from orlicz_mpa.cli import (EXIT_CONFIG, EXIT_HYPOTHESIS, EXIT_NONCONVERGED, EXIT_OK,
                            SWEEP_COLUMNS, empirical_threshold, main, run_sweep, sweep_csv)
from orlicz_mpa.config import ConfigError, load_config, parse_config, resolve
from orlicz_mpa.nfunction import HypothesisFailure

SMALL = """
[problem]
builtin = desk-scalar
[grid]
n = 24
L = 4
[sweep]
lam_min = 10
lam_max = 100
points = {points}
"""


def write(tmp_path, text, name="run.ini"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def test_defaults():
    cfg = parse_config("[problem]\nbuiltin = desk-scalar\n")
    assert (cfg.grid.n, cfg.grid.L, cfg.sweep.points) == (64, 8.0, 7)
    assert cfg.lam == 10
    lams = cfg.sweep.lambdas()
    assert lams[0] == 10 and lams[-1] == pytest.approx(1000) and len(lams) == 7


def test_unknown_option_reports_line():
    with pytest.raises(ConfigError) as exc:
        parse_config("[problem]\nbuiltin = desk-scalar\n\n[grid]\nn = 32\nsize = 3\n")
    assert exc.value.line == 6


def test_unknown_section_reports_line():
    with pytest.raises(ConfigError) as exc:
        parse_config("[problem]\nbuiltin = desk-scalar\n[mesh]\nn = 2\n")
    assert exc.value.line == 3


def test_bad_value_reports_line():
    with pytest.raises(ConfigError) as exc:
        parse_config("[problem]\nbuiltin = desk-scalar\n[solver]\nmax_iters = many\n")
    assert exc.value.line == 4


def test_bad_expression_reports_line():
    with pytest.raises(ConfigError) as exc:
        parse_config("[problem]\nkind = scalar\nPhi1 = |t|^1.5/\nF = |t|^2.2\n")
    assert exc.value.line == 3


def test_unknown_builtin_and_override():
    with pytest.raises(ConfigError):
        parse_config("[problem]\nbuiltin = nope\n")
    with pytest.raises(ConfigError):
        parse_config("[problem]\nbuiltin = desk-scalar\nM34 = 1, 2\n")


def test_missing_file():
    with pytest.raises(FileNotFoundError):
        load_config("/nonexistent/run.ini")


def test_low_index_rejected():
    cfg = parse_config("[problem]\nkind = scalar\nPhi1 = t^0.5\nF = |t|^2.2\nk = 2.2\nr = 2.5\n")
    with pytest.raises(HypothesisFailure):
        resolve(cfg)


def test_expression_problem_resolves():
    cfg = parse_config("[problem]\nkind = scalar\nphi1 = |t|^(-0.5)\nF = |t|^2.2\n"
                       "k = 2.2\nr = 2.5\nmu = 2.2\nN = 2\n")
    res = resolve(cfg)
    assert res.indices[0].l == pytest.approx(1.5, abs=1e-6)
    assert res.spec.r[0] == pytest.approx(2.5)


def test_fraction_pairs():
    cfg = parse_config("[problem]\nkind = system\nPhi1 = t^3\nF = |t|^4+|s|^4\n"
                       "Theta = 6, 6\nr = 37/8, 37/8\n")
    consts = dict(cfg.problem.constants)
    assert consts["r"] == (Fraction(37, 8), Fraction(37, 8))


def test_builtin_resolution():
    res = resolve(parse_config("[problem]\nbuiltin = worked-example\n"))
    assert not res.gridded and not res.scalar
    assert res.declared_indices[0].l == 4
    res = resolve(parse_config("[problem]\nbuiltin = desk-system\n"))
    assert res.inner_radius == 2.0


def test_echo_round_trips():
    cfg = parse_config(SMALL.format(points=2))
    again = parse_config(cfg.echo())
    assert again.grid == cfg.grid and again.sweep == cfg.sweep and again.solver == cfg.solver


def test_single_point_sweep():
    cfg = parse_config(SMALL.format(points=1))
    assert list(cfg.sweep.lambdas()) == [10.0]
    rows = run_sweep(cfg, workers=1)
    assert len(rows) == 1 and rows[0]["converged"]


def test_sweep_csv_deterministic_and_parallel_safe():
    cfg = parse_config(SMALL.format(points=2))
    a = sweep_csv(run_sweep(cfg, workers=1))
    b = sweep_csv(run_sweep(cfg, workers=2))
    assert a == b
    head, *rows = a.splitlines()
    assert tuple(head.split(",")) == SWEEP_COLUMNS and len(rows) == 2


def test_threshold():
    rows = [{"lambda": 1.0, "sup_norm": 0.7}, {"lambda": 2.0, "sup_norm": 0.3},
            {"lambda": 3.0, "sup_norm": 0.2}]
    assert empirical_threshold(rows, 0.5) == 2.0
    assert empirical_threshold(rows, 0.1) is None


def test_cli_exit_codes(tmp_path, capsys):
    good = write(tmp_path, SMALL.format(points=1))
    assert main(["check", good]) == EXIT_OK
    bad = write(tmp_path, "[problem]\nkind = scalar\nPhi1 = t^0.5\nF = |t|^2.2\n", "bad.ini")
    assert main(["check", bad]) == EXIT_HYPOTHESIS
    assert main(["check", str(tmp_path / "missing.ini")]) == EXIT_CONFIG
    broken = write(tmp_path, "[problem]\nbuiltin = desk-scalar\n[grid]\nn = x\n", "broken.ini")
    assert main(["solve", broken]) == EXIT_CONFIG
    assert main(["cutoff-table", "cosine", "4"]) == EXIT_HYPOTHESIS
    assert main(["cutoff-table", "sine", "4", "--n", "5"]) == EXIT_OK
    capsys.readouterr()


def test_cli_solve_then_verify(tmp_path, capsys):
    cfg = write(tmp_path, SMALL.format(points=1) + "[output]\ndir = out\n")
    assert main(["solve", cfg]) == EXIT_OK
    sol = tmp_path / "out" / "solution_u.csv"
    assert sol.exists()
    assert main(["verify", cfg, str(sol)]) == EXIT_OK
    assert (tmp_path / "out" / "ladder_u.csv").exists()
    out = capsys.readouterr().out
    assert "scaled residual" in out


def test_cli_nonconverged_exit(tmp_path, capsys):
    cfg = write(tmp_path, SMALL.format(points=1) + "[solver]\nmax_iters = 3\n")
    assert main(["solve", cfg]) == EXIT_NONCONVERGED
    capsys.readouterr()


def test_cli_sweep_writes_outputs(tmp_path, capsys):
    cfg = write(tmp_path, SMALL.format(points=2))
    assert main(["sweep", cfg]) == EXIT_OK
    assert (tmp_path / "out" / "sweep.csv").read_text().startswith("lambda,level")
    assert "empirical threshold" in (tmp_path / "out" / "sweep_summary.txt").read_text()
    capsys.readouterr()


def test_nfun_report(tmp_path, capsys):
    cfg = write(tmp_path, "[problem]\nbuiltin = worked-example\n")
    assert main(["nfun-report", cfg]) == EXIT_OK
    assert "l=4" in capsys.readouterr().out
