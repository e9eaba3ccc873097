import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "default", deadline=None, max_examples=40,
    suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture(scope="session")
def desk_solution():
    """Converged desk scalar solution at lambda = 10 (shared, ~5 s)."""
    from orlicz_mpa.config import parse_config, resolve
    from orlicz_mpa.mpa import run_mountain_pass

    cfg = parse_config("[problem]\nbuiltin = desk-scalar\n[solver]\nlam = 10\n")
    res = resolve(cfg)
    prob = res.problem(cfg.grid.build(), 10.0)
    return prob, res, run_mountain_pass(prob, cfg.solver)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


_ACCEPTANCE = {}


@pytest.fixture(scope="session")
def criterion():
    """Record one pass/fail line per acceptance criterion."""
    def record(number: int, passed: bool, detail: str):
        line = f"criterion {number:2d}: {'PASS' if passed else 'FAIL'}  {detail}"
        _ACCEPTANCE[number] = line
        print(line)
        return passed
    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for n in sorted(_ACCEPTANCE):
            terminalreporter.write_line(_ACCEPTANCE[n])
