import numpy as np
import pytest

from contact_duct.duct import WallPerturbation
from contact_duct.farfield import LeftState, solve_farfield
from contact_duct.gas import GasConstants
from contact_duct.grid import build_grid
from contact_duct.picard import run

REF_LEFT = dict(u_top=0.5, u_bot=0.3, p=1.0, rho_top=1.0, rho_bot=1.2)


@pytest.fixture(scope="session")
def gc():
    return GasConstants(1.4)


@pytest.fixture(scope="session")
def left():
    return LeftState(**REF_LEFT)


@pytest.fixture(scope="session")
def ff_flat(left, gc):
    return solve_farfield(left, 0.0, 0.0, gc)


@pytest.fixture(scope="session")
def ff_ref(left, gc):
    return solve_farfield(left, 0.01, 0.0, gc)


@pytest.fixture(scope="session")
def wp_ref():
    return WallPerturbation.bump_family(0.01, 0.0, 0.005, 0.0, sigma=0.015)


@pytest.fixture(scope="session")
def grid_small(ff_ref):
    return build_grid(10.0, 64, 8, 8, ff_ref)


@pytest.fixture(scope="session")
def ref_run(wp_ref, ff_ref, grid_small, gc):
    return run(wp_ref, ff_ref, grid_small, gc)


def bisect(f, a, b, tol=1e-15, maxit=400):
    fa = f(a)
    for _ in range(maxit):
        m = 0.5 * (a + b)
        fm = f(m)
        if fm == 0 or (b - a) < tol * max(1.0, abs(m)):
            return m
        if (fm > 0) == (fa > 0):
            a, fa = m, fm
        else:
            b = m
    return 0.5 * (a + b)


def rng(seed=0):
    return np.random.default_rng(seed)


# one line per acceptance criterion, printed after the run
ACCEPTANCE_LINES: dict[int, str] = {}


def record_criterion(number: int, title: str, passed: bool, detail: str) -> None:
    ACCEPTANCE_LINES[number] = f"criterion {number:2d} [{'PASS' if passed else 'FAIL'}] {title}: {detail}"
    print(ACCEPTANCE_LINES[number])


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[k])
