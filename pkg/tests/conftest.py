import numpy as np
import pytest

from cdpinn.linalg import SIGMA_X, SIGMA_Z
from cdpinn.net import default_layer_sizes, glorot_init
from cdpinn.problem import H2_DISTANCES, builtin_h2, make_problem


def random_hermitian(rng, dim, scale=1.0):
    m = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return scale * 0.5 * (m + m.conj().T)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def toy():
    """One qubit, sigma_Z -> sigma_X."""
    return make_problem(SIGMA_Z, SIGMA_X, label="toy")


@pytest.fixture(params=H2_DISTANCES, ids=lambda d: f"d{d}")
def h2(request):
    return builtin_h2(request.param)


@pytest.fixture
def h2_10():
    return builtin_h2(1.0)


@pytest.fixture
def small_params():
    """Narrow network with the two-qubit output head, cheap enough for finite differences."""
    return glorot_init(default_layer_sizes(2, hidden=(8, 8, 8)), seed=11)


# One pass/fail line per acceptance criterion, printed after the run.
ACCEPTANCE = {}


def record_criterion(number, title, passed, detail):
    ACCEPTANCE[number] = (title, passed, detail)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        title, passed, detail = ACCEPTANCE[number]
        terminalreporter.write_line(f"criterion {number} [{'PASS' if passed else 'FAIL'}] {title}: {detail}")
