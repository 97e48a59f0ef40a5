import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from ringfold import construct as cons

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

# rounded to five decimals
THETA3 = np.array(cons.GENERIC_SEED)
GAMMA3 = np.array(cons.GENERIC_GAMMA)
THETA5 = np.array(cons.STABLE_SEED)
GAMMA5 = np.array(cons.STABLE_GAMMA)


@pytest.fixture
def rng():
    return np.random.default_rng(20261016)


def random_state(rng, n=None, n_range=(3, 8)):
    n = n or int(rng.integers(*n_range, endpoint=True))
    return rng.uniform(-np.pi, np.pi, n), rng.uniform(0.2, 2.0, n)


def random_orthonormal_basis(rng, n):
    """Rows span 1-perp, drawn by QR of a random matrix against the ones vector."""
    M = np.column_stack([np.ones(n), rng.normal(size=(n, n - 1))])
    Q, _ = np.linalg.qr(M)
    return Q[:, 1:].T


_ACCEPTANCE: list[str] = []


class AcceptanceRecorder:
    def __call__(self, number: int, passed: bool, detail: str, seconds: float) -> None:
        line = f"ACCEPTANCE #{number}: {'PASS' if passed else 'FAIL'} ({seconds:.1f} s) {detail}"
        _ACCEPTANCE.append(line)
        print(line)


@pytest.fixture(scope="session")
def record_acceptance():
    return AcceptanceRecorder()


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_ACCEPTANCE, key=lambda s: int(s.split("#")[1].split(":")[0])):
            terminalreporter.write_line(line)
