import os
import tempfile

import numpy as np
import pytest

# keep fiducial caches out of the user's home during tests
os.environ.setdefault("ESIC_CACHE_DIR", tempfile.mkdtemp(prefix="esic-test-cache-"))

from esic import states  # noqa: E402

PAULI = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]]),
    "Z": np.diag([1.0, -1.0]).astype(complex),
}


@pytest.fixture
def rng():
    return np.random.default_rng(20180420)


@pytest.fixture
def bell():
    return states.max_entangled(2)


def random_unitary(d, rng):
    z = (rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def random_mixed(d, rng, rank=None):
    g = states.complex_gaussian(rng, (d, rank or d))
    m = g @ g.conj().T
    return m / np.trace(m).real


def random_product(dims, rng, pure=False):
    da, db = dims
    if pure:
        a = states.pure_density(states.haar_random_pure(da, rng)).matrix
        b = states.pure_density(states.haar_random_pure(db, rng)).matrix
    else:
        a = random_mixed(da, rng, 1 + int(rng.integers(da)))
        b = random_mixed(db, rng, 1 + int(rng.integers(db)))
    return np.kron(a, b)


_ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def acceptance_log():
    """Collects one PASS/FAIL line per acceptance criterion for the run summary."""
    return _ACCEPTANCE_LINES


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
