import sys
from pathlib import Path

import numpy as np
import pytest
from hypothesis import settings

sys.path.insert(0, str(Path(__file__).parent))

settings.register_profile("ci", max_examples=200, deadline=None)
settings.load_profile("ci")


def random_density(rng, dim=3, trace=1.0):
    a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    rho = a @ a.conj().T
    rho = trace * rho / np.trace(rho).real
    # exactly Hermitian, so symmetrising maps leave entries bit-identical
    return (rho + rho.conj().T) / 2


def random_unitary(rng, dim=3):
    z = (rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def random_state(rng, dim=3):
    v = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return v / np.linalg.norm(v)


def random_branching(rng):
    r = rng.random((3, 3))
    r = r / r.sum(axis=1, keepdims=True)
    # exact row sums for the 1e-12 validation
    r[:, 2] = 1 - r[:, 0] - r[:, 1]
    return r


def random_channel_kraus(rng, dim=3, n=3):
    """Random trace-preserving Kraus set from an isometry."""
    v = random_unitary(rng, dim * n)[:, :dim]
    return [v[i * dim:(i + 1) * dim, :] for i in range(n)]


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split(".")[0].split()[-1])):
            terminalreporter.write_line(line)
