import numpy as np
import pytest

from cluster_bell.graphs import lc6_tilde_stabilizers
from cluster_bell.sim import build_named_state

_M = {
    "I": np.eye(2),
    "X": np.array([[0, 1], [1, 0]]),
    "Y": np.array([[0, -1j], [1j, 0]]),
    "Z": np.diag([1, -1]),
}


def dense(p):
    """Kronecker-product matrix of a PauliString, qubit 1 leftmost."""
    m = np.array([[1.0 + 0j]])
    for c in p.letters:
        m = np.kron(m, _M[c])
    return p.coefficient * m


def ket(bits):
    """Computational basis vector for a 0/1 sequence, qubit 1 first."""
    v = np.zeros(2 ** len(bits), dtype=complex)
    v[int("".join(str(b) for b in bits), 2)] = 1
    return v


def random_density(n, rng, rank=None):
    d = 2**n
    g = rng.normal(size=(d, rank or d)) + 1j * rng.normal(size=(d, rank or d))
    rho = g @ g.conj().T
    return rho / np.trace(rho)


@pytest.fixture(scope="session")
def stabs():
    return lc6_tilde_stabilizers()


@pytest.fixture(scope="session")
def lc6_tilde():
    return build_named_state("LC6_tilde")


@pytest.fixture(scope="session")
def he6_tilde():
    return build_named_state("HE6_tilde")
