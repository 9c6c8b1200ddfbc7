import numpy as np
import pytest

from hsdc import MatrixFamily


def random_hermitian(rng, n, complex_=False):
    a = rng.standard_normal((n, n))
    if complex_:
        a = a + 1j * rng.standard_normal((n, n))
    return (a + a.conj().T) / 2


def constructed_family(rng, n, m, complex_=False):
    """C_i = P* D_i P with a random nonsingular P and random real diagonals."""
    P = rng.standard_normal((n, n))
    if complex_:
        P = P + 1j * rng.standard_normal((n, n))
    D = rng.standard_normal((m, n))
    mats = [P.conj().T @ (d[:, None] * P) for d in D]
    return MatrixFamily.from_matrices([(c + c.conj().T) / 2 for c in mats]), P, D


def rank_one_perturbed(rng, F, size=0.1):
    """Add a random rank-one Hermitian term of relative Frobenius size ``size``
    to one member."""
    k = int(rng.integers(F.m))
    v = rng.standard_normal(F.n)
    if not F.is_real:
        v = v + 1j * rng.standard_normal(F.n)
    H = np.outer(v, v.conj())
    mats = list(F.members)
    mats[k] = mats[k] + size * np.linalg.norm(mats[k]) * H / np.linalg.norm(H)
    return MatrixFamily.from_matrices(mats)


def multiset_match(a, b):
    """Max relative mismatch of a and b after optimal pairing."""
    from scipy.optimize import linear_sum_assignment

    a, b = np.asarray(a, float), np.asarray(b, float)
    cost = np.abs(a[:, None] - b[None, :])
    r, c = linear_sum_assignment(cost)
    scale = max(np.max(np.abs(a)), np.max(np.abs(b)), 1e-300)
    return float(cost[r, c].max() / scale)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
