from fractions import Fraction

import numpy as np
import pytest

from hsdc import MatrixFamily, corpus
from hsdc.core import svd_rank
from hsdc.errors import IdenticallyZeroMatrix, ZeroPivot
from hsdc.poly import GaussRational, MultiPoly, PolyMatrix
from hsdc.schmudgen import (
    ensure_nonzero_pivot,
    eval_pencil,
    initial_state,
    is_valid_witness,
    max_rank_witness,
    numeric_max_rank,
    pencil_from_family,
    schmudgen_run,
    schmudgen_step,
)


def _random_integer_family(rng, n, m, kind):
    mats = []
    if kind == "lowrank":
        r = int(rng.integers(1, n))
        B = rng.integers(-2, 3, (r, n))
    for _ in range(m):
        if kind == "lowrank":
            D = np.diag(rng.integers(-3, 4, r))
            c = B.T @ D @ B
        elif kind == "complex":
            a = rng.integers(-3, 4, (n, n)) + 1j * rng.integers(-3, 4, (n, n))
            c = a + a.conj().T
        else:
            a = rng.integers(-3, 4, (n, n))
            c = a + a.T
            if kind == "hollow":
                np.fill_diagonal(c, 0)
        mats.append(np.asarray(c, dtype=complex if kind == "complex" else float))
    return MatrixFamily.from_matrices(mats)


def _pencil_cases():
    rng = np.random.default_rng(2024)
    kinds = ["full", "lowrank", "hollow", "complex"]
    cases = []
    for t in range(50):
        n = int(rng.integers(2, 7))
        m = int(rng.integers(1, 5))
        if n >= 5:
            m = min(m, 3)
        cases.append(_random_integer_family(rng, n, m, kinds[t % 4]))
    cases.append(corpus.family("integer_triple_noncommuting"))
    cases.append(corpus.family("integer_triple_with_kernel"))
    return cases


CASES = _pencil_cases()


def _conj_t(M):
    return np.array([[v.conjugate() for v in row] for row in M], dtype=object).T


def _check_exact(trace, point):
    n = trace.n
    C = trace.pencil(point)
    Xm, Xp = trace.x_minus(point), trace.x_plus(point)
    D = Xm.dot(C).dot(_conj_t(Xm))
    ds = trace.d_values(point)
    b2 = trace.b_value(point) ** 2
    P, Q = Xp.dot(Xm), Xm.dot(Xp)
    for i in range(n):
        for j in range(n):
            assert D[i, j] == (ds[i] if i == j else 0)
            assert P[i, j] == (b2 if i == j else 0)
            assert Q[i, j] == (b2 if i == j else 0)


@pytest.mark.parametrize("idx", range(len(CASES)))
def test_schmudgen_identities(idx):
    """X_- C X_-* = diag(d) and X_+ X_- = X_- X_+ = b^2 I, exactly, at 20
    random rational points (integer pencils stay exact)."""
    F = CASES[idx]
    trace = schmudgen_run(pencil_from_family(F))
    assert trace.exact
    rng = np.random.default_rng(idx)
    for _ in range(20):
        point = [Fraction(float(v)).limit_denominator(64) for v in rng.uniform(-2, 2, F.m)]
        _check_exact(trace, point)


@pytest.mark.parametrize("seed", range(10))
def test_schmudgen_identities_float_pencil(seed):
    rng = np.random.default_rng(seed)
    n, m = int(rng.integers(2, 5)), int(rng.integers(1, 4))
    mats = []
    for _ in range(m):
        a = rng.standard_normal((n, n)) + (1j * rng.standard_normal((n, n)) if seed % 2 else 0)
        mats.append(a + a.conj().T)
    trace = schmudgen_run(pencil_from_family(MatrixFamily.from_matrices(mats)))
    assert not trace.exact and trace.max_rank == n
    for _ in range(20):
        point = list(rng.uniform(-1, 1, m))
        C = eval_pencil(trace.pencil, point)
        Xm = np.array(trace.x_minus(point), dtype=complex)
        Xp = np.array(trace.x_plus(point), dtype=complex)
        d = np.array([complex(v) for v in trace.d_values(point)])
        b2 = complex(trace.b_value(point)) ** 2
        scale = np.linalg.norm(Xm) ** 2 * np.linalg.norm(C)
        assert np.linalg.norm(Xm @ C @ Xm.conj().T - np.diag(d)) <= 1e-8 * scale
        ref = np.linalg.norm(Xp) * np.linalg.norm(Xm)
        assert np.linalg.norm(Xp @ Xm - b2 * np.eye(n)) <= 1e-8 * ref


@pytest.mark.parametrize("idx", range(len(CASES)))
def test_d_formulas_and_divisibility(idx):
    trace = schmudgen_run(pencil_from_family(CASES[idx]))
    K = trace.k
    for j in range(K):
        expect = trace.alphas[j] ** 3
        for t in range(j + 1, K):
            expect = expect * trace.alphas[t] ** 2
        assert trace.ds[j] == expect
    assert trace.b == _product(trace.alphas, trace.nvars)
    for t in range(K - 1):
        assert trace.alphas[t].divides(trace.alphas[t + 1])
        if trace.alphas[t + 1].degree <= 12:
            # expanded division leaves no remainder
            q, r = trace.alphas[t + 1].expand().divmod(trace.alphas[t].expand())
            assert r.is_zero()
    # identically zero entries are trailing
    flags = trace.zero_flags
    assert flags == sorted(flags)


def _product(alphas, m):
    from hsdc.poly import FactoredPoly

    out = FactoredPoly.one(m)
    for a in alphas:
        out = out * a
    return out


@pytest.mark.parametrize("idx", range(len(CASES)))
def test_rank_bounds_and_sampling(idx):
    F = CASES[idx]
    trace = schmudgen_run(pencil_from_family(F))
    r, lam = max_rank_witness(trace)
    stacked_rank, _ = svd_rank(np.vstack(F.members), 1e-10)
    assert r <= stacked_rank
    rng = np.random.default_rng(100 + idx)
    stack = F.stack()
    for _ in range(200):
        C = np.tensordot(rng.standard_normal(F.m), stack, axes=1)
        assert svd_rank(C, 1e-10)[0] <= r
    assert svd_rank(np.tensordot(lam, stack, axes=1), 1e-10)[0] == r
    assert is_valid_witness(trace, lam, r)
    # ordering: nonzero d_j forces nonzero d_t for t < j
    point = list(rng.uniform(-1, 1, F.m))
    vals = [abs(complex(v)) for v in trace.d_values(point)]
    for j in range(len(vals)):
        if vals[j] > 0:
            assert all(v > 0 for v in vals[:j])
    assert numeric_max_rank(F)[0] == r


def _naive(C: PolyMatrix):
    """Undivided elimination: returns the pivots and the final diagonal."""
    n = C.rows
    T = [row[:] for row in C.entries]
    m = C.nvars
    zero = MultiPoly.zero(m)
    alphas = []
    for k in range(n):
        block_diag = all(T[i][j].is_zero() for i in range(k, n) for j in range(k, n) if i != j)
        if block_diag:
            break
        a = T[k][k]
        if a.is_zero():
            return None
        alphas.append(a)
        S = [[zero for _ in range(n)] for _ in range(n)]
        for i in range(n):
            S[i][i] = a
        for i in range(k + 1, n):
            S[i][k] = -T[k][i].conj()
        Sm = PolyMatrix(S, m)
        T = (Sm @ PolyMatrix(T, m) @ Sm.conj_transpose()).entries
    return alphas, [T[i][i] for i in range(n)]


@pytest.mark.parametrize("idx", range(20))
def test_against_naive_expansion(idx):
    rng = np.random.default_rng(500 + idx)
    while True:
        n = int(rng.integers(2, 5))
        m = int(rng.integers(1, 4))
        F = _random_integer_family(rng, n, m, "complex" if idx % 3 == 0 else "full")
        Pm = pencil_from_family(F)
        ref = _naive(Pm)
        trace = schmudgen_run(Pm)
        # the naive oracle does not model pivot moves
        if ref is not None and not trace.pivot_moves:
            break
    alphas, diag = ref
    assert [a.expand() for a in trace.alphas] == alphas
    assert [d.expand() for d in trace.ds] == diag


def test_pencil_entries_of_worked_triples():
    x1 = MultiPoly.variable(0, 3)
    x3 = MultiPoly.variable(2, 3)
    P3 = pencil_from_family(corpus.family("integer_triple_noncommuting"))
    assert P3[0, 0] == x1 - x3
    P4 = pencil_from_family(corpus.family("integer_triple_with_kernel"))
    assert P4[0, 0] == -x1 - x3
    assert P3.is_hermitian() and P4.is_hermitian()


def test_eval_pencil_at_integer_point():
    P3 = pencil_from_family(corpus.family("integer_triple_noncommuting"))
    C = eval_pencil(P3, [2, 0, 3])
    assert np.array_equal(C, [[-1, -3, 4], [-3, -3, 12], [4, 12, -13]])
    assert not np.any(eval_pencil(P3, [0, 0, 0]))


def test_eval_pencil_matches_direct_sum(rng):
    F = _random_integer_family(rng, 4, 3, "complex")
    lam = rng.standard_normal(3)
    assert np.allclose(eval_pencil(pencil_from_family(F), lam), np.tensordot(lam, F.stack(), axes=1))


def test_first_stage_column_of_noncommuting_triple():
    P3 = pencil_from_family(corpus.family("integer_triple_noncommuting"))
    state, cur = initial_state(P3)
    state, _ = schmudgen_step(state, cur)
    rng = np.random.default_rng(0)
    for _ in range(5):
        x, y, z = (Fraction(int(v)) for v in rng.integers(-9, 10, 3))
        S = state._stage_matrix(state.events[0], (x, y, z), -1)
        assert [S[i][0] for i in range(3)] == [x - z, 3 * z - 3 * x, x - 2 * z]


def test_noncommuting_triple_trace():
    trace = schmudgen_run(pencil_from_family(corpus.family("integer_triple_noncommuting")))
    assert trace.max_rank == 3
    assert trace.alphas[1]((2, 0, 3)) == 6
    assert trace.d_values((2, 0, 3))[2] == 108
    assert is_valid_witness(trace, (2, 0, 3))
    r, lam = max_rank_witness(trace)
    assert r == 3 and is_valid_witness(trace, lam)


def test_kernel_triple_second_step_vanishes():
    trace = schmudgen_run(pencil_from_family(corpus.family("integer_triple_with_kernel")))
    assert trace.max_rank == 2
    assert trace.zero_flags == [False, False, True]
    assert trace.trailing.block[0, 0].is_zero()


def test_swap_pivot():
    m = 1
    x = MultiPoly.variable(0, m)
    z = MultiPoly.zero(m)
    one = MultiPoly.constant(1, m)
    Pm = PolyMatrix([[z, one], [one, x]], m)
    P2, moves = ensure_nonzero_pivot(Pm)
    assert moves[0].kind == "swap"
    assert P2[0, 0] == x


def test_add_pivot_on_hollow_pencil():
    m = 1
    x = MultiPoly.variable(0, m)
    z = MultiPoly.zero(m)
    Pm = PolyMatrix([[z, x], [x, z]], m)
    P2, moves = ensure_nonzero_pivot(Pm)
    assert moves[0].kind == "add"
    assert P2[0, 0] == x.scale(2)
    E = PolyMatrix.from_constants(moves[0].matrix(2), m)
    assert E @ Pm @ E.conj_transpose() == P2


def test_complex_hollow_pencil_uses_imaginary_factor():
    m = 1
    x = MultiPoly.variable(0, m)
    z = MultiPoly.zero(m)
    Pm = PolyMatrix([[z, x.scale(GaussRational(0, 1))], [x.scale(GaussRational(0, -1)), z]], m)
    P2, moves = ensure_nonzero_pivot(Pm)
    assert not P2[0, 0].is_zero()
    E = PolyMatrix.from_constants(moves[0].matrix(2), m)
    assert E @ Pm @ E.conj_transpose() == P2


def test_zero_pencil_and_zero_pivot_errors():
    z = MultiPoly.zero(1)
    with pytest.raises(IdenticallyZeroMatrix):
        ensure_nonzero_pivot(PolyMatrix([[z, z], [z, z]], 1))
    x = MultiPoly.variable(0, 1)
    state, cur = initial_state(PolyMatrix([[z, x], [x, z]], 1))
    with pytest.raises(ZeroPivot):
        schmudgen_step(state, cur)


def test_identity_and_diagonal_pencils():
    trace = schmudgen_run(pencil_from_family(MatrixFamily.from_matrices([np.eye(3)])))
    assert trace.max_rank == 3 and trace.k == 0
    r, lam = max_rank_witness(trace)
    assert r == 3 and lam[0] != 0
    diag = MatrixFamily.from_matrices([np.diag([1.0, 0]), np.diag([0, 1.0])])
    trace = schmudgen_run(pencil_from_family(diag))
    x1, x2 = MultiPoly.variable(0, 2), MultiPoly.variable(1, 2)
    assert [d.expand() for d in trace.ds] == [x1, x2]


def test_single_matrix_pencil():
    A = np.array([[1.0, 2.0], [2.0, -1.0]])
    Pm = pencil_from_family(MatrixFamily.from_matrices([A]))
    x = MultiPoly.variable(0, 1)
    assert Pm[0, 1] == x.scale(2) and Pm[1, 1] == -x


def test_float_pencil_snaps_dependent_combination(rng):
    # third member is an exact float combination of the first two
    a = rng.standard_normal((4, 4))
    b = rng.standard_normal((4, 4))
    A, B = a + a.T, b + b.T
    F = MatrixFamily.from_matrices([A, B, 0.3 * A - 1.7 * B])
    trace = schmudgen_run(pencil_from_family(F))
    assert trace.max_rank == 4
