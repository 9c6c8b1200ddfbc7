"""Positive definite solutions of C_i X C_j = C_j X C_i (all i < j).

Hermitian X is realified in a Frobenius-orthonormal basis (E_uu,
(E_uv + E_vu)/sqrt2 and, for complex data, i(E_uv - E_vu)/sqrt2), so the
constraint operator becomes a real matrix whose right kernel is the
solution space. Feasibility is then decided by maximizing the smallest
eigenvalue over the kernel with trace fixed to n.
"""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass, field

import numpy as np

from .core import EPS, MatrixFamily, Tolerances, _tol

# --- Hermitian basis -------------------------------------------------------------


def hermitian_basis(n: int, real: bool) -> np.ndarray:
    """Frobenius-orthonormal basis of the n x n (real) symmetric/Hermitian
    matrices, as a (d, n, n) array."""
    dtype = float if real else complex
    mats = []
    for u in range(n):
        e = np.zeros((n, n), dtype=dtype)
        e[u, u] = 1
        mats.append(e)
    r2 = np.sqrt(0.5)
    for u, v in itertools.combinations(range(n), 2):
        e = np.zeros((n, n), dtype=dtype)
        e[u, v] = e[v, u] = r2
        mats.append(e)
    if not real:
        for u, v in itertools.combinations(range(n), 2):
            e = np.zeros((n, n), dtype=complex)
            e[u, v], e[v, u] = 1j * r2, -1j * r2
            mats.append(e)
    return np.array(mats, dtype=dtype).reshape(len(mats), n, n)


def coordinates(X: np.ndarray, basis: np.ndarray) -> np.ndarray:
    """Real coordinates <B_k, X> = Re tr(B_k* X)."""
    return np.real(np.einsum("kij,ij->k", basis.conj(), X))


def combine(y: np.ndarray, basis: np.ndarray) -> np.ndarray:
    return np.tensordot(y, basis, axes=1)


# --- constraint operator ------------------------------------------------------


@dataclass(frozen=True, eq=False)
class LinearSystem:
    """Realified operator X -> (C_i X C_j - C_j X C_i)_{i<j}.

    Each antihermitian residual contributes its strictly upper entries (real
    data) or the real and imaginary parts of its strictly upper entries plus
    the imaginary parts of the diagonal (complex data). Members are scaled to
    unit Frobenius norm first, which leaves the kernel unchanged.
    """

    pairs: tuple
    operator: np.ndarray
    basis: np.ndarray
    n: int
    is_real: bool
    members: tuple
    scales: tuple

    @property
    def dim(self) -> int:
        return self.basis.shape[0]

    def residual(self, X: np.ndarray) -> float:
        """max over pairs of ||C_i X C_j - C_j X C_i||_F (scaled members)."""
        worst = 0.0
        for i, j in self.pairs:
            a = self.members[i] @ X @ self.members[j]
            worst = max(worst, float(np.linalg.norm(a - a.conj().T)))
        return worst

    def trace_matrices(self) -> np.ndarray:
        """Each operator row r as the Hermitian matrix A = sum_k r_k B_k,
        so that the row equation reads tr(A X) = 0."""
        return np.tensordot(self.operator, self.basis, axes=1)


def _extract(K: np.ndarray, real: bool) -> np.ndarray:
    """Independent real components of a stack of antihermitian matrices."""
    n = K.shape[-1]
    iu = np.triu_indices(n, 1)
    upper = K[:, iu[0], iu[1]]
    if real:
        return upper.real
    di = np.arange(n)
    return np.concatenate([upper.real, upper.imag, K[:, di, di].imag], axis=1)


def build_system(F: MatrixFamily) -> LinearSystem:
    n, real = F.n, F.is_real
    basis = hermitian_basis(n, real)
    norms = [float(np.linalg.norm(c)) for c in F.members]
    members = tuple(c / s if s > 0 else c for c, s in zip(F.members, norms))
    pairs = tuple(itertools.combinations(range(F.m), 2))
    blocks = []
    for i, j in pairs:
        M = members[i] @ basis @ members[j]
        K = M - np.swapaxes(M, 1, 2).conj()
        blocks.append(_extract(K, real).T)
    d = basis.shape[0]
    op = np.vstack(blocks) if blocks else np.zeros((0, d))
    return LinearSystem(pairs, np.ascontiguousarray(op.real), basis, n, real, members, tuple(norms))


# --- solution space ---------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class AffineSolutionSpace:
    """Orthonormal Hermitian basis (dim, n, n) of the constraint kernel."""

    basis: np.ndarray
    n: int
    is_real: bool
    max_residual: float = 0.0
    singular_values: np.ndarray = field(default_factory=lambda: np.zeros(0))

    @property
    def dim(self) -> int:
        return self.basis.shape[0]


def solution_space(system: LinearSystem, tol: Tolerances | None = None, m: int | None = None) -> AffineSolutionSpace:
    """Kernel of the realified operator by SVD."""
    tol = _tol(tol)
    A = system.operator
    d = system.dim
    m = len(system.members) if m is None else m
    cutoff = tol.rank_cutoff(m, system.n)
    if A.shape[0] == 0 or not np.any(A):
        coeffs = np.eye(d)
        s = np.zeros(0)
    else:
        _, s, vh = np.linalg.svd(A, full_matrices=A.shape[0] < A.shape[1])
        rank = int(np.count_nonzero(s > cutoff * s[0]))
        coeffs = vh[rank:]
    basis = np.tensordot(coeffs, system.basis, axes=1)
    if basis.shape[0] == 0:
        basis = np.zeros((0, system.n, system.n), dtype=system.basis.dtype)
    worst = max((system.residual(b) for b in basis), default=0.0)
    return AffineSolutionSpace(basis, system.n, system.is_real, worst, s)


def row_space(system: LinearSystem, tol: Tolerances | None = None) -> AffineSolutionSpace:
    """Orthogonal complement of the kernel: the span of the trace matrices."""
    tol = _tol(tol)
    A = system.operator
    if A.shape[0] == 0 or not np.any(A):
        return AffineSolutionSpace(np.zeros((0, system.n, system.n), dtype=system.basis.dtype), system.n, system.is_real)
    _, s, vh = np.linalg.svd(A, full_matrices=A.shape[0] < A.shape[1])
    rank = int(np.count_nonzero(s > tol.rank_cutoff(len(system.members), system.n) * s[0]))
    return AffineSolutionSpace(np.tensordot(vh[:rank], system.basis, axes=1), system.n, system.is_real)


# --- positive definite search -------------------------------------------------------


class Feasibility(enum.Enum):
    PD_FOUND = "PD_FOUND"
    NO_PD_WITHIN_TOL = "NO_PD_WITHIN_TOL"


@dataclass(frozen=True, eq=False)
class FeasibilityOutcome:
    verdict: Feasibility
    X: np.ndarray | None
    best_min_eig: float
    iterations: int
    method: str = "barrier"

    @property
    def found(self) -> bool:
        return self.verdict is Feasibility.PD_FOUND


def _min_eig(X: np.ndarray) -> float:
    return float(np.linalg.eigvalsh(X)[0])


def _newton_barrier(A: np.ndarray, a: np.ndarray, c: np.ndarray, w: np.ndarray, mu: float, max_iter: int = 50):
    """Maximize c.w/mu + log det(sum_k w_k A_k) subject to a.w = a.w0.

    Returns the new point and the number of Newton steps taken.
    """
    dim = w.size
    kkt = np.zeros((dim + 1, dim + 1))
    kkt[:dim, dim] = kkt[dim, :dim] = a
    steps = 0
    for steps in range(1, max_iter + 1):
        W = np.tensordot(w, A, axes=1)
        L = np.linalg.cholesky(W)
        Linv = np.linalg.inv(L)
        S = Linv @ A @ Linv.conj().T
        g = c / mu + np.real(np.trace(S, axis1=1, axis2=2))
        flat = S.reshape(dim, -1)
        H = -np.real(flat.conj() @ flat.T)
        kkt[:dim, :dim] = H
        rhs = np.concatenate([-g, [0.0]])
        dw = np.linalg.lstsq(kkt, rhs, rcond=None)[0][:dim]
        dec = float(g @ dw)
        f0 = float(c @ w) / mu + 2 * np.sum(np.log(np.abs(np.diag(L))))
        # the attainable decrement shrinks with the objective's magnitude
        if dec <= 1e-12 * max(1.0, abs(f0)):
            break
        step = 1.0
        # a collapsing step means the Newton direction is no longer accurate
        while step > 1e-6:
            wn = w + step * dw
            Wn = np.tensordot(wn, A, axes=1)
            try:
                Ln = np.linalg.cholesky(Wn)
            except np.linalg.LinAlgError:
                step *= 0.5
                continue
            f1 = float(c @ wn) / mu + 2 * np.sum(np.log(np.abs(np.diag(Ln))))
            if f1 >= f0 + 0.25 * step * dec:
                break
            step *= 0.5
        else:
            break
        w = wn
    return w, steps


def _barrier(basis: np.ndarray, n: int, objective: str) -> tuple[np.ndarray, int]:
    """Interior-point path following for max lambda_min(X), Tr X = n.

    Variables are the basis coordinates y and a slack t with X - tI > 0.
    """
    d = basis.shape[0]
    traces = np.real(np.trace(basis, axis1=1, axis2=2))
    y = traces * (n / float(traces @ traces))
    X = combine(y, basis)
    t = _min_eig(X) - 1.0
    eye = np.eye(n, dtype=basis.dtype)
    A = np.concatenate([basis, -eye[None]], axis=0)
    a = np.concatenate([traces, [0.0]])
    c = np.zeros(d + 1)
    c[-1] = 1.0
    w = np.concatenate([y, [t]])
    mu, total = 1.0, 0
    while True:
        w, steps = _newton_barrier(A, a, c, w, mu)
        total += steps
        if n * mu < 1e-8:
            break
        mu *= 0.2
    y = w[:-1]
    if objective == "analytic_center" and _min_eig(combine(y, basis)) > 0:
        y, steps = _newton_barrier(basis, traces, np.zeros(d), y, 1.0, max_iter=100)
        total += steps
    return combine(y, basis), total


def _subgradient(basis: np.ndarray, n: int, budget: int = 5000, window: int = 200) -> tuple[np.ndarray, int]:
    """Projected subgradient ascent on lambda_min over the trace-n slice,
    multi-started from every basis element and from the projection of I."""
    traces = np.real(np.trace(basis, axis1=1, axis2=2))
    a2 = float(traces @ traces)
    starts = [traces * (n / a2)]
    for k in range(basis.shape[0]):
        if abs(traces[k]) > 1e-12:
            e = np.zeros(basis.shape[0])
            e[k] = n / traces[k]
            starts.append(e)
    best_X, best_val, iters = None, -np.inf, 0
    for y in starts:
        run_best, run_y, since = -np.inf, y, 0
        for k in range(1, budget + 1):
            iters += 1
            X = combine(y, basis)
            lam, U = np.linalg.eigh(X)
            if lam[0] > run_best + 1e-14:
                run_best, run_y, since = lam[0], y.copy(), 0
            else:
                since += 1
                if since >= window:
                    break
            u = U[:, 0]
            g = np.real(np.einsum("i,kij,j->k", u.conj(), basis, u))
            g -= (g @ traces) / a2 * traces
            gn = np.linalg.norm(g)
            if gn == 0:
                break
            y = y + g / (gn * np.sqrt(k))
            y *= n / float(traces @ y)
        if run_best > best_val:
            best_val, best_X = run_best, combine(run_y, basis)
    return best_X, iters


def find_pd(space: AffineSolutionSpace, tol: Tolerances | None = None, method: str = "barrier", objective: str = "min_eig") -> FeasibilityOutcome:
    """Search span(basis) for a positive definite X with Tr X = n.

    ``method="barrier"`` (default) follows the central path of
    max lambda_min; ``method="subgradient"`` runs projected subgradient
    ascent. ``objective="analytic_center"`` recenters a PD solution at the
    maximizer of log det X.
    """
    tol = _tol(tol)
    n = space.n
    if space.dim == 0:
        return FeasibilityOutcome(Feasibility.NO_PD_WITHIN_TOL, None, -np.inf, 0, method)
    traces = np.real(np.trace(space.basis, axis1=1, axis2=2))
    if np.linalg.norm(traces) <= 1e3 * EPS * np.sqrt(n):
        # every element is traceless, so none is definite
        return FeasibilityOutcome(Feasibility.NO_PD_WITHIN_TOL, None, -np.inf, 0, method)
    if method == "barrier":
        X, iters = _barrier(space.basis, n, objective)
    elif method == "subgradient":
        X, iters = _subgradient(space.basis, n)
    else:
        raise ValueError(f"unknown method {method!r}")
    X = (X + X.conj().T) / 2
    X *= n / float(np.trace(X).real)
    lam_min = _min_eig(X)
    verdict = Feasibility.PD_FOUND if lam_min > tol.pd_tol else Feasibility.NO_PD_WITHIN_TOL
    return FeasibilityOutcome(verdict, X if verdict is Feasibility.PD_FOUND else None, lam_min, iters, method)


def infeasibility_hint(space: AffineSolutionSpace, F: MatrixFamily, tol: Tolerances | None = None, system: LinearSystem | None = None):
    """A positive definite combination of the trace matrices, if one exists.

    Such a Y satisfies tr(Y X) = 0 for every solution X, which no positive
    definite X can do, so its existence certifies that the family is not
    SDC. Returns None when no certificate is found.
    """
    tol = _tol(tol)
    if F.m < 2:
        return None
    system = build_system(F) if system is None else system
    rows = row_space(system, tol)
    if rows.dim == 0:
        return None
    out = find_pd(rows, tol)
    return out.X if out.found else None
