"""Hermitian matrices and families, spectral utilities, rank/kernel helpers
and the congruence error metrics."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import ConvergenceFailure, DimensionMismatch, NoKernel, NonFinite, NotHermitian, NotPositiveDefinite

EPS = np.finfo(float).eps


@dataclass(frozen=True)
class Tolerances:
    """Every numerical threshold used by the library.

    ``rank_tol=None`` means the size-dependent default
    ``1e-10 * max(m*n, n)``, resolved by :meth:`rank_cutoff`.
    """

    herm_tol: float = 1e-10
    rank_tol: float | None = None
    commute_tol: float = 1e-8
    pd_tol: float = 1e-8
    jacobi_eps: float = EPS**1.5
    max_sweeps: int = 100
    sample_bound: int = 2000
    rng_seed: int = 0
    # relative half-width used to cluster (numerically) repeated eigenvalues of
    # non-normal matrices; a defective 2x2 block splits by about sqrt(eps)
    eig_cluster_tol: float = 1e-6
    # relative gap separating distinct eigenvalues of Hermitian matrices
    cluster_gap: float = 1e-8

    def __post_init__(self):
        for f in dataclasses.fields(self):
            value = getattr(self, f.name)
            if value is None or f.name == "rng_seed":
                continue
            if not value > 0:
                raise ValueError(f"tolerance {f.name} must be strictly positive, got {value!r}")
        if self.rng_seed < 0:
            raise ValueError("rng_seed must be non-negative")

    def rank_cutoff(self, m: int, n: int) -> float:
        if self.rank_tol is not None:
            return self.rank_tol
        return 1e-10 * max(m * n, n)

    def replace(self, **changes) -> "Tolerances":
        return dataclasses.replace(self, **changes)

    @classmethod
    def from_mapping(cls, values: dict) -> "Tolerances":
        names = {f.name: f for f in dataclasses.fields(cls)}
        kwargs = {}
        for key, value in values.items():
            if key not in names:
                raise ValueError(f"unknown tolerance {key!r}")
            if key in ("max_sweeps", "sample_bound", "rng_seed"):
                kwargs[key] = int(value)
            elif value is None:
                kwargs[key] = None
            else:
                kwargs[key] = float(value)
        return cls(**kwargs)


DEFAULT_TOL = Tolerances()


def _tol(tol: Tolerances | None) -> Tolerances:
    return DEFAULT_TOL if tol is None else tol


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.array(a, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class HermitianMatrix:
    """Dense Hermitian matrix. ``data`` is float64 when the entries are real,
    complex128 otherwise; ``asymmetry`` is the max |A - A*| of the raw input."""

    data: np.ndarray
    asymmetry: float = 0.0

    @property
    def n(self) -> int:
        return self.data.shape[0]

    @property
    def is_real(self) -> bool:
        return not np.iscomplexobj(self.data)

    def __array__(self, dtype=None, copy=None):
        if dtype is None:
            return self.data
        return self.data.astype(dtype)


def make_hermitian(raw, tol: Tolerances | None = None) -> HermitianMatrix:
    """Validate ``raw`` and return its Hermitian part.

    Raises NotHermitian when the deviation from Hermitian exceeds
    ``herm_tol * ||A||_F``.
    """
    tol = _tol(tol)
    a = np.asarray(raw)
    if a.dtype == object:
        a = a.astype(complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionMismatch(f"expected a square matrix, got shape {a.shape}")
    if not np.issubdtype(a.dtype, np.number):
        raise DimensionMismatch(f"non-numeric matrix of dtype {a.dtype}")
    if not np.all(np.isfinite(a)):
        raise NonFinite("matrix has NaN or infinite entries")
    if np.iscomplexobj(a) and not np.any(a.imag):
        a = a.real
    a = a.astype(complex if np.iscomplexobj(a) else float)
    dev = float(np.max(np.abs(a - a.conj().T))) if a.size else 0.0
    allowed = tol.herm_tol * float(np.linalg.norm(a))
    if dev > allowed:
        raise NotHermitian(dev, allowed)
    h = (a + a.conj().T) / 2
    if np.iscomplexobj(h):
        di = np.arange(h.shape[0])
        h[di, di] = h[di, di].real
    return HermitianMatrix(_readonly(h), dev)


@dataclass(frozen=True, eq=False)
class MatrixFamily:
    """An ordered family C_1..C_m of same-size Hermitian matrices."""

    members: tuple
    is_real: bool
    asymmetry: float = 0.0

    @classmethod
    def from_matrices(cls, matrices: Iterable, tol: Tolerances | None = None) -> "MatrixFamily":
        hs = [m if isinstance(m, HermitianMatrix) else make_hermitian(m, tol) for m in matrices]
        if not hs:
            raise DimensionMismatch("a family needs at least one matrix")
        n = hs[0].n
        if any(h.n != n for h in hs):
            raise DimensionMismatch("family members have different sizes")
        is_real = all(h.is_real for h in hs)
        dtype = float if is_real else complex
        members = tuple(_readonly(h.data.astype(dtype)) for h in hs)
        return cls(members, is_real, max(h.asymmetry for h in hs))

    @property
    def m(self) -> int:
        return len(self.members)

    @property
    def n(self) -> int:
        return self.members[0].shape[0]

    @property
    def dtype(self):
        return float if self.is_real else complex

    def stack(self) -> np.ndarray:
        """Members as a writable (m, n, n) array."""
        return np.array(self.members, dtype=self.dtype).reshape(self.m, self.n, self.n)

    def __len__(self):
        return self.m

    def __iter__(self):
        return iter(self.members)

    def __getitem__(self, i):
        return self.members[i]

    def congruence(self, P: np.ndarray) -> "MatrixFamily":
        """The family {P* C_i P}, re-symmetrized."""
        P = np.asarray(P)
        out = []
        for c in self.members:
            b = P.conj().T @ c @ P
            out.append(hermitian_part(b))
        return MatrixFamily.from_matrices(out, Tolerances(herm_tol=1.0))

    def scaled(self, factors: Sequence[float]) -> "MatrixFamily":
        return MatrixFamily.from_matrices([s * c for s, c in zip(factors, self.members)])


def as_family(F, tol: Tolerances | None = None) -> MatrixFamily:
    if isinstance(F, MatrixFamily):
        return F
    return MatrixFamily.from_matrices(F, tol)


def hermitian_part(a: np.ndarray) -> np.ndarray:
    h = (a + a.conj().T) / 2
    if np.iscomplexobj(h):
        di = np.arange(h.shape[0])
        h[di, di] = h[di, di].real
    return h


@dataclass(frozen=True, eq=False)
class CongruenceResult:
    """Transform P with P* C_i P diagonal, the real diagonals (m x n array)
    and the backward error of the factorization."""

    transform: np.ndarray
    diagonals: np.ndarray
    backward_error: float

    def is_nonsingular(self, tol: Tolerances | None = None) -> bool:
        s = np.linalg.svd(self.transform, compute_uv=False)
        if s.size == 0:
            return True
        n = self.transform.shape[0]
        return bool(s[-1] > _tol(tol).rank_cutoff(1, n) * s[0])


def _fix_phases(U: np.ndarray) -> np.ndarray:
    if U.size == 0:
        return U
    idx = np.argmax(np.abs(U), axis=0)
    pivots = U[idx, np.arange(U.shape[1])]
    if np.iscomplexobj(U):
        phase = np.conj(pivots) / np.abs(pivots)
        U = U * phase
        U[idx, np.arange(U.shape[1])] = np.abs(pivots)
        return U
    return U * np.sign(pivots)


def hermitian_eig(A) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition A = U diag(lam) U* with lam descending.

    The largest-modulus entry of every eigenvector is made real positive so
    the output is reproducible; U is real orthogonal for real input.
    """
    a = np.asarray(A)
    if np.iscomplexobj(a) and not np.any(a.imag):
        a = a.real
    try:
        lam, U = np.linalg.eigh(a)
    except np.linalg.LinAlgError as exc:
        raise ConvergenceFailure(f"Hermitian eigensolver failed: {exc}") from exc
    lam = lam[::-1].copy()
    U = _fix_phases(U[:, ::-1].copy())
    return U, lam


def svd_rank(A, cutoff: float, scale: float | None = None) -> tuple[int, np.ndarray]:
    """Numerical rank and an orthonormal basis (columns) of the right kernel.

    Singular values above ``cutoff * scale`` count towards the rank, where
    ``scale`` defaults to the largest singular value.
    """
    a = np.asarray(A)
    if a.ndim != 2:
        raise DimensionMismatch("svd_rank expects a 2-D array")
    rows, cols = a.shape
    if a.size == 0 or not np.any(a):
        return 0, np.eye(cols, dtype=a.dtype if np.iscomplexobj(a) else float)
    try:
        _, s, vh = np.linalg.svd(a, full_matrices=rows < cols)
    except np.linalg.LinAlgError as exc:
        raise ConvergenceFailure(f"SVD failed: {exc}") from exc
    ref = s[0] if scale is None else scale
    rank = int(np.count_nonzero(s > cutoff * ref))
    return rank, vh[rank:].conj().T


def _stacked(F: MatrixFamily) -> np.ndarray:
    return np.vstack(F.members)


def common_kernel(F: MatrixFamily, tol: Tolerances | None = None) -> tuple[int, np.ndarray]:
    """Dimension and orthonormal basis of the joint kernel of the family."""
    tol = _tol(tol)
    rank, null = svd_rank(_stacked(F), tol.rank_cutoff(F.m, F.n))
    return F.n - rank, null


def deflate_common_kernel(F: MatrixFamily, tol: Tolerances | None = None) -> tuple[np.ndarray, MatrixFamily]:
    """Unitary P whose first q columns span the joint kernel, and the reduced
    family formed by the trailing (n-q) x (n-q) blocks of P* C_i P."""
    tol = _tol(tol)
    stacked = _stacked(F)
    cutoff = tol.rank_cutoff(F.m, F.n)
    try:
        _, s, vh = np.linalg.svd(stacked, full_matrices=stacked.shape[0] < stacked.shape[1])
    except np.linalg.LinAlgError as exc:
        raise ConvergenceFailure(f"SVD failed: {exc}") from exc
    rank = int(np.count_nonzero(s > cutoff * s[0])) if s.size and s[0] > 0 else 0
    q = F.n - rank
    if q == 0:
        raise NoKernel("the family has a trivial joint kernel")
    # kernel first, then the row space
    P = np.vstack([vh[rank:], vh[:rank]]).conj().T
    if F.is_real:
        P = P.real
    sigma = s[0] if s.size else 0.0
    reduced = []
    for c in F.members:
        b = hermitian_part(P.conj().T @ c @ P)
        leak = float(np.abs(b[:q, :]).max())
        bound = 2 * cutoff * sigma + 100 * EPS * np.linalg.norm(c)
        if leak > bound:
            raise ConvergenceFailure(f"kernel block not negligible ({leak:.3e} > {bound:.3e})")
        reduced.append(b[q:, q:].copy())
    return P, MatrixFamily.from_matrices(reduced, Tolerances(herm_tol=1.0))


def pd_sqrt(X, tol: Tolerances | None = None) -> np.ndarray:
    """Spectral square root of a positive definite Hermitian matrix."""
    tol = _tol(tol)
    x = np.asarray(X)
    U, lam = hermitian_eig(x)
    floor = tol.pd_tol * max(float(np.trace(x).real) / max(x.shape[0], 1), 0.0)
    if lam.size and (lam[-1] <= floor or lam[-1] <= 0):
        raise NotPositiveDefinite(float(lam[-1]))
    Q = (U * np.sqrt(lam)) @ U.conj().T
    return hermitian_part(Q)


def off_diagonal(a: np.ndarray) -> np.ndarray:
    """Copy of ``a`` (or a stack of matrices) with the diagonal zeroed."""
    b = np.array(a, copy=True)
    di = np.arange(b.shape[-1])
    b[..., di, di] = 0
    return b


def off2(F) -> float:
    """Sum of squared moduli of all off-diagonal entries of the family."""
    stack = F.stack() if isinstance(F, MatrixFamily) else np.asarray(F)
    if stack.ndim == 2:
        stack = stack[None]
    return float(np.sum(np.abs(off_diagonal(stack)) ** 2))


def commutator_defect(F: MatrixFamily) -> float:
    """max over pairs of ||C_i C_j - C_j C_i||_F / (||C_i||_F ||C_j||_F)."""
    worst = 0.0
    norms = [np.linalg.norm(c) for c in F.members]
    for i in range(F.m):
        for j in range(i + 1, F.m):
            if norms[i] == 0 or norms[j] == 0:
                continue
            ci, cj = F.members[i], F.members[j]
            worst = max(worst, np.linalg.norm(ci @ cj - cj @ ci) / (norms[i] * norms[j]))
    return float(worst)


def is_commuting(F: MatrixFamily, tol: Tolerances | None = None) -> bool:
    return commutator_defect(F) <= _tol(tol).commute_tol


def backward_error(F, U: np.ndarray) -> float:
    """max_i ||off(U* C_i U)||_2 / ||U* C_i U||_2."""
    members = F.members if isinstance(F, MatrixFamily) else list(F)
    U = np.asarray(U)
    worst = 0.0
    for c in members:
        b = U.conj().T @ c @ U
        denom = np.linalg.norm(b, 2)
        if denom == 0:
            continue
        worst = max(worst, np.linalg.norm(off_diagonal(b), 2) / denom)
    return float(worst)
