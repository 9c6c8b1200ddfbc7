"""Jacobi-type simultaneous unitary diagonalization of commuting Hermitian
matrices.

A rotation R(u, v, c, s) acts on coordinates (u, v) as [[c, -conj(s)],
[s, conj(c)]] and the family is updated as C_i <- R C_i R*. For real c the
new (u, v) entry of each member is  M_uv @ (c**2, c*s, s**2)  row by row, so

    off2(R C R*) = off2(C) - sum_i (|c_uv|^2 + |c_vu|^2) + ||M_uv z||^2.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .core import MatrixFamily, Tolerances, _tol, commutator_defect, off2
from .errors import MaxSweepsExceeded


@dataclass(frozen=True)
class Rotation:
    u: int
    v: int
    c: complex
    s: complex

    @classmethod
    def from_angles(cls, u: int, v: int, theta: float, phi: float = 0.0, real: bool = False) -> "Rotation":
        c = np.cos(theta)
        s = np.sin(theta) if real else np.exp(1j * phi) * np.sin(theta)
        return cls(u, v, c, s)

    @classmethod
    def identity(cls, u: int, v: int) -> "Rotation":
        return cls(u, v, 1.0, 0.0)

    def block(self) -> np.ndarray:
        c, s = self.c, self.s
        return np.array([[c, -np.conj(s)], [s, np.conj(c)]])

    def matrix(self, n: int) -> np.ndarray:
        dtype = complex if np.iscomplexobj(self.block()) else float
        R = np.eye(n, dtype=dtype)
        idx = np.ix_([self.u, self.v], [self.u, self.v])
        R[idx] = self.block()
        return R

    @property
    def z(self) -> np.ndarray:
        return np.array([self.c**2, self.c * self.s, self.s**2])


@dataclass
class JointDiagResult:
    U: np.ndarray
    final_off2: float
    sweeps: int
    off2_history: list = field(default_factory=list)
    converged: bool = True
    threshold: float = 0.0
    rotations: int = 0
    stop_reason: str = ""
    diagonals: np.ndarray | None = None


def build_Muv(F, u: int, v: int) -> np.ndarray:
    """The 2m x 3 matrix whose product with (c^2, cs, s^2) gives the rotated
    (u, v) entries (conjugated) of every member, two rows per member."""
    C = F.stack() if isinstance(F, MatrixFamily) else np.asarray(F)
    if C.ndim == 2:
        C = C[None]
    cuv, cvu = C[:, u, v], C[:, v, u]
    delta = C[:, u, u] - C[:, v, v]
    M = np.empty((2 * C.shape[0], 3), dtype=complex)
    M[0::2] = np.stack([np.conj(cuv), np.conj(delta), -np.conj(cvu)], axis=1)
    M[1::2] = np.stack([cvu, delta, -cuv], axis=1)
    if not np.iscomplexobj(C):
        return M.real
    return M


def _objective(M: np.ndarray, theta, phi) -> np.ndarray:
    theta, phi = np.broadcast_arrays(np.asarray(theta, float), np.asarray(phi, float))
    c, s = np.cos(theta), np.exp(1j * phi) * np.sin(theta)
    Z = np.stack([c * c, c * s, s * s], axis=-1)
    return np.sum(np.abs(Z @ M.T) ** 2, axis=-1)


def _closed_form(M: np.ndarray, real: bool) -> tuple[float, float]:
    """Global minimizer over the curve: maximize sum_i (h_i . r)^2 on the unit
    sphere, h_i = (c_uu - c_vv, -2 Re c_uv, 2 Im c_uv), r = (cos2t, sin2t cos p,
    sin2t sin p)."""
    b = np.conj(M[0::2, 0])
    delta = np.real(M[0::2, 1])
    if real:
        h = np.stack([delta, -2 * np.real(b)], axis=1)
        G = h.T @ h
        psi = 0.5 * np.arctan2(2 * G[0, 1], G[0, 0] - G[1, 1])
        r = np.array([np.cos(psi), np.sin(psi)])
        if r[0] < 0:
            r = -r
        return 0.5 * np.arctan2(r[1], r[0]), 0.0
    h = np.stack([delta, -2 * np.real(b), 2 * np.imag(b)], axis=1)
    _, V = np.linalg.eigh(h.T @ h)
    r = V[:, -1]
    if r[0] < 0:
        r = -r
    # atan2 keeps small angles accurate where arccos(r0) would not
    theta = 0.5 * np.arctan2(np.hypot(r[1], r[2]), r[0])
    phi = float(np.arctan2(r[2], r[1])) if np.hypot(r[1], r[2]) > 0 else 0.0
    return float(theta), phi


def _svd_projection(M: np.ndarray, real: bool) -> tuple[float, float]:
    """Smallest right singular vector of M, projected onto the curve."""
    _, _, vh = np.linalg.svd(M)
    z = vh[-1].conj()
    if abs(z[0]) > 0:
        z = z * np.conj(z[0]) / abs(z[0])
    a1, a3 = abs(z[0]), abs(z[2])
    if a1 + a3 <= 1e-300:
        theta = np.pi / 4
    else:
        theta = np.arctan(np.sqrt(a3 / a1)) if a1 > 0 else np.pi / 2
    phi = float(np.angle(z[1])) if abs(z[1]) > 0 else 0.5 * float(np.angle(z[2]))
    if real:
        # s real: the sign of z2 = c*s decides the sign of theta
        theta = theta if np.real(z[1]) >= 0 else -theta
        phi = 0.0
    return float(theta), phi


def _grid_newton(M: np.ndarray, real: bool, size: int = 64) -> tuple[float, float]:
    """Coarse grid over (theta, phi) followed by one Newton step."""
    thetas = np.linspace(-np.pi / 4, np.pi / 4, size)
    phis = np.array([0.0]) if real else np.linspace(-np.pi, np.pi, size, endpoint=False)
    T, P = np.meshgrid(thetas, phis, indexing="ij")
    vals = _objective(M, T, P)
    i, j = np.unravel_index(np.argmin(vals), vals.shape)
    x = np.array([thetas[i], phis[j]])
    h = 1e-5
    f = lambda p: float(_objective(M, p[0], p[1]))
    dims = 1 if real else 2
    grad = np.zeros(dims)
    hess = np.zeros((dims, dims))
    for a in range(dims):
        ea = np.eye(2)[a] * h
        grad[a] = (f(x + ea) - f(x - ea)) / (2 * h)
        for b_ in range(dims):
            eb = np.eye(2)[b_] * h
            hess[a, b_] = (f(x + ea + eb) - f(x + ea - eb) - f(x - ea + eb) + f(x - ea - eb)) / (4 * h * h)
    try:
        step = np.linalg.solve(hess, grad)
        cand = x.copy()
        cand[:dims] -= step
        if f(cand) < f(x):
            x = cand
    except np.linalg.LinAlgError:
        pass
    return float(x[0]), float(x[1])


def optimal_rotation(M: np.ndarray, current_off_contribution: float, u: int = 0, v: int = 1, real: bool | None = None) -> tuple[Rotation, float]:
    """Rotation minimizing ||M z|| over z = (c^2, cs, s^2).

    Candidates are the closed-form maximizer, the projected smallest
    singular vector and, if neither improves on the current value, a grid
    search with a Newton refinement. Returns the rotation and its predicted
    new contribution ||M z||^2; the identity is returned when nothing
    reduces ``current_off_contribution``.
    """
    if real is None:
        real = not np.iscomplexobj(M)
    if not np.any(M[:, [0, 2]]):
        return Rotation.identity(u, v), float(current_off_contribution)
    cands = [_closed_form(M, real), _svd_projection(M, real)]
    vals = [float(_objective(M, t, p)) for t, p in cands]
    if min(vals) >= current_off_contribution:
        cands.append(_grid_newton(M, real))
        vals.append(float(_objective(M, *cands[-1])))
    k = int(np.argmin(vals))
    if vals[k] >= current_off_contribution:
        return Rotation.identity(u, v), float(current_off_contribution)
    theta, phi = cands[k]
    return Rotation.from_angles(u, v, theta, phi, real), vals[k]


def apply_rotation(C: np.ndarray, rot: Rotation) -> np.ndarray:
    """C_i <- R C_i R* in place on a (m, n, n) stack."""
    u, v = rot.u, rot.v
    R = rot.block()
    if not np.iscomplexobj(C):
        R = R.real
    idx = [u, v]
    C[:, idx, :] = np.einsum("ab,mbj->maj", R, C[:, idx, :])
    C[:, :, idx] = np.einsum("mia,ba->mib", C[:, :, idx], R.conj())
    return C


def off2_after_rotation(F, rot: Rotation) -> float:
    """Predicted off2 of the rotated family from pre-rotation entries."""
    C = F.stack() if isinstance(F, MatrixFamily) else np.asarray(F)
    if C.ndim == 2:
        C = C[None]
    u, v = rot.u, rot.v
    M = build_Muv(C, u, v)
    before = float(np.sum(np.abs(C[:, u, v]) ** 2 + np.abs(C[:, v, u]) ** 2))
    return off2(C) - before + float(np.sum(np.abs(M @ rot.z) ** 2))


def joint_diagonalize(F, tol: Tolerances | None = None, strict: bool = False, check: bool = True) -> JointDiagResult:
    """Cyclic Jacobi sweeps until off2 <= ν = jacobi_eps * sum ||C_i||_F.

    Sweeps also stop when no rotation is accepted or when a sweep reduces
    off2 by less than 1% (the floating-point floor of a numerically
    commuting family). Returns U with U* C_i U (approximately) diagonal.
    """
    tol = _tol(tol)
    fam = F if isinstance(F, MatrixFamily) else MatrixFamily.from_matrices(F)
    if check and fam.m > 1 and commutator_defect(fam) > tol.commute_tol:
        warnings.warn("joint_diagonalize called on a family that does not commute to tolerance", RuntimeWarning, stacklevel=2)
    C = fam.stack()
    n = fam.n
    real = fam.is_real
    U = np.eye(n, dtype=C.dtype)
    nu = tol.jacobi_eps * float(sum(np.linalg.norm(c) for c in fam.members))
    current = off2(C)
    history = [current]
    sweeps, rotations, reason = 0, 0, "threshold"
    while current > nu:
        if sweeps >= tol.max_sweeps:
            reason = "max_sweeps"
            break
        sweeps += 1
        accepted = 0
        for u in range(n - 1):
            for v in range(u + 1, n):
                pair = float(np.sum(np.abs(C[:, u, v]) ** 2 + np.abs(C[:, v, u]) ** 2))
                if pair == 0:
                    continue
                M = build_Muv(C, u, v)
                rot, new_pair = optimal_rotation(M, pair, u, v, real)
                if pair - new_pair <= 1e-18 * pair or (rot.c == 1 and rot.s == 0):
                    continue
                apply_rotation(C, rot)
                R = rot.block() if not real else rot.block().real
                U[:, [u, v]] = U[:, [u, v]] @ R.conj().T
                accepted += 1
        rotations += accepted
        previous, current = current, off2(C)
        history.append(current)
        if accepted == 0:
            reason = "no_rotation"
            break
        if current > 0.99 * previous:
            reason = "stagnation"
            break
    converged = bool(current <= nu)
    di = np.arange(n)
    result = JointDiagResult(
        U, current, sweeps, history, converged, nu, rotations, reason, np.real(C[:, di, di]).copy()
    )
    if strict and reason == "max_sweeps":
        raise MaxSweepsExceeded(result)
    return result
