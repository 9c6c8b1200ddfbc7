"""End-to-end SDC solver: positive definite solution of the commutation
system, square-root congruence, joint unitary diagonalization."""

from __future__ import annotations

import contextlib
import time
from dataclasses import dataclass, field

import numpy as np

from .core import CongruenceResult, MatrixFamily, Tolerances, _tol, as_family, backward_error, hermitian_eig, pd_sqrt
from .detect import DetectReport, NoPositiveDefiniteSolution, Route, Verdict, detect_via_pencil
from .errors import ConvergenceFailure, SDCError, VerdictConflict
from .jacobi import JointDiagResult, joint_diagonalize
from .sdp import FeasibilityOutcome, build_system, find_pd, infeasibility_hint, solution_space

# backward error above which the congruence is recomputed on the partly
# diagonalized family
REFINE_ABOVE = 1e-10


@dataclass
class SolveOutcome:
    verdict: Verdict
    result: CongruenceResult | None
    detect: DetectReport
    feasibility: FeasibilityOutcome | None = None
    jacobi: JointDiagResult | None = None
    timings: dict = field(default_factory=dict)

    @property
    def is_sdc(self) -> bool:
        return self.verdict is Verdict.SDC


@contextlib.contextmanager
def _stage(name: str, timings: dict):
    start = time.perf_counter()
    try:
        yield
    except SDCError as exc:
        if getattr(exc, "stage", None) is None:
            exc.stage = name
        raise
    finally:
        timings[name] = time.perf_counter() - start


def _route(route) -> Route:
    if isinstance(route, Route):
        return route
    return Route[str(route).upper()]


def _normalize_columns(U: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(U, axis=0)
    norms[norms == 0] = 1.0
    return U / norms


def _assemble(F: MatrixFamily, U: np.ndarray, tol: Tolerances) -> CongruenceResult:
    D = np.einsum("ji,mjk,ki->mi", U.conj(), F.stack(), U)
    scale = max((float(np.linalg.norm(c)) for c in F.members), default=0.0)
    if np.iscomplexobj(D) and np.max(np.abs(D.imag), initial=0.0) > max(tol.herm_tol, 1e-8) * max(scale, 1.0) * np.linalg.norm(U, 2) ** 2:
        raise ConvergenceFailure("diagonal entries have a non-negligible imaginary part")
    return CongruenceResult(U, np.ascontiguousarray(D.real), backward_error(F, U))


def _single(F: MatrixFamily, tol: Tolerances, timings: dict) -> SolveOutcome:
    with _stage("eig", timings):
        U, _ = hermitian_eig(F.members[0])
        result = _assemble(F, U, tol)
    report = DetectReport(Verdict.SDC, Route.SDP, witness=np.ones(1), notes=["single matrix"])
    return SolveOutcome(Verdict.SDC, result, report, timings=timings)


def _sdp_stage(F: MatrixFamily, tol: Tolerances, timings: dict, method: str = "barrier"):
    with _stage("sdp", timings):
        system = build_system(F)
        space = solution_space(system, tol, F.m)
        feas = find_pd(space, tol, method=method)
    report = DetectReport(Verdict.SDC if feas.found else Verdict.NOT_SDC, Route.SDP)
    if feas.found:
        report.certificate = feas.X
    else:
        report.reasons.append(NoPositiveDefiniteSolution(space.dim, feas.best_min_eig))
        hint = infeasibility_hint(space, F, tol, system)
        if hint is not None:
            report.certificate = hint
            report.notes.append("certificate is a positive definite combination of the constraint matrices")
    return report, feas


def _transform(F: MatrixFamily, X: np.ndarray, tol: Tolerances, timings: dict):
    with _stage("sqrt", timings):
        Q = pd_sqrt(X, tol)
        G = MatrixFamily.from_matrices([Q @ c @ Q for c in F.members], Tolerances(herm_tol=1.0))
    with _stage("jacobi", timings):
        jd = joint_diagonalize(G, tol, check=False)
    with _stage("assemble", timings):
        U = _normalize_columns(Q @ jd.U)
        result = _assemble(F, U, tol)
    return result, jd


def detect(F, tol: Tolerances | None = None, route="sdp") -> DetectReport:
    """Verdict only. ``route="both"`` raises VerdictConflict on disagreement."""
    tol = _tol(tol)
    F = as_family(F, tol)
    route = _route(route)
    timings: dict = {}
    if F.m == 1:
        return DetectReport(Verdict.SDC, route, witness=np.ones(1), notes=["single matrix"])
    if route is Route.PENCIL:
        return detect_via_pencil(F, tol)
    sdp_report, _ = _sdp_stage(F, tol, timings)
    if route is Route.SDP:
        return sdp_report
    pencil_report = detect_via_pencil(F, tol)
    if pencil_report.verdict is not sdp_report.verdict:
        raise VerdictConflict(sdp_report, pencil_report)
    return _merge(sdp_report, pencil_report)


def _merge(sdp_report: DetectReport, pencil_report: DetectReport) -> DetectReport:
    merged = DetectReport(
        sdp_report.verdict,
        Route.BOTH,
        q=pencil_report.q,
        witness=pencil_report.witness,
        reasons=sdp_report.reasons + pencil_report.reasons,
        max_rank=pencil_report.max_rank,
        rank_method=pencil_report.rank_method,
        certificate=sdp_report.certificate,
        notes=sdp_report.notes + pencil_report.notes,
    )
    return merged


def solve(F, tol: Tolerances | None = None, route="sdp") -> SolveOutcome:
    """Decide SDC and, when it holds, compute U with U* C_i U diagonal.

    The SDP route finds X > 0 with every C_i X C_j Hermitian, sets
    Q = X^(1/2), jointly diagonalizes the commuting family Q C_i Q by a
    unitary V and returns U = Q V with unit-norm columns. The pencil route
    decides through the max-rank pencil and reuses the SDP pipeline for the
    transform.
    """
    tol = _tol(tol)
    F = as_family(F, tol)
    route = _route(route)
    timings: dict = {}
    if F.m == 1:
        return _single(F, tol, timings)

    feas = None
    if route in (Route.SDP, Route.BOTH):
        report, feas = _sdp_stage(F, tol, timings)
    if route in (Route.PENCIL, Route.BOTH):
        with _stage("pencil", timings):
            pencil_report = detect_via_pencil(F, tol)
        if route is Route.PENCIL:
            report = pencil_report
        elif pencil_report.verdict is not report.verdict:
            raise VerdictConflict(report, pencil_report)
        else:
            report = _merge(report, pencil_report)

    if report.verdict is Verdict.NOT_SDC:
        return SolveOutcome(Verdict.NOT_SDC, None, report, feas, timings=timings)

    if feas is None:
        _, feas = _sdp_stage(F, tol, timings)
        if not feas.found:
            _, feas = _sdp_stage(F, tol, timings, method="subgradient")
        if not feas.found:
            raise ConvergenceFailure("pencil route reports SDC but no positive definite solution was found")
        report.certificate = feas.X
    result, jd = _transform(F, feas.X, tol, timings)
    result = _refine(F, result, tol, timings)
    return SolveOutcome(Verdict.SDC, result, report, feas, jd, timings)


def _refine(F: MatrixFamily, result: CongruenceResult, tol: Tolerances, timings: dict, passes: int = 3) -> CongruenceResult:
    """Rerun the pipeline on U* C_i U while the backward error is large.

    A badly conditioned congruence blurs the rank of the constraint
    operator; the partially diagonalized family is far better conditioned.
    """
    for _ in range(passes):
        if result.backward_error <= REFINE_ABOVE:
            break
        U = result.transform
        G = MatrixFamily.from_matrices([U.conj().T @ c @ U for c in F.members], Tolerances(herm_tol=1.0))
        _, feas = _sdp_stage(G, tol, {})
        if not feas.found:
            break
        try:
            inner, _ = _transform(G, feas.X, tol, {})
        except SDCError:
            break
        candidate = _assemble(F, _normalize_columns(U @ inner.transform), tol)
        if candidate.backward_error >= result.backward_error:
            break
        result = candidate
    return result


def random_sdc_family(n: int, m: int, seed: int = 0, complex_: bool = False):
    """C_i = P* D_i P with P and the diagonals uniform on [0, 1).

    Returns (family, P, D) with D of shape (m, n).
    """
    if n < 1 or m < 1:
        raise ValueError("n and m must be at least 1")
    rng = np.random.default_rng(seed)
    P = rng.random((n, n))
    if complex_:
        P = P + 1j * rng.random((n, n))
    D = rng.random((m, n))
    mats = [P.conj().T @ (d[:, None] * P) for d in D]
    mats = [(c + c.conj().T) / 2 for c in mats]
    return MatrixFamily.from_matrices(mats), P, D
