"""Schmüdgen-type congruence diagonalization of a Hermitian polynomial pencil.

Each step splits the current block as [[a, w], [w*, B]] and replaces it by
a * (a*B - w* w). Expanded naively the entries grow like 3**k in degree, so
the trailing block is stored as ``scale * A`` where ``A`` holds the
fraction-free (Bareiss) minors of the pencil. With pivots Delta_k taken from
``A`` (Delta_0 = 1) and g_0 = 1:

    alpha_{k+1} = g_k * Delta_{k+1}
    g_{k+1}     = g_k**3 * Delta_k * Delta_{k+1}
    A^{(k+1)}   = (Delta_{k+1} * B - w* w) / Delta_k      (exact division)

so every pivot and diagonal polynomial is a FactoredPoly over low-degree
bases, and divisibility of consecutive pivots is visible from exponents.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Sequence

import numpy as np

from .core import MatrixFamily, Tolerances, _tol, common_kernel, svd_rank
from .errors import DimensionMismatch, IdenticallyZeroMatrix, NumericalError, StepBudgetExceeded, WitnessNotFound, ZeroPivot
from .poly import FactoredPoly, GaussRational, MultiPoly, PolyMatrix, coeff_from_number, exact_div

SNAP_REL = 1e-12


def family_is_integral(F: MatrixFamily) -> bool:
    for c in F.members:
        parts = [c] if F.is_real else [c.real, c.imag]
        if not all(np.all(np.abs(p) < 2**53) and np.all(p == np.round(p)) for p in parts):
            return False
    return True


def pencil_from_family(F: MatrixFamily, exact: bool | None = None) -> PolyMatrix:
    """The pencil sum_i lambda_i C_i as a degree-one polynomial matrix.

    Integer-valued families get exact coefficients unless ``exact=False``.
    """
    if exact is None:
        exact = family_is_integral(F)
    m, n = F.m, F.n
    variables = [MultiPoly.variable(i, m) for i in range(m)]
    entries = []
    for u in range(n):
        row = []
        for v in range(n):
            terms = {}
            for i, c in enumerate(F.members):
                x = c[u, v]
                if x != 0:
                    terms[variables[i].leading()[0]] = coeff_from_number(complex(x) if np.iscomplexobj(x) else float(x), exact)
            row.append(MultiPoly(m, terms))
        entries.append(row)
    return PolyMatrix(entries, m)


def eval_pencil(Pm: PolyMatrix, point: Sequence[float]) -> np.ndarray:
    """Floating-point value of the pencil at a real point."""
    if len(point) != Pm.nvars:
        raise DimensionMismatch(f"point has {len(point)} coordinates, pencil has {Pm.nvars} parameters")
    vals = np.array([[complex(p(list(point))) for p in row] for row in Pm.entries], dtype=complex)
    if not np.any(vals.imag):
        return vals.real
    return vals


@dataclass(frozen=True)
class PivotMove:
    """Constant congruence E (applied as E C E*) in the full n x n frame.

    kind "swap": exchange indices i and j; kind "add": row i += factor*row j
    (and the matching column operation); kind "perm": reorder by ``perm``.
    """

    kind: str
    i: int = 0
    j: int = 0
    factor: object = 1
    perm: tuple = ()

    def matrix(self, n: int) -> list:
        E = [[1 if r == c else 0 for c in range(n)] for r in range(n)]
        if self.kind == "swap":
            E[self.i][self.i] = E[self.j][self.j] = 0
            E[self.i][self.j] = E[self.j][self.i] = 1
        elif self.kind == "add":
            E[self.i][self.j] = self.factor
        elif self.kind == "perm":
            E = [[1 if c == self.perm[r] else 0 for c in range(n)] for r in range(n)]
        return E

    def inverse_matrix(self, n: int) -> list:
        if self.kind == "add":
            E = [[1 if r == c else 0 for c in range(n)] for r in range(n)]
            E[self.i][self.j] = -self.factor
            return E
        E = self.matrix(n)
        return [list(col) for col in zip(*E)]


@dataclass
class ScaledBlock:
    """Trailing block ``scale * block`` with the Bareiss divisor of the next step."""

    scale: FactoredPoly
    block: PolyMatrix
    divisor: MultiPoly
    offset: int = 0

    @property
    def size(self) -> int:
        return self.block.rows

    def expand(self) -> PolyMatrix:
        return self.block.scale(self.scale.expand())


@dataclass
class SchmudgenTrace:
    """Record of a (possibly partial) run.

    ``events`` lists, in order, ("move", PivotMove) and
    ("stage", k, alpha_k, g_{k-1}, row) items. The stage congruence is
    S_k = diag(alpha_k I_{k-1}, [[alpha_k, 0], [-beta_k*, alpha_k I]]) with
    beta_k = g_{k-1} * row, and X_- is the ordered product of all events.
    """

    n: int
    nvars: int
    pencil: PolyMatrix
    k: int = 0
    alphas: list = field(default_factory=list)
    betas: list = field(default_factory=list)
    events: list = field(default_factory=list)
    b: FactoredPoly | None = None
    ds: list = field(default_factory=list)
    zero_flags: list = field(default_factory=list)
    trailing: ScaledBlock | None = None
    complete: bool = False

    @property
    def pivot_moves(self) -> list:
        return [e[1] for e in self.events if e[0] == "move"]

    @property
    def max_rank(self) -> int:
        return sum(not z for z in self.zero_flags)

    @property
    def exact(self) -> bool:
        return self.pencil.is_exact

    # numeric reconstruction -------------------------------------------------

    def _stage_matrix(self, ev, point, sign: int) -> list:
        _, k, alpha, g, row = ev
        a = alpha(point)
        gv = g(point)
        n, o = self.n, k - 1
        S = [[a if r == c else 0 for c in range(n)] for r in range(n)]
        for i, p in enumerate(row):
            beta = gv * p(point)
            S[o + 1 + i][o] = sign * beta.conjugate()
        return S

    def x_minus(self, point) -> np.ndarray:
        X = np.array([[1 if r == c else 0 for c in range(self.n)] for r in range(self.n)], dtype=object)
        for ev in self.events:
            if ev[0] == "move":
                E = np.array(ev[1].matrix(self.n), dtype=object)
            else:
                E = np.array(self._stage_matrix(ev, point, -1), dtype=object)
            X = E.dot(X)
        return X

    def x_plus(self, point) -> np.ndarray:
        """X_+ with X_+ X_- = X_- X_+ = b**2 I, rebuilt from the events."""
        X = np.array([[1 if r == c else 0 for c in range(self.n)] for r in range(self.n)], dtype=object)
        for ev in self.events:
            if ev[0] == "move":
                E = np.array(ev[1].inverse_matrix(self.n), dtype=object)
            else:
                E = np.array(self._stage_matrix(ev, point, 1), dtype=object)
            X = X.dot(E)
        return X

    def x_minus_poly(self) -> PolyMatrix:
        """Symbolic X_- (expands the factored entries; small cases only)."""
        n, m = self.n, self.nvars
        one, zero = MultiPoly.constant(1, m), MultiPoly.zero(m)
        X = PolyMatrix([[one if r == c else zero for c in range(n)] for r in range(n)], m)
        for ev in self.events:
            if ev[0] == "move":
                E = PolyMatrix.from_constants(ev[1].matrix(n), m)
            else:
                _, k, alpha, g, row = ev
                a, gp, o = alpha.expand(), g.expand(), k - 1
                E = PolyMatrix([[a if r == c else zero for c in range(n)] for r in range(n)], m)
                for i, p in enumerate(row):
                    E.entries[o + 1 + i][o] = -(gp * p).conj()
            X = E @ X
        return X

    def d_values(self, point) -> list:
        return [d(point) for d in self.ds]

    def b_value(self, point):
        return self.b(point)


def _swap(block: PolyMatrix, i: int, j: int) -> PolyMatrix:
    order = list(range(block.rows))
    order[i], order[j] = order[j], order[i]
    return PolyMatrix([[block.entries[r][c] for c in order] for r in order], block.nvars)


def _add(block: PolyMatrix, i: int, j: int, factor) -> PolyMatrix:
    """E block E* with E = I + factor * e_i e_j^T."""
    e = [list(row) for row in block.entries]
    fc = factor.conjugate()
    e[i] = [a + b * factor for a, b in zip(e[i], e[j])]
    for r in range(block.rows):
        e[r][i] = e[r][i] + e[r][j] * fc
    return PolyMatrix(e, block.nvars)


def ensure_nonzero_pivot(Pm: PolyMatrix) -> tuple[PolyMatrix, list]:
    """Congruence making the (0, 0) entry a non-zero polynomial.

    Returns the new block and the list of local PivotMoves applied (empty if
    the pivot was already non-zero). Symmetric permutations are preferred;
    an elementary row/column addition is used only when the whole diagonal
    vanishes.
    """
    n = Pm.rows
    if n and not Pm[0, 0].is_zero():
        return Pm, []
    for j in range(1, n):
        if not Pm[j, j].is_zero():
            return _swap(Pm, 0, j), [PivotMove("swap", 0, j)]
    nz = [(u, v) for u in range(n) for v in range(u + 1, n) if not Pm[u, v].is_zero()]
    if not nz:
        raise IdenticallyZeroMatrix("the block is identically zero")
    u, v = nz[0]
    moves = []
    if u != 0:
        Pm = _swap(Pm, 0, u)
        moves.append(PivotMove("swap", 0, u))
        if v == 0:
            v = u
    exact = Pm.is_exact
    w = Pm[v, 0]
    if not (w + w.conj()).is_zero():
        factor = 1
    else:
        factor = GaussRational(0, 1) if exact else 1j
    Pm = _add(Pm, 0, v, factor)
    moves.append(PivotMove("add", 0, v, factor))
    assert not Pm[0, 0].is_zero()
    return Pm, moves


def _shift(move: PivotMove, offset: int) -> PivotMove:
    if move.kind == "perm":
        return move
    return replace(move, i=move.i + offset, j=move.j + offset)


def _snap_scale(*polys: MultiPoly) -> float:
    return max((p.max_abs_coeff() * max(len(p), 1) for p in polys), default=0.0)


def initial_state(Pm: PolyMatrix) -> tuple[SchmudgenTrace, ScaledBlock]:
    if not Pm.is_hermitian():
        raise ValueError("pencil is not Hermitian as a polynomial matrix")
    m = Pm.nvars
    trace = SchmudgenTrace(Pm.rows, m, Pm, b=FactoredPoly.one(m))
    return trace, ScaledBlock(FactoredPoly.one(m), Pm, MultiPoly.constant(1, m), 0)


def schmudgen_step(state: SchmudgenTrace, current) -> tuple[SchmudgenTrace, ScaledBlock]:
    """One elimination step on the trailing block.

    ``current`` is a ScaledBlock (or a bare PolyMatrix, taken as an unscaled
    starting block). Its (0, 0) entry must be a non-zero polynomial.
    """
    if isinstance(current, PolyMatrix):
        current = ScaledBlock(FactoredPoly.one(current.nvars), current, MultiPoly.constant(1, current.nvars), 0)
    A = current.block
    s = A.rows
    a = A[0, 0]
    if s == 0 or a.is_zero():
        raise ZeroPivot("(1,1) entry is the zero polynomial; call ensure_nonzero_pivot first")
    m = A.nvars
    g = current.scale
    delta = current.divisor
    exact = A.is_exact and delta.is_exact
    alpha = g * FactoredPoly.from_poly(a)
    row = [A[0, j] for j in range(1, s)]
    new = []
    for i in range(1, s):
        out_row = []
        for j in range(1, s):
            prod1, prod2 = a * A[i, j], A[i, 0] * A[0, j]
            num = prod1 - prod2
            if not exact:
                num = num.snapped(SNAP_REL * _snap_scale(prod1, prod2))
            if delta.is_constant():
                q = num.scale(exact_div(1, delta.constant_value()))
                rem = MultiPoly.zero(m)
            else:
                q, rem = num.divmod(delta)
            if exact and not rem.is_zero():
                raise NumericalError("fraction-free elimination left a non-zero remainder")
            if not exact:
                tol = SNAP_REL * max(_snap_scale(prod1, prod2), 1e-300)
                if rem.max_abs_coeff() > 1e3 * tol:
                    raise NumericalError(f"inexact elimination remainder {rem.max_abs_coeff():.3e}")
                q = q.snapped(SNAP_REL * _snap_scale(q))
            out_row.append(q)
        new.append(out_row)
    if s > 1 and not exact:
        # enforce Hermitian structure of the floating-point block
        for i in range(s - 1):
            new[i][i] = MultiPoly(m, {e: complex(c).real for e, c in new[i][i].terms.items()})
            for j in range(i + 1, s - 1):
                new[j][i] = new[i][j].conj()
    k = state.k + 1
    next_block = ScaledBlock(
        g**3 * FactoredPoly.from_poly(delta) * FactoredPoly.from_poly(a),
        PolyMatrix(new, m),
        a,
        current.offset + 1,
    )
    state2 = replace(
        state,
        k=k,
        alphas=state.alphas + [alpha],
        betas=state.betas + [(g, row)],
        events=state.events + [("stage", k, alpha, g, row)],
        b=state.b * alpha,
        trailing=next_block,
    )
    return state2, next_block


def finalize(state: SchmudgenTrace, current: ScaledBlock) -> SchmudgenTrace:
    """Attach d_1..d_n once the trailing block is diagonal.

    Leading entries follow d_j = alpha_j**3 * prod_{t>j} alpha_t**2; the
    trailing diagonal is reordered so identically zero entries come last.
    """
    K = state.k
    head = []
    for j in range(K):
        d = state.alphas[j] ** 3
        for t in range(j + 1, K):
            d = d * state.alphas[t] ** 2
        head.append(d)
    tail = [current.scale * FactoredPoly.from_poly(p) for p in current.block.diagonal()]
    order = sorted(range(len(tail)), key=lambda i: tail[i].is_zero())
    events = list(state.events)
    if order != list(range(len(tail))):
        perm = tuple(range(K)) + tuple(K + i for i in order)
        events.append(("move", PivotMove("perm", perm=perm)))
        tail = [tail[i] for i in order]
    ds = head + tail
    if len(ds) != state.n:
        head_mults = K + current.size
        raise StepBudgetExceeded(f"inconsistent trace: {head_mults} diagonal entries for n = {state.n}")
    return replace(
        state,
        events=events,
        ds=ds,
        zero_flags=[d.is_zero() for d in ds],
        trailing=current,
        complete=True,
    )


def schmudgen_run(Pm: PolyMatrix) -> SchmudgenTrace:
    """Run the procedure until the trailing block is diagonal."""
    state, cur = initial_state(Pm)
    n = Pm.rows
    while cur.size > 0 and not cur.block.is_diagonal():
        block, moves = ensure_nonzero_pivot(cur.block)
        if moves:
            state = replace(state, events=state.events + [("move", _shift(mv, cur.offset)) for mv in moves])
            cur = replace(cur, block=block)
        state, cur = schmudgen_step(state, cur)
        if state.k > n:
            raise StepBudgetExceeded("more steps than rows")
    return finalize(state, cur)


def _witness_bases(trace: SchmudgenTrace, r: int) -> list:
    bases = {}
    for d in [trace.b] + trace.ds[:r]:
        for base in d.factors:
            bases[base] = True
    return list(bases)


def is_valid_witness(trace: SchmudgenTrace, point: Sequence, r: int | None = None) -> bool:
    """b(point) * prod_{t<=r} d_t(point) != 0 (tested factor by factor)."""
    r = trace.max_rank if r is None else r
    point = [_as_exact_point(x) for x in point]
    consts = [trace.b.const] + [d.const for d in trace.ds[:r]]
    if any(c == 0 for c in consts):
        return False
    probe = FactoredPoly(trace.nvars, 1, {base: 1 for base in _witness_bases(trace, r)})
    return not probe.vanishes_at(point)


def _as_exact_point(x):
    if isinstance(x, (int, Fraction)):
        return x
    if isinstance(x, (np.integer,)):
        return int(x)
    xf = float(x)
    return int(xf) if xf.is_integer() else xf


def _witness_quality(C: np.ndarray, r: int) -> float:
    n = C.shape[0]
    if n == 0:
        return 1.0
    fro = np.linalg.norm(C)
    if fro == 0:
        return 0.0
    if r == n:
        return abs(np.linalg.det(C / fro))
    s = np.linalg.svd(C, compute_uv=False)
    return s[r - 1] / s[0] if r > 0 else 1.0


def _candidate_points(m: int, rng: np.random.Generator, budget: int):
    """Integer points in boxes {-B..B}^m with B doubling, then uniform reals."""
    produced = 0
    B = 1
    while produced < budget and B <= 2**12:
        for _ in range(8):
            if produced >= budget:
                return
            p = rng.integers(-B, B + 1, size=m)
            if not np.any(p):
                continue
            produced += 1
            yield [int(x) for x in p]
        B *= 2
    while produced < budget:
        produced += 1
        yield list(rng.uniform(-1.0, 1.0, size=m))


def max_rank_witness(trace: SchmudgenTrace, tol: Tolerances | None = None, rng=None, candidates: int = 8) -> tuple[int, np.ndarray]:
    """Maximum rank of the pencil and a point where it is attained.

    Up to ``candidates`` valid points are collected; the best conditioned one
    (largest |det| of the normalized pencil value when r = n) is returned.
    """
    tol = _tol(tol)
    if not trace.complete:
        raise ValueError("trace is not complete")
    rng = np.random.default_rng(tol.rng_seed) if rng is None else rng
    r = trace.max_rank
    m = trace.nvars
    if r == 0:
        return 0, np.ones(m)
    found = []
    for point in _candidate_points(m, rng, tol.sample_bound):
        if is_valid_witness(trace, point, r):
            C = eval_pencil(trace.pencil, [float(x) for x in point])
            found.append((_witness_quality(C, r), point))
            if len(found) >= candidates:
                break
    if not found:
        raise WitnessNotFound(f"no witness among {tol.sample_bound} sampled points")
    best = max(found, key=lambda t: t[0])[1]
    return r, np.array([float(x) for x in best])


def numeric_max_rank(F: MatrixFamily, tol: Tolerances | None = None, rng=None, candidates: int = 8, max_samples: int = 64) -> tuple[int, np.ndarray]:
    """Max rank of the pencil by random sampling.

    The rank of the stacked matrix bounds the pencil rank; sampling stops
    early once that bound is attained.
    """
    tol = _tol(tol)
    rng = np.random.default_rng(tol.rng_seed) if rng is None else rng
    q, _ = common_kernel(F, tol)
    bound = F.n - q
    cutoff = tol.rank_cutoff(F.m, F.n)
    stack = F.stack()
    best_r, found = -1, []
    budget = min(tol.sample_bound, max_samples)
    for _ in range(budget):
        lam = rng.standard_normal(F.m)
        C = np.tensordot(lam, stack, axes=1)
        r, _ = svd_rank(C, cutoff)
        if r > best_r:
            best_r, found = r, []
        if r == best_r:
            found.append((_witness_quality(C, r), lam))
        if best_r == bound and len(found) >= candidates:
            break
    if best_r < 0:
        raise WitnessNotFound("no samples drawn")
    return best_r, max(found, key=lambda t: t[0])[1]
